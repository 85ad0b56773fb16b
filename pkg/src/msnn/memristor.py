"""Voltage-controlled memristor with sigmoidal switching windows.

Two of these sit inside every MIF neuron. The scalar kernels at the top are
numba-compiled so the network engine can inline them; the dataclass-level
functions below wrap them for single-device use.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from numba import njit

EULER = 0
EXP_EULER = 1
SCHEMES = {"euler": EULER, "exp_euler": EXP_EULER}


@njit(cache=True)
def logistic(z):
    if z >= 0.0:
        return 1.0 / (1.0 + math.exp(-z))
    e = math.exp(z)
    return e / (1.0 + e)


@njit(cache=True)
def conductance(x, r_on, r_off):
    return x / r_on + (1.0 - x) / r_off


@njit(cache=True)
def window_gap(v_on, v_off, k_th):
    """``exp((v_on - v_off) / k_th)``, the fixed ratio between the two windows' exponentials."""
    return math.exp((v_on - v_off) / k_th)


@njit(cache=True)
def window_pair(v_drop, v_on, k_th, gap):
    """:func:`switching_rates` with ``gap = window_gap(v_on, v_off, k_th)`` precomputed."""
    z = (v_on - v_drop) / k_th
    if z > 700.0:
        z = 700.0
    elif z < -700.0:
        z = -700.0
    e = math.exp(z)
    return 1.0 / (1.0 + e), 1.0 / (1.0 + gap / e)


@njit(cache=True)
def switching_rates(v_drop, v_on, v_off, k_th):
    """Return the (on, off) window values, both in [0, 1].

    Equal to ``logistic((v_drop - v_on)/k_th)`` and ``logistic((v_off - v_drop)/k_th)``
    but sharing one exponential between the two windows.
    """
    return window_pair(v_drop, v_on, k_th, window_gap(v_on, v_off, k_th))


@njit(cache=True)
def state_rate(x, v_drop, v_on, v_off, k_th, tau):
    p, q = switching_rates(v_drop, v_on, v_off, k_th)
    return ((1.0 - x) * p - x * q) / tau


@njit(cache=True)
def advance_state(x, v_drop, dt, v_on, k_th, tau, gap, scheme):
    """One step of the state ODE; ``gap`` is :func:`window_gap` for this device."""
    p, q = window_pair(v_drop, v_on, k_th, gap)
    if scheme == EXP_EULER:
        # rates frozen over the step: relax toward p / (p + q)
        s = p + q
        if s > 0.0:
            x_inf = p / s
            x = x_inf + (x - x_inf) * math.exp(-s * dt / tau)
    else:
        x = x + dt * (((1.0 - x) * p - x * q) / tau)
    if x < 0.0:
        return 0.0
    if x > 1.0:
        return 1.0
    return x


@dataclass(frozen=True)
class MemristorParams:
    r_on: float = 1e3
    r_off: float = 1e5
    v_on: float = 0.1
    v_off: float = 0.0
    tau: float = 1e-6
    k_th: float = 0.015

    def __post_init__(self):
        if not 0 < self.r_on < self.r_off:
            raise ValueError(f"need 0 < r_on < r_off, got r_on={self.r_on}, r_off={self.r_off}")
        if self.tau <= 0 or self.k_th <= 0:
            raise ValueError("tau and k_th must be positive")


@dataclass(frozen=True)
class MemristorState:
    x: float = 0.0

    def __post_init__(self):
        if not 0.0 <= self.x <= 1.0:
            raise ValueError(f"memristor state must lie in [0, 1], got {self.x}")


def memductance(state: MemristorState, params: MemristorParams) -> float:
    return conductance(state.x, params.r_on, params.r_off)


def state_derivative(state: MemristorState, v_drop: float, params: MemristorParams) -> float:
    """dx/dt for a device with drop ``v_drop`` across it (1/s)."""
    p = params
    return state_rate(state.x, v_drop, p.v_on, p.v_off, p.k_th, p.tau)


def check_dt(dt: float, params: MemristorParams) -> None:
    if dt <= 0:
        raise ValueError(f"dt must be positive, got {dt}")
    if dt > params.tau / 10 * (1 + 1e-12):
        raise ValueError(f"dt={dt:g} s exceeds the stability limit tau/10={params.tau / 10:g} s")


def step_state(
    state: MemristorState,
    v_drop: float,
    dt: float,
    params: MemristorParams,
    scheme: str = "euler",
) -> MemristorState:
    check_dt(dt, params)
    p = params
    x = advance_state(state.x, v_drop, dt, p.v_on, p.k_th, p.tau,
                      window_gap(p.v_on, p.v_off, p.k_th), SCHEMES[scheme])
    return MemristorState(x)
