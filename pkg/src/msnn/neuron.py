"""Memristive integrate-and-fire (MIF) neuron.

A capacitor in parallel with two memristors, M1 tied to ``e_rest`` and M2 tied
to ``e_reset``. There is no reset circuit: the threshold is only a crossing
detector that tells synapses a spike happened, and the refractory window stops
one excursion from being reported twice.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np
from numba import njit

from .memristor import (
    EXP_EULER,
    SCHEMES,
    MemristorParams,
    MemristorState,
    advance_state,
    window_gap,
    check_dt,
    conductance,
)

# which reference voltage M2's switching sees
DRIVE_REST = 0
DRIVE_RESET = 1
M2_DRIVES = {"rest": DRIVE_REST, "reset": DRIVE_RESET}


class SimulationFault(RuntimeError):
    """Non-finite state encountered while integrating."""

    def __init__(self, neuron_id, t, detail="non-finite state"):
        super().__init__(f"{detail} in neuron {neuron_id} at t={t:.9g} s")
        self.neuron_id = neuron_id
        self.t = t


@dataclass(frozen=True)
class MifParams:
    c: float = 100e-12
    e_rest: float = 0.0
    e_reset: float = 0.05
    v_threshold: float = 0.025
    t_refractory: float = 3e-6
    m1: MemristorParams = field(default_factory=MemristorParams)
    m2: MemristorParams = field(default_factory=MemristorParams)
    m2_drive: str = "rest"

    def __post_init__(self):
        if self.c <= 0:
            raise ValueError("capacitance must be positive")
        if self.t_refractory < 0:
            raise ValueError("refractory period must be non-negative")
        if self.m2_drive not in M2_DRIVES:
            raise ValueError(f"m2_drive must be one of {sorted(M2_DRIVES)}")

    def divider_voltage(self, x1: float, x2: float) -> float:
        """Zero-input fixed point of the membrane for frozen memristor states."""
        g1 = conductance(x1, self.m1.r_on, self.m1.r_off)
        g2 = conductance(x2, self.m2.r_on, self.m2.r_off)
        return (g1 * self.e_rest + g2 * self.e_reset) / (g1 + g2)


@dataclass(frozen=True)
class MifNeuron:
    v: float = 0.0
    x1: MemristorState = MemristorState()
    x2: MemristorState = MemristorState()
    refractory_until: float = 0.0
    last_spike_time: float | None = None


@dataclass(frozen=True)
class SpikeEvent:
    neuron_id: int
    t: float


@njit(cache=True)
def membrane_rate(v, x1, x2, i_in, c, e_rest, e_reset, r_on1, r_off1, r_on2, r_off2):
    g1 = conductance(x1, r_on1, r_off1)
    g2 = conductance(x2, r_on2, r_off2)
    return (i_in - g1 * (v - e_rest) - g2 * (v - e_reset)) / c


@njit(cache=True)
def advance_mif(v, x1, x2, i_in, dt, c, e_rest, e_reset,
                r_on1, r_off1, v_on1, k_th1, tau1, gap1,
                r_on2, r_off2, v_on2, k_th2, tau2, gap2,
                m2_drive, scheme):
    """One co-integration step of (v, x1, x2); all rates use start-of-step values."""
    g1 = conductance(x1, r_on1, r_off1)
    g2 = conductance(x2, r_on2, r_off2)
    if scheme == EXP_EULER:
        g = g1 + g2
        v_inf = (i_in + g1 * e_rest + g2 * e_reset) / g
        v_new = v_inf + (v - v_inf) * math.exp(-g * dt / c)
    else:
        v_new = v + dt * (i_in - g1 * (v - e_rest) - g2 * (v - e_reset)) / c
    drop1 = v - e_rest
    drop2 = v - e_reset if m2_drive == DRIVE_RESET else v - e_rest
    x1_new = advance_state(x1, drop1, dt, v_on1, k_th1, tau1, gap1, scheme)
    x2_new = advance_state(x2, drop2, dt, v_on2, k_th2, tau2, gap2, scheme)
    return v_new, x1_new, x2_new


def membrane_derivative(neuron: MifNeuron, i_in: float, params: MifParams) -> float:
    p = params
    return membrane_rate(neuron.v, neuron.x1.x, neuron.x2.x, i_in, p.c, p.e_rest, p.e_reset,
                         p.m1.r_on, p.m1.r_off, p.m2.r_on, p.m2.r_off)


def mif_args(params: MifParams) -> tuple:
    """Flatten params into the positional tail expected by :func:`advance_mif`."""
    p, a, b = params, params.m1, params.m2
    return (p.c, p.e_rest, p.e_reset,
            a.r_on, a.r_off, a.v_on, a.k_th, a.tau, window_gap(a.v_on, a.v_off, a.k_th),
            b.r_on, b.r_off, b.v_on, b.k_th, b.tau, window_gap(b.v_on, b.v_off, b.k_th),
            M2_DRIVES[p.m2_drive])


@njit(cache=True)
def integrate_mif(i_in, v, x1, x2, dt, args, scheme):
    """Drive one neuron with the current samples ``i_in``, one per step.

    Returns an ``(len(i_in) + 1, 3)`` array of ``(v, x1, x2)``, starting state first.
    No spike detection happens here; see :func:`step_neuron` for that.
    """
    out = np.empty((i_in.shape[0] + 1, 3))
    out[0, 0], out[0, 1], out[0, 2] = v, x1, x2
    for k in range(i_in.shape[0]):
        v, x1, x2 = advance_mif(v, x1, x2, i_in[k], dt, *args, scheme)
        out[k + 1, 0], out[k + 1, 1], out[k + 1, 2] = v, x1, x2
    return out


def rest_state(params: MifParams, settle: float = 100e-6, dt: float = 1e-9,
               scheme: str = "exp_euler") -> MifNeuron:
    """Integrate the unstimulated neuron from (e_rest, 0, 0) until it settles."""
    quiet = np.zeros(int(round(settle / dt)))
    v, x1, x2 = integrate_mif(quiet, params.e_rest, 0.0, 0.0, dt, mif_args(params),
                              SCHEMES[scheme])[-1]
    return MifNeuron(v=float(v), x1=MemristorState(float(x1)), x2=MemristorState(float(x2)))


def crossed(v_old: float, v_new: float, threshold: float) -> bool:
    return v_old <= threshold < v_new


def drive_neuron(neuron: MifNeuron, i_in: np.ndarray, dt: float, params: MifParams,
                 scheme: str = "euler", t0: float = 0.0, neuron_id: int = 0):
    """Run :func:`step_neuron` over a whole current trace in one compiled loop.

    Step ``k`` starts at ``t0 + k * dt`` and sees ``i_in[k]``. Returns the
    ``(len(i_in) + 1, 3)`` trajectory of ``(v, x1, x2)`` and the spike times.
    """
    check_dt(dt, params.m1)
    check_dt(dt, params.m2)
    traj = integrate_mif(np.asarray(i_in, dtype=float), neuron.v, neuron.x1.x, neuron.x2.x,
                         dt, mif_args(params), SCHEMES[scheme])
    bad = np.flatnonzero(~np.isfinite(traj).all(axis=1))
    if bad.size:
        raise SimulationFault(neuron_id, t0 + int(bad[0]) * dt)
    v = traj[:, 0]
    spikes, refractory_until = [], neuron.refractory_until
    for k in np.flatnonzero((v[:-1] <= params.v_threshold) & (v[1:] > params.v_threshold)):
        t = t0 + int(k) * dt
        if t >= refractory_until - dt * 1e-6:
            spikes.append(t + dt)
            refractory_until = t + dt + params.t_refractory
    return traj, spikes


def step_neuron(
    neuron: MifNeuron,
    i_in: float,
    t: float,
    dt: float,
    params: MifParams,
    neuron_id: int = 0,
    scheme: str = "euler",
) -> tuple[MifNeuron, SpikeEvent | None]:
    """Advance from ``t`` to ``t + dt``; a spike is stamped at ``t + dt``."""
    check_dt(dt, params.m1)
    check_dt(dt, params.m2)
    v, x1, x2 = advance_mif(neuron.v, neuron.x1.x, neuron.x2.x, i_in, dt,
                            *mif_args(params), SCHEMES[scheme])
    if not (math.isfinite(v) and math.isfinite(x1) and math.isfinite(x2)):
        raise SimulationFault(neuron_id, t + dt)
    nxt = replace(neuron, v=v, x1=MemristorState(x1), x2=MemristorState(x2))
    # small slack so float-accumulated t does not miss the window edge
    if crossed(neuron.v, v, params.v_threshold) and t >= neuron.refractory_until - dt * 1e-6:
        t_spike = t + dt
        nxt = replace(nxt, refractory_until=t_spike + params.t_refractory,
                      last_spike_time=t_spike)
        return nxt, SpikeEvent(neuron_id, t_spike)
    return nxt, None
