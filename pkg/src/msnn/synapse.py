"""Alpha-shaped synaptic currents and trace-based memristive STDP.

The current channel and both STDP trace pairs share the same linear form,
``tau * dA/dt = T - A`` with ``tau * dT/dt = -T``, so one kernel advances all
three. A kick to ``T`` produces ``A(t) = kick * (t / tau) * exp(-t / tau)``,
which is exactly the alpha learning window used as the closed-form oracle.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np
from numba import njit

from .memristor import EXP_EULER, SCHEMES

# how a presynaptic spike enters the auxiliary variable
IMPULSE_CURRENT = 0  # a += w, w in amperes
IMPULSE_CHARGE = 1  # a += w / tau_syn, w in coulombs
IMPULSES = {"current": IMPULSE_CURRENT, "charge": IMPULSE_CHARGE}


@njit(cache=True)
def advance_alpha(out, drive, h, scheme):
    """Advance ``(out, drive)`` by ``h = dt / tau``; returns the new pair."""
    return advance_alpha_decay(out, drive, h, math.exp(-h), scheme)


@njit(cache=True)
def advance_alpha_decay(out, drive, h, decay, scheme):
    """:func:`advance_alpha` with ``decay = exp(-h)`` precomputed (used by time loops)."""
    if scheme == EXP_EULER:
        return (out + drive * h) * decay, drive * decay
    return out + h * (drive - out), drive - h * drive


@njit(cache=True)
def alpha_trace(kicks, h, scheme):
    """Channel current after each step, with ``kicks[k]`` added to the drive first."""
    out, drive, decay = 0.0, 0.0, math.exp(-h)
    i = np.empty(kicks.shape[0])
    for k in range(kicks.shape[0]):
        out, drive = advance_alpha_decay(out, drive + kicks[k], h, decay, scheme)
        i[k] = out
    return i


@njit(cache=True)
def clamp(w, lo, hi):
    if w < lo:
        return lo
    if w > hi:
        return hi
    return w


@dataclass(frozen=True)
class AlphaChannel:
    i: float = 0.0
    a: float = 0.0
    tau_syn: float = 10e-9

    def __post_init__(self):
        if self.tau_syn <= 0:
            raise ValueError("tau_syn must be positive")


@dataclass(frozen=True)
class StdpParams:
    u_pre: float = 10e-6
    u_post: float = -0.1e-6
    tau_pre: float = 3e-6
    tau_post: float = 3e-6
    w_min: float = 0.0
    w_max: float = 50e-6

    def __post_init__(self):
        if self.tau_pre <= 0 or self.tau_post <= 0:
            raise ValueError("STDP time constants must be positive")
        if self.w_min > self.w_max:
            raise ValueError("w_min must not exceed w_max")


@dataclass(frozen=True)
class PlasticSynapse:
    pre_id: int
    post_id: int
    w: float
    a_pre: float = 0.0
    t_pre_trace: float = 0.0
    a_post: float = 0.0
    t_post_trace: float = 0.0
    delay: float = 0.0
    plastic: bool = True


def alpha_step(ch: AlphaChannel, dt: float, scheme: str = "euler") -> AlphaChannel:
    if scheme == "euler" and dt > ch.tau_syn / 5 * (1 + 1e-12):
        raise ValueError(f"dt={dt:g} s too coarse for tau_syn={ch.tau_syn:g} s under forward Euler")
    i, a = advance_alpha(ch.i, ch.a, dt / ch.tau_syn, SCHEMES[scheme])
    return replace(ch, i=i, a=a)


def inject_spike(ch: AlphaChannel, w: float, impulse: str = "current") -> AlphaChannel:
    if IMPULSES[impulse] == IMPULSE_CHARGE:
        return replace(ch, a=ch.a + w / ch.tau_syn)
    return replace(ch, a=ch.a + w)


def stdp_window(delta_t: float, u: float, tau: float) -> float:
    """Closed-form alpha learning window, ``u * |dt|/tau * exp(-|dt|/tau)``."""
    if tau <= 0:
        raise ValueError("tau must be positive")
    s = abs(delta_t) / tau
    return u * s * math.exp(-s)


def trace_step(s: PlasticSynapse, dt: float, p: StdpParams, scheme: str = "euler") -> PlasticSynapse:
    if scheme == "euler" and dt > min(p.tau_pre, p.tau_post) / 5 * (1 + 1e-12):
        raise ValueError(f"dt={dt:g} s too coarse for the STDP traces under forward Euler")
    code = SCHEMES[scheme]
    a_pre, t_pre = advance_alpha(s.a_pre, s.t_pre_trace, dt / p.tau_pre, code)
    a_post, t_post = advance_alpha(s.a_post, s.t_post_trace, dt / p.tau_post, code)
    return replace(s, a_pre=a_pre, t_pre_trace=t_pre, a_post=a_post, t_post_trace=t_post)


def on_pre_spike(s: PlasticSynapse, p: StdpParams) -> PlasticSynapse:
    # weight reads a_post before the presynaptic trace is bumped
    w = clamp(s.w + s.a_post, p.w_min, p.w_max) if s.plastic else s.w
    return replace(s, w=w, t_pre_trace=s.t_pre_trace + p.u_pre)


def on_post_spike(s: PlasticSynapse, p: StdpParams) -> PlasticSynapse:
    w = clamp(s.w + s.a_pre, p.w_min, p.w_max) if s.plastic else s.w
    return replace(s, w=w, t_post_trace=s.t_post_trace + p.u_post)


def _advance(s: PlasticSynapse, duration: float, dt: float, p: StdpParams, scheme: str):
    n = int(math.floor(duration / dt + 1e-9))
    for _ in range(n):
        s = trace_step(s, dt, p, scheme)
    rest = duration - n * dt
    if rest > dt * 1e-9:
        s = trace_step(s, rest, p, scheme)
    return s


def pair_weight_change(delta_t: float, p: StdpParams, dt: float, scheme: str = "euler") -> float:
    """Net weight change of one isolated pre/post pair, ``delta_t = t_post - t_pre``.

    The traces are integrated with :func:`trace_step` at ``dt``; a fractional
    last step puts the second spike at exactly ``|delta_t|``.
    """
    s = PlasticSynapse(0, 1, w=0.0)
    if delta_t >= 0:
        s = on_pre_spike(s, p)
        s = _advance(s, delta_t, dt, p, scheme)
        s = on_post_spike(s, p)
    else:
        s = on_post_spike(s, p)
        s = _advance(s, -delta_t, dt, p, scheme)
        s = on_pre_spike(s, p)
    return s.w
