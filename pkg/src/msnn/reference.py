"""Slow per-synapse reference simulator used to validate the network engine.

Every plastic synapse carries its own four STDP traces and every spike is
delivered through an explicit per-step pending list, so nothing here relies
on the engine's shared trace-history trick. Only usable for a handful of
neurons.
"""

from __future__ import annotations

import math
from collections import defaultdict

import numpy as np

from .memristor import SCHEMES
from .network import KINDS, _LAYERS, delay_steps
from .neuron import advance_mif, mif_args
from .synapse import IMPULSE_CHARGE, IMPULSES, advance_alpha


class RefSynapse:
    __slots__ = ("kind", "idx", "pre", "post", "k", "w", "plastic",
                 "t_pre", "a_pre", "t_post", "a_post")

    def __init__(self, kind, idx, pre, post, k, w, plastic):
        self.kind, self.idx, self.pre, self.post, self.k = kind, idx, pre, post, k
        self.w, self.plastic = w, plastic
        self.t_pre = self.a_pre = self.t_post = self.a_post = 0.0


class ReferenceNetwork:
    def __init__(self, topology, config, mif, stdp):
        self.topo, self.cfg, self.mif, self.stdp = topology, config, mif, stdp
        offsets = {"input": 0, "exc": topology.n_input,
                   "inh": topology.n_input + topology.n_exc}
        self.n_input = topology.n_input
        self.syns = []
        for kind in KINDS:
            if kind not in topology.projections:
                continue
            proj = topology.projections[kind]
            src, dst = _LAYERS[kind]
            ks = delay_steps(proj.delay, config.dt)
            for i in range(len(proj)):
                self.syns.append(RefSynapse(kind, i, int(proj.pre[i]) + offsets[src],
                                            int(proj.post[i]) + offsets[dst] - self.n_input,
                                            int(ks[i]), float(proj.weight[i]), proj.plastic))
        self.out = defaultdict(list)
        for s in sorted(self.syns, key=lambda s: (s.pre, s.k, s.post)):
            self.out[s.pre].append(s)
        nn = topology.n_exc + topology.n_inh
        self.v = [mif.e_rest] * nn
        self.x1 = [0.0] * nn
        self.x2 = [0.0] * nn
        self.ch_i = [0.0] * nn
        self.ch_a = [0.0] * nn
        self.ref_until = [0] * nn
        self.step = 0
        self.history = {}  # step -> emitted nodes in emission order
        self.scheme = SCHEMES[config.scheme]
        self.scale = 1.0 / config.tau_syn if IMPULSES[config.impulse] == IMPULSE_CHARGE else 1.0
        self.ref_steps = int(math.ceil(mif.t_refractory / config.dt - 1e-9))
        self.margs = mif_args(mif)

    def run_step(self, inputs=(), plasticity=True):
        cfg, sp, n = self.cfg, self.stdp, self.step
        emitted = sorted(inputs)
        max_k = max((s.k for s in self.syns), default=1)
        # (1) deliveries: injection, then w += A_post and T_pre += U_pre on plastic synapses
        for k in range(1, max_k + 1):
            for node in self.history.get(n - k, ()):
                for s in self.out[node]:
                    if s.k != k:
                        continue
                    self.ch_a[s.post] += s.w * self.scale
                    if plasticity and s.plastic:
                        s.w = min(max(s.w + s.a_post, sp.w_min), sp.w_max)
                    if s.plastic:
                        s.t_pre += sp.u_pre
        # (2) channels and per-synapse traces
        h = cfg.dt / cfg.tau_syn
        for m in range(len(self.v)):
            self.ch_i[m], self.ch_a[m] = advance_alpha(self.ch_i[m], self.ch_a[m], h, self.scheme)
        for s in self.syns:
            if s.plastic:
                s.a_pre, s.t_pre = advance_alpha(s.a_pre, s.t_pre, cfg.dt / sp.tau_pre, self.scheme)
                s.a_post, s.t_post = advance_alpha(s.a_post, s.t_post, cfg.dt / sp.tau_post,
                                                   self.scheme)
        # (3) neurons
        fired = []
        for m in range(len(self.v)):
            v_old = self.v[m]
            self.v[m], self.x1[m], self.x2[m] = advance_mif(
                v_old, self.x1[m], self.x2[m], self.ch_i[m], cfg.dt, *self.margs, self.scheme)
            if v_old <= self.mif.v_threshold < self.v[m] and n >= self.ref_until[m]:
                self.ref_until[m] = n + 1 + self.ref_steps
                fired.append(m)
        # (4) postsynaptic STDP
        for m in fired:
            for s in self.syns:
                if s.plastic and s.post == m:
                    if plasticity:
                        s.w = min(max(s.w + s.a_pre, sp.w_min), sp.w_max)
                    s.t_post += sp.u_post
        self.history[n] = emitted + [self.n_input + m for m in fired]
        self.step += 1
        return [self.n_input + m for m in fired]

    def weights(self, kind):
        sel = [s for s in self.syns if s.kind == kind]
        out = np.empty(len(sel))
        for s in sel:
            out[s.idx] = s.w
        return out
