"""Type-1 / Type-2 topologies and the fixed-step simulation engine.

Node numbering used by the engine: input units ``[0, n_input)``, then
excitatory neurons, then inhibitory neurons. Neuron-local arrays (membrane,
channels, refractory clocks) are indexed by ``node - n_input``.

Each step runs in a fixed order:

1. deliver spikes whose delay has elapsed: inject into the target's alpha
   channel, then apply the presynaptic STDP update on plastic synapses;
2. advance alpha channels and STDP traces;
3. advance every MIF neuron with its channel current, detect crossings;
4. queue emitted spikes and apply the postsynaptic STDP update.

Delays are integer step counts ``floor(d / dt) + 1`` held in a spike-history
ring. STDP presynaptic traces are kept per source node and read back through
a trace-history ring at the synapse's delay, which is exactly the per-synapse
trace of a delayed spike train but costs O(nodes) per step.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from numba import njit

from .encoder import Pattern, encode_window
from .memristor import SCHEMES
from .neuron import MifParams, SimulationFault, advance_mif, mif_args
from .synapse import IMPULSE_CHARGE, IMPULSES, StdpParams, advance_alpha_decay, clamp

KINDS = ("input_exc", "exc_recurrent", "exc_inh", "inh_exc")
_LAYERS = {"input_exc": ("input", "exc"), "exc_recurrent": ("exc", "exc"),
           "exc_inh": ("exc", "inh"), "inh_exc": ("inh", "exc")}
LAYER_NAMES = ("input", "exc", "inh")


@dataclass
class NetworkConfig:
    kind: str = "type1"
    n_input: int = 1024
    n_exc: int = 1024
    n_inh: int = 1024
    w_input: float = 50e-6
    w_init_max: float = 0.2e-6
    w_exc_inh: float = 200e-6
    w_inh_exc: float = -20e-6
    delay_max: float = 0.0
    dt: float = 1e-9
    scheme: str = "euler"
    tau_syn: float = 10e-9
    impulse: str = "current"
    settle: float = 0.0

    def __post_init__(self):
        if self.kind not in ("type1", "type2"):
            raise ValueError(f"unknown network kind {self.kind!r}")
        if self.scheme not in SCHEMES:
            raise ValueError(f"unknown integration scheme {self.scheme!r}")
        if self.impulse not in IMPULSES:
            raise ValueError(f"unknown impulse convention {self.impulse!r}")
        if self.dt <= 0:
            raise ValueError("dt must be positive")

    def steps(self, duration: float) -> int:
        return int(round(duration / self.dt))


def type1_config(n: int = 1024, **overrides) -> NetworkConfig:
    base = dict(kind="type1", n_input=n, n_exc=n, n_inh=n, w_input=50e-6, w_init_max=0.2e-6,
                w_exc_inh=200e-6, w_inh_exc=-20e-6, delay_max=0.0)
    base.update(overrides)
    return NetworkConfig(**base)


def type2_config(n_input: int = 1024, n_exc: int = 320, **overrides) -> NetworkConfig:
    base = dict(kind="type2", n_input=n_input, n_exc=n_exc, n_inh=n_exc, w_init_max=12e-6,
                w_exc_inh=200e-6, w_inh_exc=-200e-6, delay_max=2e-6)
    base.update(overrides)
    return NetworkConfig(**base)


@dataclass
class Projection:
    kind: str
    pre: np.ndarray
    post: np.ndarray
    weight: np.ndarray
    delay: np.ndarray
    plastic: bool

    def __len__(self):
        return len(self.pre)


@dataclass
class Topology:
    n_input: int
    n_exc: int
    n_inh: int
    projections: dict[str, Projection] = field(default_factory=dict)

    def count(self, kind: str) -> int:
        return len(self.projections[kind]) if kind in self.projections else 0

    def layer_size(self, layer: str) -> int:
        return {"input": self.n_input, "exc": self.n_exc, "inh": self.n_inh}[layer]

    def dense(self, kind: str, values: np.ndarray | None = None) -> np.ndarray:
        """(n_pre, n_post) matrix of ``values`` (default: the weights); absent pairs are 0."""
        proj = self.projections[kind]
        src, dst = _LAYERS[kind]
        out = np.zeros((self.layer_size(src), self.layer_size(dst)))
        out[proj.pre, proj.post] = proj.weight if values is None else values
        return out


def _one_to_one(n, w):
    idx = np.arange(n)
    return idx, idx.copy(), np.full(n, w)


def _all_but_one(n):
    pre, post = np.divmod(np.arange(n * n), n)
    keep = pre != post
    return pre[keep], post[keep]


def _fixed(kind, pre, post, w):
    return Projection(kind, pre, post, np.broadcast_to(np.asarray(w, float), pre.shape).copy(),
                      np.zeros(len(pre)), plastic=False)


def build_type1(config: NetworkConfig, rng: np.random.Generator) -> Topology:
    n = config.n_exc
    if n < 2:
        raise ValueError("Type-1 network needs at least 2 neurons per layer")
    if not config.n_input == config.n_exc == config.n_inh:
        raise ValueError("Type-1 layers must all have the same size")
    topo = Topology(n, n, n)
    pre, post, w = _one_to_one(n, config.w_input)
    topo.projections["input_exc"] = _fixed("input_exc", pre, post, w)
    pre, post = _all_but_one(n)
    topo.projections["exc_recurrent"] = Projection(
        "exc_recurrent", pre, post, rng.uniform(0.0, config.w_init_max, size=len(pre)),
        np.zeros(len(pre)), plastic=True)
    pre, post, w = _one_to_one(n, config.w_exc_inh)
    topo.projections["exc_inh"] = _fixed("exc_inh", pre, post, w)
    pre, post = _all_but_one(n)
    topo.projections["inh_exc"] = _fixed("inh_exc", pre, post, config.w_inh_exc)
    return topo


def build_type2(config: NetworkConfig, rng: np.random.Generator) -> Topology:
    if config.n_exc != config.n_inh:
        raise ValueError("excitatory and inhibitory layers must have the same size")
    if config.n_exc < 2 or config.n_input < 1:
        raise ValueError("Type-2 network needs at least 1 input and 2 excitatory neurons")
    topo = Topology(config.n_input, config.n_exc, config.n_inh)
    pre, post = np.divmod(np.arange(config.n_input * config.n_exc), config.n_exc)
    w = rng.uniform(0.0, config.w_init_max, size=len(pre))
    d = rng.uniform(0.0, config.delay_max, size=len(pre))
    topo.projections["input_exc"] = Projection("input_exc", pre, post, w, d, plastic=True)
    pre, post, w = _one_to_one(config.n_exc, config.w_exc_inh)
    topo.projections["exc_inh"] = _fixed("exc_inh", pre, post, w)
    pre, post = _all_but_one(config.n_exc)
    topo.projections["inh_exc"] = _fixed("inh_exc", pre, post, config.w_inh_exc)
    return topo


def build_topology(config: NetworkConfig, rng: np.random.Generator) -> Topology:
    return build_type1(config, rng) if config.kind == "type1" else build_type2(config, rng)


def delay_steps(delay: np.ndarray, dt: float) -> np.ndarray:
    """Delivery latency in whole steps: a spike in step n lands in step n + floor(d/dt) + 1."""
    return np.floor(np.asarray(delay) / dt + 1e-9).astype(np.int64) + 1


@dataclass
class SimState:
    """Everything that changes while the network runs."""

    step: int
    v: np.ndarray
    x1: np.ndarray
    x2: np.ndarray
    ref_until: np.ndarray
    ch_i: np.ndarray
    ch_a: np.ndarray
    w: np.ndarray
    spk_list: np.ndarray
    spk_cnt: np.ndarray
    src_t: np.ndarray
    src_a: np.ndarray
    a_hist: np.ndarray
    post_t: np.ndarray
    post_a: np.ndarray
    log_steps: list = field(default_factory=list)
    log_nodes: list = field(default_factory=list)


@njit(cache=True)
def _run_steps(n0, n_steps, in_ptr, in_idx, n_input, ring,
               v, x1, x2, ref_until, ch_i, ch_a,
               syn_pre, syn_post, syn_k, syn_w, syn_plastic, grp_ptr,
               aff_ptr, aff_syn, trace_src, is_trace_src, trace_post,
               spk_list, spk_cnt, src_t, src_a, a_hist, post_t, post_a,
               c, e_rest, e_reset, r_on1, r_off1, v_on1, k_th1, tau1, gap1,
               r_on2, r_off2, v_on2, k_th2, tau2, gap2, m2_drive,
               threshold, ref_steps, dt, h_syn, impulse_scale,
               h_pre, h_post, u_pre, u_post, w_min, w_max, scheme, plastic_on,
               log_step, log_node, fault):
    n_neurons = v.shape[0]
    n_log = 0
    decay_syn, decay_pre, decay_post = math.exp(-h_syn), math.exp(-h_pre), math.exp(-h_post)
    for r in range(n_steps):
        n = n0 + r
        here = n % ring
        spk_cnt[here] = 0
        for q in range(in_ptr[r], in_ptr[r + 1]):
            spk_list[here, spk_cnt[here]] = in_idx[q]
            spk_cnt[here] += 1
        # (1) deliveries due this step
        for k in range(1, ring):
            slot = (n - k) % ring
            if n - k < 0:
                break
            for q in range(spk_cnt[slot]):
                j = spk_list[slot, q]
                g = j * ring + k
                for s in range(grp_ptr[g], grp_ptr[g + 1]):
                    post = syn_post[s]
                    ch_a[post] += syn_w[s] * impulse_scale
                    if plastic_on and syn_plastic[s]:
                        syn_w[s] = clamp(syn_w[s] + post_a[post], w_min, w_max)
        if n >= 1:
            prev = (n - 1) % ring
            for q in range(spk_cnt[prev]):
                j = spk_list[prev, q]
                if is_trace_src[j]:
                    src_t[j] += u_pre
        # (2) channels and traces
        for m in range(n_neurons):
            ch_i[m], ch_a[m] = advance_alpha_decay(ch_i[m], ch_a[m], h_syn, decay_syn, scheme)
        for q in range(trace_src.shape[0]):
            j = trace_src[q]
            src_a[j], src_t[j] = advance_alpha_decay(src_a[j], src_t[j], h_pre, decay_pre,
                                                   scheme)
            a_hist[here, j] = src_a[j]
        for q in range(trace_post.shape[0]):
            m = trace_post[q]
            post_a[m], post_t[m] = advance_alpha_decay(post_a[m], post_t[m], h_post,
                                                     decay_post, scheme)
        # (3) neurons
        first_spike = n_log
        for m in range(n_neurons):
            v_old = v[m]
            vn, xa, xb = advance_mif(v_old, x1[m], x2[m], ch_i[m], dt, c, e_rest, e_reset,
                                     r_on1, r_off1, v_on1, k_th1, tau1, gap1,
                                     r_on2, r_off2, v_on2, k_th2, tau2, gap2,
                                     m2_drive, scheme)
            if not (math.isfinite(vn) and math.isfinite(xa) and math.isfinite(xb)):
                fault[0] = m
                fault[1] = n
                return n_log, r
            v[m] = vn
            x1[m] = xa
            x2[m] = xb
            if v_old <= threshold < vn and n >= ref_until[m]:
                ref_until[m] = n + 1 + ref_steps
                log_step[n_log] = n
                log_node[n_log] = n_input + m
                n_log += 1
        # (4) queue spikes, postsynaptic STDP
        for q in range(first_spike, n_log):
            node = log_node[q]
            m = node - n_input
            spk_list[here, spk_cnt[here]] = node
            spk_cnt[here] += 1
            if plastic_on:
                for p in range(aff_ptr[m], aff_ptr[m + 1]):
                    s = aff_syn[p]
                    j = syn_pre[s]
                    a_pre = a_hist[(n - syn_k[s] + 1) % ring, j]
                    syn_w[s] = clamp(syn_w[s] + a_pre, w_min, w_max)
            post_t[m] += u_post
    return n_log, n_steps


@dataclass
class SpikeRecord:
    """Spikes from one run call: steps and node ids, ordered by step then node."""

    steps: np.ndarray
    nodes: np.ndarray

    def layer_counts(self, lo: int, hi: int) -> np.ndarray:
        sel = (self.nodes >= lo) & (self.nodes < hi)
        return np.bincount(self.nodes[sel] - lo, minlength=hi - lo)


def check_dt(cfg: NetworkConfig, p: MifParams, stdp: StdpParams) -> None:
    """Reject steps that are too coarse for the memristors, the refractory clock or Euler."""
    limit = min(p.m1.tau, p.m2.tau) / 10
    if cfg.dt > limit * (1 + 1e-12):
        raise ValueError(f"dt={cfg.dt:g} s exceeds memristor stability limit {limit:g} s")
    if cfg.scheme == "euler":
        lim = min(cfg.tau_syn, stdp.tau_pre, stdp.tau_post) / 5
        if cfg.dt > lim * (1 + 1e-12):
            raise ValueError(f"dt={cfg.dt:g} s too coarse for forward Euler (limit {lim:g} s)")
    if p.t_refractory < cfg.dt:
        raise ValueError("refractory period shorter than one step")


class Network:
    """A built topology plus its running :class:`SimState`."""

    def __init__(self, topology: Topology, config: NetworkConfig, mif: MifParams | None = None,
                 stdp: StdpParams | None = None, log_inputs: bool = True):
        self.topology = topology
        self.config = config
        self.mif = mif or MifParams()
        self.stdp = stdp or StdpParams()
        self.log_inputs = log_inputs
        self._check_dt()
        self._compile()
        self.reset()

    @property
    def n_neurons(self) -> int:
        return self.topology.n_exc + self.topology.n_inh

    @property
    def n_nodes(self) -> int:
        return self.topology.n_input + self.n_neurons

    @property
    def exc_nodes(self) -> tuple[int, int]:
        lo = self.topology.n_input
        return lo, lo + self.topology.n_exc

    @property
    def inh_nodes(self) -> tuple[int, int]:
        lo = self.topology.n_input + self.topology.n_exc
        return lo, lo + self.topology.n_inh

    @property
    def t(self) -> float:
        return self.state.step * self.config.dt

    def _check_dt(self):
        check_dt(self.config, self.mif, self.stdp)

    def _compile(self):
        topo, dt = self.topology, self.config.dt
        offsets = {"input": 0, "exc": topo.n_input, "inh": topo.n_input + topo.n_exc}
        pre, post, k, w, plastic, kind_id, orig = [], [], [], [], [], [], []
        for kid, kind in enumerate(KINDS):
            if kind not in topo.projections:
                continue
            proj = topo.projections[kind]
            src, dst = _LAYERS[kind]
            pre.append(proj.pre + offsets[src])
            post.append(proj.post + offsets[dst] - topo.n_input)
            k.append(delay_steps(proj.delay, dt))
            w.append(proj.weight)
            plastic.append(np.full(len(proj), proj.plastic))
            kind_id.append(np.full(len(proj), kid))
            orig.append(np.arange(len(proj)))
        pre, post, k = (np.concatenate(a).astype(np.int64) for a in (pre, post, k))
        w = np.concatenate(w).astype(float)
        plastic = np.concatenate(plastic)
        kind_id = np.concatenate(kind_id)
        orig = np.concatenate(orig)
        order = np.lexsort((post, k, pre))
        self.syn_pre, self.syn_post, self.syn_k = pre[order], post[order], k[order]
        self._w0 = w[order]
        self.syn_plastic = plastic[order]
        self.syn_kind, self.syn_orig = kind_id[order], orig[order]
        self.ring = int(self.syn_k.max()) + 1 if len(self.syn_k) else 2
        grp = self.syn_pre * self.ring + self.syn_k
        self.grp_ptr = np.searchsorted(grp, np.arange(self.n_nodes * self.ring + 1)).astype(np.int64)
        pl = np.flatnonzero(self.syn_plastic)
        pl = pl[np.lexsort((self.syn_pre[pl], self.syn_post[pl]))]
        self.aff_syn = pl.astype(np.int64)
        self.aff_ptr = np.searchsorted(self.syn_post[pl], np.arange(self.n_neurons + 1)).astype(np.int64)
        self.trace_src = np.unique(self.syn_pre[pl]).astype(np.int64)
        self.trace_post = np.unique(self.syn_post[pl]).astype(np.int64)
        self.is_trace_src = np.zeros(self.n_nodes, dtype=np.bool_)
        self.is_trace_src[self.trace_src] = True

    def reset(self, v0: float | None = None):
        """Fresh state: topology weights, quiescent neurons at ``e_rest`` with x1 = x2 = 0."""
        nn = self.n_neurons
        self.state = SimState(
            step=0,
            v=np.full(nn, self.mif.e_rest if v0 is None else v0),
            x1=np.zeros(nn), x2=np.zeros(nn),
            ref_until=np.zeros(nn, dtype=np.int64),
            ch_i=np.zeros(nn), ch_a=np.zeros(nn),
            w=self._w0.copy(),
            spk_list=np.zeros((self.ring, self.n_nodes), dtype=np.int64),
            spk_cnt=np.zeros(self.ring, dtype=np.int64),
            src_t=np.zeros(self.n_nodes), src_a=np.zeros(self.n_nodes),
            a_hist=np.zeros((self.ring, self.n_nodes)),
            post_t=np.zeros(nn), post_a=np.zeros(nn),
        )
        if self.config.settle > 0:
            self.run(self.config.steps(self.config.settle), plasticity=False, record=False)

    def _kernel_args(self, plasticity):
        cfg, st, sp = self.config, self.state, self.stdp
        scale = 1.0 / cfg.tau_syn if IMPULSES[cfg.impulse] == IMPULSE_CHARGE else 1.0
        ref_steps = int(math.ceil(self.mif.t_refractory / cfg.dt - 1e-9))
        return ((st.v, st.x1, st.x2, st.ref_until, st.ch_i, st.ch_a,
                 self.syn_pre, self.syn_post, self.syn_k, st.w, self.syn_plastic, self.grp_ptr,
                 self.aff_ptr, self.aff_syn, self.trace_src, self.is_trace_src, self.trace_post,
                 st.spk_list, st.spk_cnt, st.src_t, st.src_a, st.a_hist, st.post_t, st.post_a)
                + mif_args(self.mif)
                + (self.mif.v_threshold, ref_steps, cfg.dt, cfg.dt / cfg.tau_syn, scale,
                   cfg.dt / sp.tau_pre, cfg.dt / sp.tau_post, sp.u_pre, sp.u_post,
                   sp.w_min, sp.w_max, SCHEMES[cfg.scheme], bool(plasticity)))

    def run(self, n_steps: int, input_steps: np.ndarray | None = None,
            input_nodes: np.ndarray | None = None, plasticity: bool = True,
            record: bool = True) -> SpikeRecord:
        """Advance ``n_steps``; ``input_steps`` are offsets from the current step.

        Returns neuron spikes (and input spikes if ``log_inputs``), merged and
        ordered by step then node.
        """
        st = self.state
        if input_steps is None:
            input_steps = np.zeros(0, dtype=np.int64)
            input_nodes = np.zeros(0, dtype=np.int64)
        input_steps = np.asarray(input_steps, dtype=np.int64)
        input_nodes = np.asarray(input_nodes, dtype=np.int64)
        if len(input_steps) and (input_steps.min() < 0 or input_steps.max() >= n_steps):
            raise ValueError("input spike outside the run window")
        if len(input_nodes) and (input_nodes.min() < 0 or input_nodes.max() >= self.topology.n_input):
            raise ValueError("input spike from a non-existent input unit")
        order = np.lexsort((input_nodes, input_steps))
        input_steps, input_nodes = input_steps[order], input_nodes[order]
        in_ptr = np.searchsorted(input_steps, np.arange(n_steps + 1)).astype(np.int64)
        ref_steps = int(math.ceil(self.mif.t_refractory / self.config.dt - 1e-9))
        cap = self.n_neurons * (n_steps // max(ref_steps, 1) + 2)
        log_step = np.empty(cap, dtype=np.int64)
        log_node = np.empty(cap, dtype=np.int64)
        fault = np.full(2, -1, dtype=np.int64)
        n_log, done = _run_steps(st.step, n_steps, in_ptr, input_nodes, self.topology.n_input,
                                 self.ring, *self._kernel_args(plasticity),
                                 log_step, log_node, fault)
        if fault[0] >= 0:
            st.step += done
            raise SimulationFault(int(fault[0]), (int(fault[1]) + 1) * self.config.dt)
        steps, nodes = log_step[:n_log], log_node[:n_log]
        if self.log_inputs and len(input_steps):
            steps = np.concatenate([input_steps + st.step, steps])
            nodes = np.concatenate([input_nodes, nodes])
            order = np.lexsort((nodes, steps))
            steps, nodes = steps[order], nodes[order]
        rec = SpikeRecord(steps.copy(), nodes.copy())
        st.step += n_steps
        if record:
            st.log_steps.append(rec.steps)
            st.log_nodes.append(rec.nodes)
        return rec

    def simulate_step(self, input_spikes=(), plasticity: bool = True) -> list[int]:
        """One step; returns the node ids of neurons that spiked."""
        nodes = np.asarray(list(input_spikes), dtype=np.int64)
        rec = self.run(1, np.zeros(len(nodes), dtype=np.int64), nodes, plasticity=plasticity)
        return [int(n) for n in rec.nodes if n >= self.topology.n_input]

    def weights(self, kind: str) -> np.ndarray:
        """Current weights of one projection, in the projection's original order."""
        kid = KINDS.index(kind)
        sel = np.flatnonzero(self.syn_kind == kid)
        out = np.empty(len(sel))
        out[self.syn_orig[sel]] = self.state.w[sel]
        return out

    def weight_matrix(self, kind: str) -> np.ndarray:
        return self.topology.dense(kind, self.weights(kind))

    def spike_log(self) -> SpikeRecord:
        st = self.state
        if not st.log_steps:
            return SpikeRecord(np.zeros(0, dtype=np.int64), np.zeros(0, dtype=np.int64))
        return SpikeRecord(np.concatenate(st.log_steps), np.concatenate(st.log_nodes))

    def layer_of(self, nodes: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        """(layer index, index within layer) for global node ids."""
        bounds = np.array([0, self.topology.n_input, self.exc_nodes[1]])
        layer = np.searchsorted(bounds, nodes, side="right") - 1
        return layer, nodes - bounds[layer]


def run_presentation(net: Network, pattern: Pattern, stim_duration: float, gap_duration: float,
                     rate_max: float, rng: np.random.Generator, plasticity: bool) -> np.ndarray:
    """Present ``pattern`` then silence; returns excitatory spike counts in the stimulus window."""
    dt = net.config.dt
    n_stim, n_gap = net.config.steps(stim_duration), net.config.steps(gap_duration)
    steps, pixels = encode_window(pattern, rate_max, dt, n_stim, rng)
    rec = net.run(n_stim, steps, pixels, plasticity=plasticity)
    counts = rec.layer_counts(*net.exc_nodes)
    if n_gap:
        net.run(n_gap, plasticity=plasticity)
    return counts


def write_spikes_csv(net: Network, path: str | Path) -> None:
    rec = net.spike_log()
    layer, idx = net.layer_of(rec.nodes)
    with open(path, "w", newline="") as fh:
        out = csv.writer(fh, lineterminator="\n")
        out.writerow(["time_s", "layer", "neuron_id"])
        dt = net.config.dt
        for s, l, i in zip(rec.steps.tolist(), layer.tolist(), idx.tolist()):
            out.writerow([f"{(s + 1) * dt:.12e}", LAYER_NAMES[l], i])


def write_weights_csv(matrix: np.ndarray, path: str | Path, kind: str = "") -> None:
    """Weight matrix with a one-line comment header; rows=pre, cols=post, amperes."""
    rows, cols = matrix.shape
    with open(path, "w") as fh:
        fh.write(f"# kind={kind} rows={rows} cols={cols} unit=A\n")
        np.savetxt(fh, matrix, fmt="%.17g", delimiter=",")


def read_weights_csv(path: str | Path) -> np.ndarray:
    return np.atleast_2d(np.loadtxt(path, delimiter=",", comments="#"))
