"""Memory-retrieval (Type-1) and pattern-recognition (Type-2) protocols."""

from __future__ import annotations

import copy
import logging
import math
import warnings
from collections import deque
from dataclasses import dataclass, field

import numpy as np

from .encoder import Pattern, build_schedule, stream_rng
from .network import Network, NetworkConfig, build_topology, run_presentation
from .memristor import SCHEMES
from .neuron import MifParams, drive_neuron, rest_state
from .synapse import PlasticSynapse, StdpParams, alpha_trace, on_post_spike, on_pre_spike, \
    trace_step

log = logging.getLogger(__name__)

# stream ids for counter-based randomness
STREAM_TOPOLOGY = 0
STREAM_TRAIN = 1
STREAM_TEST = 2
STREAM_ASSIGN = 3
STREAM_ORDER = 4


class RunawayExcitation(RuntimeError):
    pass


@dataclass
class EncoderConfig:
    rate_max: float = 200e3
    stim_duration: float = 35e-6
    gap_duration: float = 15e-6


@dataclass
class ExperimentConfig:
    epochs: int = 20
    order: str = "fixed"
    assign_period: int = 5
    assign_window: int = 5
    test_epochs: int = 40
    max_iterations: int = 80
    patience: int = 20
    runaway_factor: float = 50.0
    pattern_size: int = 32
    seed: int = 0


@dataclass
class ResemblanceMatrix:
    """Row p: where the excitatory spikes evoked by pattern p fall, by template support."""

    values: np.ndarray
    mass: np.ndarray
    totals: np.ndarray

    @property
    def defined(self) -> np.ndarray:
        return self.totals > 0

    def diagonal_dominant(self) -> bool:
        v = self.values
        for p in range(len(v)):
            if not self.defined[p]:
                return False
            off = np.delete(v[p], p)
            if not np.all(v[p, p] > off):
                return False
        return True

    def off_diagonal_positive(self) -> bool:
        off = ~np.eye(len(self.values), dtype=bool)
        return bool(np.all(self.values[off] > 0))


@dataclass
class Assignment:
    labels: np.ndarray
    period: int = 5


@dataclass
class AccuracyTrace:
    points: list[tuple[int, float]] = field(default_factory=list)

    def add(self, iteration: int, accuracy: float) -> None:
        if not 0.0 <= accuracy <= 1.0:
            raise ValueError("accuracy must lie in [0, 1]")
        self.points.append((iteration, accuracy))

    @property
    def accuracies(self) -> list[float]:
        return [a for _, a in self.points]

    @property
    def best(self) -> tuple[int, float]:
        # earliest point among the maxima
        return max(self.points, key=lambda p: (p[1], -p[0]))


def make_network(net_cfg: NetworkConfig, mif: MifParams, stdp: StdpParams, seed: int,
                 log_inputs: bool = True) -> Network:
    topo = build_topology(net_cfg, stream_rng(seed, STREAM_TOPOLOGY))
    return Network(topo, net_cfg, mif, stdp, log_inputs=log_inputs)


def refractory_ceiling(net: Network, stim_duration: float) -> int:
    """Most spikes one neuron can emit in a stimulus window."""
    return math.floor(stim_duration / net.mif.t_refractory) + 1


def _guard(net: Network, counts: np.ndarray, enc: EncoderConfig, factor: float, where: str):
    limit = factor * refractory_ceiling(net, enc.stim_duration) * len(counts)
    if counts.sum() > limit:
        raise RunawayExcitation(
            f"runaway excitation during {where}: {int(counts.sum())} spikes > limit {limit:g}")


def present(net: Network, pattern: Pattern, enc: EncoderConfig, rng, plasticity: bool) -> np.ndarray:
    return run_presentation(net, pattern, enc.stim_duration, enc.gap_duration, enc.rate_max,
                            rng, plasticity)


@dataclass
class Type1Result:
    network: Network
    counts: list[np.ndarray]
    sequence: tuple[int, ...]

    @property
    def n_presentations(self) -> int:
        return len(self.counts)


def train_type1(net: Network, patterns: list[Pattern], epochs: int = 20,
                enc: EncoderConfig | None = None, exp: ExperimentConfig | None = None) -> Type1Result:
    """Cyclic presentations with STDP on (only the recurrent projection is plastic)."""
    enc = enc or EncoderConfig()
    exp = exp or ExperimentConfig()
    if net.config.kind != "type1":
        raise ValueError("train_type1 needs a Type-1 network")
    schedule = build_schedule(patterns, epochs, exp.order, stream_rng(exp.seed, STREAM_ORDER),
                              enc.stim_duration, enc.gap_duration)
    counts = []
    for it, p_idx in enumerate(schedule.sequence):
        c = present(net, patterns[p_idx], enc, stream_rng(exp.seed, STREAM_TRAIN, it), True)
        _guard(net, c, enc, exp.runaway_factor, f"training presentation {it}")
        counts.append(c)
    return Type1Result(net, counts, schedule.sequence)


def resemblance(counts: np.ndarray, patterns: list[Pattern]) -> ResemblanceMatrix:
    """``counts[p]`` are excitatory spike counts (one per pixel-neuron) for presentation of pattern p."""
    supports = np.array([p.support for p in patterns], dtype=float)
    mass = np.asarray(counts, dtype=float) @ supports.T
    totals = mass.sum(axis=1)
    values = np.zeros_like(mass)
    ok = totals > 0
    values[ok] = mass[ok] / totals[ok, None]
    if not ok.all():
        warnings.warn(f"no excitatory spikes for pattern(s) {np.flatnonzero(~ok).tolist()}; "
                      "resemblance rows left undefined", RuntimeWarning, stacklevel=2)
        values[~ok] = np.nan
    return ResemblanceMatrix(values, mass, totals)


def test_type1(net: Network, patterns: list[Pattern], enc: EncoderConfig | None = None,
               seed: int = 0) -> ResemblanceMatrix:
    """Present each pattern once with plasticity off; runs on a copy of the network."""
    enc = enc or EncoderConfig()
    probe = clone(net)
    counts = [present(probe, p, enc, stream_rng(seed, STREAM_TEST, 0, i), False)
              for i, p in enumerate(patterns)]
    return resemblance(np.array(counts), patterns)


test_type1.__test__ = False  # not a pytest test


def clone(net: Network) -> Network:
    twin = copy.copy(net)
    twin.state = copy.deepcopy(net.state)
    twin.state.log_steps, twin.state.log_nodes = [], []
    return twin


def assign_neurons(counts: np.ndarray, previous: np.ndarray) -> np.ndarray:
    """Label each neuron with its most-driving pattern; silent neurons keep ``previous``.

    ``counts`` has shape (n_neurons, n_patterns); ties go to the lowest pattern index.
    """
    counts = np.asarray(counts)
    labels = np.argmax(counts, axis=1)
    silent = counts.sum(axis=1) == 0
    return np.where(silent, previous, labels)


def evaluate_accuracy(net: Network, assignment: Assignment | np.ndarray, patterns: list[Pattern],
                      test_epochs: int = 40, enc: EncoderConfig | None = None, seed: int = 0,
                      tag: int = 0) -> float:
    """Winner-take-all accuracy over ``test_epochs`` cycles, plasticity off, on a copy of ``net``."""
    enc = enc or EncoderConfig()
    labels = assignment.labels if isinstance(assignment, Assignment) else np.asarray(assignment)
    probe = clone(net)
    correct = total = silent = 0
    for ep in range(test_epochs):
        for i, p in enumerate(patterns):
            c = present(probe, p, enc, stream_rng(seed, STREAM_TEST, tag, ep, i), False)
            total += 1
            if c.max() == 0:
                silent += 1
                continue
            winner = int(np.argmax(c))
            correct += int(labels[winner] == i)
    if silent:
        log.info("%d of %d test presentations produced no excitatory spike", silent, total)
    return correct / total if total else 0.0


@dataclass
class Type2Result:
    network: Network
    trace: AccuracyTrace
    assignment: Assignment
    best_iteration: int
    iterations: int
    stopped_early: bool


def train_type2(net: Network, patterns: list[Pattern], max_iterations: int = 80,
                early_stop: bool = True, enc: EncoderConfig | None = None,
                exp: ExperimentConfig | None = None) -> Type2Result:
    """Train with STDP, re-assign labels every ``assign_period`` epochs and score each assignment.

    On return the network holds the weights of the best-scoring checkpoint.
    """
    enc = enc or EncoderConfig()
    exp = exp or ExperimentConfig()
    if net.config.kind != "type2":
        raise ValueError("train_type2 needs a Type-2 network")
    n_exc, n_pat = net.topology.n_exc, len(patterns)
    labels = stream_rng(exp.seed, STREAM_ASSIGN).integers(0, n_pat, size=n_exc)
    trace = AccuracyTrace()
    check = 0
    acc = evaluate_accuracy(net, labels, patterns, exp.test_epochs, enc, exp.seed, tag=check)
    trace.add(0, acc)
    best_acc, best_iter, best_w, best_labels = acc, 0, net.state.w.copy(), labels.copy()
    window = deque(maxlen=exp.assign_window)
    iteration, epoch, stopped = 0, 0, False
    order_rng = stream_rng(exp.seed, STREAM_ORDER)
    while iteration < max_iterations:
        epoch_counts = np.zeros((n_exc, n_pat))
        seq = order_rng.permutation(n_pat) if exp.order == "shuffled" else range(n_pat)
        for i in seq:
            if iteration >= max_iterations:
                break
            c = present(net, patterns[i], enc, stream_rng(exp.seed, STREAM_TRAIN, iteration), True)
            _guard(net, c, enc, exp.runaway_factor, f"training iteration {iteration}")
            epoch_counts[:, i] += c
            iteration += 1
        window.append(epoch_counts)
        epoch += 1
        if epoch % exp.assign_period and iteration < max_iterations:
            continue
        labels = assign_neurons(sum(window), labels)
        check += 1
        acc = evaluate_accuracy(net, labels, patterns, exp.test_epochs, enc, exp.seed, tag=check)
        trace.add(iteration, acc)
        log.info("iteration %d: accuracy %.4f", iteration, acc)
        if acc > best_acc:
            best_acc, best_iter, best_w, best_labels = acc, iteration, net.state.w.copy(), labels.copy()
        elif early_stop and iteration - best_iter >= exp.patience:
            stopped = True
            break
    net.state.w[:] = best_w
    return Type2Result(net, trace, Assignment(best_labels, exp.assign_period), best_iter,
                       iteration, stopped)


# -- single-element demos -------------------------------------------------------------


def neuron_waveform(mif: MifParams, amplitude: float = 5e-3, onset: float = 5e-6,
                    duration: float = 30e-6, dt: float = 1e-9, tau_syn: float = 10e-9,
                    scheme: str = "euler"):
    """Drive a rested neuron with one alpha current kick at ``onset``.

    Returns a dict of equal-length arrays ``t, v, x1, x2, i`` and the spike times.
    """
    n = int(round(duration / dt))
    kicks = np.zeros(n)
    kicks[int(round(onset / dt))] = amplitude
    if scheme == "euler" and dt > tau_syn / 5 * (1 + 1e-12):
        raise ValueError(f"dt={dt:g} s too coarse for tau_syn={tau_syn:g} s under forward Euler")
    i = alpha_trace(kicks, dt / tau_syn, SCHEMES[scheme])
    traj, spikes = drive_neuron(rest_state(mif), i, dt, mif, scheme)
    out = {"t": np.arange(n + 1) * dt, "v": traj[:, 0], "x1": traj[:, 1], "x2": traj[:, 2],
           "i": np.concatenate(([0.0], i))}
    return out, spikes


def stdp_trace_demo(stdp: StdpParams, t_pre: float = 5e-6, t_post: float = 10e-6,
                    duration: float = 20e-6, dt: float = 10e-9, scheme: str = "euler"):
    """One pre and one post spike on a single synapse; rows of (t, T_pre, T_post, A_pre, A_post, W)."""
    syn = PlasticSynapse(0, 1, w=0.0)
    k_pre, k_post = int(round(t_pre / dt)), int(round(t_post / dt))
    rows = []
    for k in range(int(round(duration / dt)) + 1):
        if k == k_pre:
            syn = on_pre_spike(syn, stdp)
        if k == k_post:
            syn = on_post_spike(syn, stdp)
        rows.append((k * dt, syn.t_pre_trace, syn.t_post_trace, syn.a_pre, syn.a_post, syn.w))
        syn = trace_step(syn, dt, stdp, scheme)
    return np.array(rows)
