"""End-to-end acceptance checks, one printed PASS/FAIL line per criterion.

Paper-scale runs take tens of minutes each and only run with MSNN_SLOW=1;
the desk-scale halves of the same criteria always run.
"""

import csv
import time

import numpy as np
import pytest

from msnn.cli import main
from msnn.config import load_config
from msnn.encoder import builtin_patterns, encode_window, stream_rng
from msnn.experiments import make_network, test_type1 as run_test_type1, train_type1, train_type2
from msnn.neuron import rest_state, step_neuron
from msnn.synapse import AlphaChannel, alpha_step, inject_spike, pair_weight_change, stdp_window

import oracle_values as ov

SEEDS = (0, 1, 2, 3, 4)


def report(capsys, number, title, ok, detail):
    with capsys.disabled():
        print(f"\nACCEPTANCE {number} {title}: {'PASS' if ok else 'FAIL'} ({detail})")


def _csv(path):
    with open(path) as fh:
        rows = list(csv.reader(fh))
    return rows[0], np.array(rows[1:], dtype=float)


# -- 1: MIF waveform --------------------------------------------------------------------


def test_1_mif_waveform(tmp_path, capsys):
    t0 = time.perf_counter()
    assert main(["--out", str(tmp_path), "neuron-demo"]) == 0
    elapsed = time.perf_counter() - t0
    cfg = load_config("neuron")
    header, data = _csv(tmp_path / "neuron_demo.csv")
    assert header == ["t", "v", "x1", "x2", "I"]
    t, v, x1, x2 = data[:, 0], data[:, 1], data[:, 2], data[:, 3]
    onset = 5e-6
    k_peak = int(np.argmax(v))
    checks = {
        "a_depolarizes": v.max() > 0.025,
        "b_peak": 0 < k_peak < len(v) - 1 and t[k_peak] > onset,
        "c_back_within_1mV_by_15us": bool(np.any((t > t[k_peak]) & (t <= onset + 15e-6)
                                                 & (np.abs(v - cfg.mif.e_rest) <= 1e-3))),
        "d_x1_excursion": x1.max() > 0.05 and x1[-1] < 0.01,
        "d_x2_excursion": x2.max() > 0.05 and x2[-1] < 0.01,
        "runtime_under_1s": elapsed < 1.0,
    }
    ok = all(checks.values())
    failed = [k for k, good in checks.items() if not good]
    report(capsys, 1, "MIF waveform", ok,
           f"peak {v.max() * 1e3:.1f} mV, v_end {v[-1] * 1e3:.2f} mV, x1 max/end "
           f"{x1.max():.3f}/{x1[-1]:.4f}, x2 max/end {x2.max():.3f}/{x2[-1]:.4f}, "
           f"{elapsed:.2f} s; failing: {failed or 'none'}")
    assert ok, f"failing sub-checks: {failed}"


# -- 2: STDP oracle equivalence ---------------------------------------------------------


def test_2_stdp_oracle_equivalence(capsys):
    p = load_config("stdp").stdp
    t0 = time.perf_counter()
    worst = 0.0
    for delta, window in ov.STDP_WINDOW_3US_1UA.items():
        for sign, u in ((1, p.u_pre), (-1, p.u_post)):
            dw = pair_weight_change(sign * delta, p, 30e-9)
            ref = u / 1e-6 * window
            worst = max(worst, abs(dw - ref) / abs(ref))
    pair = pair_weight_change(5e-6, p, 30e-9)
    elapsed = time.perf_counter() - t0
    ok = worst < 0.01 and abs(pair - 0.3145e-6) / 0.3145e-6 < 0.01 and elapsed < 1.0
    assert stdp_window(5e-6, 1e-6, 3e-6) == pytest.approx(ov.STDP_WINDOW_3US_1UA[5e-6], rel=1e-12)
    report(capsys, 2, "STDP trace vs closed-form window", ok,
           f"worst relative error {worst:.4%}, dW(5 us) = {pair * 1e6:.4f} uA, {elapsed:.2f} s")
    assert ok


# -- 3: Type-1 diagonal dominance -------------------------------------------------------


def _type1_seed(preset, seed):
    cfg = load_config("type1", preset=preset, seed=seed)
    net = make_network(cfg.network, cfg.mif, cfg.stdp, seed, log_inputs=False)
    pats = builtin_patterns(cfg.experiment.pattern_size)
    t0 = time.perf_counter()
    train_type1(net, pats, cfg.experiment.epochs, cfg.encoder, cfg.experiment)
    rm = run_test_type1(net, pats, cfg.encoder, seed)
    return rm, time.perf_counter() - t0


def _type1_criterion(capsys, preset, limit):
    passed, lines, slowest = 0, [], 0.0
    for seed in SEEDS:
        rm, elapsed = _type1_seed(preset, seed)
        slowest = max(slowest, elapsed)
        good = rm.diagonal_dominant() and rm.off_diagonal_positive()
        passed += good
        lines.append(f"seed {seed}: dominant={rm.diagonal_dominant()} "
                     f"off>0={rm.off_diagonal_positive()} {elapsed:.0f} s\n"
                     + np.array2string(rm.values, precision=3))
    ok = passed >= 4 and slowest < limit
    with capsys.disabled():
        print("\n" + "\n".join(lines))
    report(capsys, 3, f"Type-1 diagonal dominance ({preset})", ok,
           f"{passed}/5 seeds pass, slowest seed {slowest:.0f} s (limit {limit:.0f} s)")
    return ok


def test_3_type1_desk(capsys):
    assert _type1_criterion(capsys, "desk", 60.0)


@pytest.mark.slow
def test_3_type1_paper(capsys):
    assert _type1_criterion(capsys, "paper", 20 * 60.0)


# -- 4: Type-2 accuracy -----------------------------------------------------------------


def _type2_criterion(capsys, preset, target, limit):
    best, lines, slowest = 0.0, [], 0.0
    for seed in SEEDS:
        cfg = load_config("type2", preset=preset, seed=seed)
        net = make_network(cfg.network, cfg.mif, cfg.stdp, seed, log_inputs=False)
        pats = builtin_patterns(cfg.experiment.pattern_size)
        t0 = time.perf_counter()
        res = train_type2(net, pats, min(cfg.experiment.max_iterations, 80), True,
                          cfg.encoder, cfg.experiment)
        elapsed = time.perf_counter() - t0
        slowest = max(slowest, elapsed)
        it, acc = res.trace.best
        best = max(best, acc)
        lines.append(f"seed {seed}: best {acc:.3f} at iteration {it}, {elapsed:.0f} s, "
                     f"trace {[(i, round(a, 3)) for i, a in res.trace.points]}")
    ok = best >= target and slowest < limit
    with capsys.disabled():
        print("\n" + "\n".join(lines))
    report(capsys, 4, f"Type-2 accuracy ({preset})", ok,
           f"best-of-5 {best:.3f} (target {target}), slowest seed {slowest:.0f} s")
    return ok


def test_4_type2_desk(capsys):
    assert _type2_criterion(capsys, "desk", 0.75, 120.0)


@pytest.mark.slow
def test_4_type2_paper(capsys):
    assert _type2_criterion(capsys, "paper", 0.90, float("inf"))


# -- 5: determinism ---------------------------------------------------------------------

TINY1 = ["--preset", "desk", "--set", "encoder.pattern_size=8", "--set", "network.n_input=64",
         "--set", "network.n_exc=64", "--set", "network.n_inh=64", "--set", "experiment.epochs=2"]
TINY2 = ["--preset", "desk", "--set", "encoder.pattern_size=8", "--set", "network.n_input=64",
         "--set", "network.n_exc=8", "--set", "network.n_inh=8",
         "--set", "experiment.max_iterations=8", "--set", "experiment.test_epochs=2",
         "--set", "experiment.assign_period=1"]


def test_5_determinism(tmp_path, capsys):
    same = []

    def compare(a, b, names):
        for name in names:
            same.append((a / name).read_bytes() == (b / name).read_bytes())

    for label, extra, cmd in (("t1", TINY1, ["type1-train"]), ("t2", TINY2, ["type2-train"])):
        a, b, c = (tmp_path / f"{label}{k}" for k in "abc")
        assert main(["--out", str(a), "--seed", "5"] + extra + cmd) == 0
        assert main(["--out", str(b), "--seed", "5"] + extra + cmd) == 0
        compare(a, b, ("spikes.csv", "weights_final.csv"))
        assert main(["--out", str(c), "--seeds", "5", "6", "--workers", "2"] + extra + cmd) == 0
        compare(a, c / "seed_5", ("spikes.csv", "weights_final.csv"))
    w = tmp_path / "t1a" / "weights_final.csv"
    for out in ("ta", "tb"):
        assert main(["--out", str(tmp_path / out), "--seed", "5"] + TINY1
                    + ["type1-test", "--weights", str(w)]) == 0
    compare(tmp_path / "ta", tmp_path / "tb", ("spikes.csv", "weights_final.csv"))
    for demo, name in (("neuron-demo", "neuron_demo.csv"), ("stdp-demo", "stdp_demo.csv")):
        for out in ("da", "db"):
            assert main(["--out", str(tmp_path / out / demo), demo]) == 0
        compare(tmp_path / "da" / demo, tmp_path / "db" / demo, (name,))
    ok = all(same)
    report(capsys, 5, "determinism", ok, f"{sum(same)}/{len(same)} file pairs byte-identical")
    assert ok


# -- 6: property suites -----------------------------------------------------------------


def _single_neuron_spikes(mif, dt):
    # the neuron-demo stimulus (one 5 mA alpha kick), repeated once per refractory period
    n, ch, out = rest_state(mif), AlphaChannel(), []
    kicks = {int(round(t / dt)) for t in (5e-6, 10e-6, 15e-6, 20e-6)}
    for k in range(int(round(25e-6 / dt))):
        if k in kicks:
            ch = inject_spike(ch, 5e-3)
        ch = alpha_step(ch, dt)
        n, ev = step_neuron(n, ch.i, k * dt, dt, mif)
        if ev:
            out.append(ev.t)
    return np.array(out)


def test_6_property_suites(capsys):
    cfg = load_config("type1", preset="desk", seed=0,
                      overrides=["encoder.pattern_size=8", "network.n_input=64",
                                 "network.n_exc=64", "network.n_inh=64"])
    net = make_network(cfg.network, cfg.mif, cfg.stdp, 0)
    stdp, dt = cfg.stdp, cfg.network.dt
    pats = builtin_patterns(8)
    n_stim = cfg.network.steps(cfg.encoder.stim_duration)
    n_gap = cfg.network.steps(cfg.encoder.gap_duration)
    x_ok = w_ok = True
    plastic = net.syn_plastic
    for it in range(8):
        steps, pixels = encode_window(pats[it % 4], cfg.encoder.rate_max, dt, n_stim,
                                      stream_rng(0, 1, it))
        for k in range(n_stim + n_gap):
            sel = steps == k
            net.run(1, np.zeros(int(sel.sum()), dtype=np.int64), pixels[sel])
            st = net.state
            x_ok &= bool(np.all((st.x1 >= 0) & (st.x1 <= 1) & (st.x2 >= 0) & (st.x2 <= 1)))
            w = st.w[plastic]
            w_ok &= bool(np.all((w >= stdp.w_min) & (w <= stdp.w_max)))
    log = net.spike_log()
    ref_ok, n_spikes = True, 0
    for node in np.unique(log.nodes[log.nodes >= net.topology.n_input]):
        s = log.steps[log.nodes == node]
        n_spikes += len(s)
        ref_ok &= bool(np.all(np.diff(s) * dt >= cfg.mif.t_refractory - 1e-12))
    coarse = _single_neuron_spikes(cfg.mif, 2e-9)
    fine = _single_neuron_spikes(cfg.mif, 1e-9)
    shift = np.max(np.abs(coarse - fine)) if len(coarse) == len(fine) and len(coarse) else np.inf
    doubling_ok = shift < 2e-9
    ok = x_ok and w_ok and ref_ok and doubling_ok and n_spikes > 0
    report(capsys, 6, "property suites", ok,
           f"x in [0,1]: {x_ok}, weights in bounds: {w_ok}, refractory over {n_spikes} spikes: "
           f"{ref_ok}, step-doubling shift {shift * 1e9:.3f} ns over {len(coarse)} spikes")
    assert ok
