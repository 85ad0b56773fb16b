"""Command-line entry point: ``msnn <subcommand>``."""

from __future__ import annotations

import argparse
import csv
import json
import logging
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import numpy as np

from . import __version__
from .config import ConfigError, RunConfig, dump_config, load_config
from .encoder import PatternFormatError, builtin_patterns, load_pattern, stream_rng
from .experiments import (
    STREAM_TEST,
    RunawayExcitation,
    make_network,
    neuron_waveform,
    present,
    resemblance,
    stdp_trace_demo,
    test_type1,
    train_type1,
    train_type2,
)
from .network import check_dt, read_weights_csv, write_spikes_csv, write_weights_csv
from .neuron import SimulationFault

log = logging.getLogger("msnn")

SUBCOMMANDS = ("type1-train", "type1-test", "type2-train", "neuron-demo", "stdp-demo")
_TASK = {"type1-train": "type1", "type1-test": "type1", "type2-train": "type2",
         "neuron-demo": "neuron", "stdp-demo": "stdp"}


class CliError(RuntimeError):
    pass


def _parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="msnn", description="Fully memristive SNN simulator")
    ap.add_argument("--config", help="INI config file")
    ap.add_argument("--seed", type=int)
    ap.add_argument("--dt", type=float, help="time step in seconds")
    ap.add_argument("--preset", choices=("paper", "desk"))
    ap.add_argument("--set", dest="overrides", action="append", default=[],
                    metavar="SECTION.KEY=VALUE")
    ap.add_argument("--out", default="runs/latest", help="run directory")
    ap.add_argument("--seeds", type=int, nargs="+",
                    help="run several seeds, one sub-directory each")
    ap.add_argument("--workers", type=int, default=1, help="processes for --seeds")
    ap.add_argument("-v", "--verbose", action="store_true")
    sub = ap.add_subparsers(dest="command", required=True)
    for name in ("type1-train", "type2-train"):
        sp = sub.add_parser(name)
        sp.add_argument("--patterns", nargs="+", help="pattern files (default: built-in glyphs)")
    sp = sub.add_parser("type1-test")
    sp.add_argument("--patterns", nargs="+")
    sp.add_argument("--weights", required=True, help="weights_final.csv from type1-train")
    sp = sub.add_parser("neuron-demo")
    sp.add_argument("--amplitude", type=float, default=5e-3, help="alpha kick in amperes")
    sp.add_argument("--onset", type=float, default=5e-6)
    sp.add_argument("--duration", type=float, default=30e-6)
    sp = sub.add_parser("stdp-demo")
    sp.add_argument("--t-pre", type=float, default=5e-6)
    sp.add_argument("--t-post", type=float, default=10e-6)
    sp.add_argument("--duration", type=float, default=20e-6)
    return ap


def _patterns(cfg: RunConfig, files):
    files = list(files or cfg.patterns)
    if not files:
        return builtin_patterns(cfg.experiment.pattern_size)
    pats = []
    for i, f in enumerate(files):
        if not Path(f).is_file():
            raise CliError(f"pattern file not found: {f}")
        pats.append(load_pattern(f, label=i))
    return pats


def _check_sizes(cfg: RunConfig, patterns):
    n_input = cfg.network.n_input
    for p in patterns:
        if p.size != n_input:
            raise CliError(f"pattern {p.name!r} has {p.size} pixels but the input layer has {n_input}")


def _write_manifest(out: Path, cfg: RunConfig, command: str, extra=None):
    data = {"command": command, "seed": cfg.experiment.seed, "preset": cfg.preset,
            "version": __version__}
    data.update(extra or {})
    (out / "manifest").write_text(json.dumps(data, indent=2, sort_keys=True) + "\n")


def _write_matrix_csv(path: Path, header, rows):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        w.writerows(rows)


def run_type1_train(cfg: RunConfig, patterns, out: Path) -> dict:
    net = make_network(cfg.network, cfg.mif, cfg.stdp, cfg.experiment.seed)
    res = train_type1(net, patterns, cfg.experiment.epochs, cfg.encoder, cfg.experiment)
    write_spikes_csv(net, out / "spikes.csv")
    write_weights_csv(net.weight_matrix("exc_recurrent"), out / "weights_final.csv", "exc_recurrent")
    rm = test_type1(net, patterns, cfg.encoder, cfg.experiment.seed)
    _write_resemblance(out / "resemblance.csv", rm, patterns)
    return {"presentations": res.n_presentations, "diagonal_dominant": rm.diagonal_dominant(),
            "off_diagonal_positive": rm.off_diagonal_positive()}


def _write_resemblance(path, rm, patterns):
    names = [p.name or str(p.label) for p in patterns]
    rows = [[names[i]] + [f"{v:.9f}" for v in row] for i, row in enumerate(rm.values)]
    _write_matrix_csv(path, ["pattern"] + names, rows)


def run_type1_test(cfg: RunConfig, patterns, out: Path, weights: str) -> dict:
    net = make_network(cfg.network, cfg.mif, cfg.stdp, cfg.experiment.seed)
    w = read_weights_csv(weights)
    n = net.topology.n_exc
    if w.shape != (n, n):
        raise CliError(f"weights file is {w.shape[0]}x{w.shape[1]}, network needs {n}x{n}")
    proj = net.topology.projections["exc_recurrent"]
    sel = np.flatnonzero(net.syn_kind == 1)
    net.state.w[sel] = w[proj.pre, proj.post][net.syn_orig[sel]]
    counts = []
    for i, p in enumerate(patterns):
        counts.append(present(net, p, cfg.encoder, stream_rng(cfg.experiment.seed, STREAM_TEST, 0, i),
                              False))
    rm = resemblance(np.array(counts), patterns)
    write_spikes_csv(net, out / "spikes.csv")
    write_weights_csv(net.weight_matrix("exc_recurrent"), out / "weights_final.csv", "exc_recurrent")
    _write_resemblance(out / "resemblance.csv", rm, patterns)
    return {"diagonal_dominant": rm.diagonal_dominant(),
            "off_diagonal_positive": rm.off_diagonal_positive()}


def run_type2_train(cfg: RunConfig, patterns, out: Path) -> dict:
    net = make_network(cfg.network, cfg.mif, cfg.stdp, cfg.experiment.seed)
    exp = cfg.experiment
    res = train_type2(net, patterns, exp.max_iterations, True, cfg.encoder, exp)
    write_spikes_csv(net, out / "spikes.csv")
    write_weights_csv(net.weight_matrix("input_exc"), out / "weights_final.csv", "input_exc")
    _write_matrix_csv(out / "accuracy.csv", ["iteration", "accuracy"],
                      [[it, f"{acc:.6f}"] for it, acc in res.trace.points])
    _write_matrix_csv(out / "assignment.csv", ["neuron_id", "label"],
                      [[i, int(l)] for i, l in enumerate(res.assignment.labels)])
    it, best = res.trace.best
    return {"best_accuracy": best, "best_iteration": it, "iterations": res.iterations,
            "stopped_early": res.stopped_early}


def run_neuron_demo(cfg: RunConfig, out: Path, args) -> dict:
    trace, spikes = neuron_waveform(cfg.mif, args.amplitude, args.onset, args.duration,
                                    cfg.network.dt, cfg.network.tau_syn, cfg.network.scheme)
    rows = zip(*(trace[k] for k in ("t", "v", "x1", "x2", "i")))
    _write_matrix_csv(out / "neuron_demo.csv", ["t", "v", "x1", "x2", "I"],
                      [[f"{x:.12e}" for x in r] for r in rows])
    return {"spikes": [round(t, 12) for t in spikes], "v_peak": float(trace["v"].max())}


def run_stdp_demo(cfg: RunConfig, out: Path, args) -> dict:
    rows = stdp_trace_demo(cfg.stdp, args.t_pre, args.t_post, args.duration, cfg.network.dt,
                           cfg.network.scheme)
    _write_matrix_csv(out / "stdp_demo.csv", ["t", "T_pre", "T_post", "A_pre", "A_post", "W"],
                      [[f"{x:.12e}" for x in r] for r in rows])
    return {"delta_w": float(rows[-1, 5])}


def _execute(command: str, cfg: RunConfig, patterns, out: Path, args) -> dict:
    out.mkdir(parents=True, exist_ok=True)
    dump_config(cfg, out / "config_resolved")
    if command == "type1-train":
        summary = run_type1_train(cfg, patterns, out)
    elif command == "type1-test":
        summary = run_type1_test(cfg, patterns, out, args.weights)
    elif command == "type2-train":
        summary = run_type2_train(cfg, patterns, out)
    elif command == "neuron-demo":
        summary = run_neuron_demo(cfg, out, args)
    else:
        summary = run_stdp_demo(cfg, out, args)
    _write_manifest(out, cfg, command, {"summary": summary})
    return summary


def _seed_job(payload):
    command, args, seed = payload
    cfg = load_config(_TASK[command], args.config, args.overrides, args.preset, seed, args.dt)
    patterns = _patterns(cfg, getattr(args, "patterns", None)) if command.startswith("type") else None
    return seed, _execute(command, cfg, patterns, Path(args.out) / f"seed_{seed}", args)


def main(argv=None) -> int:
    args = _parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    command = args.command
    try:
        cfg = load_config(_TASK[command], args.config, args.overrides, args.preset, args.seed, args.dt)
        check_dt(cfg.network, cfg.mif, cfg.stdp)
        patterns = None
        if command.startswith("type"):
            patterns = _patterns(cfg, getattr(args, "patterns", None))
            _check_sizes(cfg, patterns)
        if command == "type1-test" and not Path(args.weights).is_file():
            raise CliError(f"weights file not found: {args.weights}")
        if args.seeds:
            jobs = [(command, args, s) for s in args.seeds]
            if args.workers > 1:
                with ProcessPoolExecutor(max_workers=args.workers) as pool:
                    results = list(pool.map(_seed_job, jobs))
            else:
                results = [_seed_job(j) for j in jobs]
            for seed, summary in results:
                print(f"seed {seed}: {json.dumps(summary, sort_keys=True)}")
        else:
            summary = _execute(command, cfg, patterns, Path(args.out), args)
            print(json.dumps(summary, sort_keys=True))
    except (ConfigError, CliError, PatternFormatError, RunawayExcitation, SimulationFault,
            ValueError) as exc:
        print(f"msnn: error: {exc}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
