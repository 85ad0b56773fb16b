"""INI-style run configuration: presets, file values and command-line overrides.

Precedence, lowest first: built-in task/preset defaults, the config file,
``--set section.key=value`` pairs, then the top-level ``--seed``/``--dt`` flags.
"""

from __future__ import annotations

import configparser
from dataclasses import asdict, dataclass, fields
from pathlib import Path

from .experiments import EncoderConfig, ExperimentConfig
from .memristor import MemristorParams
from .network import NetworkConfig, type1_config, type2_config
from .neuron import MifParams
from .synapse import StdpParams

SECTIONS = ("neuron", "synapse", "stdp", "network", "encoder", "experiment")
TASKS = ("type1", "type2", "neuron", "stdp")
PRESETS = ("paper", "desk")

_MEM_KEYS = tuple(f.name for f in fields(MemristorParams))


class ConfigError(ValueError):
    pass


@dataclass
class RunConfig:
    task: str
    preset: str
    mif: MifParams
    stdp: StdpParams
    network: NetworkConfig
    encoder: EncoderConfig
    experiment: ExperimentConfig
    patterns: tuple[str, ...] = ()

    def flat(self) -> dict[str, dict[str, object]]:
        return to_sections(self)


def _defaults(task: str, preset: str) -> dict[str, dict[str, object]]:
    if task not in TASKS:
        raise ConfigError(f"unknown task {task!r}")
    if preset not in PRESETS:
        raise ConfigError(f"unknown preset {preset!r}; choose from {', '.join(PRESETS)}")
    desk = preset == "desk"
    mif = MifParams(m2_drive="reset")
    stdp = StdpParams()
    enc = EncoderConfig()
    exp = ExperimentConfig(pattern_size=16 if desk else 32)
    side = exp.pattern_size
    if task == "type2":
        net = type2_config(side * side, 64 if desk else 320, dt=5e-9 if desk else 2e-9,
                           scheme="exp_euler", settle=50e-6)
        stdp = StdpParams(u_pre=1e-6, u_post=-1e-6, w_max=12e-6)
        enc = EncoderConfig(rate_max=300e3)
        if desk:
            exp.test_epochs = 10
    elif task == "type1":
        net = type1_config(side * side, dt=5e-9 if desk else 2e-9, scheme="exp_euler", settle=50e-6)
        stdp = StdpParams(w_max=10e-6)
        enc = EncoderConfig(rate_max=300e3)
    elif task == "neuron":
        net = type1_config(2, dt=1e-9)
    else:
        # single-synapse illustration: tau 3 us, U_pre = -U_post = 1 uA, unclamped
        net = type1_config(2, dt=10e-9, scheme="exp_euler")
        stdp = StdpParams(u_pre=1e-6, u_post=-1e-6, w_min=-1.0, w_max=1.0)
    sections = to_sections(RunConfig(task, preset, mif, stdp, net, enc, exp))
    sections["experiment"]["preset"] = preset
    return sections


def to_sections(cfg: RunConfig) -> dict[str, dict[str, object]]:
    neuron = {k: v for k, v in asdict(cfg.mif).items() if k not in ("m1", "m2")}
    for idx, mem in (("1", cfg.mif.m1), ("2", cfg.mif.m2)):
        for k in _MEM_KEYS:
            neuron[f"{k}{idx}"] = getattr(mem, k)
    network = asdict(cfg.network)
    synapse = {"tau_syn": network.pop("tau_syn"), "impulse": network.pop("impulse")}
    network.pop("kind")
    encoder = asdict(cfg.encoder)
    encoder["pattern_size"] = cfg.experiment.pattern_size
    encoder["patterns"] = " ".join(cfg.patterns)
    experiment = asdict(cfg.experiment)
    experiment.pop("pattern_size")
    experiment["preset"] = cfg.preset
    return {"neuron": neuron, "synapse": synapse, "stdp": asdict(cfg.stdp), "network": network,
            "encoder": encoder, "experiment": experiment}


def _coerce(section: str, key: str, raw: str, like: object):
    try:
        if isinstance(like, bool):
            low = raw.strip().lower()
            if low not in ("true", "false", "1", "0", "yes", "no"):
                raise ValueError(raw)
            return low in ("true", "1", "yes")
        if isinstance(like, int):
            return int(raw)
        if isinstance(like, float):
            return float(raw)
    except ValueError as exc:
        raise ConfigError(f"[{section}] {key}: cannot parse {raw!r} as {type(like).__name__}") from exc
    return raw.strip()


def _apply(sections, section, key, raw):
    if section not in sections:
        raise ConfigError(f"unknown section [{section}]")
    if key not in sections[section]:
        raise ConfigError(f"unknown key {key!r} in section [{section}]")
    sections[section][key] = _coerce(section, key, raw, sections[section][key])


def _preset_of(path, overrides, preset):
    if preset:
        return preset
    for item in overrides:
        if item.split("=", 1)[0].strip() == "experiment.preset":
            return item.split("=", 1)[1].strip()
    if path:
        cp = _read(path)
        if cp.has_option("experiment", "preset"):
            return cp.get("experiment", "preset").strip()
    return "paper"


def _read(path) -> configparser.ConfigParser:
    cp = configparser.ConfigParser(interpolation=None)
    cp.optionxform = str
    try:
        with open(path) as fh:
            cp.read_file(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read config file {path}: {exc}") from exc
    except configparser.Error as exc:
        raise ConfigError(f"malformed config file {path}: {exc}") from exc
    return cp


def load_config(task: str, path: str | Path | None = None, overrides: list[str] = (),
                preset: str | None = None, seed: int | None = None,
                dt: float | None = None) -> RunConfig:
    preset = _preset_of(path, overrides, preset)
    sections = _defaults(task, preset)
    if path:
        cp = _read(path)
        for section in cp.sections():
            for key, raw in cp.items(section):
                _apply(sections, section, key, raw)
    for item in overrides:
        if "=" not in item or "." not in item.split("=", 1)[0]:
            raise ConfigError(f"override {item!r} must look like section.key=value")
        lhs, raw = item.split("=", 1)
        section, key = lhs.strip().split(".", 1)
        _apply(sections, section, key, raw)
    if seed is not None:
        sections["experiment"]["seed"] = seed
    if dt is not None:
        sections["network"]["dt"] = dt
    sections["experiment"]["preset"] = preset
    return build(task, sections)


def build(task: str, sections: dict[str, dict[str, object]]) -> RunConfig:
    neuron = dict(sections["neuron"])
    mems = []
    for idx in ("1", "2"):
        mems.append(MemristorParams(**{k: neuron.pop(f"{k}{idx}") for k in _MEM_KEYS}))
    enc = dict(sections["encoder"])
    patterns = tuple(str(enc.pop("patterns")).replace(",", " ").split())
    size = int(enc.pop("pattern_size"))
    exp = dict(sections["experiment"])
    preset = exp.pop("preset")
    net = dict(sections["network"])
    net.update(sections["synapse"])
    kind = "type2" if task == "type2" else "type1"
    try:
        return RunConfig(
            task=task,
            preset=preset,
            mif=MifParams(m1=mems[0], m2=mems[1], **neuron),
            stdp=StdpParams(**sections["stdp"]),
            network=NetworkConfig(kind=kind, **net),
            encoder=EncoderConfig(**enc),
            experiment=ExperimentConfig(pattern_size=size, **exp),
            patterns=patterns,
        )
    except (TypeError, ValueError) as exc:
        raise ConfigError(str(exc)) from exc


def dump_config(cfg: RunConfig, path: str | Path) -> None:
    cp = configparser.ConfigParser(interpolation=None)
    cp.optionxform = str
    for section, values in cfg.flat().items():
        cp[section] = {k: repr(v) if isinstance(v, float) else str(v) for k, v in values.items()}
    with open(path, "w") as fh:
        cp.write(fh)
