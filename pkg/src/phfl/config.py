"""Experiment configuration: YAML in, validated SI-unit dataclasses out.

Every section has a fixed key set; unknown keys and malformed values raise
:class:`ConfigError` naming the offending field (``section.key``).  Power
levels are written in dBm and noise density in dBm/Hz; both are converted
to Watts here, so the rest of the package only sees SI units.  The
annotated reference file is ``configs/example.yaml``.
"""
import math
from dataclasses import dataclass, field, replace

import yaml

from .channel import ChannelParams
from .cost import EnergyParams
from .errors import ConfigError, IoError
from .optimizer import OptimizerSettings
from .topology import RoundSchedule, TopologyConfig, dbm_to_watt, watt_to_dbm

BASELINES = ("phfl", "r-phfl", "hfl-wc", "hfl-vc-ub", "hfl-ub")


@dataclass(frozen=True)
class ProfileSettings:
    """Per-VC ranges (SI units); every VC draws one profile shared by its UEs.

    ``overrides`` maps a global UE index to a dict of replacement values
    for ``p_max``, ``e_th``, ``f_max`` or ``cycles_per_bit``.
    ``bits_per_sample=None`` means one synthetic sample (features x FPP).
    """
    p_max: tuple = (float(dbm_to_watt(23.0)), float(dbm_to_watt(30.0)))
    e_th: tuple = (0.03, 0.06)
    f_max: tuple = (1.8e9, 2.8e9)
    cycles_per_bit: tuple = (20.0, 25.0)
    bits_per_sample: float = None
    batch_size: int = 32
    batch_count: int = 10
    overrides: dict = field(default_factory=dict)


@dataclass(frozen=True)
class LearnerSettings:
    """Synthetic task, model and SGD settings."""
    model: str = "mlp"
    hidden: int = 128
    n_features: int = 32
    n_classes: int = 10
    train_samples: int = 12000
    test_samples: int = 2000
    class_sep: float = 1.0
    clusters_per_class: int = 2
    noise: float = 1.0
    dirichlet_alpha: float = 0.5
    eta: float = 0.01
    csv_path: str = None


@dataclass(frozen=True)
class ExperimentConfig:
    topology: TopologyConfig
    schedule: RoundSchedule
    channel: ChannelParams
    energy: EnergyParams
    profiles: ProfileSettings
    learner: LearnerSettings
    optimizer: OptimizerSettings
    t_th: float
    baseline: str = "phfl"
    seed: int = 0
    output_dir: str = "runs/default"
    inverse_p_cap: float = None

    def with_overrides(self, **kw):
        return replace(self, **kw)


def _fail(name, msg):
    raise ConfigError(f"{name}: {msg}")


def _number(v, name):
    if isinstance(v, bool) or not isinstance(v, (int, float)):
        _fail(name, f"expected a number, got {v!r}")
    v = float(v)
    if not math.isfinite(v):
        _fail(name, "must be finite")
    return v


def _pos(v, name):
    v = _number(v, name)
    if v <= 0:
        _fail(name, "must be positive")
    return v


def _nonneg(v, name):
    v = _number(v, name)
    if v < 0:
        _fail(name, "must be nonnegative")
    return v


def _real(v, name):
    return _number(v, name)


def _int(lo):
    def conv(v, name):
        if isinstance(v, bool) or not isinstance(v, int):
            _fail(name, f"expected an integer, got {v!r}")
        if v < lo:
            _fail(name, f"must be >= {lo}")
        return int(v)
    return conv


def _range(conv):
    def parse(v, name):
        if isinstance(v, (int, float)) and not isinstance(v, bool):
            v = [v, v]
        if not isinstance(v, (list, tuple)) or len(v) != 2:
            _fail(name, "expected [low, high]")
        lo, hi = conv(v[0], name), conv(v[1], name)
        if lo > hi:
            _fail(name, "low exceeds high")
        return (lo, hi)
    return parse


def _bool(v, name):
    if not isinstance(v, bool):
        _fail(name, f"expected true/false, got {v!r}")
    return v


def _choice(options):
    def conv(v, name):
        if v not in options:
            _fail(name, f"expected one of {list(options)}, got {v!r}")
        return v
    return conv


def _optional(conv):
    def parse(v, name):
        return None if v is None else conv(v, name)
    return parse


def _string(v, name):
    if not isinstance(v, str):
        _fail(name, f"expected a string, got {v!r}")
    return v


def _section(raw, name, schema, required=()):
    """Validate one mapping against ``schema`` {key: (converter, default)}."""
    if raw is None:
        raw = {}
    if not isinstance(raw, dict):
        _fail(name, "expected a mapping")
    unknown = sorted(set(raw) - set(schema))
    if unknown:
        _fail(f"{name}.{unknown[0]}" if name else unknown[0], "unknown key")
    out = {}
    for key, (conv, default) in schema.items():
        full = f"{name}.{key}" if name else key
        if key in raw:
            out[key] = conv(raw[key], full)
        elif key in required:
            _fail(full, "required field is missing")
        else:
            out[key] = default
    return out


def _counts(v, name):
    """An int, or a nested list of ints with the tier's nesting."""
    if isinstance(v, bool):
        _fail(name, "expected an integer or nested list")
    if isinstance(v, int):
        if v < 0:
            _fail(name, "must be nonnegative")
        return v
    if isinstance(v, list):
        return [_counts(x, name) for x in v]
    _fail(name, "expected an integer or nested list")


def _weights(v, name):
    if v is None:
        return None
    if not isinstance(v, dict):
        _fail(name, "expected a mapping with keys mbs, sbs, vc, ue")
    unknown = sorted(set(v) - {"mbs", "sbs", "vc", "ue"})
    if unknown:
        _fail(f"{name}.{unknown[0]}", "unknown key")
    return v


def _expand(value, shape_like):
    """Broadcast a scalar count to the nesting of ``shape_like``."""
    if isinstance(value, list):
        return value
    if isinstance(shape_like, list):
        return [_expand(value, s) for s in shape_like]
    return [value] * shape_like


TOPOLOGY = {
    "mbs": (_int(1), 2),
    "sbs_per_mbs": (_counts, 2),
    "vcs_per_sbs": (_counts, 2),
    "ues_per_vc": (_counts, 6),
    "weights": (_weights, None),
}
SCHEDULE = {
    "kappa0": (_int(1), 5),
    "kappa1": (_int(1), 2),
    "kappa2": (_int(1), 2),
    "kappa3": (_int(1), 2),
    "rho": (_int(0), 1),
    "global_rounds": (_int(1), 100),
}
CHANNEL = {
    "prb_width_hz": (_pos, 1e6),
    "noise_psd_dbm_per_hz": (_real, -174.0),
    "pathloss_exponent": (_pos, 3.0),
    "distance_m": (_range(_pos), (10.0, 250.0)),
    "cross_distance_m": (_range(_pos), (600.0, 1200.0)),
}
ENERGY = {
    "half_xi": (_pos, 1e-28),
    "fpp": (_int(1), 32),
}
PROFILES = {
    "p_max_dbm": (_range(_real), (23.0, 30.0)),
    "e_th_j": (_range(_pos), (0.03, 0.06)),
    "f_max_hz": (_range(_pos), (1.8e9, 2.8e9)),
    "cycles_per_bit": (_range(_pos), (20.0, 25.0)),
    "bits_per_sample": (_optional(_pos), None),
    "batch_size": (_int(1), 32),
    "batch_count": (_int(1), 10),
    "overrides": (lambda v, n: v, None),
}
OVERRIDE = {
    "ue": (_int(0), None),
    "p_max_dbm": (_optional(_real), None),
    "e_th_j": (_optional(_pos), None),
    "f_max_hz": (_optional(_pos), None),
    "cycles_per_bit": (_optional(_pos), None),
}
LEARNER = {
    "model": (_choice(("mlp", "logistic")), "mlp"),
    "hidden": (_int(1), 128),
    "n_features": (_int(1), 32),
    "n_classes": (_int(2), 10),
    "train_samples": (_int(1), 12000),
    "test_samples": (_int(1), 2000),
    "class_sep": (_pos, 1.0),
    "clusters_per_class": (_int(1), 2),
    "noise": (_nonneg, 1.0),
    "dirichlet_alpha": (_pos, 0.5),
    "eta": (_pos, 0.01),
    "csv_path": (_optional(_string), None),
}
OPTIMIZER = {
    "t_th_s": (_pos, None),
    "delta_th": (_nonneg, 0.9),
    "phi1": (_nonneg, 1.0),
    "phi2": (_nonneg, 1e-3),
    "max_iter": (_int(0), 50),
    "eps": (_nonneg, 1e-9),
    "refresh_interference": (_bool, True),
}
TOP = {
    "seed": (_int(0), 0),
    "baseline": (_choice(BASELINES), "phfl"),
    "output_dir": (_string, "runs/default"),
    "inverse_p_cap": (_optional(_pos), None),
    "topology": (lambda v, n: v, None),
    "schedule": (lambda v, n: v, None),
    "channel": (lambda v, n: v, None),
    "energy": (lambda v, n: v, None),
    "profiles": (lambda v, n: v, None),
    "learner": (lambda v, n: v, None),
    "optimizer": (lambda v, n: v, None),
}


def _parse_overrides(raw):
    if raw is None:
        return {}
    if not isinstance(raw, list):
        _fail("profiles.overrides", "expected a list of mappings")
    out = {}
    for n, item in enumerate(raw):
        name = f"profiles.overrides[{n}]"
        entry = _section(item, name, OVERRIDE, required=("ue",))
        values = {}
        if entry["p_max_dbm"] is not None:
            values["p_max"] = float(dbm_to_watt(entry["p_max_dbm"]))
        if entry["e_th_j"] is not None:
            values["e_th"] = entry["e_th_j"]
        if entry["f_max_hz"] is not None:
            values["f_max"] = entry["f_max_hz"]
        if entry["cycles_per_bit"] is not None:
            values["cycles_per_bit"] = entry["cycles_per_bit"]
        out[entry["ue"]] = values
    return out


def parse_config(raw):
    """Validate a config mapping (as loaded from YAML) into an ExperimentConfig."""
    if not isinstance(raw, dict):
        raise ConfigError("config: expected a mapping at the top level")
    top = _section(raw, "", TOP, required=("optimizer",))
    topo = _section(top["topology"], "topology", TOPOLOGY)
    L = topo["mbs"]
    sbs = _expand(topo["sbs_per_mbs"], L)
    vcs = _expand(topo["vcs_per_sbs"], sbs)
    ues = _expand(topo["ues_per_vc"], vcs)
    mode = "explicit" if topo["weights"] is not None else "uniform"
    topology = TopologyConfig(L, sbs, vcs, ues, mode, topo["weights"])

    try:
        schedule = RoundSchedule(**_section(top["schedule"], "schedule", SCHEDULE))
    except ValueError as exc:
        raise ConfigError(f"schedule: {exc}") from None

    ch = _section(top["channel"], "channel", CHANNEL)
    if ch["pathloss_exponent"] < 2:
        _fail("channel.pathloss_exponent", "must be >= 2")
    channel = ChannelParams(omega=ch["prb_width_hz"],
                            noise_psd=float(dbm_to_watt(ch["noise_psd_dbm_per_hz"])),
                            pathloss_exp=ch["pathloss_exponent"], seed=top["seed"],
                            distance_range=ch["distance_m"],
                            cross_distance_range=ch["cross_distance_m"])
    energy = EnergyParams(**_section(top["energy"], "energy", ENERGY))

    pr = _section(top["profiles"], "profiles", PROFILES)
    profiles = ProfileSettings(
        p_max=tuple(float(dbm_to_watt(v)) for v in pr["p_max_dbm"]),
        e_th=pr["e_th_j"], f_max=pr["f_max_hz"], cycles_per_bit=pr["cycles_per_bit"],
        bits_per_sample=pr["bits_per_sample"], batch_size=pr["batch_size"],
        batch_count=pr["batch_count"], overrides=_parse_overrides(pr["overrides"]))

    learner = LearnerSettings(**_section(top["learner"], "learner", LEARNER))
    opt = _section(top["optimizer"], "optimizer", OPTIMIZER, required=("t_th_s",))
    if opt["delta_th"] > 1:
        _fail("optimizer.delta_th", "must lie in [0, 1]")
    t_th = opt.pop("t_th_s")
    optimizer = OptimizerSettings(**opt)
    return ExperimentConfig(topology=topology, schedule=schedule, channel=channel, energy=energy,
                            profiles=profiles, learner=learner, optimizer=optimizer, t_th=t_th,
                            baseline=top["baseline"], seed=top["seed"],
                            output_dir=top["output_dir"], inverse_p_cap=top["inverse_p_cap"])


def load_config(path):
    try:
        with open(path) as fh:
            raw = yaml.safe_load(fh)
    except OSError as exc:
        raise IoError(f"cannot read config {path}: {exc}") from None
    except yaml.YAMLError as exc:
        raise ConfigError(f"config {path} is not valid YAML: {exc}") from None
    return parse_config(raw)


def _dbm(w):
    return round(float(watt_to_dbm(w)), 12)


def config_to_dict(cfg):
    """Fully resolved config in file units; ``parse_config`` inverts it."""
    t = cfg.topology
    topo = {"mbs": t.mbs_count, "sbs_per_mbs": list(t.sbs_per_mbs),
            "vcs_per_sbs": [list(v) for v in t.vcs_per_sbs],
            "ues_per_vc": [[list(u) for u in v] for v in t.ues_per_vc]}
    if t.weight_mode == "explicit":
        topo["weights"] = t.weights
    s = cfg.schedule
    ch = cfg.channel
    p = cfg.profiles
    overrides = []
    for ue, vals in sorted(p.overrides.items()):
        entry = {"ue": int(ue)}
        if "p_max" in vals:
            entry["p_max_dbm"] = _dbm(vals["p_max"])
        if "e_th" in vals:
            entry["e_th_j"] = vals["e_th"]
        if "f_max" in vals:
            entry["f_max_hz"] = vals["f_max"]
        if "cycles_per_bit" in vals:
            entry["cycles_per_bit"] = vals["cycles_per_bit"]
        overrides.append(entry)
    lr = cfg.learner
    o = cfg.optimizer
    return {
        "seed": cfg.seed,
        "baseline": cfg.baseline,
        "output_dir": cfg.output_dir,
        "inverse_p_cap": cfg.inverse_p_cap,
        "topology": topo,
        "schedule": {"kappa0": s.kappa0, "kappa1": s.kappa1, "kappa2": s.kappa2,
                     "kappa3": s.kappa3, "rho": s.rho, "global_rounds": s.global_rounds},
        "channel": {"prb_width_hz": ch.omega, "noise_psd_dbm_per_hz": _dbm(ch.noise_psd),
                    "pathloss_exponent": ch.pathloss_exp,
                    "distance_m": list(ch.distance_range),
                    "cross_distance_m": list(ch.cross_distance_range)},
        "energy": {"half_xi": cfg.energy.half_xi, "fpp": cfg.energy.fpp},
        "profiles": {"p_max_dbm": [_dbm(v) for v in p.p_max], "e_th_j": list(p.e_th),
                     "f_max_hz": list(p.f_max), "cycles_per_bit": list(p.cycles_per_bit),
                     "bits_per_sample": p.bits_per_sample, "batch_size": p.batch_size,
                     "batch_count": p.batch_count, "overrides": overrides},
        "learner": {"model": lr.model, "hidden": lr.hidden, "n_features": lr.n_features,
                    "n_classes": lr.n_classes, "train_samples": lr.train_samples,
                    "test_samples": lr.test_samples, "class_sep": lr.class_sep,
                    "clusters_per_class": lr.clusters_per_class, "noise": lr.noise,
                    "dirichlet_alpha": lr.dirichlet_alpha, "eta": lr.eta,
                    "csv_path": lr.csv_path},
        "optimizer": {"t_th_s": cfg.t_th, "delta_th": o.delta_th, "phi1": o.phi1,
                      "phi2": o.phi2, "max_iter": o.max_iter, "eps": o.eps,
                      "refresh_interference": o.refresh_interference},
    }


def dump_config(cfg, path):
    try:
        with open(path, "w") as fh:
            yaml.safe_dump(config_to_dict(cfg), fh, sort_keys=False)
    except OSError as exc:
        raise IoError(f"cannot write {path}: {exc}") from None
