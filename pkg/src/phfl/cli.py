"""Command-line entry point.

Subcommands: ``run``, ``optimize``, ``bound``, ``cdf`` and ``partition``.
Relative output paths are resolved under ``$PHFL_OUTPUT_ROOT`` when it is
set.  Exit codes: 0 success, 2 invalid configuration or arguments,
3 file read/write failure, 4 any other module error.
"""
import argparse
import json
import os
import sys
import warnings

import numpy as np
import yaml

from . import kernels
from .analysis import BoundInputs, corollary_bound, wireless_factors
from .config import BASELINES, dump_config, load_config
from .data import dirichlet_partition, make_gaussian_mixture, load_csv, train_test_split, \
    write_manifest
from .engine import Simulation
from .errors import ConfigError, IoError, PhflError
from .metrics import JsonlWriter, read_jsonl, write_artifacts, write_cdf_csv, write_csv
from .optimizer import OptimizerSettings, ProblemData, sca_solve
from .topology import build_topology, dbm_to_watt

EXIT_OK, EXIT_CONFIG, EXIT_IO, EXIT_MODULE = 0, 2, 3, 4
OUTPUT_ROOT_ENV = "PHFL_OUTPUT_ROOT"


def resolve_output(path):
    root = os.environ.get(OUTPUT_ROOT_ENV)
    if root and not os.path.isabs(path):
        return os.path.join(root, path)
    return path


def _read_structured(path):
    """JSON or YAML mapping from ``path``."""
    try:
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise IoError(f"cannot read {path}: {exc}") from None
    try:
        data = json.loads(text) if path.endswith(".json") else yaml.safe_load(text)
    except (json.JSONDecodeError, yaml.YAMLError) as exc:
        raise ConfigError(f"{path}: cannot parse: {exc}") from None
    if not isinstance(data, dict):
        raise ConfigError(f"{path}: expected a mapping at the top level")
    return data


def _write_json(obj, path):
    try:
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(obj, fh, indent=2, allow_nan=False)
            fh.write("\n")
    except OSError as exc:
        raise IoError(f"cannot write {path}: {exc}") from None


def _makedirs(path):
    try:
        os.makedirs(path, exist_ok=True)
    except OSError as exc:
        raise IoError(f"cannot create {path}: {exc}") from None


# run -----------------------------------------------------------------------

def cmd_run(args):
    cfg = load_config(args.config)
    kw = {}
    if args.baseline:
        kw["baseline"] = args.baseline
    if args.seed is not None:
        kw["seed"] = args.seed
    if args.output:
        kw["output_dir"] = args.output
    cfg = cfg.with_overrides(**kw) if kw else cfg
    out = resolve_output(cfg.output_dir)
    _makedirs(out)
    dump_config(cfg, os.path.join(out, "config.yaml"))
    sim = Simulation(cfg, jobs=args.jobs)
    with JsonlWriter(os.path.join(out, "metrics.jsonl")) as sink:
        records = sim.run(sink)
    write_artifacts(records, out)
    last = next((r for r in reversed(records) if r.get("test_accuracy") is not None), None)
    acc = last["test_accuracy"] if last else float("nan")
    print(f"{cfg.baseline}: {len(records)} VC rounds, final accuracy {acc:.4f}, "
          f"artifacts in {out}")
    return EXIT_OK


# optimize ------------------------------------------------------------------

INSTANCE_HELP = """instance JSON keys:
  clients: list of {cycles, distance_m, gain, e_th_j, f_max_hz, p_max_dbm,
           weight (default 1), interference_w (default 0)}
  channel: {prb_width_hz, noise_psd_dbm_per_hz, pathloss_exponent}
  model: {d_model, fpp}
  schedule: {kappa0, rho}
  optimizer: {t_th_s, delta_th, phi1, phi2, max_iter, eps}"""


def _field(section, key, where, default=None):
    if key in section:
        return section[key]
    if default is None:
        raise ConfigError(f"{where}.{key}: required field is missing")
    return default


def instance_problem(inst):
    """ProblemData and OptimizerSettings from an ``optimize`` instance mapping."""
    clients = inst.get("clients")
    if not isinstance(clients, list) or not clients:
        raise ConfigError("clients: expected a nonempty list")
    ch = inst.get("channel", {})
    model = inst.get("model", {})
    sched = inst.get("schedule", {})
    opt = inst.get("optimizer")
    if not isinstance(opt, dict):
        raise ConfigError("optimizer: required section is missing")

    def col(key, default=None):
        return np.array([float(_field(c, key, f"clients[{n}]", default))
                         for n, c in enumerate(clients)])

    try:
        n = len(clients)
        problem = ProblemData(
            cycles=col("cycles"), d_model=int(_field(model, "d_model", "model")),
            fpp=int(model.get("fpp", 32)), omega=float(ch.get("prb_width_hz", 1e6)),
            noise_psd=float(dbm_to_watt(ch.get("noise_psd_dbm_per_hz", -174.0))),
            alpha=float(ch.get("pathloss_exponent", 3.0)), distance=col("distance_m"),
            gain=col("gain", 1.0), rho=int(sched.get("rho", 1)),
            kappa0=np.full(n, float(sched.get("kappa0", 5))),
            t_th=float(_field(opt, "t_th_s", "optimizer")), e_th=col("e_th_j"),
            half_xi=float(model.get("half_xi", 1e-28)), f_max=col("f_max_hz"),
            p_max=dbm_to_watt(col("p_max_dbm")), weight=col("weight", 1.0),
            fixed_interference=col("interference_w", 0.0))
        settings = OptimizerSettings(
            phi1=float(opt.get("phi1", 1.0)), phi2=float(opt.get("phi2", 1e-3)),
            max_iter=int(opt.get("max_iter", 50)), eps=float(opt.get("eps", 1e-9)),
            delta_th=float(opt.get("delta_th", 0.9)), refresh_interference=False)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"instance: {exc}") from None
    return problem, settings


def cmd_optimize(args):
    problem, settings = instance_problem(_read_structured(args.instance))
    res = sca_solve(problem, settings)
    x = res.decisions
    out = {
        "backend": kernels.BACKEND_NAME,
        "decisions": [{"client": i, "delta": float(x[i, 0]), "f_hz": float(x[i, 1]),
                       "power_w": float(x[i, 2]), "p": float(res.probabilities[i]),
                       "feasible": bool(res.feasible[i])} for i in range(problem.n)],
        "objective_trace": [float(v) for v in res.objective_trace],
        "surrogate_trace": [float(v) for v in res.surrogate_trace],
        "infeasible": {str(k): v for k, v in res.reasons.items()},
    }
    path = resolve_output(args.output)
    parent = os.path.dirname(path)
    if parent:
        _makedirs(parent)
    _write_json(out, path)
    print(f"optimized {problem.n} clients in {len(res.surrogate_trace)} iterations -> {path}")
    return EXIT_OK


# bound ---------------------------------------------------------------------

BOUND_KEYS = ("beta", "sigma2", "eps2_vc", "eps2_sbs", "eps2_mbs", "eps2", "G2", "D2", "eta",
              "kappa", "delta_th", "T", "initial_gap", "n_clients")


def cmd_bound(args):
    raw = _read_structured(args.inputs)
    unknown = set(raw) - set(BOUND_KEYS) - {"metrics", "config", "phi_w0", "coefficients"}
    if unknown:
        raise ConfigError(f"bound: unknown keys {sorted(unknown)}")
    for key in BOUND_KEYS:
        if key not in raw:
            raise ConfigError(f"bound.{key}: required field is missing")
    try:
        inputs = BoundInputs(**{k: raw[k] for k in BOUND_KEYS},
                             coefficients=raw.get("coefficients") or {})
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"bound: {exc}") from None
    factors = {}
    phi = raw.get("phi_w0")
    if "metrics" in raw:
        if "config" not in raw:
            raise ConfigError("bound.config: needed to weight the metrics trace")
        topology = build_topology(load_config(raw["config"]).topology)
        trace = np.array([r["p"] for r in read_jsonl(raw["metrics"])], dtype=float)
        factors = wireless_factors(trace, topology)
        phi = factors["phi_w0"]
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        result = corollary_bound(inputs, phi_w0=phi or 0.0)
    for w in caught:
        print(f"warning: {w.message}", file=sys.stderr)
    rows = [(k, result[k]) for k in list(result) if k not in ("eta_ok",)]
    rows += [(k, v) for k, v in factors.items()]
    path = resolve_output(args.output)
    write_csv(path, ("term", "value"), [(k, float(v)) for k, v in rows])
    print(f"bound total {result['total']:.6g} -> {path}")
    return EXIT_OK


# cdf -----------------------------------------------------------------------

def cmd_cdf(args):
    records = read_jsonl(args.metrics)
    if not records:
        raise IoError(f"{args.metrics}: no records")
    path = resolve_output(args.output)
    write_cdf_csv(records, path, key=args.key)
    print(f"CDF of {args.key} by VC -> {path}")
    return EXIT_OK


# partition -----------------------------------------------------------------

def cmd_partition(args):
    cfg = load_config(args.config)
    lr = cfg.learner
    n_ue = build_topology(cfg.topology).n_ue
    if lr.csv_path:
        data = load_csv(lr.csv_path)
        frac = lr.test_samples / (lr.train_samples + lr.test_samples)
    else:
        data = make_gaussian_mixture(lr.train_samples + lr.test_samples, lr.n_features,
                                     lr.n_classes, seed=cfg.seed, class_sep=lr.class_sep,
                                     clusters_per_class=lr.clusters_per_class, noise=lr.noise)
        frac = lr.test_samples / len(data)
    train, _ = train_test_split(data, frac, cfg.seed)
    shards = dirichlet_partition(train, n_ue, lr.dirichlet_alpha, cfg.seed)
    path = resolve_output(args.output)
    write_manifest(shards, path)
    print(f"{n_ue} shards, sizes {min(map(len, shards))}..{max(map(len, shards))} -> {path}")
    return EXIT_OK


def build_parser():
    p = argparse.ArgumentParser(prog="phfl", description=__doc__.splitlines()[0],
                                epilog="exit codes: 0 ok, 2 config, 3 io, 4 module error")
    sub = p.add_subparsers(dest="command", required=True)

    r = sub.add_parser("run", help="run an experiment from a YAML config")
    r.add_argument("config")
    r.add_argument("--baseline", choices=BASELINES)
    r.add_argument("--seed", type=int)
    r.add_argument("--output", help="output directory (overrides output_dir)")
    r.add_argument("--jobs", type=int, default=1, help="client-level threads")
    r.set_defaults(func=cmd_run)

    o = sub.add_parser("optimize", help="solve one round's resource allocation",
                       epilog=INSTANCE_HELP, formatter_class=argparse.RawDescriptionHelpFormatter)
    o.add_argument("instance")
    o.add_argument("--output", default="decisions.json")
    o.set_defaults(func=cmd_optimize)

    b = sub.add_parser("bound", help="evaluate the convergence bound terms")
    b.add_argument("inputs", help="YAML/JSON with the bound constants")
    b.add_argument("--output", default="bound.csv")
    b.set_defaults(func=cmd_bound)

    c = sub.add_parser("cdf", help="per-VC empirical CDF from a metrics log")
    c.add_argument("metrics")
    c.add_argument("--key", default="delta", choices=("delta", "p", "f", "power", "t_tot", "e_tot"))
    c.add_argument("--output", default="cdf.csv")
    c.set_defaults(func=cmd_cdf)

    s = sub.add_parser("partition", help="write the non-IID shard manifest for a config")
    s.add_argument("config")
    s.add_argument("--output", default="partition.json")
    s.set_defaults(func=cmd_partition)
    return p


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except IoError as exc:
        print(f"io error: {exc}", file=sys.stderr)
        return EXIT_IO
    except PhflError as exc:
        print(f"{type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_MODULE


if __name__ == "__main__":
    sys.exit(main())
