"""JSONL metrics log, summary tables and plot-ready CSV files."""
import csv
import json
import math
import os

import numpy as np

from .analysis import empirical_cdf
from .errors import IoError

SUMMARY_COLUMNS = ("m", "round", "cum_time", "cum_energy", "cum_bits", "test_accuracy",
                   "global_loss", "delta_mean", "delta_median", "p_mean", "received_fraction",
                   "feasible_fraction")


def _clean(value):
    """Replace non-finite floats by None so the log stays strict JSON."""
    if isinstance(value, float):
        return value if math.isfinite(value) else None
    if isinstance(value, dict):
        return {k: _clean(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_clean(v) for v in value]
    return value


def encode_record(record):
    return json.dumps(_clean(record), allow_nan=False, separators=(",", ":"), sort_keys=True)


class JsonlWriter:
    """Appends one JSON object per line; usable as a ``Simulation.run`` sink."""

    def __init__(self, path):
        self.path = path
        try:
            self._fh = open(path, "w", encoding="utf-8", newline="\n")
        except OSError as exc:
            raise IoError(f"cannot open {path}: {exc}") from exc

    def __call__(self, record):
        self._fh.write(encode_record(record) + "\n")

    def close(self):
        self._fh.close()

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.close()


def write_jsonl(records, path):
    with JsonlWriter(path) as w:
        for rec in records:
            w(rec)


def read_jsonl(path):
    try:
        with open(path, encoding="utf-8") as fh:
            return [json.loads(line) for line in fh if line.strip()]
    except OSError as exc:
        raise IoError(f"cannot read {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise IoError(f"malformed JSONL in {path}: {exc}") from exc


def summarize(records):
    """One row per global round, computed from the records alone.

    Decision statistics pool every client over the VC rounds of that
    global round.
    """
    rows = []
    pooled = {"delta": [], "p": [], "received": [], "feasible": []}
    for rec in records:
        for key in pooled:
            pooled[key].extend(rec[key])
        if rec.get("test_accuracy") is None:
            continue
        delta = np.asarray(pooled["delta"], dtype=float)
        rows.append({
            "m": rec["m"],
            "round": rec["round"],
            "cum_time": rec["cum_time"],
            "cum_energy": rec["cum_energy"],
            "cum_bits": rec["cum_bits"],
            "test_accuracy": rec["test_accuracy"],
            "global_loss": rec["global_loss"],
            "delta_mean": float(np.mean(delta)),
            "delta_median": float(np.median(delta)),
            "p_mean": float(np.mean(pooled["p"])),
            "received_fraction": float(np.mean(pooled["received"])),
            "feasible_fraction": float(np.mean(pooled["feasible"])),
        })
        pooled = {k: [] for k in pooled}
    return rows


def delta_groups(records, key="delta"):
    """Per-VC pooled values of a per-client field."""
    groups = {}
    for rec in records:
        for vc, v in zip(rec["vc_of_client"], rec[key]):
            groups.setdefault(int(vc), []).append(v)
    return groups


def vc_medians(records, key="delta"):
    return {vc: float(np.median(v)) for vc, v in sorted(delta_groups(records, key).items())}


def write_csv(path, header, rows):
    try:
        with open(path, "w", encoding="utf-8", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(header)
            for row in rows:
                values = [row[h] for h in header] if isinstance(row, dict) else row
                w.writerow([_fmt(v) for v in values])
    except OSError as exc:
        raise IoError(f"cannot write {path}: {exc}") from exc


def _fmt(v):
    if v is None:
        return ""
    if isinstance(v, float):
        return repr(v)
    return v


def write_summary_csv(records, path):
    write_csv(path, SUMMARY_COLUMNS, summarize(records))


def write_cdf_csv(records, path, key="delta"):
    cdf = empirical_cdf(delta_groups(records, key))
    write_csv(path, ("vc_id", "x", "F"), list(cdf.rows()))


def write_artifacts(records, out_dir):
    """Summary, accuracy-vs-round, accuracy-vs-time and delta CDF CSVs."""
    os.makedirs(out_dir, exist_ok=True)
    rows = summarize(records)
    write_csv(os.path.join(out_dir, "summary.csv"), SUMMARY_COLUMNS, rows)
    write_csv(os.path.join(out_dir, "accuracy_vs_round.csv"), ("m", "test_accuracy"),
              [{"m": r["m"], "test_accuracy": r["test_accuracy"]} for r in rows])
    write_csv(os.path.join(out_dir, "accuracy_vs_time.csv"), ("cum_time", "test_accuracy"),
              [{"cum_time": r["cum_time"], "test_accuracy": r["test_accuracy"]} for r in rows])
    if records:
        write_cdf_csv(records, os.path.join(out_dir, "delta_cdf.csv"))
