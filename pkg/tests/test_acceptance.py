"""End-to-end acceptance criteria; each test prints one PASS/FAIL line."""
import io
import time
from pathlib import Path

import numpy as np
import yaml

from phfl import _pykernels as K
from phfl import kernels, rng
from phfl.analysis import (BoundInputs, bandwidth_saving, bandwidth_saving_for_delta,
                           corollary_bound, wireless_factors)
from phfl.channel import ChannelParams, success_probability
from phfl.config import parse_config
from phfl.cost import payload_bits
from phfl.engine import Simulation, reception_indicators, vc_update, weighted_average
from phfl.learner import prune_mask, sample_batch
from phfl.metrics import encode_record
from phfl.optimizer import OptimizerSettings, ProblemData, exact_feasible, sca_solve
from phfl.topology import TopologyConfig, build_topology
from helpers import a_direct, grid_oracle, random_row

EXAMPLE = Path(__file__).resolve().parents[1] / "configs" / "example.yaml"


def report(capsys, n, ok, detail):
    with capsys.disabled():
        print(f"\ncriterion {n}: {'PASS' if ok else 'FAIL'} ({detail})")
    assert ok, detail


def example_raw(**sections):
    raw = yaml.safe_load(EXAMPLE.read_text())
    for key, value in sections.items():
        if isinstance(value, dict):
            raw.setdefault(key, {}).update(value)
        else:
            raw[key] = value
    return raw


# 1 -------------------------------------------------------------------------

def test_channel_closed_form_matches_monte_carlo(capsys):
    start = time.perf_counter()
    gen = np.random.default_rng(0)
    params = ChannelParams()
    worst, kept = 0.0, 0
    while kept < 20:
        delta, f = gen.uniform(0, 0.9), gen.uniform(1.8e9, 2.8e9)
        power, interf = gen.uniform(0.1, 1.0), gen.uniform(0, 1e-11)
        t_th, dist = gen.uniform(0.03, 0.06), gen.uniform(10, 250)
        cycles, d_model, kappa0 = 32 * 10 * gen.uniform(20, 25) * 1024, 5514, 5
        p = float(success_probability(delta, f, power, cycles=cycles, distance=dist,
                                      params=params, interf=interf, t_th=t_th, rho=1,
                                      kappa0=kappa0, d_model=d_model, fpp=32))
        if not 0.02 < p < 0.98:
            continue
        kept += 1
        h = gen.exponential(size=10 ** 6)
        # delay straight from the definitions: compute, then upload at the faded rate
        r = params.omega * np.log2(1 + power * h * dist ** -params.pathloss_exp
                                   / (params.omega * params.noise_psd + interf))
        t = cycles * (1 + kappa0 * (1 - delta)) / f + d_model * ((1 - delta) * 33 + 1) / r
        mc = np.mean(t <= t_th)
        se = np.sqrt(p * (1 - p) / 10 ** 6)
        worst = max(worst, abs(mc - p) / se)
    elapsed = time.perf_counter() - start
    report(capsys, 1, worst <= 3 and elapsed < 30,
           f"20 sets, worst |p - MC| = {worst:.2f} SE, {elapsed:.1f} s")


# 2 -------------------------------------------------------------------------

def _single_client_problem(row):
    return ProblemData(cycles=np.array([row[K.CYCLES]]), d_model=row[K.D_MODEL],
                       fpp=int(row[K.FPP]), omega=row[K.OMEGA], noise_psd=row[K.NOISE],
                       alpha=3.0, distance=np.array([row[K.PATHGAIN] ** (-1 / 3)]),
                       gain=np.array([row[K.GAIN]]), rho=int(row[K.RHO]),
                       kappa0=np.array([row[K.KAPPA0]]), t_th=row[K.T_TH],
                       e_th=np.array([row[K.E_TH]]), half_xi=row[K.HALF_XI],
                       f_max=np.array([row[K.F_MAX]]), p_max=np.array([row[K.P_MAX]]),
                       weight=np.array([row[K.WEIGHT]]),
                       fixed_interference=np.array([row[K.INTERF]]))


def test_sca_matches_grid_oracle(capsys):
    gen = np.random.default_rng(7)
    settings = OptimizerSettings(phi1=1.0, phi2=1e-3, max_iter=200, eps=1e-13, delta_th=0.9)
    worst_gap, trace_ok, feas_ok = -np.inf, True, True
    for _ in range(100):
        row = random_row(gen)
        prob = _single_client_problem(row)
        res = sca_solve(prob, settings, strict=True)
        tr, sur = res.objective_trace, res.surrogate_trace
        trace_ok &= all(b <= a + 1e-9 * max(1.0, abs(a)) for a, b in zip(tr, tr[1:]))
        trace_ok &= all(s <= a + 1e-9 * max(1.0, abs(a)) for a, s in zip(tr, sur))
        feas_ok &= bool(exact_feasible(res.decisions, prob, settings, tol=1e-6).all())
        best, _ = grid_oracle(row, 200)
        worst_gap = max(worst_gap, (tr[-1] - best) / best)
    ok = worst_gap <= 1e-3 and trace_ok and feas_ok
    report(capsys, 2, ok, f"100 instances, worst (SCA - grid)/grid = {worst_gap:.2e}, "
                          f"monotone={trace_ok}, feasible={feas_ok}")


# 3 -------------------------------------------------------------------------

def test_linearization_gradients(capsys):
    gen = np.random.default_rng(11)
    rows, xs = [], []
    while len(rows) < 50:
        p = random_row(gen)
        x = [gen.uniform(0.1, 0.9), p[K.F_MAX] * gen.uniform(0.8, 1), p[K.P_MAX] * gen.uniform(0.3, 1)]
        # anchors where A = exp(y) is representable in double precision
        if K.linearize(p, *x)[0] == K.STATUS_OK:
            rows.append(p)
            xs.append(x)
    status, lin = kernels.linearize_many(np.array(rows), np.array(xs))
    worst = 0.0
    for p, x, coef in zip(rows, xs, lin):
        # A = exp(y): shrink the step as log A grows to keep truncation error small
        scale = max(1.0, np.log(coef[0]))
        for k in range(3):
            step = 1e-6 * abs(x[k]) / scale
            up, dn = list(x), list(x)
            up[k] += step
            dn[k] -= step
            fd = (a_direct(p, *up) - a_direct(p, *dn)) / (2 * step)
            worst = max(worst, abs(coef[1 + k] - fd) / abs(fd))
    ok = bool(np.all(status == K.STATUS_OK)) and worst <= 1e-5
    report(capsys, 3, ok, f"50 anchors, worst relative error {worst:.2e}")


# 4 -------------------------------------------------------------------------

def test_pruning_inequality(capsys):
    gen = np.random.default_rng(5)
    violations, checks = 0, 0
    for _ in range(1000):
        w = gen.normal(size=int(gen.integers(10, 6000))) * gen.uniform(0.01, 10)
        norm = float(w @ w)
        for delta in np.round(np.arange(1, 10) / 10, 1):
            pruned = w * prune_mask(w, delta)
            err = float((w - pruned) @ (w - pruned))
            violations += err / norm > delta
            checks += 1
    report(capsys, 4, violations == 0, f"{violations} violations in {checks} checks")


# 5 -------------------------------------------------------------------------

def _global_trajectory(sim):
    traj = []
    evaluate = sim.evaluate

    def capture(w):
        traj.append(w.copy())
        return evaluate(w)

    sim.evaluate = capture
    sim.run()
    return traj


def _flat_reference(sim, rounds, kappa0):
    w = sim.initial_model()
    out = []
    for r in range(rounds):
        local = []
        for i, shard in enumerate(sim.shards):
            gen = rng.stream(sim.seed, rng.BATCHES, i, r)
            v = w.copy()
            for _ in range(kappa0):
                X, y = sample_batch(shard, sim.batch_size, gen)
                v = v - sim.eta * sim.model.loss_and_grad(v, X, y)[1]
            local.append(v)
        w = np.mean(local, axis=0)
        out.append(w)
    return out


def _reduction_gap(topology, kappa0, rounds=50):
    raw = {"seed": 1, "baseline": "hfl-vc-ub", "topology": topology,
           "schedule": {"kappa0": kappa0, "kappa1": 1, "kappa2": 1, "kappa3": 1,
                        "global_rounds": rounds},
           "learner": {"hidden": 16, "n_features": 8, "n_classes": 4, "train_samples": 800,
                       "test_samples": 100, "eta": 0.05},
           "optimizer": {"t_th_s": 0.05}}
    sim = Simulation(parse_config(raw))
    got = _global_trajectory(sim)
    ref = _flat_reference(sim, rounds, kappa0)
    return max(float(np.max(np.abs(a - b))) for a, b in zip(got, ref)), len(got)


def test_protocol_reduces_to_fedavg_and_sgd(capsys):
    fedavg, n1 = _reduction_gap({"mbs": 2, "sbs_per_mbs": 2, "vcs_per_sbs": 2, "ues_per_vc": 3},
                                kappa0=3)
    sgd, n2 = _reduction_gap({"mbs": 1, "sbs_per_mbs": 1, "vcs_per_sbs": 1, "ues_per_vc": 1},
                             kappa0=1)
    ok = fedavg <= 1e-12 and sgd <= 1e-12 and n1 == n2 == 50
    report(capsys, 5, ok, f"max deviation FedAvg {fedavg:.1e}, SGD {sgd:.1e} over 50 rounds")


# 6 -------------------------------------------------------------------------

def test_unbiased_aggregation(capsys):
    gen = np.random.default_rng(3)
    n, d, eta = 4, 20, 0.1
    tickets = gen.normal(size=(n, d))
    grads = 1.0 + 0.3 * gen.normal(size=(n, d))
    w = np.full(n, 1 / n)
    base = weighted_average(tickets, w)
    full = vc_update(tickets, grads, w, np.ones(n, bool), np.ones(n), eta) - base
    errors = []
    for p_value in (0.3, 0.6, 0.9):
        p = np.full(n, p_value)
        acc = np.zeros(d)
        draws = 10 ** 5
        for r in range(draws):
            received = reception_indicators(p, 17, r, range(n))
            acc += vc_update(tickets, grads, w, received, p, eta) - base
        errors.append(float(np.linalg.norm(acc / draws - full) / np.linalg.norm(full)))
    report(capsys, 6, max(errors) <= 0.01,
           "relative error " + ", ".join(f"p={p}: {e:.2%}" for p, e in zip((0.3, 0.6, 0.9), errors)))


# 7 -------------------------------------------------------------------------

def test_wireless_and_pruning_terms_vanish(capsys):
    topo = build_topology(TopologyConfig.uniform(2, 2, 2, 6))
    factors = wireless_factors(np.ones((25, topo.n_ue)), topo)
    inputs = BoundInputs(beta=1.0, sigma2=1.0, eps2_vc=1.0, eps2_sbs=1.0, eps2_mbs=1.0, eps2=1.0,
                         G2=1.0, D2=1.0, eta=1e-3, kappa=(5, 2, 2, 2), delta_th=0.0, T=4000,
                         initial_gap=1.0, n_clients=topo.n_ue, p_trace=np.ones((25, topo.n_ue)))
    bound = corollary_bound(inputs, topology=topo)
    ok = all(v == 0.0 for v in factors.values()) and bound["pruning"] == 0.0 \
        and bound["wireless"] == 0.0
    report(capsys, 7, ok, f"factors {sorted(set(factors.values()))}, pruning {bound['pruning']}, "
                          f"wireless {bound['wireless']}")


# 8 -------------------------------------------------------------------------

def test_arithmetic_identities(capsys):
    raw = {"topology": {"mbs": 1, "sbs_per_mbs": 1, "vcs_per_sbs": 1, "ues_per_vc": 1},
           "schedule": {"kappa0": 1, "kappa1": 2, "kappa2": 2, "kappa3": 2,
                        "global_rounds": 100},
           "learner": {"model": "logistic", "n_features": 4, "n_classes": 2,
                       "train_samples": 64, "test_samples": 16},
           "optimizer": {"t_th_s": 4.0, "max_iter": 2}}
    recs = Simulation(parse_config(raw)).run()
    cum_time = recs[-1]["cum_time"]
    bits = float(payload_bits(0.0, 151882, 32))
    ok = cum_time == 3200.0 and bits == 5163988
    report(capsys, 8, ok, f"cumulative time {cum_time:g} s, dense payload {bits:.0f} bits")


# 9 -------------------------------------------------------------------------

def _vc_median_delta(raw, rounds=None):
    sim = Simulation(parse_config(raw))
    deltas = np.array([d.delta for d in sim.decision_trace(rounds)])
    topo = sim.base_topology
    return np.array([np.median(deltas[:, topo.vc_members(j)]) for j in range(topo.n_vc)])


def _final_accuracy(records):
    return [r["test_accuracy"] for r in records if r["test_accuracy"] is not None][-1]


def test_desk_scale_trends(capsys):
    start = time.perf_counter()
    notes, oks = [], []

    # (a) tighter deadlines prune more in every VC
    meds = [_vc_median_delta(example_raw(optimizer={"t_th_s": t})) for t in (0.05, 0.04, 0.035)]
    a_ok = bool(np.all(meds[1] > meds[0]) and np.all(meds[2] > meds[1]))
    oks.append(a_ok)
    notes.append(f"a: median delta {np.mean(meds[0]):.3f} < {np.mean(meds[1]):.3f} "
                 f"< {np.mean(meds[2]):.3f}")

    # (c) PHFL against random pruning, 3 seeds; the PHFL logs also serve (b)
    gaps, pairs = [], []
    for seed in range(3):
        acc = {}
        for baseline in ("phfl", "r-phfl"):
            sim = Simulation(parse_config(example_raw(seed=seed, baseline=baseline)))
            recs = sim.run()
            acc[baseline] = _final_accuracy(recs)
            if baseline == "phfl":
                for r in recs:
                    pairs.extend(zip(r["delta"], r["bits"]))
        gaps.append(100 * (acc["phfl"] - acc["r-phfl"]))
    c_ok = min(gaps) >= 5
    oks.append(c_ok)
    notes.append("c: accuracy gap " + ", ".join(f"{g:.1f}" for g in gaps) + " points")

    # (b) measured savings rise with the optimized delta
    pairs = np.array(sorted(set(pairs)))
    dense = float(payload_bits(0.0, sim.model.dim, 32))
    saving = bandwidth_saving(pairs[:, 1], dense)
    # deltas closer than 1e-9 can round to the same payload
    step = np.diff(pairs[:, 0]) > 1e-9
    grid = bandwidth_saving_for_delta(np.linspace(0, 0.9, 10), sim.model.dim, 32)
    b_ok = bool(np.all(np.diff(saving) >= 0) and np.all(np.diff(saving)[step] > 0)
                and np.all(np.diff(grid) > 0))
    oks.append(b_ok)
    notes.append(f"b: saving {saving.min():.1f}%..{saving.max():.1f}% over {len(pairs)} decisions")

    # (d) raising one VC's power budget lowers its pruning, everything else fixed
    lower, d_ok = 0, True
    n_vc = 8
    for j in range(n_vc):
        med = []
        for dbm in (23.0, 30.0):
            overrides = [{"ue": 6 * j + i, "p_max_dbm": dbm} for i in range(6)]
            med.append(_vc_median_delta(example_raw(profiles={"overrides": overrides}), 200)[j])
        if med[0] > 0:
            d_ok &= med[1] < med[0]
            lower += med[1] < med[0]
        else:
            d_ok &= med[1] == 0
    oks.append(d_ok)
    notes.append(f"d: lower median delta at 30 dBm in {lower}/{n_vc} VCs")

    elapsed = time.perf_counter() - start
    oks.append(elapsed < 600)
    notes.append(f"{elapsed:.0f} s")
    notes.insert(0, "parts a,c,b,d,time " + "".join("+" if o else "-" for o in oks))
    report(capsys, 9, all(oks), "; ".join(notes))


# 10 ------------------------------------------------------------------------

def test_serial_and_parallel_logs_identical(capsys):
    raw = example_raw(schedule={"global_rounds": 2})
    logs = []
    for jobs in (1, 4):
        buf = io.StringIO()
        Simulation(parse_config(raw), jobs=jobs).run(lambda rec: buf.write(encode_record(rec) + "\n"))
        logs.append(buf.getvalue().encode())
    lines = logs[0].count(b"\n")
    report(capsys, 10, logs[0] == logs[1], f"{lines} records, {len(logs[0])} bytes each")
