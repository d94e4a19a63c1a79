"""Four-tier PHFL rounds, probabilistic uplink reception, baselines.

One *VC round* is kappa0 local iterations on every UE followed by the VC
update

    w_j <- sum_i alpha_i w~_i^0 - eta sum_i (1_i / p_i) alpha_i sum_t0 g(w~_i) * m_i,

where w~_i^0 is the winning ticket the UE builds from the VC model and 1_i
is drawn Bernoulli(p_i).  After kappa1 VC rounds each sBS averages its VCs,
after kappa2 sBS rounds each mBS averages its sBSs, and after kappa3 mBS
rounds the server averages the mBSs; at every such sync instant the new
parent model is pushed down to all descendants.

Resource decisions per VC round come from a policy that depends on the
baseline:

* ``phfl``: the SCA optimizer on the current channel draw.
* ``r-phfl``: delta ~ U[0, delta_th], P = P_max, the largest f within both
  budgets, and per VC the largest kappa0 (at most the configured one) that
  every member can afford.
* ``hfl-wc``: VCs of an sBS merged, no pruning and no warm-up, the deadline
  and energy budget scaled by kappa1, per original VC the largest affordable
  kappa0 up to kappa0 kappa1.
* ``hfl-vc-ub``: four tiers, no pruning, perfect reception, no budgets.
* ``hfl-ub``: like ``hfl-vc-ub`` on the merged three-tier hierarchy with
  kappa0 kappa1 local iterations.
"""
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace

import numpy as np

from . import rng
from .channel import (draw_fading, draw_geometry, interference_matrix, rate, sinr,
                      success_probability)
from .cost import cost_breakdown, payload_bits
from .data import dirichlet_partition, load_csv, make_gaussian_mixture, train_test_split
from .errors import PhflError, ScheduleViolation
from .learner import accuracy, lottery_ticket, make_model, run_local_rounds
from .optimizer import ProblemData, sca_solve
from .topology import build_topology, dbm_to_watt, merge_vcs, watt_to_dbm

SCHEMA_VERSION = 1
BASELINES = ("phfl", "r-phfl", "hfl-wc", "hfl-vc-ub", "hfl-ub")
MERGED = ("hfl-wc", "hfl-ub")
UPPER_BOUNDS = ("hfl-vc-ub", "hfl-ub")


def weighted_average(models, weights):
    """sum_c weights[c] models[c] for models of shape (n, d)."""
    return np.asarray(weights, dtype=float) @ np.asarray(models, dtype=float)


def reception_indicators(probs, seed, round_index, clients):
    """1_i ~ Bernoulli(p_i), one named stream per (client, VC round)."""
    u = np.array([rng.stream(seed, rng.RECEPTION, int(i), round_index).random() for i in clients])
    return u < np.asarray(probs, dtype=float)


def vc_update(tickets, grad_sums, weights, received, probs, eta, inverse_p_cap=None):
    """VC model after one VC round, with 1/p scaling of the received updates.

    ``tickets`` and ``grad_sums`` have one row per member UE.  A UE whose
    upload is lost contributes only its ticket; when every upload is lost
    the result is the weighted average of the tickets.
    """
    weights = np.asarray(weights, dtype=float)
    received = np.asarray(received, dtype=bool)
    probs = np.asarray(probs, dtype=float)
    base = weighted_average(tickets, weights)
    scale = np.zeros_like(weights)
    inv = 1.0 / probs[received]
    if inverse_p_cap is not None:
        inv = np.minimum(inv, inverse_p_cap)
    scale[received] = weights[received] * inv
    return base - eta * (scale @ np.asarray(grad_sums, dtype=float))


class TierModels:
    """Models of every VC, sBS, mBS and the server, with sync bookkeeping.

    Aggregations must follow the schedule: an sBS round closes exactly
    kappa1 VC rounds, an mBS round kappa2 sBS rounds and a global round
    kappa3 mBS rounds; anything else raises :class:`ScheduleViolation`.
    """

    def __init__(self, topology, schedule, w0):
        self.topology = topology
        self.schedule = schedule
        w0 = np.asarray(w0, dtype=float)
        self.vc = np.tile(w0, (topology.n_vc, 1))
        self.sbs = np.tile(w0, (topology.n_sbs, 1))
        self.mbs = np.tile(w0, (topology.n_mbs, 1))
        self.glob = w0.copy()
        self.vc_rounds = 0
        self.sbs_rounds = 0
        self.mbs_rounds = 0

    def set_vc(self, j, w):
        self.vc[j] = w

    def close_vc_round(self):
        if self.vc_rounds >= self.schedule.kappa1:
            raise ScheduleViolation("VC round started before the pending sBS aggregation")
        self.vc_rounds += 1

    def run_sbs_round(self):
        if self.vc_rounds != self.schedule.kappa1:
            raise ScheduleViolation(f"sBS aggregation after {self.vc_rounds} of "
                                    f"{self.schedule.kappa1} VC rounds")
        t = self.topology
        for k in range(t.n_sbs):
            members = t.sbs_members(k)
            self.sbs[k] = weighted_average(self.vc[members], t.vc_weight[members])
            self.vc[members] = self.sbs[k]
        self.vc_rounds = 0
        self.sbs_rounds += 1

    def run_mbs_round(self):
        if self.sbs_rounds != self.schedule.kappa2 or self.vc_rounds:
            raise ScheduleViolation(f"mBS aggregation after {self.sbs_rounds} of "
                                    f"{self.schedule.kappa2} sBS rounds")
        t = self.topology
        for l in range(t.n_mbs):
            members = t.mbs_members(l)
            self.mbs[l] = weighted_average(self.sbs[members], t.sbs_weight[members])
        self._push_from_mbs()
        self.sbs_rounds = 0
        self.mbs_rounds += 1

    def run_global_round(self):
        if self.mbs_rounds != self.schedule.kappa3 or self.sbs_rounds or self.vc_rounds:
            raise ScheduleViolation(f"global aggregation after {self.mbs_rounds} of "
                                    f"{self.schedule.kappa3} mBS rounds")
        self.glob = weighted_average(self.mbs, self.topology.mbs_weight)
        self.mbs[:] = self.glob
        self._push_from_mbs()
        self.mbs_rounds = 0

    def _push_from_mbs(self):
        t = self.topology
        self.sbs[:] = self.mbs[t.sbs_mbs]
        self.vc[:] = self.sbs[t.vc_sbs]


@dataclass(frozen=True)
class Decisions:
    """Per-UE resource decisions for one VC round."""
    delta: np.ndarray
    f: np.ndarray
    power: np.ndarray
    kappa0: np.ndarray
    p: np.ndarray
    feasible: np.ndarray


@dataclass(frozen=True)
class Clients:
    """Per-UE physical profile in SI units."""
    f_max: np.ndarray
    p_max: np.ndarray
    e_th: np.ndarray
    cycles: np.ndarray  # K = b n c D per local iteration
    cycles_per_bit: np.ndarray


def draw_clients(topology, profiles, bits_per_sample, seed):
    """One profile per VC drawn from the configured ranges, then per-UE overrides.

    P_max is drawn uniformly in dBm.
    """
    n_vc = topology.n_vc
    lo_dbm, hi_dbm = (float(watt_to_dbm(v)) for v in profiles.p_max)
    vc_vals = np.empty((n_vc, 4))
    for j in range(n_vc):
        g = rng.stream(seed, rng.PROFILES, j)
        vc_vals[j] = [float(dbm_to_watt(g.uniform(lo_dbm, hi_dbm))), g.uniform(*profiles.e_th),
                      g.uniform(*profiles.f_max), g.uniform(*profiles.cycles_per_bit)]
    per_ue = vc_vals[topology.ue_vc].copy()
    cols = {"p_max": 0, "e_th": 1, "f_max": 2, "cycles_per_bit": 3}
    for ue, values in profiles.overrides.items():
        if not 0 <= int(ue) < topology.n_ue:
            raise ValueError(f"override for unknown UE {ue}")
        for key, v in values.items():
            per_ue[int(ue), cols[key]] = v
    c = per_ue[:, 3]
    K = profiles.batch_size * profiles.batch_count * c * bits_per_sample
    return Clients(f_max=per_ue[:, 2], p_max=per_ue[:, 0], e_th=per_ue[:, 1], cycles=K,
                   cycles_per_bit=c)


def affordable(work, upload, power, f_max, half_xi, t_budget, e_budget):
    """Largest CPU frequency meeting both budgets, or NaN if none does.

    ``work`` is the cycle count, ``upload`` the offload time at the current
    rate.  Time is decreasing and energy increasing in f, so the feasible
    set is an interval whose upper end maximizes the reception probability.
    """
    work = np.asarray(work, dtype=float)
    left = t_budget - upload
    e_left = e_budget - power * upload
    with np.errstate(divide="ignore", invalid="ignore"):
        f_need = np.where(work > 0, work / left, 0.0)
        f_energy = np.where(work > 0, np.sqrt(np.maximum(e_left, 0.0) / (half_xi * work)), np.inf)
    f = np.minimum(f_max, f_energy)
    ok = (left > 0) & (e_left >= 0) & (f_need <= f) & (f > 0)
    return np.where(ok, np.where(work > 0, f, f_max), np.nan)


class Simulation:
    """A prepared experiment: topology, data, channel geometry and policy.

    ``jobs`` sets the number of threads used for client training inside a
    VC round; results do not depend on it.
    """

    def __init__(self, config, jobs=1):
        self.config = config
        self.jobs = max(1, int(jobs))
        self.baseline = config.baseline
        if self.baseline not in BASELINES:
            raise ValueError(f"unknown baseline {self.baseline!r}")
        self.seed = config.seed
        base = build_topology(config.topology)
        self.base_topology = base
        self.topology = merge_vcs(base) if self.baseline in MERGED else base
        s = config.schedule
        if self.baseline in MERGED:
            self.schedule = replace(s, kappa1=1, rho=0)
            self.t_budget = s.kappa1 * config.t_th
            self.e_scale = s.kappa1
            self.kappa0_cap = s.kappa0 * s.kappa1
        else:
            self.schedule = s if self.baseline != "hfl-vc-ub" else replace(s, rho=0)
            self.t_budget = config.t_th
            self.e_scale = 1
            self.kappa0_cap = s.kappa0
        self.channel = config.channel
        self.energy = config.energy
        self.settings = config.optimizer
        lr = config.learner
        if lr.csv_path:
            data = load_csv(lr.csv_path)
            train, test = train_test_split(data, lr.test_samples / (lr.train_samples + lr.test_samples),
                                           self.seed)
        else:
            data = make_gaussian_mixture(lr.train_samples + lr.test_samples, lr.n_features,
                                         lr.n_classes, seed=self.seed, class_sep=lr.class_sep,
                                         clusters_per_class=lr.clusters_per_class, noise=lr.noise)
            train, test = train_test_split(data, lr.test_samples / len(data), self.seed)
        self.train, self.test = train, test
        n_features = train.X.shape[1]
        self.model = make_model(lr.model, n_features, train.n_classes, lr.hidden)
        self.shards = dirichlet_partition(train, base.n_ue, lr.dirichlet_alpha, self.seed)
        bits = config.profiles.bits_per_sample or n_features * self.energy.fpp
        self.clients = draw_clients(base, config.profiles, bits, self.seed)
        self.geometry = draw_geometry(base, self.channel)
        self.eta = lr.eta
        self.batch_size = config.profiles.batch_size
        self.ue_weight = self.topology.ue_global_weight()

    # decisions ---------------------------------------------------------

    def _rates(self, power, draw):
        ch = self.channel
        interf = interference_matrix(power, draw.cross_gains, self.geometry.cross,
                                     ch.pathloss_exp, self.topology.ue_sbs)
        gamma = sinr(power, draw.gains, self.geometry.own, ch.pathloss_exp, ch.omega,
                     ch.noise_psd, interf)
        return rate(gamma, ch.omega), interf

    def _probability(self, delta, f, power, kappa0, rho, interf, t_budget):
        return success_probability(delta, f, power, cycles=self.clients.cycles,
                                   distance=self.geometry.own, params=self.channel,
                                   interf=interf, t_th=t_budget, rho=rho, kappa0=kappa0,
                                   d_model=self.model.dim, fpp=self.energy.fpp)

    def decide(self, r, draw):
        b = self.baseline
        if b == "phfl":
            return self._decide_phfl(draw)
        if b == "r-phfl":
            return self._decide_random(r, draw)
        if b == "hfl-wc":
            return self._decide_wc(draw)
        return self._decide_ub(draw)

    def _decide_phfl(self, draw):
        c = self.clients
        n = len(c.f_max)
        s = self.schedule
        prob = ProblemData(cycles=c.cycles, d_model=self.model.dim, fpp=self.energy.fpp,
                           omega=self.channel.omega, noise_psd=self.channel.noise_psd,
                           alpha=self.channel.pathloss_exp, distance=self.geometry.own,
                           gain=draw.gains, rho=s.rho, kappa0=np.full(n, float(s.kappa0)),
                           t_th=self.t_budget, e_th=c.e_th, half_xi=self.energy.half_xi,
                           f_max=c.f_max, p_max=c.p_max, weight=self.ue_weight,
                           cross_gains=draw.cross_gains, cross_distance=self.geometry.cross,
                           ue_sbs=self.topology.ue_sbs)
        res = sca_solve(prob, self.settings)
        x = res.decisions
        return Decisions(delta=x[:, 0], f=x[:, 1], power=x[:, 2],
                         kappa0=np.full(n, s.kappa0), p=res.probabilities,
                         feasible=res.feasible)

    def _budgeted(self, delta, rho, draw, groups):
        """Largest affordable kappa0 per group and the matching frequencies."""
        c = self.clients
        n = len(c.f_max)
        power = c.p_max
        r, interf = self._rates(power, draw)
        t_up = payload_bits(delta, self.model.dim, self.energy.fpp) / r
        e_budget = c.e_th * self.e_scale
        kappa0 = np.zeros(n, dtype=np.int64)
        f = np.array(c.f_max, dtype=float)
        feasible = np.zeros(n, dtype=bool)
        for members in groups:
            for k0 in range(self.kappa0_cap, -1, -1):
                work = c.cycles[members] * (rho + k0 * (1.0 - delta[members]))
                fk = affordable(work, t_up[members], power[members], c.f_max[members],
                                self.energy.half_xi, self.t_budget, e_budget[members])
                if np.all(np.isfinite(fk)):
                    kappa0[members] = k0
                    f[members] = fk
                    feasible[members] = True
                    break
        p = self._probability(delta, f, power, kappa0, rho, interf, self.t_budget)
        return Decisions(delta=delta, f=f, power=power, kappa0=kappa0, p=p, feasible=feasible)

    def _decide_random(self, r, draw):
        n = self.topology.n_ue
        dth = self.settings.delta_th
        delta = np.array([rng.stream(self.seed, rng.RANDOM_DELTA, i, r).uniform(0.0, dth)
                          for i in range(n)])
        groups = [self.base_topology.vc_members(j) for j in range(self.base_topology.n_vc)]
        return self._budgeted(delta, self.schedule.rho, draw, groups)

    def _decide_wc(self, draw):
        n = self.topology.n_ue
        groups = [self.base_topology.vc_members(j) for j in range(self.base_topology.n_vc)]
        return self._budgeted(np.zeros(n), 0, draw, groups)

    def _decide_ub(self, draw):
        c = self.clients
        n = len(c.f_max)
        return Decisions(delta=np.zeros(n), f=np.array(c.f_max, dtype=float),
                         power=np.array(c.p_max, dtype=float),
                         kappa0=np.full(n, self.kappa0_cap), p=np.ones(n),
                         feasible=np.ones(n, dtype=bool))

    def decision_trace(self, rounds=None):
        """Per-round decisions without training (they do not depend on the model)."""
        rounds = self.schedule.total_vc_rounds if rounds is None else int(rounds)
        return [self.decide(r, draw_fading(self.base_topology, self.channel, r))
                for r in range(rounds)]

    # training ----------------------------------------------------------

    def _train_client(self, i, w_start, delta, kappa0, r):
        gen = rng.stream(self.seed, rng.BATCHES, i, r)
        try:
            ticket = lottery_ticket(self.model, w_start, self.shards[i], self.schedule.rho,
                                    self.eta, delta, gen, self.batch_size)
            _, grad_sum, loss = run_local_rounds(self.model, ticket, self.shards[i], int(kappa0),
                                                 self.eta, gen, self.batch_size)
        except PhflError as exc:
            exc.context = exc.context or f"client {i}, VC round {r}"
            raise
        return ticket.weights, grad_sum, loss

    def initial_model(self):
        return self.model.init(rng.stream(self.seed, rng.MODEL_INIT))

    def run(self, sink=None):
        """Execute every global round; returns the list of JSON-ready records.

        ``sink`` (optional) is called with each record as soon as it exists.
        """
        topo = self.topology
        s = self.schedule
        models = TierModels(topo, s, self.initial_model())
        records = []
        cum_time = cum_energy = cum_bits = 0.0
        pool = ThreadPoolExecutor(self.jobs) if self.jobs > 1 else None
        r = 0
        try:
            for m in range(s.global_rounds):
                for t3 in range(s.kappa3):
                    for t2 in range(s.kappa2):
                        for t1 in range(s.kappa1):
                            try:
                                rec, spent = self.run_vc_round(r, (m, t3, t2, t1), models, pool)
                            except PhflError as exc:
                                exc.context = exc.context or f"VC round {r}"
                                raise
                            cum_time += spent[0]
                            cum_energy += spent[1]
                            cum_bits += spent[2]
                            rec.update(cum_time=cum_time, cum_energy=cum_energy, cum_bits=cum_bits)
                            models.close_vc_round()
                            if t1 == s.kappa1 - 1:
                                models.run_sbs_round()
                                sbs_loss = _child_average(rec["vc_loss"], topo.vc_weight,
                                                          topo.vc_sbs, topo.n_sbs)
                                rec["sbs_loss"] = sbs_loss
                                if t2 == s.kappa2 - 1:
                                    models.run_mbs_round()
                                    rec["mbs_loss"] = _child_average(sbs_loss, topo.sbs_weight,
                                                                     topo.sbs_mbs, topo.n_mbs)
                                    if t3 == s.kappa3 - 1:
                                        models.run_global_round()
                                        loss, acc = self.evaluate(models.glob)
                                        rec["global_loss"] = loss
                                        rec["test_accuracy"] = acc
                            records.append(rec)
                            if sink is not None:
                                sink(rec)
                            r += 1
        finally:
            if pool is not None:
                pool.shutdown()
        self.final_model = models.glob.copy()
        return records

    def evaluate(self, w):
        """Test loss and accuracy of ``w`` on the held-out split."""
        loss = self.model.loss_and_grad(w, self.test.X, self.test.y)[0]
        return float(loss), accuracy(self.model, w, self.test.X, self.test.y)

    def run_vc_round(self, r, index, models, pool=None):
        """One VC round on every VC: decide, train, receive, aggregate.

        Updates ``models.vc`` in place and returns the JSON record and the
        (time, energy, bits) spent.
        """
        topo = self.topology
        draw = draw_fading(self.base_topology, self.channel, r)
        dec = self.decide(r, draw)
        n = topo.n_ue
        starts = [models.vc[topo.ue_vc[i]] for i in range(n)]
        args = [(i, starts[i], float(dec.delta[i]), int(dec.kappa0[i]), r) for i in range(n)]
        if pool is None:
            out = [self._train_client(*a) for a in args]
        else:
            out = list(pool.map(lambda a: self._train_client(*a), args))
        tickets = np.array([o[0] for o in out])
        grads = np.array([o[1] for o in out])
        batch_loss = np.array([o[2] for o in out])

        if self.baseline in UPPER_BOUNDS:
            received = np.ones(n, dtype=bool)
        else:
            received = reception_indicators(dec.p, self.seed, r, range(n))
        vc_loss = []
        for j in range(topo.n_vc):
            mem = topo.vc_members(j)
            w = vc_update(tickets[mem], grads[mem], topo.ue_weight[mem], received[mem],
                          dec.p[mem], self.eta, self.config.inverse_p_cap)
            models.set_vc(j, w)
            vc_loss.append(_nan_weighted(batch_loss[mem], topo.ue_weight[mem]))

        rates, _ = self._rates(dec.power, draw)
        rho = self.schedule.rho
        cost = cost_breakdown(self.clients.cycles, dec.delta, dec.f, dec.power, rates, rho,
                              dec.kappa0.astype(float), self.energy, self.model.dim)
        t_tot = cost.t_tot
        e_tot = cost.e_tot
        if self.baseline in UPPER_BOUNDS:
            spent_time = float(np.max(t_tot))
        else:
            spent_time = self.t_budget
        m, t3, t2, t1 = index
        rec = {
            "schema": SCHEMA_VERSION,
            "baseline": self.baseline,
            "round": r,
            "m": m, "t3": t3, "t2": t2, "t1": t1,
            "vc_of_client": self.base_topology.ue_vc.tolist(),
            "delta": dec.delta.tolist(),
            "f": dec.f.tolist(),
            "power": dec.power.tolist(),
            "p": np.asarray(dec.p, dtype=float).tolist(),
            "received": received.astype(int).tolist(),
            "kappa0": dec.kappa0.astype(int).tolist(),
            "feasible": dec.feasible.astype(int).tolist(),
            "t_tot": t_tot.tolist(),
            "e_tot": e_tot.tolist(),
            "bits": cost.payload_bits.tolist(),
            "round_time": spent_time,
            "vc_loss": vc_loss,
            "sbs_loss": None,
            "mbs_loss": None,
            "global_loss": None,
            "test_accuracy": None,
        }
        return rec, (spent_time, float(np.sum(e_tot)), float(np.sum(cost.payload_bits)))


def _nan_weighted(values, weights):
    ok = np.isfinite(values)
    if not ok.any():
        return None
    return float(np.dot(weights[ok], values[ok]) / weights[ok].sum())


def _child_average(values, weights, parent, n_parent):
    """Per-parent weighted average of child values (children that are None skipped)."""
    out = []
    for k in range(n_parent):
        kids = np.flatnonzero(parent == k)
        vals = np.array([np.nan if values[c] is None else values[c] for c in kids])
        out.append(_nan_weighted(vals, weights[kids]))
    return out


def run_experiment(config, jobs=1, sink=None):
    """Build and run a simulation; returns (simulation, records)."""
    sim = Simulation(config, jobs=jobs)
    return sim, sim.run(sink)
