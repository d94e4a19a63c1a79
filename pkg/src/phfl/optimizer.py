"""Joint per-round selection of pruning ratio, CPU frequency and transmit power.

The per-client problem is

    minimize   w (phi1 delta + phi2 (A - 1)),   A = 1/p = exp((2^chi - 1) N / (P g))
    subject to t_tot <= t_th, e_tot <= e_th, 0 <= delta <= delta_th,
               0 <= f <= f_max, 0 <= P <= P_max,

and is solved by successive convex approximation: the objective, the time
budget and all energy terms except the dense warm-up are linearized at the
current anchor, a proximal term keeps the step local, and the step is
backtracked until it is feasible for the exact constraints.  With the
interference frozen, clients decouple and are solved independently by the
kernels in :mod:`phfl.kernels`.
"""
from dataclasses import dataclass, field

import numpy as np

from . import _pykernels as pk
from . import kernels
from .channel import interference_matrix
from .errors import InfeasibleClient, NoFeasibleStart, SingularAnchor

LN2 = np.log(2.0)


@dataclass(frozen=True)
class OptimizerSettings:
    """phi1, phi2 weigh pruning against outage; Q and eps stop the SCA loop."""
    phi1: float = 1.0
    phi2: float = 1e-3
    max_iter: int = 50
    eps: float = 1e-9
    delta_th: float = 0.9
    refresh_interference: bool = True


@dataclass(frozen=True)
class ProblemData:
    """One VC round's snapshot for n clients, all in SI units.

    ``cycles`` is K = b n c D per local iteration.  ``gain`` is the current
    fading draw and ``distance`` the link length, so the path gain is
    ``distance ** -alpha``.  Interference is computed from ``cross_gains``,
    ``cross_distance`` and ``ue_sbs`` unless ``fixed_interference`` is set.
    """
    cycles: np.ndarray
    d_model: int
    fpp: int
    omega: float
    noise_psd: float
    alpha: float
    distance: np.ndarray
    gain: np.ndarray
    rho: int
    kappa0: np.ndarray
    t_th: float
    e_th: np.ndarray
    half_xi: float
    f_max: np.ndarray
    p_max: np.ndarray
    weight: np.ndarray
    cross_gains: np.ndarray = None
    cross_distance: np.ndarray = None
    ue_sbs: np.ndarray = None
    fixed_interference: np.ndarray = None

    @property
    def n(self):
        return len(self.cycles)

    def interference(self, powers):
        if self.fixed_interference is not None:
            return np.asarray(self.fixed_interference, dtype=float)
        if self.cross_gains is None:
            return np.zeros(self.n)
        return interference_matrix(powers, self.cross_gains, self.cross_distance, self.alpha,
                                   self.ue_sbs)


def _vec(x, n):
    return np.broadcast_to(np.asarray(x, dtype=float), (n,)).copy()


def build_rows(problem, interf, settings):
    """Kernel parameter rows, one per client (layout in :mod:`phfl._pykernels`)."""
    n = problem.n
    rows = np.empty((n, pk.NPARAM))
    rows[:, pk.D_MODEL] = problem.d_model
    rows[:, pk.FPP] = problem.fpp
    rows[:, pk.OMEGA] = problem.omega
    rows[:, pk.NOISE] = problem.noise_psd
    rows[:, pk.INTERF] = _vec(interf, n)
    rows[:, pk.PATHGAIN] = _vec(problem.distance, n) ** (-problem.alpha)
    rows[:, pk.GAIN] = _vec(problem.gain, n)
    rows[:, pk.CYCLES] = _vec(problem.cycles, n)
    rows[:, pk.RHO] = problem.rho
    rows[:, pk.KAPPA0] = _vec(problem.kappa0, n)
    rows[:, pk.T_TH] = problem.t_th
    rows[:, pk.E_TH] = _vec(problem.e_th, n)
    rows[:, pk.HALF_XI] = problem.half_xi
    rows[:, pk.F_MAX] = _vec(problem.f_max, n)
    rows[:, pk.P_MAX] = _vec(problem.p_max, n)
    rows[:, pk.DELTA_TH] = settings.delta_th
    rows[:, pk.PHI1] = settings.phi1
    rows[:, pk.PHI2] = settings.phi2
    rows[:, pk.WEIGHT] = _vec(problem.weight, n)
    return rows


def objective(decisions, problem, settings, interf=None):
    """phi1 sum w delta + phi2 sum w (1/p - 1) for decisions of shape (n, 3)."""
    x = np.asarray(decisions, dtype=float)
    if interf is None:
        interf = problem.interference(x[:, 2])
    rows = build_rows(problem, interf, settings)
    return float(np.sum(kernels.objective_many(rows, x)))


def success_probabilities(decisions, problem, settings, interf=None):
    x = np.asarray(decisions, dtype=float)
    if interf is None:
        interf = problem.interference(x[:, 2])
    return kernels.success_probability_many(build_rows(problem, interf, settings), x)


def exact_feasible(decisions, problem, settings, interf=None, tol=1e-6):
    """Per-client check of the exact (C1)-(C5) at relative tolerance ``tol``."""
    x = np.asarray(decisions, dtype=float)
    if interf is None:
        interf = problem.interference(x[:, 2])
    rows = build_rows(problem, interf, settings)
    te = kernels.time_energy_many(rows, x)
    d, f, p = x[:, 0], x[:, 1], x[:, 2]
    ok = (d >= -tol) & (d <= settings.delta_th * (1 + tol) + tol)
    ok &= (f >= 0) & (f <= rows[:, pk.F_MAX] * (1 + tol))
    ok &= (p >= 0) & (p <= rows[:, pk.P_MAX] * (1 + tol))
    ok &= te[:, 0] <= problem.t_th * (1 + tol)
    ok &= te[:, 1] <= rows[:, pk.E_TH] * (1 + tol)
    return ok


@dataclass(frozen=True)
class LinearizedSubproblem:
    """First-order models at one anchor for n clients.

    ``grad_a[:, (0, 1, 2)]`` is dA/d(delta, f, P); ``a0`` is A at the anchor.
    The time model is ``time_row[:, :3] . x <= time_row[:, 3]`` and the
    energy model ``q f^2 + energy_row[:, :3] . x <= energy_row[:, 3]``.
    """
    anchor: np.ndarray
    a0: np.ndarray
    grad_a: np.ndarray
    time_row: np.ndarray
    q: np.ndarray
    energy_row: np.ndarray
    rows: np.ndarray = field(repr=False)

    def a_tilde(self, x):
        return self.a0 + np.sum(self.grad_a * (np.asarray(x) - self.anchor), axis=1)


def linearize(anchor, problem, settings, interf=None):
    """Linearize every client at ``anchor`` (n, 3); raises SingularAnchor if any slack <= 0."""
    x = np.asarray(anchor, dtype=float)
    if interf is None:
        interf = problem.interference(x[:, 2])
    rows = build_rows(problem, interf, settings)
    status, lin = kernels.linearize_many(rows, x)
    bad = np.flatnonzero(status != pk.STATUS_OK)
    if len(bad):
        raise SingularAnchor(f"nonpositive compute slack at anchor for clients {bad.tolist()}")
    return LinearizedSubproblem(anchor=x, a0=lin[:, 0], grad_a=lin[:, 1:4], time_row=lin[:, 4:8],
                                q=lin[:, 8], energy_row=lin[:, 9:13], rows=rows)


def linearized_terms(anchor, problem, interf):
    """Each linearized cost term as (constant, d/ddelta, d/df, d/dP) about the anchor.

    These follow the printed tangent formulas term by term and serve as an
    independent reference for the kernel rows:

    * t_cp_d ~ 2 rho K / f_q - rho K f / f_q^2
    * t_cp_s ~ (kappa0 K / f_q) (1 - delta - (1 - delta_q)(f - f_q)/f_q)
    * t_up   ~ d X(delta) / r_q + P-slope (first order in P at the anchor)
    * e_cp_s ~ kappa0 xi K f_q [(delta_q - 1/2) f_q - f_q delta / 2 + (1 - delta_q) f]
    * e_up   ~ anchor value + tangent in delta and P

    Coefficients are returned as affine maps ``c0 + c . (delta, f, P)``.
    """
    x = np.asarray(anchor, dtype=float)
    dq, fq, pq = x[:, 0], x[:, 1], x[:, 2]
    n = len(dq)
    K = _vec(problem.cycles, n)
    rho = problem.rho
    k0 = _vec(problem.kappa0, n)
    d = problem.d_model
    fpp = problem.fpp
    om = problem.omega
    xi = 2.0 * problem.half_xi
    g = _vec(problem.distance, n) ** (-problem.alpha)
    h = _vec(problem.gain, n)
    n0 = om * problem.noise_psd + _vec(interf, n)
    zero = np.zeros(n)
    xq = (1 - dq) * (fpp + 1) + 1
    snr = pq * h * g / n0
    l2 = np.log2(1 + snr)
    rq = om * l2
    terms = {}
    terms["t_cp_d"] = (2 * rho * K / fq, zero, -rho * K / fq ** 2, zero)
    terms["t_cp_s"] = (k0 * K / fq * (1 + (1 - dq)), -k0 * K / fq, -k0 * K * (1 - dq) / fq ** 2, zero)
    p_slope = -LN2 * d * h * g * xq / (om * np.log1p(snr) ** 2 * (n0 + pq * h * g))
    terms["t_up"] = (d * (fpp + 2) / rq - p_slope * pq, -d * (fpp + 1) / rq, zero, p_slope)
    terms["e_cp_s"] = (k0 * xi * K * fq * (dq - 0.5) * fq, -0.5 * k0 * xi * K * fq * fq,
                       k0 * xi * K * fq * (1 - dq), zero)
    e_slope = d * xq * (l2 - snr / (LN2 * (1 + snr))) / (om * l2 ** 2)
    terms["e_up"] = (d * pq * (fpp + 2) / rq - e_slope * pq, -d * pq * (fpp + 1) / rq, zero, e_slope)
    return terms


def evaluate_affine(term, x):
    x = np.asarray(x, dtype=float)
    c0, cd, cf, cp = term
    return c0 + cd * x[:, 0] + cf * x[:, 1] + cp * x[:, 2]


def solve_subproblem(linearized, problem, settings, tau=None):
    """Solve the convexified problem at the anchor of ``linearized``.

    ``tau`` is the proximal weight in box-scaled units (default: the SCA
    starting weight).  Returns decisions of shape (n, 3).
    """
    x = linearized.anchor
    rows = linearized.rows
    n = len(x)
    if tau is None:
        tau = kernels.initial_tau_many(rows, x)
    tau = np.broadcast_to(np.asarray(tau, dtype=float), (n,))
    out = np.empty((n, 3))
    bad = {}
    for i in range(n):
        p = rows[i].tolist()
        lin = [linearized.a0[i], *linearized.grad_a[i], *linearized.time_row[i],
               linearized.q[i], *linearized.energy_row[i]]
        st, xi, _ = pk.solve_subproblem(p, lin, *x[i], float(tau[i]))
        if st != pk.STATUS_OK:
            bad[i] = "linearized budgets cannot both hold"
            continue
        out[i] = xi
    if bad:
        raise InfeasibleClient(sorted(bad), bad)
    return out


def corner_report(problem, settings, interf=None):
    """Reasons why clients have no feasible start, keyed by client index."""
    n = problem.n
    corner = np.column_stack([np.full(n, settings.delta_th), _vec(problem.f_max, n),
                              _vec(problem.p_max, n)])
    if interf is None:
        interf = problem.interference(corner[:, 2])
    rows = build_rows(problem, interf, settings)
    status, _ = kernels.initial_anchor_many(rows)
    te = kernels.time_energy_many(rows, corner)
    reasons = {}
    for i in np.flatnonzero(status != pk.STATUS_OK):
        if te[i, 0] > problem.t_th * (1 + pk.FEAS_TOL):
            reasons[int(i)] = "C1 (deadline) fails even at delta_th, f_max, P_max"
        else:
            reasons[int(i)] = "C2 (energy) cannot hold together with C1 at delta_th"
    return reasons


def min_feasible_delta(rows, x):
    """Smallest delta meeting both exact budgets at each client's (f, P).

    Time and energy are affine and nonincreasing in delta, so this is the
    larger of two closed-form roots (+inf when above one).
    """
    f, pw = x[:, 1], x[:, 2]
    n0 = rows[:, pk.OMEGA] * rows[:, pk.NOISE] + rows[:, pk.INTERF]
    r = rows[:, pk.OMEGA] * np.log2(1.0 + pw * rows[:, pk.GAIN] * rows[:, pk.PATHGAIN] / n0)
    k = rows[:, pk.CYCLES]
    d = rows[:, pk.D_MODEL]
    fpp1 = rows[:, pk.FPP] + 1.0
    rho, k0 = rows[:, pk.RHO], rows[:, pk.KAPPA0]
    with np.errstate(divide="ignore", invalid="ignore"):
        t1 = k0 * k / f + d * fpp1 / r
        t0 = (rho + k0) * k / f + d * (fpp1 + 1.0) / r
        e_unit = rows[:, pk.HALF_XI] * k * f * f
        e1 = k0 * e_unit + d * fpp1 * pw / r
        e0 = (rho + k0) * e_unit + d * (fpp1 + 1.0) * pw / r
        lo_t = np.where(t0 > rows[:, pk.T_TH], (t0 - rows[:, pk.T_TH]) / t1, 0.0)
        lo_e = np.where(e0 > rows[:, pk.E_TH], (e0 - rows[:, pk.E_TH]) / e1, 0.0)
    lo = np.maximum(lo_t, lo_e)
    bad = (f <= 0) | (pw <= 0) | ~(r > 0) | ~(lo <= 1.0)
    return np.where(bad, np.inf, lo)


def restore_delta(rows, x):
    """Raise delta to the smallest exactly feasible value where needed (capped at delta_th)."""
    x = np.array(x, dtype=float)
    lo = min_feasible_delta(rows, x)
    need = x[:, 0] < lo
    fix = np.minimum(lo * (1.0 + 1e-13) + 1e-15, rows[:, pk.DELTA_TH])
    x[need, 0] = fix[need]
    return x


@dataclass
class ScaState:
    """Iterate of the joint SCA loop."""
    q: int
    anchor: np.ndarray
    interference: np.ndarray
    objective: float
    phi1: float
    phi2: float
    tau: np.ndarray


@dataclass
class ScaResult:
    decisions: np.ndarray
    probabilities: np.ndarray
    objective_trace: list
    surrogate_trace: list
    feasible: np.ndarray
    reasons: dict
    state: ScaState


def initial_anchor(problem, settings):
    """Feasible start per client (corner, else a scan at delta_th) and a feasibility mask."""
    n = problem.n
    corner_p = _vec(problem.p_max, n)
    rows = build_rows(problem, problem.interference(corner_p), settings)
    status, x = kernels.initial_anchor_many(rows)
    return x, status == pk.STATUS_OK


def sca_solve(problem, settings, anchor=None, strict=False):
    """Run the SCA loop for all clients jointly.

    Interference is frozen at the current iterate's powers for each
    convexified step and refreshed between steps (unless
    ``settings.refresh_interference`` is false).  Clients without a
    feasible start keep the corner decision and are reported in
    ``reasons``; with ``strict=True`` they raise :class:`NoFeasibleStart`.
    """
    if anchor is None:
        x, feasible = initial_anchor(problem, settings)
    else:
        x = np.array(anchor, dtype=float)
        feasible = exact_feasible(x, problem, settings, tol=pk.FEAS_TOL)
    reasons = {}
    if not feasible.all():
        reasons = corner_report(problem, settings)
        for i in np.flatnonzero(~feasible):
            reasons.setdefault(int(i), "no feasible start")
        if strict:
            raise NoFeasibleStart(sorted(reasons), reasons)
    interf = problem.interference(x[:, 2])
    rows = build_rows(problem, interf, settings)
    obj = float(np.sum(kernels.objective_many(rows, x)))
    tau = kernels.initial_tau_many(rows, x)
    state = ScaState(0, x.copy(), interf, obj, settings.phi1, settings.phi2, tau.copy())
    trace = [obj]
    sur_trace = []
    idx = np.flatnonzero(feasible)
    fixed = np.flatnonzero(~feasible)
    for q in range(settings.max_iter):
        if len(idx) == 0:
            break
        anchor_obj = float(np.sum(kernels.objective_many(rows, x)))
        st, xn, sur, o, tau_n, acc = kernels.sca_step_many(rows[idx], x[idx], tau[idx])
        x[idx] = xn
        tau[idx] = tau_n
        rest = float(np.sum(kernels.objective_many(rows[fixed], x[fixed]))) if len(fixed) else 0.0
        sur_trace.append(float(np.sum(np.where(st == pk.STATUS_OK, sur, o))) + rest)
        # improvement measured under the interference frozen for this step
        new_obj = float(np.sum(o)) + rest
        trace.append(new_obj)
        if settings.refresh_interference:
            interf = problem.interference(x[:, 2])
            rows = build_rows(problem, interf, settings)
            # other clients' new powers moved the interference; raising delta
            # restores both exact budgets without touching any power, so the
            # next anchor is feasible again
            x[idx] = restore_delta(rows[idx], x[idx])
        state = ScaState(q + 1, x.copy(), interf, new_obj, settings.phi1, settings.phi2, tau.copy())
        settled = acc.astype(bool) | (tau_n >= pk.TAU_MAX)
        if abs(anchor_obj - new_obj) < settings.eps and settled.all():
            break
    probs = kernels.success_probability_many(rows, x)
    return ScaResult(decisions=x, probabilities=probs, objective_trace=trace,
                     surrogate_trace=sur_trace, feasible=feasible, reasons=reasons, state=state)
