"""Pure-Python per-client kernels for the joint pruning/CPU/power solver.

This module mirrors ``_ckernels.pyx`` line for line and is used when the
compiled extension is unavailable (or when ``PHFL_PURE_PYTHON=1``).  Every
function works on one client's parameter row, laid out by the index
constants below, and on a decision ``(delta, f, P)``.
"""
import math

import numpy as np

D_MODEL = 0
FPP = 1
OMEGA = 2
NOISE = 3
INTERF = 4
PATHGAIN = 5
GAIN = 6
CYCLES = 7
RHO = 8
KAPPA0 = 9
T_TH = 10
E_TH = 11
HALF_XI = 12
F_MAX = 13
P_MAX = 14
DELTA_TH = 15
PHI1 = 16
PHI2 = 17
WEIGHT = 18
NPARAM = 19

LN2 = math.log(2.0)
FEAS_TOL = 1e-9
EXP_CAP = 700.0
MAX_HALVINGS = 60
TAU_MIN = 1e-12
TAU_MAX = 1e12
ROOT_EXPAND = 120
ROOT_ITERS = 200
ROOT_RTOL = 1e-14

STATUS_OK = 0
STATUS_SINGULAR = 1
STATUS_INFEASIBLE = 2


def noise_plus_interference(p):
    return p[OMEGA] * p[NOISE] + p[INTERF]


def compute_slack(p, delta, f):
    """Seconds-times-Hz left for offloading: f*t_th - K*(rho + kappa0*(1-delta))."""
    return f * p[T_TH] - p[CYCLES] * (p[RHO] + p[KAPPA0] * (1.0 - delta))


def payload_factor(p, delta):
    return (1.0 - delta) * (p[FPP] + 1.0) + 1.0


def chi(p, delta, f):
    s = compute_slack(p, delta, f)
    if s <= 0.0:
        return math.inf
    return p[D_MODEL] * f * payload_factor(p, delta) / (p[OMEGA] * s)


def outage_exponent(p, delta, f, power):
    """(2^chi - 1) * (omega*zeta^2 + I) / (P * d^-alpha); +inf when undefined."""
    c = chi(p, delta, f)
    if c == math.inf or power <= 0.0:
        return math.inf
    if c * LN2 > EXP_CAP:
        return math.inf
    return math.expm1(c * LN2) * noise_plus_interference(p) / (power * p[PATHGAIN])


def a_value(p, delta, f, power):
    y = outage_exponent(p, delta, f, power)
    if y > EXP_CAP:
        return math.inf
    return math.exp(y)


def success_probability(p, delta, f, power):
    y = outage_exponent(p, delta, f, power)
    if y == math.inf:
        return 0.0
    return math.exp(-y)


def client_objective(p, delta, f, power):
    return p[WEIGHT] * (p[PHI1] * delta + p[PHI2] * (a_value(p, delta, f, power) - 1.0))


def rate(p, power):
    snr = power * p[GAIN] * p[PATHGAIN] / noise_plus_interference(p)
    return p[OMEGA] * math.log2(1.0 + snr)


def total_time(p, delta, f, power):
    if f <= 0.0:
        return math.inf
    r = rate(p, power)
    if r <= 0.0:
        return math.inf
    k = p[CYCLES]
    comp = (p[RHO] + p[KAPPA0] * (1.0 - delta)) * k / f
    return comp + p[D_MODEL] * payload_factor(p, delta) / r


def total_energy(p, delta, f, power):
    k = p[CYCLES]
    comp = (p[RHO] + p[KAPPA0] * (1.0 - delta)) * p[HALF_XI] * k * f * f
    if power <= 0.0:
        return comp
    r = rate(p, power)
    if r <= 0.0:
        return math.inf
    return comp + p[D_MODEL] * payload_factor(p, delta) * power / r


def exact_feasible(p, delta, f, power, tol=FEAS_TOL):
    if delta < -tol or delta > p[DELTA_TH] * (1.0 + tol) + tol:
        return False
    if f < 0.0 or f > p[F_MAX] * (1.0 + tol):
        return False
    if power < 0.0 or power > p[P_MAX] * (1.0 + tol):
        return False
    if total_time(p, delta, f, power) > p[T_TH] * (1.0 + tol):
        return False
    return total_energy(p, delta, f, power) <= p[E_TH] * (1.0 + tol)


def min_feasible_delta(p, f, power):
    """Smallest delta meeting the exact time and energy budgets at (f, P).

    Both budgets are affine and nonincreasing in delta, so the answer is the
    larger of two closed-form roots.  Returns +inf when no delta in
    [0, 1] can satisfy them.
    """
    if f <= 0.0 or power <= 0.0:
        return math.inf
    r = rate(p, power)
    if r <= 0.0:
        return math.inf
    k = p[CYCLES]
    d = p[D_MODEL]
    fpp1 = p[FPP] + 1.0
    # time(delta) = t0 - t1*delta
    t1 = p[KAPPA0] * k / f + d * fpp1 / r
    t0 = (p[RHO] + p[KAPPA0]) * k / f + d * (fpp1 + 1.0) / r
    e_unit = p[HALF_XI] * k * f * f
    e1 = p[KAPPA0] * e_unit + d * fpp1 * power / r
    e0 = (p[RHO] + p[KAPPA0]) * e_unit + d * (fpp1 + 1.0) * power / r
    lo = 0.0
    if t0 > p[T_TH]:
        lo = max(lo, (t0 - p[T_TH]) / t1)
    if e0 > p[E_TH]:
        lo = max(lo, (e0 - p[E_TH]) / e1)
    if lo > 1.0:
        return math.inf
    return lo


def linearize(p, delta_q, f_q, power_q):
    """First-order models at the anchor.

    Returns ``(status, lin)`` where ``lin`` is a flat list::

        [A0, gA_delta, gA_f, gA_P,
         a1_delta, a1_f, a1_P, b1,          # time:   a1.x <= b1
         q, a2_delta, a2_f, a2_P, b2]       # energy: q f^2 + a2.x <= b2
    """
    s = compute_slack(p, delta_q, f_q)
    if s <= 0.0 or f_q <= 0.0 or power_q <= 0.0:
        return STATUS_SINGULAR, None
    d = p[D_MODEL]
    fpp = p[FPP]
    omega = p[OMEGA]
    k = p[CYCLES]
    rho = p[RHO]
    k0 = p[KAPPA0]
    t_th = p[T_TH]
    g = p[PATHGAIN]
    h = p[GAIN]
    n0 = noise_plus_interference(p)
    x_q = payload_factor(p, delta_q)

    c = d * f_q * x_q / (omega * s)
    if c * LN2 > EXP_CAP:
        return STATUS_SINGULAR, None
    two_c = math.exp(c * LN2)
    y0 = (two_c - 1.0) * n0 / (power_q * g)
    if y0 > EXP_CAP:
        return STATUS_SINGULAR, None
    a0 = math.exp(y0)
    denom = omega * power_q * g * s * s
    ga_delta = LN2 * two_c * d * f_q * a0 * n0 * (
        k * ((fpp + 1.0) * rho - k0) - f_q * t_th * (fpp + 1.0)) / denom
    ga_f = -LN2 * two_c * k * d * a0 * n0 * x_q * (rho + k0 * (1.0 - delta_q)) / denom
    ga_p = -a0 * (two_c - 1.0) * n0 / (power_q * power_q * g)

    # time: tangent of the dense and sparse compute terms, partial tangent of offload
    snr_q = power_q * h * g / n0
    log2_q = math.log2(1.0 + snr_q)
    rate_q = omega * log2_q
    if rate_q <= 0.0:
        return STATUS_SINGULAR, None
    ln_q = math.log1p(snr_q)
    t_const = 2.0 * rho * k / f_q + k0 * k / f_q * (2.0 - delta_q) + d * (fpp + 2.0) / rate_q
    a1_delta = -k0 * k / f_q - d * (fpp + 1.0) / rate_q
    a1_f = -rho * k / (f_q * f_q) - k0 * k * (1.0 - delta_q) / (f_q * f_q)
    a1_p = -LN2 * d * h * g * x_q / (omega * ln_q * ln_q * (n0 + power_q * h * g))
    t_const -= a1_p * power_q
    b1 = t_th - t_const

    # energy: exact dense term (quadratic in f), tangents elsewhere
    xi = 2.0 * p[HALF_XI]
    q = rho * p[HALF_XI] * k
    e_const = k0 * xi * k * f_q * f_q * (delta_q - 0.5) + d * power_q * (fpp + 2.0) / rate_q
    a2_delta = -0.5 * k0 * xi * k * f_q * f_q - d * power_q * (fpp + 1.0) / rate_q
    a2_f = k0 * xi * k * f_q * (1.0 - delta_q)
    a2_p = d * x_q * (log2_q - snr_q / (LN2 * (1.0 + snr_q))) / (omega * log2_q * log2_q)
    e_const -= a2_p * power_q
    b2 = p[E_TH] - e_const

    return STATUS_OK, [a0, ga_delta, ga_f, ga_p,
                       a1_delta, a1_f, a1_p, b1,
                       q, a2_delta, a2_f, a2_p, b2]


def surrogate_coefficients(p, lin, delta_q, f_q, power_q):
    """Linear surrogate objective as (c_delta, c_f, c_P, const)."""
    w = p[WEIGHT]
    phi2 = p[PHI2]
    c_d = w * (p[PHI1] + phi2 * lin[1])
    c_f = w * phi2 * lin[2]
    c_p = w * phi2 * lin[3]
    const = w * phi2 * (lin[0] - lin[1] * delta_q - lin[2] * f_q - lin[3] * power_q - 1.0)
    return c_d, c_f, c_p, const


def _bounds(p):
    hi = (p[DELTA_TH], p[F_MAX], p[P_MAX])
    ub = (1.0 if hi[0] > 0.0 else 0.0, 1.0, 1.0)
    return hi, ub


def scaled_anchor(p, delta_q, f_q, power_q):
    hi, _ = _bounds(p)
    return [delta_q / hi[0] if hi[0] > 0.0 else 0.0, f_q / hi[1], power_q / hi[2]]


def _clip(v, top):
    if v < 0.0:
        return 0.0
    if v > top:
        return top
    return v


def _prox_point(sp, mu1, mu2):
    """Minimizer of the Lagrangian for fixed multipliers (separable per coordinate)."""
    c, a1, a2, q, z0, tau, ub = sp[0], sp[1], sp[3], sp[5], sp[7], sp[8], sp[9]
    zd = _clip(z0[0] - (c[0] + mu1 * a1[0] + mu2 * a2[0]) / tau, ub[0])
    zf = _clip((tau * z0[1] - c[1] - mu1 * a1[1] - mu2 * a2[1]) / (tau + 2.0 * mu2 * q), ub[1])
    zp = _clip(z0[2] - (c[2] + mu1 * a1[2] + mu2 * a2[2]) / tau, ub[2])
    return zd, zf, zp


def _residual(sp, mu1, mu2, which):
    zd, zf, zp = _prox_point(sp, mu1, mu2)
    if which == 1:
        a, b = sp[1], sp[2]
        return a[0] * zd + a[1] * zf + a[2] * zp - b
    a, b, q = sp[3], sp[4], sp[5]
    return q * zf * zf + a[0] * zd + a[1] * zf + a[2] * zp - b


def _inner_mu1(sp, mu2):
    """Smallest mu1 >= 0 with the time residual nonpositive, for fixed mu2."""
    if _residual(sp, 0.0, mu2, 1) <= 0.0:
        return 0.0
    return _decreasing_root(sp, mu2, 1)


def _outer_residual(sp, mu2):
    return _residual(sp, _inner_mu1(sp, mu2), mu2, 2)


def _eval(sp, mu, fixed, which):
    if which == 1:
        return _residual(sp, mu, fixed, 1)
    return _outer_residual(sp, mu)


def _decreasing_root(sp, fixed, which):
    """Root of a nonincreasing residual on mu > 0 given a positive value at 0.

    Returns the right end of the final bracket, so the residual there is
    nonpositive, or +inf when no bracket exists.
    """
    lo, f_lo = 0.0, _eval(sp, 0.0, fixed, which)
    hi = sp[6]
    f_hi = _eval(sp, hi, fixed, which)
    n = 0
    while f_hi > 0.0:
        lo, f_lo = hi, f_hi
        hi *= 4.0
        n += 1
        if n > ROOT_EXPAND:
            return math.inf
        f_hi = _eval(sp, hi, fixed, which)
    side = 0
    for _ in range(ROOT_ITERS):
        if f_hi == 0.0 or hi - lo <= ROOT_RTOL * hi:
            break
        # Illinois regula falsi keeps a bracket [lo, hi] with f_lo > 0 >= f_hi
        m = (lo * f_hi - hi * f_lo) / (f_hi - f_lo)
        if not lo < m < hi:
            m = 0.5 * (lo + hi)
        f_m = _eval(sp, m, fixed, which)
        if f_m > 0.0:
            lo, f_lo = m, f_m
            if side == 1:
                f_hi *= 0.5
            side = 1
        else:
            hi, f_hi = m, f_m
            if side == -1:
                f_lo *= 0.5
            side = -1
    return hi


def solve_subproblem(p, lin, delta_q, f_q, power_q, tau):
    """Exact solve of the proximal convex subproblem at one anchor.

    Minimizes the linearized objective plus ``tau/2 * |z - z_q|^2`` in
    box-scaled coordinates ``z``, subject to the linearized time budget,
    the partly linearized (convex quadratic in f) energy budget and the
    box.  The primal is separable for fixed multipliers, so the dual is
    solved by nested monotone root finding.  Returns ``(status, x,
    surrogate_value)`` where the surrogate includes the proximal term.
    """
    c_d, c_f, c_p, const = surrogate_coefficients(p, lin, delta_q, f_q, power_q)
    hi, ub = _bounds(p)
    z0 = scaled_anchor(p, delta_q, f_q, power_q)
    c = (c_d * hi[0], c_f * hi[1], c_p * hi[2])
    a1 = [lin[4] * hi[0], lin[5] * hi[1], lin[6] * hi[2]]
    b1 = lin[7]
    q = lin[8] * hi[1] * hi[1]
    a2 = [lin[9] * hi[0], lin[10] * hi[1], lin[11] * hi[2]]
    b2 = lin[12]
    s1 = max(abs(a1[0]), abs(a1[1]), abs(a1[2]), abs(b1), 1e-300)
    s2 = max(abs(a2[0]), abs(a2[1]), abs(a2[2]), abs(q), abs(b2), 1e-300)
    a1 = (a1[0] / s1, a1[1] / s1, a1[2] / s1)
    a2 = (a2[0] / s2, a2[1] / s2, a2[2] / s2)
    b1 /= s1
    b2 /= s2
    q = max(q / s2, 0.0)
    mu_scale = max(abs(c[0]), abs(c[1]), abs(c[2]), tau, 1e-300)
    sp = (c, a1, b1, a2, b2, q, mu_scale, z0, tau, ub)

    mu2 = 0.0
    if _outer_residual(sp, 0.0) > 0.0:
        mu2 = _decreasing_root(sp, 0.0, 2)
    if mu2 == math.inf:
        return STATUS_INFEASIBLE, None, math.inf
    mu1 = _inner_mu1(sp, mu2)
    if mu1 == math.inf:
        return STATUS_INFEASIBLE, None, math.inf
    z = _prox_point(sp, mu1, mu2)
    val = c[0] * z[0] + c[1] * z[1] + c[2] * z[2]
    prox = 0.5 * tau * ((z[0] - z0[0]) ** 2 + (z[1] - z0[1]) ** 2 + (z[2] - z0[2]) ** 2)
    anchor_val = c[0] * z0[0] + c[1] * z0[1] + c[2] * z0[2]
    if val + prox > anchor_val:
        # inexact root finding can only lose against the anchor; keep the anchor
        z = (z0[0], z0[1], z0[2])
        val, prox = anchor_val, 0.0
    x = [z[0] * hi[0], z[1] * hi[1], z[2] * hi[2]]
    return STATUS_OK, x, val + prox + const


def sca_step(p, delta_q, f_q, power_q, tau):
    """One SCA iterate: proximal subproblem, then feasibility/descent backtracking.

    Infeasible trial points are first repaired by raising delta to the
    smallest value meeting both exact budgets (both are affine in delta);
    if that fails the step is halved toward the anchor.  Returns
    ``(status, x_new, surrogate_value, objective_new, tau_next, accepted)``.
    """
    obj_q = client_objective(p, delta_q, f_q, power_q)
    anchor = [delta_q, f_q, power_q]
    status, lin = linearize(p, delta_q, f_q, power_q)
    if status != STATUS_OK:
        return status, anchor, math.inf, obj_q, tau, False
    status, xh, sur = solve_subproblem(p, lin, delta_q, f_q, power_q, tau)
    if status != STATUS_OK:
        return status, anchor, math.inf, obj_q, tau, False
    step = 1.0
    slack = 1e-12 * max(1.0, abs(obj_q))
    for _ in range(MAX_HALVINGS):
        x = [delta_q + step * (xh[0] - delta_q),
             f_q + step * (xh[1] - f_q),
             power_q + step * (xh[2] - power_q)]
        lo = min_feasible_delta(p, x[1], x[2])
        if x[0] < lo:
            x[0] = lo * (1.0 + 1e-13) + 1e-15
        if exact_feasible(p, x[0], x[1], x[2]):
            obj = client_objective(p, x[0], x[1], x[2])
            if obj <= obj_q + slack:
                if step == 1.0:
                    tau_next = max(0.5 * tau, TAU_MIN)
                else:
                    tau_next = min(2.0 * tau, TAU_MAX)
                return STATUS_OK, x, sur, obj, tau_next, True
        step *= 0.5
    return STATUS_OK, anchor, sur, obj_q, min(4.0 * tau, TAU_MAX), False


def initial_tau(p, delta_q, f_q, power_q):
    """Starting proximal weight, small relative to the objective scale."""
    obj = client_objective(p, delta_q, f_q, power_q)
    return max(1e-6 * abs(obj) + 1e-3 * p[WEIGHT] * (p[PHI1] + p[PHI2]), TAU_MIN)


def initial_anchor(p, grid=48):
    """Feasible starting point: the relaxing corner, else a coarse scan at delta_th."""
    d_th, f_max, p_max = p[DELTA_TH], p[F_MAX], p[P_MAX]
    if exact_feasible(p, d_th, f_max, p_max):
        return STATUS_OK, [d_th, f_max, p_max]
    best = None
    best_val = math.inf
    for i in range(1, grid + 1):
        f = f_max * i / grid
        for j in range(1, grid + 1):
            pw = p_max * j / grid
            if exact_feasible(p, d_th, f, pw):
                val = client_objective(p, d_th, f, pw)
                if val < best_val:
                    best_val = val
                    best = [d_th, f, pw]
    if best is None:
        return STATUS_INFEASIBLE, [d_th, f_max, p_max]
    return STATUS_OK, best


def sca_solve_client(p, max_iter, eps):
    """Full SCA loop for one client starting at :func:`initial_anchor`.

    Returns ``(status, x, objective_trace, surrogate_trace)``.
    """
    status, x = initial_anchor(p)
    trace = [client_objective(p, x[0], x[1], x[2])]
    sur_trace = []
    if status != STATUS_OK:
        return status, x, trace, sur_trace
    tau = initial_tau(p, x[0], x[1], x[2])
    for _ in range(max_iter):
        st, x_new, sur, obj, tau, accepted = sca_step(p, x[0], x[1], x[2], tau)
        if st != STATUS_OK:
            break
        if not accepted:
            if tau >= TAU_MAX:
                break
            continue
        sur_trace.append(sur)
        prev = trace[-1]
        x = x_new
        trace.append(obj)
        if abs(prev - obj) < eps:
            break
    return STATUS_OK, x, trace, sur_trace


# Batched entry points.  ``params`` is an (n, NPARAM) float64 array and
# decisions are (n, 3) arrays of (delta, f, P).  These are the functions the
# rest of the package calls through :mod:`phfl.kernels`.

def _rows(params):
    return [list(map(float, row)) for row in params]


def _out(n, cols=None):
    if cols is None:
        return np.empty(n, dtype=np.float64)
    return np.empty((n, cols), dtype=np.float64)


def objective_many(params, x):
    out = _out(len(params))
    for i, p in enumerate(_rows(params)):
        out[i] = client_objective(p, float(x[i, 0]), float(x[i, 1]), float(x[i, 2]))
    return out


def success_probability_many(params, x):
    out = _out(len(params))
    for i, p in enumerate(_rows(params)):
        out[i] = success_probability(p, float(x[i, 0]), float(x[i, 1]), float(x[i, 2]))
    return out


def time_energy_many(params, x):
    out = _out(len(params), 2)
    for i, p in enumerate(_rows(params)):
        d, f, pw = float(x[i, 0]), float(x[i, 1]), float(x[i, 2])
        out[i, 0] = total_time(p, d, f, pw)
        out[i, 1] = total_energy(p, d, f, pw)
    return out


def linearize_many(params, x):
    """Returns (status[n], lin[n, 13]); rows with nonzero status are NaN."""
    n = len(params)
    status = np.zeros(n, dtype=np.int32)
    lin = np.full((n, 13), np.nan)
    for i, p in enumerate(_rows(params)):
        st, row = linearize(p, float(x[i, 0]), float(x[i, 1]), float(x[i, 2]))
        status[i] = st
        if st == STATUS_OK:
            lin[i] = row
    return status, lin


def initial_anchor_many(params):
    n = len(params)
    status = np.zeros(n, dtype=np.int32)
    x = _out(n, 3)
    for i, p in enumerate(_rows(params)):
        status[i], x[i] = initial_anchor(p)
    return status, x


def initial_tau_many(params, x):
    out = _out(len(params))
    for i, p in enumerate(_rows(params)):
        out[i] = initial_tau(p, float(x[i, 0]), float(x[i, 1]), float(x[i, 2]))
    return out


def sca_step_many(params, x, tau):
    """Vectorized :func:`sca_step`.

    Returns ``(status, x_new, surrogate, objective, tau_next, accepted)``.
    """
    n = len(params)
    status = np.zeros(n, dtype=np.int32)
    x_new = _out(n, 3)
    sur = _out(n)
    obj = _out(n)
    tau_next = _out(n)
    accepted = np.zeros(n, dtype=np.uint8)
    for i, p in enumerate(_rows(params)):
        st, xi, s, o, t, a = sca_step(p, float(x[i, 0]), float(x[i, 1]), float(x[i, 2]),
                                      float(tau[i]))
        status[i], x_new[i], sur[i], obj[i], tau_next[i], accepted[i] = st, xi, s, o, t, a
    return status, x_new, sur, obj, tau_next, accepted


def sca_solve_many(params, max_iter, eps):
    """Independent single-client SCA solves.

    Returns ``(status, x, objective, iterations)``.
    """
    n = len(params)
    status = np.zeros(n, dtype=np.int32)
    x = _out(n, 3)
    obj = _out(n)
    iters = np.zeros(n, dtype=np.int64)
    for i, p in enumerate(_rows(params)):
        st, xi, trace, _ = sca_solve_client(p, int(max_iter), float(eps))
        status[i], x[i], obj[i], iters[i] = st, xi, trace[-1], len(trace) - 1
    return status, x, obj, iters
