# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled per-client kernels; a line-for-line mirror of ``_pykernels``."""
import numpy as np
cimport numpy as cnp
from libc.math cimport exp, expm1, log, log1p, log2, sqrt, fabs, INFINITY

cnp.import_array()

cdef enum:
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
    NLIN = 13

cdef double LN2 = log(2.0)
cdef double FEAS_TOL = 1e-9
cdef double EXP_CAP = 700.0
cdef int MAX_HALVINGS = 60
cdef double TAU_MIN = 1e-12
cdef double TAU_MAX = 1e12
cdef int ROOT_EXPAND = 120
cdef int ROOT_ITERS = 200
cdef double ROOT_RTOL = 1e-14

cdef int STATUS_OK = 0
cdef int STATUS_SINGULAR = 1
cdef int STATUS_INFEASIBLE = 2


cdef struct Sub:
    double c[3]
    double a1[3]
    double b1
    double a2[3]
    double b2
    double q
    double mu_scale
    double z0[3]
    double tau
    double ub[3]


cdef inline double dmax(double a, double b) noexcept nogil:
    return a if a > b else b


cdef inline double dmin(double a, double b) noexcept nogil:
    return a if a < b else b


cdef inline double noise_plus_interference(const double* p) noexcept nogil:
    return p[OMEGA] * p[NOISE] + p[INTERF]


cdef inline double compute_slack(const double* p, double delta, double f) noexcept nogil:
    return f * p[T_TH] - p[CYCLES] * (p[RHO] + p[KAPPA0] * (1.0 - delta))


cdef inline double payload_factor(const double* p, double delta) noexcept nogil:
    return (1.0 - delta) * (p[FPP] + 1.0) + 1.0


cdef double chi(const double* p, double delta, double f) noexcept nogil:
    cdef double s = compute_slack(p, delta, f)
    if s <= 0.0:
        return INFINITY
    return p[D_MODEL] * f * payload_factor(p, delta) / (p[OMEGA] * s)


cdef double outage_exponent(const double* p, double delta, double f, double power) noexcept nogil:
    cdef double c = chi(p, delta, f)
    if c == INFINITY or power <= 0.0:
        return INFINITY
    if c * LN2 > EXP_CAP:
        return INFINITY
    return expm1(c * LN2) * noise_plus_interference(p) / (power * p[PATHGAIN])


cdef double a_value(const double* p, double delta, double f, double power) noexcept nogil:
    cdef double y = outage_exponent(p, delta, f, power)
    if y > EXP_CAP:
        return INFINITY
    return exp(y)


cdef double success_probability(const double* p, double delta, double f, double power) noexcept nogil:
    cdef double y = outage_exponent(p, delta, f, power)
    if y == INFINITY:
        return 0.0
    return exp(-y)


cdef double client_objective(const double* p, double delta, double f, double power) noexcept nogil:
    return p[WEIGHT] * (p[PHI1] * delta + p[PHI2] * (a_value(p, delta, f, power) - 1.0))


cdef inline double rate(const double* p, double power) noexcept nogil:
    cdef double snr = power * p[GAIN] * p[PATHGAIN] / noise_plus_interference(p)
    return p[OMEGA] * log2(1.0 + snr)


cdef double total_time(const double* p, double delta, double f, double power) noexcept nogil:
    cdef double r, comp
    if f <= 0.0:
        return INFINITY
    r = rate(p, power)
    if r <= 0.0:
        return INFINITY
    comp = (p[RHO] + p[KAPPA0] * (1.0 - delta)) * p[CYCLES] / f
    return comp + p[D_MODEL] * payload_factor(p, delta) / r


cdef double total_energy(const double* p, double delta, double f, double power) noexcept nogil:
    cdef double r
    cdef double comp = (p[RHO] + p[KAPPA0] * (1.0 - delta)) * p[HALF_XI] * p[CYCLES] * f * f
    if power <= 0.0:
        return comp
    r = rate(p, power)
    if r <= 0.0:
        return INFINITY
    return comp + p[D_MODEL] * payload_factor(p, delta) * power / r


cdef bint exact_feasible(const double* p, double delta, double f, double power) noexcept nogil:
    cdef double tol = FEAS_TOL
    if delta < -tol or delta > p[DELTA_TH] * (1.0 + tol) + tol:
        return False
    if f < 0.0 or f > p[F_MAX] * (1.0 + tol):
        return False
    if power < 0.0 or power > p[P_MAX] * (1.0 + tol):
        return False
    if total_time(p, delta, f, power) > p[T_TH] * (1.0 + tol):
        return False
    return total_energy(p, delta, f, power) <= p[E_TH] * (1.0 + tol)


cdef double min_feasible_delta(const double* p, double f, double power) noexcept nogil:
    cdef double r, k, d, fpp1, t1, t0, e_unit, e1, e0, lo
    if f <= 0.0 or power <= 0.0:
        return INFINITY
    r = rate(p, power)
    if r <= 0.0:
        return INFINITY
    k = p[CYCLES]
    d = p[D_MODEL]
    fpp1 = p[FPP] + 1.0
    t1 = p[KAPPA0] * k / f + d * fpp1 / r
    t0 = (p[RHO] + p[KAPPA0]) * k / f + d * (fpp1 + 1.0) / r
    e_unit = p[HALF_XI] * k * f * f
    e1 = p[KAPPA0] * e_unit + d * fpp1 * power / r
    e0 = (p[RHO] + p[KAPPA0]) * e_unit + d * (fpp1 + 1.0) * power / r
    lo = 0.0
    if t0 > p[T_TH]:
        lo = dmax(lo, (t0 - p[T_TH]) / t1)
    if e0 > p[E_TH]:
        lo = dmax(lo, (e0 - p[E_TH]) / e1)
    if lo > 1.0:
        return INFINITY
    return lo


cdef int linearize(const double* p, double delta_q, double f_q, double power_q,
                   double* lin) noexcept nogil:
    cdef double s = compute_slack(p, delta_q, f_q)
    cdef double d, fpp, omega, k, rho, k0, t_th, g, h, n0, x_q, c, two_c, y0, a0, denom
    cdef double snr_q, log2_q, rate_q, ln_q, t_const, xi, e_const
    if s <= 0.0 or f_q <= 0.0 or power_q <= 0.0:
        return STATUS_SINGULAR
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
        return STATUS_SINGULAR
    two_c = exp(c * LN2)
    y0 = (two_c - 1.0) * n0 / (power_q * g)
    if y0 > EXP_CAP:
        return STATUS_SINGULAR
    a0 = exp(y0)
    denom = omega * power_q * g * s * s
    lin[0] = a0
    lin[1] = LN2 * two_c * d * f_q * a0 * n0 * (
        k * ((fpp + 1.0) * rho - k0) - f_q * t_th * (fpp + 1.0)) / denom
    lin[2] = -LN2 * two_c * k * d * a0 * n0 * x_q * (rho + k0 * (1.0 - delta_q)) / denom
    lin[3] = -a0 * (two_c - 1.0) * n0 / (power_q * power_q * g)

    snr_q = power_q * h * g / n0
    log2_q = log2(1.0 + snr_q)
    rate_q = omega * log2_q
    if rate_q <= 0.0:
        return STATUS_SINGULAR
    ln_q = log1p(snr_q)
    t_const = 2.0 * rho * k / f_q + k0 * k / f_q * (2.0 - delta_q) + d * (fpp + 2.0) / rate_q
    lin[4] = -k0 * k / f_q - d * (fpp + 1.0) / rate_q
    lin[5] = -rho * k / (f_q * f_q) - k0 * k * (1.0 - delta_q) / (f_q * f_q)
    lin[6] = -LN2 * d * h * g * x_q / (omega * ln_q * ln_q * (n0 + power_q * h * g))
    t_const -= lin[6] * power_q
    lin[7] = t_th - t_const

    xi = 2.0 * p[HALF_XI]
    lin[8] = rho * p[HALF_XI] * k
    e_const = k0 * xi * k * f_q * f_q * (delta_q - 0.5) + d * power_q * (fpp + 2.0) / rate_q
    lin[9] = -0.5 * k0 * xi * k * f_q * f_q - d * power_q * (fpp + 1.0) / rate_q
    lin[10] = k0 * xi * k * f_q * (1.0 - delta_q)
    lin[11] = d * x_q * (log2_q - snr_q / (LN2 * (1.0 + snr_q))) / (omega * log2_q * log2_q)
    e_const -= lin[11] * power_q
    lin[12] = p[E_TH] - e_const
    return STATUS_OK


cdef void surrogate_coefficients(const double* p, const double* lin, double delta_q, double f_q,
                                 double power_q, double* out) noexcept nogil:
    cdef double w = p[WEIGHT]
    cdef double phi2 = p[PHI2]
    out[0] = w * (p[PHI1] + phi2 * lin[1])
    out[1] = w * phi2 * lin[2]
    out[2] = w * phi2 * lin[3]
    out[3] = w * phi2 * (lin[0] - lin[1] * delta_q - lin[2] * f_q - lin[3] * power_q - 1.0)


cdef inline double clip(double v, double top) noexcept nogil:
    if v < 0.0:
        return 0.0
    if v > top:
        return top
    return v


cdef void prox_point(const Sub* sp, double mu1, double mu2, double* z) noexcept nogil:
    z[0] = clip(sp.z0[0] - (sp.c[0] + mu1 * sp.a1[0] + mu2 * sp.a2[0]) / sp.tau, sp.ub[0])
    z[1] = clip((sp.tau * sp.z0[1] - sp.c[1] - mu1 * sp.a1[1] - mu2 * sp.a2[1])
                / (sp.tau + 2.0 * mu2 * sp.q), sp.ub[1])
    z[2] = clip(sp.z0[2] - (sp.c[2] + mu1 * sp.a1[2] + mu2 * sp.a2[2]) / sp.tau, sp.ub[2])


cdef double residual(const Sub* sp, double mu1, double mu2, int which) noexcept nogil:
    cdef double z[3]
    prox_point(sp, mu1, mu2, z)
    if which == 1:
        return sp.a1[0] * z[0] + sp.a1[1] * z[1] + sp.a1[2] * z[2] - sp.b1
    return sp.q * z[1] * z[1] + sp.a2[0] * z[0] + sp.a2[1] * z[1] + sp.a2[2] * z[2] - sp.b2


cdef double inner_mu1(const Sub* sp, double mu2) noexcept nogil:
    if residual(sp, 0.0, mu2, 1) <= 0.0:
        return 0.0
    return decreasing_root(sp, mu2, 1)


cdef double outer_residual(const Sub* sp, double mu2) noexcept nogil:
    return residual(sp, inner_mu1(sp, mu2), mu2, 2)


cdef inline double eval_res(const Sub* sp, double mu, double fixed, int which) noexcept nogil:
    if which == 1:
        return residual(sp, mu, fixed, 1)
    return outer_residual(sp, mu)


cdef double decreasing_root(const Sub* sp, double fixed, int which) noexcept nogil:
    cdef double lo = 0.0
    cdef double f_lo = eval_res(sp, 0.0, fixed, which)
    cdef double hi = sp.mu_scale
    cdef double f_hi = eval_res(sp, hi, fixed, which)
    cdef double m, f_m
    cdef int n = 0
    cdef int side = 0
    cdef int it
    while f_hi > 0.0:
        lo = hi
        f_lo = f_hi
        hi *= 4.0
        n += 1
        if n > ROOT_EXPAND:
            return INFINITY
        f_hi = eval_res(sp, hi, fixed, which)
    for it in range(ROOT_ITERS):
        if f_hi == 0.0 or hi - lo <= ROOT_RTOL * hi:
            break
        m = (lo * f_hi - hi * f_lo) / (f_hi - f_lo)
        if not (lo < m and m < hi):
            m = 0.5 * (lo + hi)
        f_m = eval_res(sp, m, fixed, which)
        if f_m > 0.0:
            lo = m
            f_lo = f_m
            if side == 1:
                f_hi *= 0.5
            side = 1
        else:
            hi = m
            f_hi = f_m
            if side == -1:
                f_lo *= 0.5
            side = -1
    return hi


cdef inline double amax3(double a, double b, double c) noexcept nogil:
    return dmax(dmax(fabs(a), fabs(b)), fabs(c))


cdef int solve_subproblem(const double* p, const double* lin, double delta_q, double f_q,
                          double power_q, double tau, double* x, double* sur) noexcept nogil:
    cdef double coef[4]
    cdef double hi[3]
    cdef Sub sp
    cdef double s1, s2, mu1, mu2, val, prox, anchor_val
    cdef double z[3]
    cdef int j
    surrogate_coefficients(p, lin, delta_q, f_q, power_q, coef)
    hi[0] = p[DELTA_TH]
    hi[1] = p[F_MAX]
    hi[2] = p[P_MAX]
    sp.ub[0] = 1.0 if hi[0] > 0.0 else 0.0
    sp.ub[1] = 1.0
    sp.ub[2] = 1.0
    sp.z0[0] = delta_q / hi[0] if hi[0] > 0.0 else 0.0
    sp.z0[1] = f_q / hi[1]
    sp.z0[2] = power_q / hi[2]
    for j in range(3):
        sp.c[j] = coef[j] * hi[j]
        sp.a1[j] = lin[4 + j] * hi[j]
        sp.a2[j] = lin[9 + j] * hi[j]
    sp.b1 = lin[7]
    sp.q = lin[8] * hi[1] * hi[1]
    sp.b2 = lin[12]
    s1 = dmax(dmax(amax3(sp.a1[0], sp.a1[1], sp.a1[2]), fabs(sp.b1)), 1e-300)
    s2 = dmax(dmax(dmax(amax3(sp.a2[0], sp.a2[1], sp.a2[2]), fabs(sp.q)), fabs(sp.b2)), 1e-300)
    for j in range(3):
        sp.a1[j] /= s1
        sp.a2[j] /= s2
    sp.b1 /= s1
    sp.b2 /= s2
    sp.q = dmax(sp.q / s2, 0.0)
    sp.mu_scale = dmax(dmax(amax3(sp.c[0], sp.c[1], sp.c[2]), tau), 1e-300)
    sp.tau = tau

    mu2 = 0.0
    if outer_residual(&sp, 0.0) > 0.0:
        mu2 = decreasing_root(&sp, 0.0, 2)
    if mu2 == INFINITY:
        return STATUS_INFEASIBLE
    mu1 = inner_mu1(&sp, mu2)
    if mu1 == INFINITY:
        return STATUS_INFEASIBLE
    prox_point(&sp, mu1, mu2, z)
    val = sp.c[0] * z[0] + sp.c[1] * z[1] + sp.c[2] * z[2]
    prox = 0.5 * tau * ((z[0] - sp.z0[0]) * (z[0] - sp.z0[0])
                        + (z[1] - sp.z0[1]) * (z[1] - sp.z0[1])
                        + (z[2] - sp.z0[2]) * (z[2] - sp.z0[2]))
    anchor_val = sp.c[0] * sp.z0[0] + sp.c[1] * sp.z0[1] + sp.c[2] * sp.z0[2]
    if val + prox > anchor_val:
        for j in range(3):
            z[j] = sp.z0[j]
        val = anchor_val
        prox = 0.0
    for j in range(3):
        x[j] = z[j] * hi[j]
    sur[0] = val + prox + coef[3]
    return STATUS_OK


cdef int sca_step(const double* p, double delta_q, double f_q, double power_q, double tau,
                  double* x, double* sur, double* obj, double* tau_next,
                  unsigned char* accepted) noexcept nogil:
    cdef double lin[NLIN]
    cdef double xh[3]
    cdef double obj_q = client_objective(p, delta_q, f_q, power_q)
    cdef double step = 1.0
    cdef double slack, lo, o
    cdef int status, it
    x[0] = delta_q
    x[1] = f_q
    x[2] = power_q
    obj[0] = obj_q
    tau_next[0] = tau
    accepted[0] = 0
    sur[0] = INFINITY
    status = linearize(p, delta_q, f_q, power_q, lin)
    if status != STATUS_OK:
        return status
    status = solve_subproblem(p, lin, delta_q, f_q, power_q, tau, xh, sur)
    if status != STATUS_OK:
        sur[0] = INFINITY
        return status
    slack = 1e-12 * dmax(1.0, fabs(obj_q))
    for it in range(MAX_HALVINGS):
        x[0] = delta_q + step * (xh[0] - delta_q)
        x[1] = f_q + step * (xh[1] - f_q)
        x[2] = power_q + step * (xh[2] - power_q)
        lo = min_feasible_delta(p, x[1], x[2])
        if x[0] < lo:
            x[0] = lo * (1.0 + 1e-13) + 1e-15
        if exact_feasible(p, x[0], x[1], x[2]):
            o = client_objective(p, x[0], x[1], x[2])
            if o <= obj_q + slack:
                if step == 1.0:
                    tau_next[0] = dmax(0.5 * tau, TAU_MIN)
                else:
                    tau_next[0] = dmin(2.0 * tau, TAU_MAX)
                obj[0] = o
                accepted[0] = 1
                return STATUS_OK
        step *= 0.5
    x[0] = delta_q
    x[1] = f_q
    x[2] = power_q
    tau_next[0] = dmin(4.0 * tau, TAU_MAX)
    return STATUS_OK


cdef double initial_tau(const double* p, double delta_q, double f_q, double power_q) noexcept nogil:
    cdef double obj = client_objective(p, delta_q, f_q, power_q)
    return dmax(1e-6 * fabs(obj) + 1e-3 * p[WEIGHT] * (p[PHI1] + p[PHI2]), TAU_MIN)


cdef int initial_anchor(const double* p, double* x, int grid) noexcept nogil:
    cdef double d_th = p[DELTA_TH]
    cdef double f_max = p[F_MAX]
    cdef double p_max = p[P_MAX]
    cdef double best_val = INFINITY
    cdef double f, pw, val
    cdef bint found = False
    cdef int i, j
    x[0] = d_th
    x[1] = f_max
    x[2] = p_max
    if exact_feasible(p, d_th, f_max, p_max):
        return STATUS_OK
    for i in range(1, grid + 1):
        f = f_max * i / grid
        for j in range(1, grid + 1):
            pw = p_max * j / grid
            if exact_feasible(p, d_th, f, pw):
                val = client_objective(p, d_th, f, pw)
                if val < best_val:
                    best_val = val
                    x[1] = f
                    x[2] = pw
                    found = True
    if not found:
        x[1] = f_max
        x[2] = p_max
        return STATUS_INFEASIBLE
    return STATUS_OK


cdef int sca_solve_client(const double* p, int max_iter, double eps, double* x, double* obj,
                          long* iters) noexcept nogil:
    cdef double xn[3]
    cdef double sur, o, tau, tau_n, prev
    cdef unsigned char acc
    cdef int status, st, it
    status = initial_anchor(p, x, 48)
    obj[0] = client_objective(p, x[0], x[1], x[2])
    iters[0] = 0
    if status != STATUS_OK:
        return status
    tau = initial_tau(p, x[0], x[1], x[2])
    for it in range(max_iter):
        st = sca_step(p, x[0], x[1], x[2], tau, xn, &sur, &o, &tau_n, &acc)
        tau = tau_n
        if st != STATUS_OK:
            break
        if not acc:
            if tau >= TAU_MAX:
                break
            continue
        prev = obj[0]
        x[0] = xn[0]
        x[1] = xn[1]
        x[2] = xn[2]
        obj[0] = o
        iters[0] += 1
        if fabs(prev - o) < eps:
            break
    return STATUS_OK


# Batched entry points (same signatures as the pure-Python module).

def _as_params(params):
    arr = np.ascontiguousarray(params, dtype=np.float64)
    if arr.ndim != 2 or arr.shape[1] != NPARAM:
        raise ValueError("params must have shape (n, %d)" % NPARAM)
    return arr


def _as_x(x, n):
    arr = np.ascontiguousarray(x, dtype=np.float64)
    if arr.shape != (n, 3):
        raise ValueError("decisions must have shape (n, 3)")
    return arr


def objective_many(params, x):
    cdef double[:, ::1] P = _as_params(params)
    cdef Py_ssize_t n = P.shape[0], i
    cdef double[:, ::1] X = _as_x(x, n)
    out = np.empty(n, dtype=np.float64)
    cdef double[::1] o = out
    with nogil:
        for i in range(n):
            o[i] = client_objective(&P[i, 0], X[i, 0], X[i, 1], X[i, 2])
    return out


def success_probability_many(params, x):
    cdef double[:, ::1] P = _as_params(params)
    cdef Py_ssize_t n = P.shape[0], i
    cdef double[:, ::1] X = _as_x(x, n)
    out = np.empty(n, dtype=np.float64)
    cdef double[::1] o = out
    with nogil:
        for i in range(n):
            o[i] = success_probability(&P[i, 0], X[i, 0], X[i, 1], X[i, 2])
    return out


def time_energy_many(params, x):
    cdef double[:, ::1] P = _as_params(params)
    cdef Py_ssize_t n = P.shape[0], i
    cdef double[:, ::1] X = _as_x(x, n)
    out = np.empty((n, 2), dtype=np.float64)
    cdef double[:, ::1] o = out
    with nogil:
        for i in range(n):
            o[i, 0] = total_time(&P[i, 0], X[i, 0], X[i, 1], X[i, 2])
            o[i, 1] = total_energy(&P[i, 0], X[i, 0], X[i, 1], X[i, 2])
    return out


def linearize_many(params, x):
    cdef double[:, ::1] P = _as_params(params)
    cdef Py_ssize_t n = P.shape[0], i, j
    cdef double[:, ::1] X = _as_x(x, n)
    status = np.zeros(n, dtype=np.int32)
    lin = np.full((n, NLIN), np.nan)
    cdef int[::1] S = status
    cdef double[:, ::1] L = lin
    cdef double row[NLIN]
    with nogil:
        for i in range(n):
            S[i] = linearize(&P[i, 0], X[i, 0], X[i, 1], X[i, 2], row)
            if S[i] == STATUS_OK:
                for j in range(NLIN):
                    L[i, j] = row[j]
    return status, lin


def initial_anchor_many(params):
    cdef double[:, ::1] P = _as_params(params)
    cdef Py_ssize_t n = P.shape[0], i
    status = np.zeros(n, dtype=np.int32)
    x = np.empty((n, 3), dtype=np.float64)
    cdef int[::1] S = status
    cdef double[:, ::1] X = x
    with nogil:
        for i in range(n):
            S[i] = initial_anchor(&P[i, 0], &X[i, 0], 48)
    return status, x


def initial_tau_many(params, x):
    cdef double[:, ::1] P = _as_params(params)
    cdef Py_ssize_t n = P.shape[0], i
    cdef double[:, ::1] X = _as_x(x, n)
    out = np.empty(n, dtype=np.float64)
    cdef double[::1] o = out
    with nogil:
        for i in range(n):
            o[i] = initial_tau(&P[i, 0], X[i, 0], X[i, 1], X[i, 2])
    return out


def sca_step_many(params, x, tau):
    cdef double[:, ::1] P = _as_params(params)
    cdef Py_ssize_t n = P.shape[0], i
    cdef double[:, ::1] X = _as_x(x, n)
    cdef double[::1] T = np.ascontiguousarray(tau, dtype=np.float64)
    status = np.zeros(n, dtype=np.int32)
    x_new = np.empty((n, 3), dtype=np.float64)
    sur = np.empty(n, dtype=np.float64)
    obj = np.empty(n, dtype=np.float64)
    tau_next = np.empty(n, dtype=np.float64)
    accepted = np.zeros(n, dtype=np.uint8)
    cdef int[::1] S = status
    cdef double[:, ::1] XN = x_new
    cdef double[::1] SU = sur
    cdef double[::1] O = obj
    cdef double[::1] TN = tau_next
    cdef unsigned char[::1] A = accepted
    with nogil:
        for i in range(n):
            S[i] = sca_step(&P[i, 0], X[i, 0], X[i, 1], X[i, 2], T[i],
                            &XN[i, 0], &SU[i], &O[i], &TN[i], &A[i])
    return status, x_new, sur, obj, tau_next, accepted


def sca_solve_many(params, max_iter, eps):
    cdef double[:, ::1] P = _as_params(params)
    cdef Py_ssize_t n = P.shape[0], i
    cdef int q = int(max_iter)
    cdef double e = float(eps)
    status = np.zeros(n, dtype=np.int32)
    x = np.empty((n, 3), dtype=np.float64)
    obj = np.empty(n, dtype=np.float64)
    iters = np.zeros(n, dtype=np.int64)
    cdef int[::1] S = status
    cdef double[:, ::1] X = x
    cdef double[::1] O = obj
    cdef long[::1] I = iters
    with nogil:
        for i in range(n):
            S[i] = sca_solve_client(&P[i, 0], q, e, &X[i, 0], &O[i], &I[i])
    return status, x, obj, iters
