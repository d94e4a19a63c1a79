"""Random single-client instances and a brute-force grid oracle."""
import numpy as np

from phfl import _pykernels as K


def random_row(gen, weight=1.0):
    """A feasible single-client parameter row with binding budgets."""
    p = [0.0] * K.NPARAM
    p[K.D_MODEL] = gen.uniform(2000, 10000)
    p[K.FPP] = 32
    p[K.OMEGA] = 1e6
    p[K.NOISE] = 10 ** (-17.4 - 3)
    p[K.INTERF] = gen.uniform(0, 2e-8)
    p[K.PATHGAIN] = gen.uniform(10, 250) ** -3
    p[K.GAIN] = max(gen.exponential(), 0.05)
    p[K.CYCLES] = 32 * 10 * gen.uniform(20, 25) * 1024
    p[K.RHO] = 1
    p[K.KAPPA0] = 5
    p[K.HALF_XI] = 1e-28
    p[K.F_MAX] = gen.uniform(1.8e9, 2.8e9)
    p[K.P_MAX] = 10 ** ((gen.uniform(23, 30) - 30) / 10)
    p[K.DELTA_TH] = 0.9
    p[K.PHI1] = 1.0
    p[K.PHI2] = 1e-3
    p[K.WEIGHT] = weight
    p[K.T_TH] = 1e9
    p[K.E_TH] = 1e9
    t_lo = K.total_time(p, 0.9, p[K.F_MAX], p[K.P_MAX])
    t_hi = K.total_time(p, 0.0, p[K.F_MAX], p[K.P_MAX])
    p[K.T_TH] = gen.uniform(t_lo * 1.05, t_hi)
    e_lo = K.total_energy(p, 0.9, p[K.F_MAX] * 0.5, p[K.P_MAX] * 0.5)
    e_hi = K.total_energy(p, 0.0, p[K.F_MAX], p[K.P_MAX])
    p[K.E_TH] = gen.uniform(e_lo, e_hi * 1.5)
    return p


def random_rows(gen, n):
    return np.array([random_row(gen, weight=gen.uniform(0.1, 1.0)) for _ in range(n)])


def grid_oracle(p, n=200):
    """Best exactly feasible objective on an n^3 grid over the decision box.

    Written directly from the delay, energy and outage formulas, without
    the kernel helpers.
    """
    d_th, f_max, p_max = p[K.DELTA_TH], p[K.F_MAX], p[K.P_MAX]
    ds = np.linspace(0, d_th, n)[:, None]
    ps = np.linspace(0, p_max, n)[None, :]
    n0 = p[K.OMEGA] * p[K.NOISE] + p[K.INTERF]
    best = np.inf
    arg = None
    with np.errstate(all="ignore"):
        r = p[K.OMEGA] * np.log2(1 + ps * p[K.GAIN] * p[K.PATHGAIN] / n0)
        X = (1 - ds) * (p[K.FPP] + 1) + 1
        work = (p[K.RHO] + p[K.KAPPA0] * (1 - ds)) * p[K.CYCLES]
        for f in np.linspace(0, f_max, n):
            t = work / f + p[K.D_MODEL] * X / r
            e = work * p[K.HALF_XI] * f * f + p[K.D_MODEL] * X * ps / r
            slack = f * p[K.T_TH] - work
            chi = p[K.D_MODEL] * f * X / (p[K.OMEGA] * slack)
            y = np.expm1(chi * np.log(2)) * n0 / (ps * p[K.PATHGAIN])
            obj = p[K.WEIGHT] * (p[K.PHI1] * ds + p[K.PHI2] * (np.exp(y) - 1))
            ok = ((t <= p[K.T_TH] * (1 + 1e-9)) & (e <= p[K.E_TH] * (1 + 1e-9)) & (slack > 0)
                  & np.isfinite(obj))
            o = np.where(ok, obj, np.inf)
            m = o.min()
            if m < best:
                best = m
                i, j = np.unravel_index(o.argmin(), o.shape)
                arg = (ds[i, 0], f, ps[0, j])
    return best, arg


def a_direct(p, delta, f, power):
    """A = 1/p straight from the closed form."""
    n0 = p[K.OMEGA] * p[K.NOISE] + p[K.INTERF]
    work = (p[K.RHO] + p[K.KAPPA0] * (1 - delta)) * p[K.CYCLES]
    X = (1 - delta) * (p[K.FPP] + 1) + 1
    chi = p[K.D_MODEL] * f * X / (p[K.OMEGA] * (f * p[K.T_TH] - work))
    with np.errstate(over="ignore"):
        return np.exp(np.expm1(chi * np.log(2)) * n0 / (power * p[K.PATHGAIN]))
