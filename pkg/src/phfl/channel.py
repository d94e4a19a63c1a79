"""Rayleigh-fading uplink: SINR, rate, inter-cell interference, reception probability."""
from dataclasses import dataclass

import numpy as np

from . import rng
from .errors import DeadlineExhaustedByCompute

THERMAL_NOISE_PSD = 10.0 ** (-174.0 / 10.0 - 3.0)  # W/Hz


@dataclass(frozen=True)
class ChannelParams:
    """Uplink parameters in SI units.

    ``distance_range`` bounds each UE's distance to its own sBS and
    ``cross_distance_range`` bounds its distance to every other sBS.
    """
    omega: float = 1e6
    noise_psd: float = THERMAL_NOISE_PSD
    pathloss_exp: float = 3.0
    seed: int = 0
    distance_range: tuple = (10.0, 250.0)
    cross_distance_range: tuple = (600.0, 1200.0)

    def __post_init__(self):
        if not self.omega > 0:
            raise ValueError("omega must be positive")
        if not self.noise_psd > 0:
            raise ValueError("noise_psd must be positive")
        if not self.pathloss_exp >= 2:
            raise ValueError("pathloss_exp must be >= 2")


@dataclass(frozen=True)
class Geometry:
    """Static distances: ``own[i]`` to the serving sBS, ``cross[i, k]`` to sBS k."""
    own: np.ndarray
    cross: np.ndarray


@dataclass(frozen=True)
class ChannelDraw:
    """Unit-mean exponential power gains for one VC round.

    ``gains[i]`` is the UE-to-serving-sBS gain and ``cross_gains[i, k]`` the
    gain from UE i to sBS k (the entry for the serving sBS is unused).
    """
    gains: np.ndarray
    cross_gains: np.ndarray


def draw_geometry(topology, params):
    n, nk = topology.n_ue, topology.n_sbs
    own = np.empty(n)
    cross = np.empty((n, nk))
    lo, hi = params.distance_range
    clo, chi = params.cross_distance_range
    for i in range(n):
        g = rng.stream(params.seed, rng.GEOMETRY, i)
        own[i] = g.uniform(lo, hi)
        cross[i] = g.uniform(clo, chi, size=nk)
    cross[np.arange(n), topology.ue_sbs] = own
    return Geometry(own=own, cross=cross)


def draw_fading(topology, params, t):
    """Exp(1) gains from one stream per (client, round); deterministic in (seed, t)."""
    n, nk = topology.n_ue, topology.n_sbs
    gains = np.empty(n)
    cross = np.empty((n, nk))
    for i in range(n):
        g = rng.stream(params.seed, rng.FADING, i, t)
        gains[i] = g.exponential()
        cross[i] = g.exponential(size=nk)
    return ChannelDraw(gains=gains, cross_gains=cross)


def interference_matrix(powers, cross_gains, cross_distance, alpha, ue_sbs):
    """I_i = sum over UEs u of other cells of P_u h_{u,k(i)} d_{u,k(i)}^-alpha."""
    powers = np.asarray(powers, dtype=float)
    # received power at every sBS from every UE: (n_ue, n_sbs)
    rx = powers[:, None] * cross_gains * np.asarray(cross_distance, dtype=float) ** (-alpha)
    per_cell = rx.sum(axis=0)
    own_cell = np.zeros_like(per_cell)
    np.add.at(own_cell, ue_sbs, rx[np.arange(len(ue_sbs)), ue_sbs])
    total = per_cell - own_cell
    return total[ue_sbs]


def interference(powers, topology, draw, geometry, params, client=None):
    """Inter-cell interference in Watts for every UE, or for one ``client``."""
    ue_sbs = topology.ue_sbs
    if client is not None:
        k = ue_sbs[client]
        others = ue_sbs != k
        p = np.asarray(powers, dtype=float)
        return float(np.sum(p[others] * draw.cross_gains[others, k]
                            * geometry.cross[others, k] ** (-params.pathloss_exp)))
    return interference_matrix(powers, draw.cross_gains, geometry.cross,
                               params.pathloss_exp, ue_sbs)


def sinr(power, gain, distance, alpha, omega, noise_psd, interf):
    """gamma = P h d^-alpha / (omega zeta^2 + I)."""
    return (np.asarray(power, dtype=float) * gain * np.asarray(distance, dtype=float) ** (-alpha)
            / (omega * noise_psd + np.asarray(interf, dtype=float)))


def rate(gamma, omega):
    """r = omega log2(1 + gamma) in bits/s."""
    return omega * np.log2(1.0 + np.asarray(gamma, dtype=float))


def compute_slack(delta, f, t_th, cycles, rho, kappa0):
    """f t_th - K (rho + kappa0 (1 - delta)); positive iff compute fits the deadline."""
    return f * t_th - cycles * (rho + kappa0 * (1.0 - np.asarray(delta, dtype=float)))


def outage_threshold(delta, f, power, *, cycles, distance, params, interf, t_th, rho, kappa0,
                     d_model, fpp):
    """Smallest gain h meeting the deadline: (2^chi - 1)(omega zeta^2 + I)/(P d^-alpha).

    Returns +inf where the compute alone exhausts the deadline.
    """
    delta = np.asarray(delta, dtype=float)
    f = np.asarray(f, dtype=float)
    power = np.asarray(power, dtype=float)
    slack = compute_slack(delta, f, t_th, cycles, rho, kappa0)
    ok = slack > 0
    payload = (1.0 - delta) * (fpp + 1.0) + 1.0
    with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
        chi = np.where(ok, d_model * f * payload / (params.omega * np.where(ok, slack, 1.0)), np.inf)
        n0 = params.omega * params.noise_psd + np.asarray(interf, dtype=float)
        thr = np.expm1(chi * np.log(2.0)) * n0 / (power * np.asarray(distance, dtype=float) ** (-params.pathloss_exp))
    return np.where(ok & (power > 0), thr, np.inf)


def success_probability(delta, f, power, *, cycles, distance, params, interf, t_th, rho, kappa0,
                        d_model, fpp, strict=False):
    """Closed-form probability that the trained model reaches the sBS in time.

    p = exp(-(2^chi - 1)(omega zeta^2 + I) / (P d^-alpha)).  Where the
    compute alone exhausts the deadline p is 0; with ``strict=True`` that
    raises :class:`DeadlineExhaustedByCompute` instead.
    """
    thr = outage_threshold(delta, f, power, cycles=cycles, distance=distance, params=params,
                           interf=interf, t_th=t_th, rho=rho, kappa0=kappa0,
                           d_model=d_model, fpp=fpp)
    if strict:
        slack = compute_slack(delta, f, t_th, cycles, rho, kappa0)
        if np.any(slack <= 0):
            raise DeadlineExhaustedByCompute("compute time reaches the deadline")
    return np.exp(-thr)
