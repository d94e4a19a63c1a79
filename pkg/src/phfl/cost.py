"""Per-client, per-VC-round delay and energy accounting."""
from dataclasses import dataclass

import numpy as np

from .errors import ZeroRate


@dataclass(frozen=True)
class EnergyParams:
    """``half_xi`` is 0.5 xi (effective chip capacitance); ``fpp`` is bits per float."""
    half_xi: float = 1e-28
    fpp: int = 32

    def __post_init__(self):
        if not self.half_xi > 0:
            raise ValueError("half_xi must be positive")
        if self.fpp < 1:
            raise ValueError("fpp must be >= 1")


@dataclass(frozen=True)
class CostBreakdown:
    t_cp_d: np.ndarray
    t_cp_s: np.ndarray
    t_up: np.ndarray
    e_cp_d: np.ndarray
    e_cp_s: np.ndarray
    e_up: np.ndarray
    payload_bits: np.ndarray

    @property
    def t_tot(self):
        return self.t_cp_d + self.t_cp_s + self.t_up

    @property
    def e_tot(self):
        return self.e_cp_d + self.e_cp_s + self.e_up


def payload_bits(delta, d_model, fpp):
    """s = d [(1 - delta)(FPP + 1) + 1]: surviving values and the mask."""
    return d_model * ((1.0 - np.asarray(delta, dtype=float)) * (fpp + 1.0) + 1.0)


def compute_times(cycles, delta, f, rho, kappa0):
    """Dense warm-up and sparse training times (rho K / f, kappa0 K (1 - delta) / f)."""
    f = np.asarray(f, dtype=float)
    t_d = rho * cycles / f
    t_s = kappa0 * cycles * (1.0 - np.asarray(delta, dtype=float)) / f
    return t_d, t_s


def offload_time(bits, rate):
    bits = np.asarray(bits, dtype=float)
    rate = np.asarray(rate, dtype=float)
    if np.any((rate <= 0) & (bits > 0)):
        raise ZeroRate("positive payload over a zero-rate link")
    with np.errstate(divide="ignore", invalid="ignore"):
        return np.where(bits > 0, bits / np.where(rate > 0, rate, 1.0), 0.0)


def energies(cycles, delta, f, power, rate, rho, kappa0, half_xi, d_model, fpp):
    """(e_cp_d, e_cp_s, e_up) in Joules."""
    f = np.asarray(f, dtype=float)
    delta = np.asarray(delta, dtype=float)
    e_d = rho * half_xi * cycles * f * f
    e_s = kappa0 * half_xi * cycles * (1.0 - delta) * f * f
    e_up = offload_time(payload_bits(delta, d_model, fpp), rate) * np.asarray(power, dtype=float)
    return e_d, e_s, e_up


def cost_breakdown(cycles, delta, f, power, rate, rho, kappa0, energy, d_model):
    """All delay and energy components for the given decisions and realized rates."""
    t_d, t_s = compute_times(cycles, delta, f, rho, kappa0)
    bits = payload_bits(delta, d_model, energy.fpp)
    t_up = offload_time(bits, rate)
    e_d, e_s, e_up = energies(cycles, delta, f, power, rate, rho, kappa0, energy.half_xi,
                              d_model, energy.fpp)
    b = np.broadcast_arrays(t_d, t_s, t_up, e_d, e_s, e_up, bits)
    return CostBreakdown(*[np.asarray(x, dtype=float) for x in b])
