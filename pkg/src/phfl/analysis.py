"""Convergence-bound diagnostics, empirical CDFs and bandwidth savings.

The bound terms are orders of magnitude with unit coefficients by default;
they are diagnostics, not certified bounds.
"""
import math
import warnings
from dataclasses import dataclass, field

import numpy as np

from .cost import payload_bits
from .errors import EmptyGroup, ZeroProbability

# Weight exponents (UE, VC, sBS, mBS) for each wireless factor.
FACTOR_EXPONENTS = {
    "phi_w0": (2, 2, 2, 2),
    "phi_L1": (1, 1, 1, 1),
    "phi_L2": (2, 1, 1, 1),
    "phi_L3": (2, 2, 1, 1),
    "phi_L4": (2, 2, 2, 1),
}

TERM_NAMES = ("optimization", "minibatch_noise", "vc_divergence", "sbs_divergence",
              "mbs_divergence", "global_divergence", "pruning", "wireless")


class EtaTooLarge(UserWarning):
    """The learning rate exceeds the step-size condition of the bound."""


def _check_trace(p_trace):
    p = np.atleast_2d(np.asarray(p_trace, dtype=float))
    if p.size == 0:
        raise ValueError("empty probability trace")
    if np.any(~np.isfinite(p)) or np.any(p <= 0.0):
        raise ZeroProbability("success probabilities must lie in (0, 1]")
    if np.any(p > 1.0):
        raise ValueError("success probabilities must lie in (0, 1]")
    return p


def wireless_factors(p_trace, topology):
    """The five wireless factors for a (T, U) trace of success probabilities.

    Each factor is (1/T) sum_t sum_i w_i (1/p_i^t - 1) where w_i is the
    product of the tier weights on the path of UE i raised to the
    exponents in ``FACTOR_EXPONENTS``.
    """
    p = _check_trace(p_trace)
    if p.shape[1] != topology.n_ue:
        raise ValueError(f"trace has {p.shape[1]} clients, topology has {topology.n_ue}")
    excess = np.mean(1.0 / p - 1.0, axis=0)
    return {name: float(np.dot(topology.ue_weight_product(*e), excess))
            for name, e in FACTOR_EXPONENTS.items()}


@dataclass
class BoundInputs:
    """Constants of the convergence bound.

    ``p_trace`` is a (T_rounds, U) array of success probabilities; the
    wireless factor uses its time average.  ``T`` counts local iterations.
    """
    beta: float
    sigma2: float
    eps2_vc: float
    eps2_sbs: float
    eps2_mbs: float
    eps2: float
    G2: float
    D2: float
    eta: float
    kappa: tuple
    delta_th: float
    T: int
    initial_gap: float
    n_clients: int
    p_trace: np.ndarray = None
    coefficients: dict = field(default_factory=dict)

    def __post_init__(self):
        for name in ("beta", "sigma2", "eps2_vc", "eps2_sbs", "eps2_mbs", "eps2", "G2", "D2",
                     "delta_th", "initial_gap"):
            v = float(getattr(self, name))
            if not (v >= 0.0 and math.isfinite(v)):
                raise ValueError(f"{name} must be finite and nonnegative")
        if not self.eta > 0:
            raise ValueError("eta must be positive")
        if int(self.T) < 1 or int(self.n_clients) < 1:
            raise ValueError("T and n_clients must be positive")
        if len(self.kappa) != 4 or min(self.kappa) < 1:
            raise ValueError("kappa must hold four positive round counts")
        unknown = set(self.coefficients) - set(TERM_NAMES)
        if unknown:
            raise ValueError(f"unknown bound terms {sorted(unknown)}")

    @property
    def eta_cap(self):
        k0, k1, k2, k3 = self.kappa
        if self.beta == 0:
            return math.inf
        return 1.0 / (6.0 * math.sqrt(2.0) * k0 * k1 * k2 * k3 * self.beta)


def corollary_bound(inputs, topology=None, phi_w0=None):
    """Term-by-term evaluation of the final convergence bound.

    The wireless factor is taken from ``phi_w0`` if given, otherwise
    computed from ``inputs.p_trace`` and ``topology``; with neither it is 0.
    Returns a dict with the eight terms, ``total``, ``eta_cap`` and
    ``eta_ok``.  A violated step-size condition emits ``EtaTooLarge``.
    """
    b = inputs
    k0, k1, k2, k3 = (float(k) for k in b.kappa)
    eta, beta = float(b.eta), float(b.beta)
    if phi_w0 is None:
        phi_w0 = 0.0
        if b.p_trace is not None:
            if topology is None:
                raise ValueError("a topology is needed to weight the probability trace")
            phi_w0 = wireless_factors(b.p_trace, topology)["phi_w0"]
    e2b2 = eta ** 2 * beta ** 2
    terms = {
        "optimization": b.initial_gap / (eta * b.T),
        "minibatch_noise": beta * eta * b.sigma2 / b.n_clients,
        "vc_divergence": k0 ** 2 * e2b2 * b.eps2_vc,
        "sbs_divergence": k0 ** 2 * k1 ** 2 * e2b2 * b.eps2_sbs,
        "mbs_divergence": (k0 * k1 * k2) ** 2 * e2b2 * beta ** 2 * b.eps2_mbs,
        "global_divergence": (k0 * k1 * k2 * k3) ** 2 * e2b2 * beta ** 2 * b.eps2,
        "pruning": b.delta_th * beta ** 2 * b.D2,
        "wireless": beta * eta * b.G2 * phi_w0,
    }
    for name, c in b.coefficients.items():
        terms[name] *= float(c)
    out = dict(terms)
    out["total"] = float(sum(terms.values()))
    out["eta_cap"] = b.eta_cap
    out["eta_ok"] = bool(eta <= b.eta_cap)
    if not out["eta_ok"]:
        warnings.warn(f"eta={eta:g} exceeds the step-size cap {b.eta_cap:g}", EtaTooLarge,
                      stacklevel=2)
    return out


@dataclass(frozen=True)
class CdfSeries:
    """Empirical CDF per group: sorted values ``x[g]`` and levels ``F[g]``."""
    x: dict
    F: dict

    def evaluate(self, group, value):
        """Right-continuous F(value) for one group."""
        xs = self.x[group]
        return np.searchsorted(xs, value, side="right") / len(xs)

    def rows(self):
        for g in sorted(self.x):
            for xv, fv in zip(self.x[g], self.F[g]):
                yield g, float(xv), float(fv)


def empirical_cdf(groups):
    """Empirical CDF of each group in a mapping ``{group: values}``."""
    if not groups:
        raise EmptyGroup("no groups given")
    xs, fs = {}, {}
    for g, values in groups.items():
        v = np.sort(np.asarray(values, dtype=float).ravel())
        if v.size == 0:
            raise EmptyGroup(f"group {g!r} is empty")
        xs[g] = v
        fs[g] = np.arange(1, v.size + 1) / v.size
    return CdfSeries(xs, fs)


def bandwidth_saving(payload_pruned, payload_full):
    """Percentage of the dense payload saved by pruning."""
    full = np.asarray(payload_full, dtype=float)
    if np.any(full <= 0):
        raise ValueError("dense payload must be positive")
    return 100.0 * (1.0 - np.asarray(payload_pruned, dtype=float) / full)


def bandwidth_saving_for_delta(delta, d_model, fpp):
    return bandwidth_saving(payload_bits(delta, d_model, fpp), payload_bits(0.0, d_model, fpp))


# Empirical estimates of the assumed constants.  They are labelled as
# estimates wherever they are reported.

def estimate_smoothness(model, w_samples, X, y, gen, pairs=32, scale=1e-2):
    """Largest ||g(a) - g(b)|| / ||a - b|| over sampled nearby pairs."""
    w_samples = np.atleast_2d(w_samples)
    best = 0.0
    for _ in range(pairs):
        a = w_samples[gen.integers(len(w_samples))]
        step = gen.normal(size=a.shape) * scale * (np.linalg.norm(a) / math.sqrt(a.size) + 1e-12)
        b = a + step
        ga = model.loss_and_grad(a, X, y)[1]
        gb = model.loss_and_grad(b, X, y)[1]
        best = max(best, float(np.linalg.norm(ga - gb) / np.linalg.norm(step)))
    return best


def estimate_gradient_variance(model, w, X, y, batch_size, gen, draws=32):
    """Mean squared deviation of minibatch gradients from the full gradient."""
    full = model.loss_and_grad(w, X, y)[1]
    n = len(y)
    acc = 0.0
    for _ in range(draws):
        idx = gen.choice(n, size=min(batch_size, n), replace=False)
        g = model.loss_and_grad(w, X[idx], y[idx])[1]
        acc += float(np.sum((g - full) ** 2))
    return acc / draws


def running_max_sq_norm(vectors):
    """max ||v||^2 over a sequence (used for G^2 and D^2)."""
    best = 0.0
    for v in vectors:
        best = max(best, float(np.dot(v, v)))
    return best


def estimate_divergence(model, w, shards, weights):
    """max over children of ||grad f_child - sum_c alpha_c grad f_c||^2."""
    grads = np.array([model.loss_and_grad(w, s.X, s.y)[1] for s in shards])
    mean = np.asarray(weights, dtype=float) @ grads
    return float(np.max(np.sum((grads - mean) ** 2, axis=1)))
