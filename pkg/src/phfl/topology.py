"""Four-tier network hierarchy (UE -> VC -> sBS -> mBS -> cloud) and round indexing."""
from dataclasses import dataclass, field

import numpy as np

from .errors import EmptyTier, IndexOutOfRange, WeightSumMismatch

WEIGHT_TOL = 1e-12


def dbm_to_watt(dbm):
    return 10.0 ** ((np.asarray(dbm, dtype=float) - 30.0) / 10.0)


def watt_to_dbm(watt):
    return 10.0 * np.log10(np.asarray(watt, dtype=float)) + 30.0


@dataclass(frozen=True)
class TopologyConfig:
    """Tier sizes as nested lists.

    ``sbs_per_mbs[l]`` is B_l, ``vcs_per_sbs[l][k]`` is V_{k,l} and
    ``ues_per_vc[l][k][j]`` is U_{j,k,l}.  With ``weight_mode="explicit"``
    the ``weights`` dict holds nested lists under keys ``"mbs"``, ``"sbs"``,
    ``"vc"`` and ``"ue"`` with the same nesting as the counts.
    """
    mbs_count: int
    sbs_per_mbs: list
    vcs_per_sbs: list
    ues_per_vc: list
    weight_mode: str = "uniform"
    weights: dict = None

    @classmethod
    def uniform(cls, mbs=2, sbs=2, vcs=2, ues=6):
        """Regular hierarchy with the same fan-out at every node."""
        return cls(mbs, [sbs] * mbs, [[vcs] * sbs for _ in range(mbs)],
                   [[[ues] * vcs for _ in range(sbs)] for _ in range(mbs)])


@dataclass(frozen=True)
class NetworkTopology:
    """Validated hierarchy with flat index maps and per-level weights.

    UEs, VCs, sBSs and mBSs are numbered globally in depth-first order.
    ``ue_weight[i]`` is alpha_i within its VC, ``vc_weight[j]`` is alpha_j
    within its sBS, and so on.
    """
    mbs_count: int
    sbs_per_mbs: tuple
    vcs_per_sbs: tuple
    ues_per_vc: tuple
    ue_vc: np.ndarray
    vc_sbs: np.ndarray
    sbs_mbs: np.ndarray
    ue_weight: np.ndarray
    vc_weight: np.ndarray
    sbs_weight: np.ndarray
    mbs_weight: np.ndarray
    _members: dict = field(default=None, repr=False, compare=False)

    @property
    def n_ue(self):
        return len(self.ue_vc)

    @property
    def n_vc(self):
        return len(self.vc_sbs)

    @property
    def n_sbs(self):
        return len(self.sbs_mbs)

    @property
    def n_mbs(self):
        return self.mbs_count

    @property
    def ue_sbs(self):
        return self.vc_sbs[self.ue_vc]

    def vc_members(self, j):
        return self._members["vc"][j]

    def sbs_members(self, k):
        """VC indices under sBS k."""
        return self._members["sbs"][k]

    def mbs_members(self, l):
        """sBS indices under mBS l."""
        return self._members["mbs"][l]

    def ue_global_weight(self):
        """Product alpha_l alpha_k alpha_j alpha_i for every UE; sums to one."""
        j = self.ue_vc
        k = self.vc_sbs[j]
        l = self.sbs_mbs[k]
        return self.ue_weight * self.vc_weight[j] * self.sbs_weight[k] * self.mbs_weight[l]

    def ue_weight_product(self, e_ue, e_vc, e_sbs, e_mbs):
        """Per-UE product alpha_i^e_ue alpha_j^e_vc alpha_k^e_sbs alpha_l^e_mbs."""
        j = self.ue_vc
        k = self.vc_sbs[j]
        l = self.sbs_mbs[k]
        return (self.ue_weight ** e_ue * self.vc_weight[j] ** e_vc
                * self.sbs_weight[k] ** e_sbs * self.mbs_weight[l] ** e_mbs)


def _check_sum(values, where):
    s = float(np.sum(values))
    if abs(s - 1.0) > WEIGHT_TOL * max(1, len(values)):
        raise WeightSumMismatch(f"{where} weights sum to {s!r}, expected 1")
    if np.any(np.asarray(values) < 0):
        raise WeightSumMismatch(f"{where} weights must be nonnegative")


def build_topology(config):
    """Validate tier sizes and compute flat maps and aggregation weights."""
    L = int(config.mbs_count)
    if L <= 0:
        raise EmptyTier("mbs_count must be positive")
    if len(config.sbs_per_mbs) != L or len(config.vcs_per_sbs) != L or len(config.ues_per_vc) != L:
        raise EmptyTier("tier lists must have one entry per mBS")
    explicit = config.weight_mode == "explicit"
    if config.weight_mode not in ("uniform", "explicit"):
        raise ValueError(f"unknown weight mode {config.weight_mode!r}")
    w = config.weights or {}
    if explicit:
        missing = [key for key in ("mbs", "sbs", "vc", "ue") if key not in w]
        if missing:
            raise WeightSumMismatch(f"explicit weights missing levels {missing}")

    ue_vc, vc_sbs, sbs_mbs = [], [], []
    ue_w, vc_w, sbs_w = [], [], []
    members = {"vc": [], "sbs": [], "mbs": []}
    for l in range(L):
        B = int(config.sbs_per_mbs[l])
        if B <= 0:
            raise EmptyTier(f"mBS {l} has no sBS")
        if len(config.vcs_per_sbs[l]) != B or len(config.ues_per_vc[l]) != B:
            raise EmptyTier(f"mBS {l}: per-sBS lists must have length {B}")
        kw = np.asarray(w["sbs"][l], float) if explicit else np.full(B, 1.0 / B)
        if len(kw) != B:
            raise WeightSumMismatch(f"mBS {l}: expected {B} sBS weights")
        _check_sum(kw, f"mBS {l} sBS")
        mbs_children = []
        for k in range(B):
            V = int(config.vcs_per_sbs[l][k])
            if V <= 0:
                raise EmptyTier(f"sBS ({l},{k}) has no VC")
            if len(config.ues_per_vc[l][k]) != V:
                raise EmptyTier(f"sBS ({l},{k}): expected {V} VC sizes")
            jw = np.asarray(w["vc"][l][k], float) if explicit else np.full(V, 1.0 / V)
            if len(jw) != V:
                raise WeightSumMismatch(f"sBS ({l},{k}): expected {V} VC weights")
            _check_sum(jw, f"sBS ({l},{k}) VC")
            k_global = len(sbs_mbs)
            sbs_mbs.append(l)
            sbs_w.append(kw[k])
            mbs_children.append(k_global)
            sbs_children = []
            for j in range(V):
                U = int(config.ues_per_vc[l][k][j])
                if U <= 0:
                    raise EmptyTier(f"VC ({l},{k},{j}) has no UE")
                iw = np.asarray(w["ue"][l][k][j], float) if explicit else np.full(U, 1.0 / U)
                if len(iw) != U:
                    raise WeightSumMismatch(f"VC ({l},{k},{j}): expected {U} UE weights")
                _check_sum(iw, f"VC ({l},{k},{j}) UE")
                j_global = len(vc_sbs)
                vc_sbs.append(k_global)
                vc_w.append(jw[j])
                sbs_children.append(j_global)
                first = len(ue_vc)
                ue_vc.extend([j_global] * U)
                ue_w.extend(iw)
                members["vc"].append(np.arange(first, first + U))
            members["sbs"].append(np.array(sbs_children))
        members["mbs"].append(np.array(mbs_children))
    lw = np.asarray(w["mbs"], float) if explicit else np.full(L, 1.0 / L)
    if len(lw) != L:
        raise WeightSumMismatch(f"expected {L} mBS weights")
    _check_sum(lw, "mBS")

    return NetworkTopology(
        mbs_count=L,
        sbs_per_mbs=tuple(int(b) for b in config.sbs_per_mbs),
        vcs_per_sbs=tuple(tuple(int(v) for v in row) for row in config.vcs_per_sbs),
        ues_per_vc=tuple(tuple(tuple(int(u) for u in vs) for vs in row) for row in config.ues_per_vc),
        ue_vc=np.array(ue_vc, dtype=np.int64),
        vc_sbs=np.array(vc_sbs, dtype=np.int64),
        sbs_mbs=np.array(sbs_mbs, dtype=np.int64),
        ue_weight=np.array(ue_w, dtype=float),
        vc_weight=np.array(vc_w, dtype=float),
        sbs_weight=np.array(sbs_w, dtype=float),
        mbs_weight=lw,
        _members=members,
    )


def merge_vcs(topology):
    """Topology with every sBS's VCs merged into a single VC (three-tier HFL).

    UE order is unchanged; UE weights are uniform within the merged VC.
    """
    ues = []
    for l in range(topology.mbs_count):
        row = []
        start = int(np.sum(topology.sbs_per_mbs[:l]))
        for k in range(topology.sbs_per_mbs[l]):
            kk = start + k
            row.append([int(sum(len(topology.vc_members(j)) for j in topology.sbs_members(kk)))])
        ues.append(row)
    cfg = TopologyConfig(
        mbs_count=topology.mbs_count,
        sbs_per_mbs=list(topology.sbs_per_mbs),
        vcs_per_sbs=[[1] * b for b in topology.sbs_per_mbs],
        ues_per_vc=ues,
        weight_mode="explicit",
        weights={
            "mbs": list(topology.mbs_weight),
            "sbs": [list(topology.sbs_weight[topology.mbs_members(l)]) for l in range(topology.mbs_count)],
            "vc": [[[1.0]] * b for b in topology.sbs_per_mbs],
            "ue": [[[[1.0 / n] * n] for n in (r[0] for r in row)] for row in ues],
        },
    )
    return build_topology(cfg)


@dataclass(frozen=True)
class RoundSchedule:
    """Round counts kappa0 (local), kappa1 (VC), kappa2 (sBS), kappa3 (mBS).

    ``rho`` is the number of dense warm-up steps for the lottery ticket and
    ``global_rounds`` is M.
    """
    kappa0: int = 5
    kappa1: int = 2
    kappa2: int = 2
    kappa3: int = 2
    rho: int = 1
    global_rounds: int = 100

    def __post_init__(self):
        for name in ("kappa0", "kappa1", "kappa2", "kappa3", "global_rounds"):
            if int(getattr(self, name)) < 1:
                raise ValueError(f"{name} must be >= 1")
        if int(self.rho) < 0:
            raise ValueError("rho must be >= 0")

    @property
    def vc_rounds_per_global(self):
        return self.kappa1 * self.kappa2 * self.kappa3

    @property
    def total_vc_rounds(self):
        return self.global_rounds * self.vc_rounds_per_global

    @property
    def total_iterations(self):
        return self.total_vc_rounds * self.kappa0


def flatten_index(m, t3, t2, t1, t0, schedule):
    """t = [{(m k3 + t3) k2 + t2} k1 + t1] k0 + t0.

    ``t0 = kappa0`` is accepted and denotes the aggregation instant that
    closes the VC round (it coincides with the next round's ``t0 = 0``).
    """
    s = schedule
    checks = ((m, s.global_rounds, "m"), (t3, s.kappa3, "t3"), (t2, s.kappa2, "t2"),
              (t1, s.kappa1, "t1"))
    for value, bound, name in checks:
        if not 0 <= value < bound:
            raise IndexOutOfRange(f"{name}={value} outside [0, {bound})")
    if not 0 <= t0 <= s.kappa0:
        raise IndexOutOfRange(f"t0={t0} outside [0, {s.kappa0}]")
    return (((m * s.kappa3 + t3) * s.kappa2 + t2) * s.kappa1 + t1) * s.kappa0 + t0


def unflatten_index(t, schedule):
    """Inverse of :func:`flatten_index` with ``0 <= t0 < kappa0``."""
    s = schedule
    if not 0 <= t < s.total_iterations:
        raise IndexOutOfRange(f"t={t} outside [0, {s.total_iterations})")
    t, t0 = divmod(t, s.kappa0)
    t, t1 = divmod(t, s.kappa1)
    t, t2 = divmod(t, s.kappa2)
    m, t3 = divmod(t, s.kappa3)
    return m, t3, t2, t1, t0


@dataclass(frozen=True)
class ClientProfile:
    """Per-UE capabilities in SI units."""
    f_max: float
    p_max: float
    e_th: float
    cycles_per_bit: float
    bits_per_sample: float
    distance: float
    batch_size: int = 32
    batch_count: int = 10

    def __post_init__(self):
        for name in ("f_max", "p_max", "e_th", "cycles_per_bit", "bits_per_sample", "distance"):
            if not float(getattr(self, name)) > 0.0:
                raise ValueError(f"{name} must be positive")
        if int(self.batch_size) < 1 or int(self.batch_count) < 1:
            raise ValueError("batch_size and batch_count must be positive")

    @property
    def cycles_per_step(self):
        """K = b n c D: CPU cycles for one local iteration."""
        return self.batch_size * self.batch_count * self.cycles_per_bit * self.bits_per_sample
