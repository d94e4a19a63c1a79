"""Backend selection for the per-client kernels.

The compiled extension is used when it imports; otherwise (or when the
environment variable ``PHFL_PURE_PYTHON=1`` is set) the pure-Python
implementation is used.  Both expose the same batched functions.
"""
import os

from . import _pykernels as _py
from ._pykernels import (  # noqa: F401  (layout constants re-exported)
    CYCLES, D_MODEL, DELTA_TH, E_TH, F_MAX, FPP, GAIN, HALF_XI, INTERF, KAPPA0, NOISE,
    NPARAM, OMEGA, P_MAX, PATHGAIN, PHI1, PHI2, RHO, STATUS_INFEASIBLE, STATUS_OK,
    STATUS_SINGULAR, T_TH, WEIGHT,
)

_API = ("objective_many", "success_probability_many", "time_energy_many", "linearize_many",
        "initial_anchor_many", "initial_tau_many", "sca_step_many", "sca_solve_many")


def _load_compiled():
    if os.environ.get("PHFL_PURE_PYTHON") == "1":
        return None
    try:
        from . import _ckernels
    except ImportError:
        return None
    return _ckernels


_compiled = _load_compiled()
backend = _compiled if _compiled is not None else _py
BACKEND_NAME = "compiled" if _compiled is not None else "python"

objective_many = backend.objective_many
success_probability_many = backend.success_probability_many
time_energy_many = backend.time_energy_many
linearize_many = backend.linearize_many
initial_anchor_many = backend.initial_anchor_many
initial_tau_many = backend.initial_tau_many
sca_step_many = backend.sca_step_many
sca_solve_many = backend.sca_solve_many


def get_backend(name):
    """Return the kernel module for ``"python"`` or ``"compiled"``."""
    if name == "python":
        return _py
    if name == "compiled":
        if _compiled is None:
            from . import _ckernels
            return _ckernels
        return _compiled
    raise ValueError(f"unknown backend {name!r}")
