import numpy as np
import pytest

from phfl import _pykernels as K
from phfl import kernels
from helpers import a_direct, random_rows

compiled = pytest.importorskip("phfl._ckernels")
py = kernels.get_backend("python")


def _decisions(gen, rows):
    n = len(rows)
    return np.column_stack([gen.uniform(0, 0.9, n), rows[:, K.F_MAX] * gen.uniform(0.7, 1, n),
                            rows[:, K.P_MAX] * gen.uniform(0.2, 1, n)])


def test_backend_selection():
    assert kernels.BACKEND_NAME in ("compiled", "python")
    assert kernels.get_backend("python") is K
    with pytest.raises(ValueError):
        kernels.get_backend("fortran")


@pytest.mark.parametrize("name", ["objective_many", "success_probability_many", "time_energy_many",
                                  "initial_tau_many"])
def test_pointwise_parity(name, gen):
    rows = random_rows(gen, 40)
    x = _decisions(gen, rows)
    a = getattr(py, name)(rows, x)
    b = getattr(compiled, name)(rows, x)
    np.testing.assert_allclose(a, b, rtol=1e-12, atol=0)


def test_linearize_parity(gen):
    rows = random_rows(gen, 40)
    x = _decisions(gen, rows)
    sa, la = py.linearize_many(rows, x)
    sb, lb = compiled.linearize_many(rows, x)
    assert np.array_equal(sa, sb)
    np.testing.assert_allclose(la, lb, rtol=1e-10, atol=1e-300)


def test_solver_parity(gen):
    rows = random_rows(gen, 25)
    sa, xa, oa, ia = py.sca_solve_many(rows, 50, 1e-12)
    sb, xb, ob, ib = compiled.sca_solve_many(rows, 50, 1e-12)
    assert np.array_equal(sa, sb)
    np.testing.assert_allclose(oa, ob, rtol=1e-8)
    np.testing.assert_allclose(xa, xb, rtol=1e-6)


def test_step_parity(gen):
    rows = random_rows(gen, 25)
    st, x0 = py.initial_anchor_many(rows)
    tau = py.initial_tau_many(rows, x0)
    a = py.sca_step_many(rows, x0, tau)
    b = compiled.sca_step_many(rows, x0, tau)
    for u, v in zip(a, b):
        np.testing.assert_allclose(u, v, rtol=1e-8)


def test_a_value_matches_closed_form(gen):
    rows = random_rows(gen, 30)
    x = _decisions(gen, rows)
    for p, (d, f, pw) in zip(rows.tolist(), x):
        if K.compute_slack(p, d, f) > 0:
            assert K.a_value(p, d, f, pw) == pytest.approx(a_direct(p, d, f, pw), rel=1e-12)
