import numpy as np
import pytest
from hypothesis import given, strategies as st

from phfl import rng
from phfl.channel import (THERMAL_NOISE_PSD, ChannelParams, draw_fading, draw_geometry,
                          interference, interference_matrix, rate, sinr, success_probability)
from phfl.cost import compute_times, offload_time, payload_bits
from phfl.errors import DeadlineExhaustedByCompute
from phfl.topology import TopologyConfig, build_topology

PARAMS = ChannelParams()


def _prob(delta, f, power, interf=0.0, t_th=0.05, distance=100.0, cycles=32 * 10 * 22 * 1024,
          d_model=5514, rho=1, kappa0=5, strict=False):
    return success_probability(delta, f, power, cycles=cycles, distance=distance, params=PARAMS,
                               interf=interf, t_th=t_th, rho=rho, kappa0=kappa0,
                               d_model=d_model, fpp=32, strict=strict)


def test_exponential_gain_statistics():
    h = rng.stream(0, rng.FADING, 0, 0).exponential(size=10 ** 6)
    assert abs(h.mean() - 1) <= 0.005
    assert abs(np.mean(h >= np.log(2)) - 0.5) <= 0.002


def test_fading_is_deterministic_per_round():
    topo = build_topology(TopologyConfig.uniform(2, 2, 2, 3))
    a = draw_fading(topo, PARAMS, 7)
    b = draw_fading(topo, PARAMS, 7)
    c = draw_fading(topo, PARAMS, 8)
    assert np.array_equal(a.gains, b.gains) and np.array_equal(a.cross_gains, b.cross_gains)
    assert not np.array_equal(a.gains, c.gains)


def test_geometry_within_ranges():
    topo = build_topology(TopologyConfig.uniform(2, 2, 2, 3))
    g = draw_geometry(topo, PARAMS)
    assert np.all((g.own >= 10) & (g.own <= 250))
    assert np.array_equal(g.cross[np.arange(topo.n_ue), topo.ue_sbs], g.own)


def test_single_cell_has_no_interference():
    topo = build_topology(TopologyConfig.uniform(1, 1, 2, 3))
    draw = draw_fading(topo, PARAMS, 0)
    geo = draw_geometry(topo, PARAMS)
    assert np.all(interference(np.ones(topo.n_ue), topo, draw, geo, PARAMS) == 0)


def test_two_cell_interference_value_and_linearity():
    ue_sbs = np.array([0, 1])
    cross_gains = np.ones((2, 2))
    cross_d = np.full((2, 2), 100.0)
    I = interference_matrix(np.array([0.0, 1.0]), cross_gains, cross_d, 2.0, ue_sbs)
    assert I[0] == pytest.approx(1e-4, rel=1e-12)
    assert I[1] == 0.0
    I2 = interference_matrix(np.array([0.0, 2.0]), cross_gains, cross_d, 2.0, ue_sbs)
    assert I2[0] == pytest.approx(2 * I[0], rel=1e-12)


def test_single_client_interference_matches_matrix():
    topo = build_topology(TopologyConfig.uniform(2, 2, 1, 3))
    draw = draw_fading(topo, PARAMS, 1)
    geo = draw_geometry(topo, PARAMS)
    P = np.linspace(0.1, 1.0, topo.n_ue)
    full = interference(P, topo, draw, geo, PARAMS)
    for i in range(topo.n_ue):
        assert interference(P, topo, draw, geo, PARAMS, client=i) == pytest.approx(full[i])


def test_rate_examples():
    assert rate(1.0, 1e6) == pytest.approx(1e6)
    assert rate(3.0, 1e6) == pytest.approx(2e6)
    g = sinr(0.0, 1.0, 100.0, 3.0, 1e6, THERMAL_NOISE_PSD, 0.0)
    assert g == 0 and rate(g, 1e6) == 0


@given(st.floats(0.01, 2), st.floats(0.01, 5), st.floats(10, 250), st.floats(0, 1e-9),
       st.floats(1e-3, 1e3))
def test_sinr_scale_consistency(P, h, d, I, c):
    a = sinr(P, h, d, 3.0, 1e6, THERMAL_NOISE_PSD, I)
    b = sinr(c * P, h, d, 3.0, 1e6, c * THERMAL_NOISE_PSD, c * I)
    assert b == pytest.approx(a, rel=1e-10)


def test_probability_limits():
    assert _prob(0.0, 2e9, 0.5, d_model=1e-9) == pytest.approx(1.0, abs=1e-9)
    assert _prob(0.3, 2e9, 0.5, interf=1e3) == pytest.approx(0.0, abs=1e-300)


def test_compute_exhausting_deadline():
    assert _prob(0.0, 1e8, 0.5) == 0.0
    with pytest.raises(DeadlineExhaustedByCompute):
        _prob(0.0, 1e8, 0.5, strict=True)


def _monte_carlo(delta, f, power, interf, t_th, distance, n, seed):
    h = np.random.default_rng(seed).exponential(size=n)
    cycles = 32 * 10 * 22 * 1024
    t_d, t_s = compute_times(cycles, delta, f, 1, 5)
    r = rate(sinr(power, h, distance, PARAMS.pathloss_exp, PARAMS.omega, PARAMS.noise_psd,
                  interf), PARAMS.omega)
    t = t_d + t_s + offload_time(payload_bits(delta, 5514, 32), r)
    return np.mean(t <= t_th)


@pytest.mark.parametrize("case", [(0.0, 2.5e9, 0.8, 0.0, 0.05, 200.0),
                                  (0.4, 2.0e9, 0.3, 2e-12, 0.04, 240.0),
                                  (0.8, 1.9e9, 0.2, 1e-11, 0.03, 250.0)])
def test_probability_matches_monte_carlo(case):
    delta, f, P, I, t_th, d = case
    p = float(_prob(delta, f, P, interf=I, t_th=t_th, distance=d))
    n = 200000
    mc = _monte_carlo(delta, f, P, I, t_th, d, n, 0)
    se = np.sqrt(max(p * (1 - p), 1e-12) / n)
    assert 0 < p < 1
    assert abs(mc - p) <= 3 * se + 1e-12


@given(st.floats(0, 0.9), st.floats(1.8e9, 2.8e9), st.floats(0.05, 1.0), st.floats(0, 1e-11),
       st.floats(0.02, 0.06), st.floats(0.001, 0.1))
def test_probability_monotone(delta, f, P, I, t_th, step):
    base = _prob(delta, f, P, interf=I, t_th=t_th, distance=250.0)
    assert _prob(delta, f, P * (1 + step), interf=I, t_th=t_th, distance=250.0) >= base
    assert _prob(delta, f, P, interf=I, t_th=t_th * (1 + step), distance=250.0) >= base
    assert _prob(delta, f * (1 + step), P, interf=I, t_th=t_th, distance=250.0) >= base
    assert _prob(min(delta + step, 1.0), f, P, interf=I, t_th=t_th, distance=250.0) >= base
