import pytest
from hypothesis import given, strategies as st

from phfl.channel import ChannelParams, success_probability
from phfl.cost import (EnergyParams, compute_times, cost_breakdown, energies, offload_time,
                       payload_bits)
from phfl.errors import ZeroRate

K = 32 * 10 * 20 * 24576  # b n c D


def test_payload_examples():
    assert payload_bits(0.0, 151882, 32) == 5163988
    assert payload_bits(1.0, 777, 32) == 777
    assert payload_bits(0.5, 100, 32) == 1750


def test_compute_time_examples():
    t_d, t_s = compute_times(K, 0.0, 2e9, 1, 5)
    assert t_d == pytest.approx(0.0786432)
    assert t_s == pytest.approx(5 * t_d)
    assert compute_times(K, 1.0, 2e9, 1, 5)[1] == 0


def test_energy_examples():
    e_d, e_s, e_up = energies(K, 0.0, 2e9, 0.0, 1e6, 1, 5, 1e-28, 1000, 32)
    # 0.5 xi K f^2 with xi = 2e-28
    assert e_d == pytest.approx(1e-28 * K * 4e18)
    assert e_s == pytest.approx(5 * e_d)
    assert e_up == 0


def test_zero_rate_surfaces():
    with pytest.raises(ZeroRate):
        offload_time(100.0, 0.0)
    assert offload_time(0.0, 0.0) == 0.0


def test_breakdown_totals():
    cb = cost_breakdown(K, 0.3, 2e9, 0.2, 2e6, 1, 5, EnergyParams(), 5514)
    assert cb.t_tot == pytest.approx(cb.t_cp_d + cb.t_cp_s + cb.t_up)
    assert cb.e_tot == pytest.approx(cb.e_cp_d + cb.e_cp_s + cb.e_up)
    assert cb.t_up == pytest.approx(payload_bits(0.3, 5514, 32) / 2e6)


deltas = st.floats(0, 1)
freqs = st.floats(1e8, 3e9)


@given(deltas, deltas, freqs, st.floats(0.01, 1), st.floats(1e4, 1e8))
def test_monotone_in_delta(d1, d2, f, P, r):
    lo, hi = sorted((d1, d2))
    a = cost_breakdown(K, lo, f, P, r, 1, 5, EnergyParams(), 5514)
    b = cost_breakdown(K, hi, f, P, r, 1, 5, EnergyParams(), 5514)
    for name in ("t_cp_s", "e_cp_s", "payload_bits", "t_up", "e_up"):
        assert getattr(b, name) <= getattr(a, name) * (1 + 1e-12)


@given(deltas, freqs, freqs)
def test_monotone_in_frequency(d, f1, f2):
    lo, hi = sorted((f1, f2))
    ta = compute_times(K, d, lo, 1, 5)
    tb = compute_times(K, d, hi, 1, 5)
    assert tb[0] <= ta[0] and tb[1] <= ta[1]
    ea = energies(K, d, lo, 0.1, 1e6, 1, 5, 1e-28, 100, 32)
    eb = energies(K, d, hi, 0.1, 1e6, 1, 5, 1e-28, 100, 32)
    assert eb[0] >= ea[0] and eb[1] >= ea[1]


@given(st.floats(0, 0.95), st.floats(1e8, 3e9), st.floats(0.005, 0.2))
def test_positive_probability_iff_compute_fits(d, f, t_th):
    p = success_probability(d, f, 1.0, cycles=K / 100, distance=10.0, params=ChannelParams(),
                            interf=0.0, t_th=t_th, rho=1, kappa0=5, d_model=10, fpp=32)
    t_d, t_s = compute_times(K / 100, d, f, 1, 5)
    assert (p > 0) == (t_d + t_s < t_th)
