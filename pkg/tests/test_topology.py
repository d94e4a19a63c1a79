import numpy as np
import pytest
from hypothesis import given, strategies as st

from phfl.errors import EmptyTier, IndexOutOfRange, WeightSumMismatch
from phfl.topology import (ClientProfile, RoundSchedule, TopologyConfig, build_topology,
                           dbm_to_watt, flatten_index, merge_vcs, unflatten_index, watt_to_dbm)


def test_default_desk_hierarchy_has_48_ues():
    topo = build_topology(TopologyConfig.uniform(2, 2, 2, 6))
    assert topo.n_ue == 48
    assert topo.n_vc == 8 and topo.n_sbs == 4 and topo.n_mbs == 2


def test_single_node_weights_are_one():
    topo = build_topology(TopologyConfig(1, [1], [[1]], [[[1]]]))
    for w in (topo.ue_weight, topo.vc_weight, topo.sbs_weight, topo.mbs_weight):
        assert np.array_equal(w, [1.0])


def test_explicit_weights_must_sum_to_one():
    cfg = TopologyConfig(1, [2], [[1, 1]], [[[1], [1]]], weight_mode="explicit",
                         weights={"mbs": [1.0], "sbs": [[0.3, 0.8]], "vc": [[[1.0], [1.0]]],
                                  "ue": [[[[1.0]], [[1.0]]]]})
    with pytest.raises(WeightSumMismatch):
        build_topology(cfg)


def test_empty_tier_rejected():
    with pytest.raises(EmptyTier):
        build_topology(TopologyConfig(1, [1], [[1]], [[[0]]]))
    with pytest.raises(EmptyTier):
        build_topology(TopologyConfig(0, [], [], []))


nested = st.integers(1, 3).flatmap(
    lambda L: st.tuples(
        st.just(L),
        st.lists(st.lists(st.lists(st.integers(1, 4), min_size=1, max_size=3),
                          min_size=1, max_size=3), min_size=L, max_size=L)))


@given(nested)
def test_uniform_weights_and_counts(tree):
    L, ues = tree
    cfg = TopologyConfig(L, [len(row) for row in ues], [[len(v) for v in row] for row in ues], ues)
    topo = build_topology(cfg)
    assert topo.n_ue == sum(u for row in ues for v in row for u in v)
    for j in range(topo.n_vc):
        assert abs(topo.ue_weight[topo.vc_members(j)].sum() - 1) <= 1e-12
    for k in range(topo.n_sbs):
        assert abs(topo.vc_weight[topo.sbs_members(k)].sum() - 1) <= 1e-12
    for l in range(L):
        assert abs(topo.sbs_weight[topo.mbs_members(l)].sum() - 1) <= 1e-12
    assert abs(topo.mbs_weight.sum() - 1) <= 1e-12
    assert abs(topo.ue_global_weight().sum() - 1) <= 1e-12


@given(st.integers(1, 3), st.integers(1, 3), st.integers(1, 3), st.integers(1, 6))
def test_squared_weight_product_is_inverse_ue_count_for_regular_trees(L, B, V, U):
    topo = build_topology(TopologyConfig.uniform(L, B, V, U))
    total = topo.ue_weight_product(2, 2, 2, 2).sum()
    assert abs(total - 1.0 / topo.n_ue) <= 1e-12


def test_merge_vcs_collapses_each_sbs():
    topo = build_topology(TopologyConfig.uniform(2, 2, 2, 3))
    merged = merge_vcs(topo)
    assert merged.n_vc == topo.n_sbs
    assert merged.n_ue == topo.n_ue
    assert np.array_equal(merged.ue_sbs, topo.ue_sbs)
    assert np.allclose(merged.ue_weight, 1.0 / 6)


def test_flatten_examples():
    s = RoundSchedule(5, 2, 2, 2)
    assert flatten_index(0, 0, 0, 0, 1, s) == 1
    assert flatten_index(1, 0, 0, 0, 0, s) == 40


def test_flatten_range_checks():
    s = RoundSchedule(5, 2, 2, 2, global_rounds=3)
    with pytest.raises(IndexOutOfRange):
        flatten_index(3, 0, 0, 0, 0, s)
    with pytest.raises(IndexOutOfRange):
        flatten_index(0, 2, 0, 0, 0, s)
    with pytest.raises(IndexOutOfRange):
        unflatten_index(s.total_iterations, s)


schedules = st.builds(RoundSchedule, st.integers(1, 6), st.integers(1, 4), st.integers(1, 4),
                      st.integers(1, 4), st.just(1), st.integers(1, 5))


@given(schedules, st.data())
def test_flatten_unflatten_roundtrip(s, data):
    t = data.draw(st.integers(0, s.total_iterations - 1))
    assert flatten_index(*unflatten_index(t, s), s) == t


def test_flatten_is_bijection_on_small_schedule():
    s = RoundSchedule(3, 2, 2, 2, global_rounds=2)
    seen = {flatten_index(m, a, b, c, d, s) for m in range(2) for a in range(2) for b in range(2)
            for c in range(2) for d in range(3)}
    assert seen == set(range(s.total_iterations))


def test_dbm_roundtrip():
    assert dbm_to_watt(30.0) == pytest.approx(1.0)
    assert dbm_to_watt(23.0) == pytest.approx(0.19952623)
    assert watt_to_dbm(dbm_to_watt(27.5)) == pytest.approx(27.5)


def test_client_profile_cycles_per_step():
    prof = ClientProfile(f_max=2e9, p_max=0.2, e_th=0.05, cycles_per_bit=20,
                         bits_per_sample=24576, distance=100.0)
    assert prof.cycles_per_step == 32 * 10 * 20 * 24576
    with pytest.raises(ValueError):
        ClientProfile(f_max=0, p_max=0.2, e_th=0.05, cycles_per_bit=20, bits_per_sample=1,
                      distance=1)
