"""SINR computation, rate lookup, and the padded (virtual) interference model."""
import numpy as np
import pytest

from gibbsched.phy import build_link_system, rate_for_sinr, scheme_for_sinr
from gibbsched.topology import (
    default_modulation_table,
    explicit_topology,
    random_topology,
    ring_topology,
)


def test_rate_lookup_boundaries_inclusive():
    table = default_modulation_table()
    thr = table.min_sinr
    np.testing.assert_array_equal(rate_for_sinr(thr, table), table.rates)
    just_below = thr * (1 - 1e-12)
    np.testing.assert_array_equal(
        rate_for_sinr(just_below, table),
        np.concatenate([[0.0], table.rates[:-1]]),
    )
    assert rate_for_sinr(0.0, table) == 0.0
    assert rate_for_sinr(1e9, table) == 4.5
    assert scheme_for_sinr(0.0, table) == -1
    assert scheme_for_sinr(thr[0], table) == 0


def test_rate_lookup_vector_shape():
    table = default_modulation_table()
    out = rate_for_sinr(np.zeros((3, 5)), table)
    assert out.shape == (3, 5)


# --- ring physics, frozen by hand against the geometry ----------------------

def ring_rates(active, power=100.0):
    ls = build_link_system(ring_topology(9))
    p = np.zeros(9)
    p[list(active)] = power
    return ls.actual_sinr(p), ls.actual_rates(p)


def test_ring_lone_link_reaches_top_rate():
    sinr, rates = ring_rates({0})
    assert 10 * np.log10(sinr[0]) == pytest.approx(28.0, abs=1e-9)
    assert rates[0] == 4.5
    assert np.all(rates[1:] == 0.0)


def test_ring_three_evenly_spaced_links_each_get_rate_1():
    sinr, rates = ring_rates({0, 3, 6})
    for k in (0, 3, 6):
        assert 10 * np.log10(sinr[k]) == pytest.approx(10.863448, abs=1e-5)
        assert rates[k] == 1.0


def test_ring_pair_with_gap_4():
    sinr, rates = ring_rates({0, 4})
    assert 10 * np.log10(sinr[0]) == pytest.approx(15.805251, abs=1e-5)
    assert 10 * np.log10(sinr[4]) == pytest.approx(17.328878, abs=1e-5)
    assert rates[0] == 1.5 and rates[4] == 2.0


def test_ring_crowded_quad_mostly_dies():
    # Four links with two-hop spacing overwhelm each other; only the one with
    # a three-hop gap behind it survives, at the lowest scheme.
    _, rates = ring_rates({0, 2, 4, 6})
    np.testing.assert_array_equal(rates[[0, 2, 4]], 0.0)
    assert rates[6] == 1.0


def test_ring_adjacent_pair_is_one_sided():
    # Receiver 0 sits right next to transmitter 1, so link 0 is jammed while
    # link 1 still clears the lowest scheme.
    sinr, rates = ring_rates({0, 1})
    assert rates[0] == 0.0 and rates[1] == 1.0
    assert 10 * np.log10(sinr[1]) == pytest.approx(10.23016, abs=1e-5)


def test_ring_virtual_equals_actual_when_everyone_is_a_neighbor():
    ls = build_link_system(ring_topology(9))
    rng = np.random.default_rng(42)
    for _ in range(5):
        p = rng.uniform(0.0, 100.0, size=9)
        np.testing.assert_array_equal(ls.virtual_margin(p), ls.noise_rx + ls.m_full @ p)
        np.testing.assert_array_equal(ls.virtual_rates(p), ls.actual_rates(p))


# --- four-flow example -------------------------------------------------------

def test_four_flow_virtual_margins(four_flow, pair_table):
    ls = build_link_system(four_flow, pair_table)
    # Receiver d hears neighbors a and e (gain 0.25 each) on top of unit
    # noise; receivers b and f each hear only c.
    p = np.array([40.0, 8.0, 40.0, 0.0])
    margins = ls.virtual_margin(p)
    np.testing.assert_allclose(margins, [1 + 0.25 * 8, 1 + 0.25 * 40 + 0.25 * 40,
                                         1 + 0.25 * 8, 1.0])
    # Link cd at 8 units into a margin of 21 cannot even run the low scheme.
    assert ls.virtual_rates(p)[1] == 0.0
    # Alone, 4 units buys the low scheme and 8 the high one (unit own-gain).
    alone = np.array([0.0, 4.0, 0.0, 0.0])
    assert ls.virtual_rates(alone)[1] == 1.0
    alone[1] = 8.0
    assert ls.virtual_rates(alone)[1] == 2.0
    alone[1] = 3.9
    assert ls.virtual_rates(alone)[1] == 0.0


def test_out_of_neighborhood_interference_worst_cased():
    # c leaks onto b but is outside b's neighborhood: the virtual margin
    # charges c at full power no matter what it transmits, so the virtual
    # rate never exceeds the actual one.
    topo = explicit_topology(
        node_ids=["a", "b", "c", "d"],
        link_pairs=[("a", "b"), ("c", "d")],
        gain_entries={("a", "b"): 1.0, ("c", "d"): 1.0, ("c", "b"): 0.001,
                      ("a", "d"): 0.5},
        noise=1.0,
        pmax=10.0,
        one_hop_pairs=[("a", "b"), ("c", "d"), ("a", "d")],
    )
    from gibbsched.topology import pair_modulation_table
    ls = build_link_system(topo, pair_modulation_table())
    for p_cd in (0.0, 5.0, 10.0):
        p = np.array([10.0, p_cd])
        assert ls.virtual_margin(p)[0] == pytest.approx(1.01)
        actual_denom = 1.0 + 0.001 * p_cd
        assert ls.actual_sinr(p)[0] == pytest.approx(10.0 / actual_denom)
        assert ls.actual_sinr(p)[0] >= ls.virtual_sinr(p)[0]


def test_virtual_rates_never_exceed_actual_on_random_networks():
    table = default_modulation_table()
    for seed in (1, 5, 9):
        topo = random_topology(25, area_side=500.0, seed=seed)
        ls = build_link_system(topo, table)
        rng = np.random.default_rng(seed + 100)
        for _ in range(10):
            p = rng.uniform(0.0, 100.0, size=25) * rng.integers(0, 2, size=25)
            assert np.all(ls.actual_rates(p) >= ls.virtual_rates(p))
            assert np.all(ls.actual_sinr(p) >= ls.virtual_sinr(p) - 1e-15)


def test_link_system_rejects_unreachable_receiver():
    topo = explicit_topology(
        node_ids=["a", "b"],
        link_pairs=[("a", "b")],
        gain_entries={},
        noise=1.0,
        pmax=10.0,
        one_hop_pairs=[("a", "b")],
    )
    from gibbsched.topology import pair_modulation_table
    with pytest.raises(ValueError, match="no usable path"):
        build_link_system(topo, pair_modulation_table())
