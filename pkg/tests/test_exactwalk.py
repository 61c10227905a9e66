import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from returnlab.exactwalk import (
    THEOREM2_CONSTANT,
    KilledOperator,
    count_avoiding_walks,
    enumerate_return_times,
    even_monotonicity_check,
    green_function,
    hankel_psd_check,
    hitting_profiles,
    hitting_time_distribution,
    moment_sequence,
    return_time_distribution,
    reversibility_identity_exact,
    check_reversibility_identity,
    theorem1_margin,
    theorem2_hazard_profile,
)
from returnlab.graphcore import (
    GraphError,
    add_loops,
    build_complete,
    build_cycle,
    build_halfline,
    build_path,
    build_segment,
    build_star_halfline,
)

from .conftest import connected_graphs, random_connected_graph

F = Fraction


def z_paths(t):
    """P(first return to 0 at time t) for SRW on Z by listing all 2^t sign sequences."""
    count = 0
    for bits in range(2 ** t):
        x = 0
        for k in range(t):
            x += 1 if (bits >> k) & 1 else -1
            if x == 0:
                break
        if x == 0 and k == t - 1:
            count += 1
    return F(count, 2 ** t)


class TestReturnTable:
    def test_z_values(self):
        g = build_segment(10)
        tab = return_time_distribution(g, 10, 8, exact=False)
        assert tab.p[2] == 0.5 and tab.p[4] == 0.125 and tab.p[6] == 0.0625
        assert all(tab.p[t] == 0 for t in (1, 3, 5, 7))
        for t in (2, 4, 6, 8):
            assert F(tab.p[t]) == z_paths(t)

    def test_halfline(self):
        tab = return_time_distribution(build_halfline(20), 0, 6)
        assert tab.p[2] == 0.5 and tab.p[4] == 0.125

    @pytest.mark.parametrize("d", [2, 3, 5, 10])
    def test_star(self, d):
        tab = return_time_distribution(build_star_halfline(5, d - 1), 0, 4)
        assert tab.p[2] == pytest.approx((2 * d - 1) / (2 * d), abs=1e-15)

    def test_k4(self):
        tab = return_time_distribution(build_complete(4), 2, 5, exact=True)
        assert tab.p[1] == 0 and tab.p[2] == F(1, 3)

    def test_table_invariants(self):
        tab = return_time_distribution(build_Gt_small(), 0, 200)
        assert tab.s[1] == 1
        assert np.allclose(tab.s[2:], tab.s[1:-1] - tab.p[1:-1], atol=1e-15)
        assert np.all((tab.p >= 0) & (tab.p <= 1)) and np.all((tab.s >= 0) & (tab.s <= 1))
        assert tab.p.sum() <= 1 + 1e-12

    def test_exactness_flag(self):
        assert return_time_distribution(build_segment(10), 10, 10).exact
        tab = return_time_distribution(build_segment(10), 10, 11)
        assert not tab.exact and tab.notes
        with pytest.raises(GraphError) as err:
            return_time_distribution(build_segment(10), 10, 11, strict=True)
        assert err.value.check == "truncation"
        # finite graphs without a declared boundary are exact at any horizon
        assert return_time_distribution(build_cycle(5), 0, 50).exact

    def test_csv(self):
        text = return_time_distribution(build_halfline(10), 0, 3).to_csv()
        assert text.splitlines() == ["t,p,s,hazard", "1,0,1,0", "2,0.5,1,0.5", "3,0,0.5,0"]

    def test_tiny_hazard_undefined(self):
        tab = return_time_distribution(build_complete(2), 0, 4)
        # K2 returns at t=2 surely; s[3] = 0 so the hazard there is undefined
        assert tab.p[2] == 1 and math.isnan(tab.hazard[3])

    def test_rational_limit(self):
        with pytest.raises(GraphError):
            return_time_distribution(build_path(20), 0, 5, exact=True)


def build_Gt_small():
    from returnlab.graphcore import build_Gt
    return build_Gt(200, 0.5, 3, seed=3)


class TestOracle:
    @given(connected_graphs(max_n=6, loops=True), st.data())
    def test_rational_equals_enumeration(self, g, data):
        v = data.draw(st.integers(0, g.n_vertices - 1))
        T = 1
        while T < 10 and count_avoiding_walks(g, v, T + 1) <= 20000:
            T += 1
        exact = return_time_distribution(g, v, T, exact=True)
        enum = enumerate_return_times(g, v, T)
        assert list(exact.p[1:]) == enum[1:]
        fl = return_time_distribution(g, v, T)
        assert np.allclose(fl.p[1:], [float(x) for x in enum[1:]], atol=1e-12, rtol=0)

    def test_count_walks(self):
        # prefixes of length 1 and 2 from the center of a segment: 2 + 4
        g = build_segment(8)
        assert count_avoiding_walks(g, 8, 1) == 2
        assert count_avoiding_walks(g, 8, 2) == 2 + 4


class TestKilledOperator:
    @given(connected_graphs(max_n=8, loops=True), st.data())
    def test_mass_and_self_adjoint(self, g, data):
        v = data.draw(st.integers(0, g.n_vertices - 1))
        op = KilledOperator(g, v)
        rng = np.random.default_rng(data.draw(st.integers(0, 2 ** 32 - 1)))
        mass = rng.random(g.n_vertices)
        mass[v] = 0
        new, absorbed = op.step(mass)
        assert abs(mass.sum() - new.sum() - absorbed) < 1e-14 * max(1.0, mass.sum())
        f, h = rng.standard_normal(g.n_vertices), rng.standard_normal(g.n_vertices)
        f[v] = h[v] = 0
        assert abs(op.inner(op.apply(f), h) - op.inner(f, op.apply(h))) < 1e-12


class TestHitting:
    def test_path(self):
        h = hitting_time_distribution(build_path(2), 0, 2, 6)
        assert h[2] == pytest.approx(0.5) and h[4] == pytest.approx(0.25)
        assert h[1] == h[3] == 0

    def test_start_equals_target(self):
        g = build_cycle(5)
        assert np.array_equal(hitting_time_distribution(g, 1, 1, 10),
                              return_time_distribution(g, 1, 10).p)

    def test_profiles_match_forward(self):
        g = random_connected_graph(7, 4, seed=1)
        prof = hitting_profiles(g, 0, 12)
        for u in range(1, 7):
            fwd = hitting_time_distribution(g, u, 0, 12)
            assert np.allclose(prof[:, u], fwd[1:], atol=1e-15)


class TestGreen:
    @given(connected_graphs(max_n=8, loops=True), st.data())
    def test_degree_ratio(self, g, data):
        v = data.draw(st.integers(0, g.n_vertices - 1))
        assert np.allclose(green_function(g, v), g.degrees / g.degree(v), atol=1e-10, rtol=0)

    def test_examples(self):
        assert np.allclose(green_function(build_complete(4), 0), 1.0)
        g = build_star_halfline(3, 2)
        assert green_function(g, 0)[4] == pytest.approx(1 / 3)


class TestIdentities:
    def test_split_identity_examples(self):
        g = build_segment(10)
        assert check_reversibility_identity(g, 10, 4) < 1e-12
        assert reversibility_identity_exact(build_segment(5), 5, 4) == 0
        # t = 2 on K4: (1/3) sum over three neighbors of 1/3 = 1/3
        tab = return_time_distribution(build_complete(4), 0, 2)
        assert tab.p[2] == pytest.approx(1 / 3)
        assert check_reversibility_identity(build_complete(4), 0, 2, table=tab) < 1e-15

    @given(connected_graphs(max_n=8, loops=True), st.data())
    def test_split_identity_property(self, g, data):
        v = data.draw(st.integers(0, g.n_vertices - 1))
        T = 30
        tab = return_time_distribution(g, v, T)
        prof = hitting_profiles(g, v, (T + 1) // 2)
        for t in range(2, T + 1):
            assert check_reversibility_identity(g, v, t, profiles=prof, table=tab) <= 1e-10

    @given(connected_graphs(max_n=6), st.data())
    def test_split_identity_rational(self, g, data):
        v = data.draw(st.integers(0, g.n_vertices - 1))
        assert all(reversibility_identity_exact(g, v, t) == 0 for t in range(2, 9))

    def test_z_monotone(self):
        tab = return_time_distribution(build_segment(30), 30, 30)
        ok, first = even_monotonicity_check(tab)
        assert ok and first is None

    @pytest.mark.parametrize("seed", range(5))
    def test_random_monotone(self, seed):
        g = random_connected_graph(12, 8, seed)
        assert even_monotonicity_check(return_time_distribution(g, 0, 40))[0]

    @given(connected_graphs(max_n=8, loops=True), st.data())
    def test_monotone_property(self, g, data):
        v = data.draw(st.integers(0, g.n_vertices - 1))
        assert even_monotonicity_check(return_time_distribution(g, v, 40))[0]

    def test_monotone_zero_tail(self):
        assert even_monotonicity_check(return_time_distribution(build_complete(2), 0, 10))[0]

    def test_monotone_detects_violation(self):
        tab = return_time_distribution(build_segment(10), 10, 8)
        tab.p[6] = 0.2
        assert even_monotonicity_check(tab) == (False, 4)


class TestHankel:
    def test_z_order2(self):
        tab = return_time_distribution(build_segment(20), 20, 12)
        m = moment_sequence(tab)
        assert m[0] == 0.5 and m[2] == 0.125
        chk = hankel_psd_check(m, 2)
        assert chk.min_eig == pytest.approx(0.125)
        assert chk.ok and chk.min_eig_shifted >= 0

    def test_order1(self):
        m = moment_sequence(return_time_distribution(build_cycle(5), 0, 6))
        assert hankel_psd_check(m, 1).min_eig == pytest.approx(m[0])

    def test_mass_bound(self):
        m = moment_sequence(return_time_distribution(build_complete(6), 0, 6))
        assert m[0] <= 1

    @given(connected_graphs(max_n=8, loops=True), st.data())
    def test_psd_property(self, g, data):
        v = data.draw(st.integers(0, g.n_vertices - 1))
        m = moment_sequence(return_time_distribution(g, v, 14))
        for k in range(1, 6):
            assert hankel_psd_check(m, k).ok

    def test_too_short(self):
        with pytest.raises(GraphError):
            hankel_psd_check([0.5, 0.0], 2)

    def test_rejects_non_moments(self):
        assert not hankel_psd_check([0.1, 0.5, 0.1], 2).ok


class TestBounds:
    def test_margin_examples(self):
        tab = return_time_distribution(build_segment(10), 10, 4)
        assert 2 * math.sqrt(4) * tab.s[4] == pytest.approx(2.0)
        tab = return_time_distribution(build_halfline(10), 0, 2)
        m, t = theorem1_margin(tab)
        assert tab.s[2] == 1 and m == pytest.approx(1.0) and t == 1
        assert 1 * math.sqrt(2) * tab.s[2] == pytest.approx(math.sqrt(2))

    def test_star_margin_scale(self):
        # the tail is of order 1/(d sqrt t), so the margin stays bounded as d grows
        margins = [theorem1_margin(return_time_distribution(build_star_halfline(200, d - 1), 0, 200))[0]
                   for d in (2, 10, 50)]
        assert all(0.25 <= m < 2 for m in margins)

    def test_hazard_example(self):
        tab = return_time_distribution(build_segment(10), 10, 6)
        prof = theorem2_hazard_profile(tab)
        assert tab.hazard[4] == pytest.approx(0.25)
        assert prof.profile[4] == pytest.approx(4 * 0.25 / math.log(8))
        assert prof.profile[4] == pytest.approx(0.481, abs=5e-4)
        assert prof.profile[3] == 0.0
        assert prof.within_e10 and prof.max_value < THEOREM2_CONSTANT

    @given(connected_graphs(max_n=8, loops=True), st.data())
    def test_bounds_property(self, g, data):
        # on finite graphs the tail eventually dies, so only the hazard bound is universal here
        v = data.draw(st.integers(0, g.n_vertices - 1))
        tab = return_time_distribution(g, v, 60)
        assert theorem2_hazard_profile(tab).within_e10

    def test_loops_counted(self):
        g = add_loops(build_halfline(10), 0, 2)
        tab = return_time_distribution(g, 0, 10)
        assert tab.p[1] == pytest.approx(2 / 3) and tab.degree == 3
