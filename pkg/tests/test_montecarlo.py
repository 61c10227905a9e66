import json

import numpy as np
import pytest
from scipy import stats as sps

from returnlab.exactwalk import green_function, return_time_distribution
from returnlab.expander import decorate, random_regular
from returnlab.graphcore import (
    SMALL_PRESET,
    ConstructionParams,
    Graph,
    add_loops,
    build_complete,
    build_cycle,
    build_full_construction,
    build_halfline,
    build_path,
    build_segment,
    build_star_halfline,
    comb_product,
)
from returnlab.montecarlo import kernels
from returnlab.montecarlo.experiments import (
    CENSORED,
    ImplicitComb,
    ResourceGuardError,
    collision_inside_expander,
    comb_collision_experiment,
    control_comb,
    empirical_green,
    empirical_tail,
    escape_experiment,
    expander_window_experiment,
    main_comb,
    one_step_law,
    sample_return_time,
    sample_return_times,
    tail_zscores,
)
from returnlab.montecarlo.parallel import TrialPlan, chunks, map_trials
from returnlab.montecarlo.rng import new_state, next_double, next_u64, trial_generator
from returnlab.montecarlo.stats import chi_square_pvalue, mean_ci, one_sided_greater, wilson

from .conftest import random_connected_graph


class TestRng:
    @pytest.mark.parametrize("key0,key1,stream", [(0, 0, 0), (12345, 7, 1), (2 ** 64 - 1, 2 ** 63 + 5, 3)])
    def test_matches_numpy_philox(self, key0, key1, stream):
        bg = np.random.Philox(key=[key0, key1], counter=[0, 0, 0, stream])
        expect = bg.random_raw(50)
        state = new_state(key0, key1, stream)
        got = np.array([next_u64(state) for _ in range(50)], dtype=np.uint64)
        assert np.array_equal(got, expect)

    def test_doubles_match_generator(self):
        gen = trial_generator(99, 4, 1)
        state = new_state(99, 4, 1)
        assert np.array_equal(gen.random(20), [next_double(state) for _ in range(20)])

    def test_streams_differ(self):
        a, b = new_state(1, 2, 0), new_state(1, 2, 1)
        assert next_u64(a) != next_u64(b)


class TestStats:
    def test_wilson_contains_estimate(self):
        for k, n in [(0, 10), (10, 10), (3, 7), (500, 1000)]:
            e = wilson(k, n)
            assert e.ci_low <= e.estimate <= e.ci_high

    def test_wilson_reference(self):
        # 95% Wilson interval for 5/20, cross-checked against the closed form
        e = wilson(5, 20)
        assert e.ci_low == pytest.approx(0.1118, abs=1e-4)
        assert e.ci_high == pytest.approx(0.4687, abs=1e-4)

    def test_mean_ci(self):
        x = np.arange(10.0)
        e = mean_ci(x.sum(), (x * x).sum(), 10)
        half = 1.959963984540054 * x.std(ddof=1) / np.sqrt(10)
        assert e.estimate == 4.5 and e.ci_high - 4.5 == pytest.approx(half)

    def test_fisher(self):
        assert one_sided_greater(56, 200, 27, 200) < 0.01
        assert one_sided_greater(27, 200, 56, 200) > 0.5

    def test_chi_square(self):
        assert chi_square_pvalue([50, 50], [0.5, 0.5]) == pytest.approx(1.0)
        assert chi_square_pvalue([1, 0], [0.0, 1.0]) == 0.0


class TestParallel:
    def test_chunks(self):
        assert chunks(130) == [(0, 64), (64, 128), (128, 130)]
        assert chunks(0) == []

    def test_workers_do_not_change_results(self):
        g = build_segment(30)
        serial = sample_return_times(g, 30, TrialPlan(11, 300, 500, workers=1))
        par = sample_return_times(g, 30, TrialPlan(11, 300, 500, workers=3))
        assert np.array_equal(serial, par)

    def test_map_order(self):
        out = map_trials(_span, TrialPlan(trials=200, workers=2))
        assert out == [(0, 64), (64, 128), (128, 192), (192, 200)]


def _span(lo, hi):
    return lo, hi


class TestReturnSampling:
    def test_single_matches_batch(self):
        g = build_segment(20)
        batch = sample_return_times(g, 20, TrialPlan(5, 10, 200))
        for i in range(10):
            one = sample_return_time(g, 20, 200, (5, i, 0))
            assert (CENSORED if one is None else one) == batch[i]

    def test_cap_one_censors(self):
        g = build_halfline(10)
        assert all(sample_return_time(g, 0, 1, (0, i, 0)) is None for i in range(20))

    def test_halfline_p2(self):
        times = sample_return_times(build_halfline(50), 0, TrialPlan(1, 100_000, 2))
        e = wilson(int((times == 2).sum()), len(times))
        assert e.ci_low <= 0.5 <= e.ci_high

    def test_censoring_in_tail(self):
        times = np.array([2, 4, CENSORED, CENSORED])
        s = empirical_tail(times, 6)
        assert s.tolist() == [1, 1, 1, 0.75, 0.75, 0.5, 0.5]

    @pytest.mark.parametrize("g,v", [(build_segment(60), 60), (build_star_halfline(60, 4), 0),
                                     (random_connected_graph(10, 6, 3), 0)])
    def test_tail_within_3_sigma(self, g, v):
        times = sample_return_times(g, v, TrialPlan(21, 20_000, 60))
        z = tail_zscores(times, return_time_distribution(g, v, 50), 50)
        assert np.abs(z[1:]).max() <= 3.0

    def test_green_within_ci(self):
        g = build_star_halfline(6, 2)
        est = empirical_green(g, 0, TrialPlan(3, 20_000, 10 ** 6))
        exact = green_function(g, 0)
        assert est.censored == 0
        # visit counts along the line are strongly correlated, so misses come in blocks;
        # bound each vertex at 4 standard errors instead of counting CI misses
        se = (est.ci_high - est.mean) / 1.959963984540054
        assert np.all(np.abs(est.mean - exact) <= 4 * se + 1e-12)


class TestOneStepLaw:
    def test_plain_graph(self):
        g = random_connected_graph(8, 6, 1)
        for v in range(g.n_vertices):
            counts = one_step_law(g, v, 10 ** 5, seed=v)
            probs = g.transition_matrix.getrow(v).toarray().ravel()
            assert chi_square_pvalue(counts, probs) > 0.001

    def test_loops(self):
        g = add_loops(build_halfline(3), 0, 2)
        counts = one_step_law(g, 0, 10 ** 6, seed=2)
        assert chi_square_pvalue(counts, [2 / 3, 1 / 3, 0, 0]) > 0.001

    def test_comb_matches_explicit(self):
        # implicit comb step vs the explicit comb_product transition row
        G = build_cycle(5)
        H = build_star_halfline(3, 1)
        comb = ImplicitComb(G, H, attach=0)
        explicit = comb_product(G, H, 0)
        nh = H.n_vertices
        for b, w in [(0, 0), (2, 0), (1, 2)]:
            bs, ws = comb.step_samples(b, w, 10 ** 6, seed=b + 7 * w)
            counts = np.bincount(bs * nh + ws, minlength=explicit.n_vertices)
            probs = explicit.transition_matrix.getrow(b * nh + w).toarray().ravel()
            assert chi_square_pvalue(counts, probs) > 0.001

    def test_comb_second_coordinate_has_loops(self):
        # on Comb(Z, G) the tooth coordinate moves like SRW on G plus deg_Z = 2 loops at the root
        G = build_star_halfline(4, 2)
        comb = ImplicitComb(None, G, attach=0)
        _, ws = comb.step_samples(0, 0, 10 ** 6, seed=3)
        looped = add_loops(G, 0, 2)
        probs = looped.transition_matrix.getrow(0).toarray().ravel()
        counts = np.bincount(ws, minlength=G.n_vertices)
        assert chi_square_pvalue(counts, probs) > 0.001


class TestEscape:
    def test_path(self):
        r = escape_experiment(build_path(20), 0, 20, 0.25, TrialPlan(0, 20_000))
        assert r.resistance == pytest.approx(20) and r.step_limit == 100
        assert r.exact <= 0.25
        assert r.estimate.ci_low <= r.exact <= r.estimate.ci_high
        assert r.passed

    def test_vacuous(self):
        r = escape_experiment(build_cycle(8), 0, 4, 2.0, TrialPlan(0, 2000))
        assert r.estimate.estimate <= 1 and r.passed

    def test_same_vertex(self):
        from returnlab.graphcore import GraphError
        with pytest.raises(GraphError):
            escape_experiment(build_path(3), 1, 1, 0.1, TrialPlan())


class TestExpanderWindows:
    @pytest.fixture(scope="class")
    @staticmethod
    def decorated():
        return decorate(random_regular(64, 3, 0), 0)

    def test_window_report(self, decorated):
        g, vp = decorated
        r = expander_window_experiment(g, vp, TrialPlan(1, 4000))
        assert r.n == 64 and r.delta_star >= 0.05
        assert r.window_c > 0
        assert all(c["within_ci"] for c in r.mc_checks)

    def test_window_256(self):
        g, vp = decorate(random_regular(256, 3, 1), 0)
        assert expander_window_experiment(g, vp, TrialPlan(1, 500), mc_starts=1).window_c > 0

    def test_anchor_start(self, decorated):
        # from the anchor the pendant is at least one step away
        from returnlab.exactwalk import hitting_time_distribution
        g, vp = decorated
        assert hitting_time_distribution(g, 0, vp, 5)[0] == 0

    def test_collision(self, decorated):
        g, vp = decorated
        c = collision_inside_expander(g, vp, 3, 40, TrialPlan(2, 10_000))
        assert c.passed and not c.parity_obstruction
        same = collision_inside_expander(g, vp, 5, 5, TrialPlan(2, 2000))
        assert same.estimate.estimate > 0

    def test_parity(self):
        g, vp = decorate(build_cycle(10), 0)
        # C10 plus a pendant is still bipartite; walkers at odd distance never meet
        c = collision_inside_expander(g, vp, 1, 2, TrialPlan(0, 2000))
        assert c.parity_obstruction and c.estimate.estimate == 0


class TestCombCollisions:
    def test_small_preset(self):
        p = ConstructionParams(**SMALL_PRESET)
        comb = main_comb(p, p.windows[-1])
        rep = comb_collision_experiment(comb, p, TrialPlan(4, 128))
        assert rep.windows == [(0, 1024)]
        assert rep.collision_frequency[0]["ci_low"] > 0
        assert len(rep.checkpoints) == 4
        assert rep.checkpoints[0] == {"time": 256, "window": 1, "k": 1}
        assert 0 <= rep.i_event_trials[0] <= 128
        json.dumps(rep.to_dict())
        assert rep.to_csv().count("\n") == 2

    def test_control_has_no_expander_labels(self):
        p = ConstructionParams(**SMALL_PRESET)
        rep = comb_collision_experiment(control_comb(p, 1024), p, TrialPlan(4, 64))
        assert rep.i_event_trials is None and rep.final_base_mean_abs is not None

    def test_empty(self):
        p = ConstructionParams(**SMALL_PRESET)
        comb = main_comb(p, 16)
        assert comb_collision_experiment(comb, p, TrialPlan(0, 0)).collision_trials == []
        rep = comb_collision_experiment(comb, p, TrialPlan(0, 10, step_cap=0))
        assert rep.windows == [] and rep.total_steps == 0

    def test_guard(self):
        p = ConstructionParams(**SMALL_PRESET)
        with pytest.raises(ResourceGuardError):
            comb_collision_experiment(main_comb(p, 16), p, TrialPlan(0, 1000), step_budget=10_000)

    def test_windows_follow_params(self):
        p = ConstructionParams((2, 3), (8, 30))
        rep = comb_collision_experiment(main_comb(p, p.windows[-1]), p, TrialPlan(0, 64))
        assert rep.windows == [(0, 32), (32, 32 + 270)]
        assert [c["time"] for c in rep.checkpoints] == [16, 32, 32 + 90, 32 + 180, 32 + 270]

    def test_collisions_match_explicit_reference(self):
        # replay the first trial with the numpy generator on the explicit graph
        p = ConstructionParams((2,), (8,))
        total = p.windows[-1]
        comb = main_comb(p, total)
        rep = comb_collision_experiment(comb, p, TrialPlan(9, 1))
        tooth = comb.tooth
        x = [0, 0]
        y = [0, 0]
        gx, gy = trial_generator(9, 0, 0), trial_generator(9, 0, 1)
        hits = 0
        for _ in range(total):
            for pos, gen in ((x, gx), (y, gy)):
                b, w = pos
                dt = tooth.degree(w)
                if w == 0:
                    r = int(gen.random() * (2 + dt))
                    if r < 2:
                        pos[0] = b - 1 if r == 0 else b + 1
                        continue
                    pos[1] = int(tooth.neighbors(w)[r - 2])
                else:
                    pos[1] = int(tooth.neighbors(w)[int(gen.random() * dt)])
            hits += x == y
        assert rep.total_collisions == [hits]

    def test_reproducible(self):
        p = ConstructionParams(**SMALL_PRESET)
        a = comb_collision_experiment(main_comb(p, 1024), p, TrialPlan(3, 100, workers=1))
        b = comb_collision_experiment(main_comb(p, 1024), p, TrialPlan(3, 100, workers=2))
        assert a.to_dict() == b.to_dict()
