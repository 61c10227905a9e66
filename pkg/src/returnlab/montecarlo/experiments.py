"""Monte Carlo experiments: return-time sampling, the resistance escape bound,
expander hitting windows, and two-walker collisions on comb products."""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field

import numpy as np

from ..electrical import effective_resistance
from ..exactwalk import ReturnTimeTable, hitting_profiles, hitting_time_distribution
from ..graphcore import ConstructionParams, Graph, GraphError, build_full_construction
from . import kernels
from .parallel import TrialPlan, map_trials
from .rng import MASK64
from .stats import EstimateWithCI, binomial_se, mean_ci, wilson

DEFAULT_STEP_BUDGET = 10 ** 9
CENSORED = -1


class ResourceGuardError(RuntimeError):
    """A run would exceed the configured step or memory budget."""


def _key(plan: TrialPlan) -> np.uint64:
    return np.uint64(int(plan.master_seed) & MASK64)


def _mask(n: int, targets) -> np.ndarray:
    m = np.zeros(n, dtype=np.bool_)
    m[np.atleast_1d(targets)] = True
    return m


# return times -------------------------------------------------------------

def _hit_chunk(lo, hi, indptr, indices, start, mask, cap, key0, stream):
    return kernels.hit_times(indptr, indices, start, mask, cap, key0, lo, hi, stream)


def sample_return_time(g: Graph, v: int, step_cap: int, substream: tuple[int, int, int]) -> int | None:
    """One return time to ``v`` from the stream ``(master_seed, trial, stream)``; None if censored."""
    if step_cap < 1:
        raise GraphError("step_cap must be >= 1")
    g._check_vertex(v)
    seed, trial, stream = substream
    out = kernels.hit_times(g.indptr, g.indices, int(v), _mask(g.n_vertices, v), int(step_cap),
                            np.uint64(int(seed) & MASK64), int(trial), int(trial) + 1, int(stream))
    return None if out[0] == CENSORED else int(out[0])


def sample_hitting_times(g: Graph, start: int, targets, plan: TrialPlan, stream: int = 0) -> np.ndarray:
    """Hitting times (t >= 1) of ``targets`` for ``plan.trials`` walks; -1 when censored."""
    if plan.step_cap is None or plan.step_cap < 0:
        raise GraphError("plan.step_cap must be set")
    parts = map_trials(_hit_chunk, plan, g.indptr, g.indices, int(start),
                       _mask(g.n_vertices, targets), int(plan.step_cap), _key(plan), int(stream))
    return np.concatenate(parts) if parts else np.zeros(0, np.int64)


def sample_return_times(g: Graph, v: int, plan: TrialPlan) -> np.ndarray:
    return sample_hitting_times(g, v, [v], plan)


def empirical_tail(times: np.ndarray, horizon: int) -> np.ndarray:
    """s_hat[t] = fraction with tau >= t, t = 0..horizon; censored samples count as surviving."""
    times = np.asarray(times)
    n = len(times)
    out = np.ones(horizon + 1)
    if n == 0:
        return out * np.nan
    done = np.sort(times[times != CENSORED])
    t = np.arange(horizon + 1)
    finished_before = np.searchsorted(done, t, side="left")
    out[:] = (n - finished_before) / n
    return out


def tail_zscores(times: np.ndarray, table: ReturnTimeTable, t_max: int) -> np.ndarray:
    """(s_hat[t] - s[t]) / binomial SE for t = 1..t_max (0 where the SE vanishes and they agree)."""
    n = len(times)
    s_hat = empirical_tail(times, t_max)
    z = np.zeros(t_max + 1)
    for t in range(1, t_max + 1):
        s = float(table.s[t])
        se = binomial_se(s, n)
        diff = s_hat[t] - s
        if se == 0.0:
            z[t] = 0.0 if abs(diff) < 1e-12 else math.inf
        else:
            z[t] = diff / se
    return z


def _green_chunk(lo, hi, indptr, indices, v, cap, key0):
    return kernels.excursion_visits(indptr, indices, v, cap, key0, lo, hi)


@dataclass
class GreenEstimate:
    mean: np.ndarray
    ci_low: np.ndarray
    ci_high: np.ndarray
    n: int
    censored: int


def empirical_green(g: Graph, v: int, plan: TrialPlan) -> GreenEstimate:
    """Mean visits to each vertex during one excursion from ``v``."""
    cap = int(plan.step_cap or 10 ** 6)
    parts = map_trials(_green_chunk, plan, g.indptr, g.indices, int(v), cap, _key(plan))
    sums = sum((p[0] for p in parts), np.zeros(g.n_vertices))
    sumsq = sum((p[1] for p in parts), np.zeros(g.n_vertices))
    censored = sum(p[2] for p in parts)
    n = plan.trials - censored
    est = [mean_ci(sums[u], sumsq[u], n) for u in range(g.n_vertices)]
    return GreenEstimate(np.array([e.estimate for e in est]), np.array([e.ci_low for e in est]),
                         np.array([e.ci_high for e in est]), n, censored)


def one_step_law(g: Graph, v: int, count: int, seed: int = 0) -> np.ndarray:
    """Empirical next-vertex counts from ``count`` single steps at ``v``."""
    return kernels.one_step_counts(g.indptr, g.indices, int(v), int(count),
                                   np.uint64(int(seed) & MASK64), 0)


# escape bound -------------------------------------------------------------

@dataclass
class EscapeResult:
    estimate: EstimateWithCI
    exact: float
    resistance: float
    epsilon: float
    step_limit: int
    passed: bool

    def to_dict(self) -> dict:
        d = asdict(self)
        d["estimate"] = self.estimate.to_dict()
        return d


def escape_experiment(g: Graph, x: int, y: int, epsilon: float, plan: TrialPlan) -> EscapeResult:
    """Estimate P_x(tau_y <= epsilon * R_eff(x <-> y)^2); passes if ci_low <= epsilon.

    The exact value from the killed operator is reported alongside.
    """
    if x == y:
        raise GraphError("x and y must differ")
    R = effective_resistance(g, [x], [y])
    limit = int(math.floor(epsilon * R * R + 1e-12))
    run = TrialPlan(plan.master_seed, plan.trials, limit, plan.workers, plan.params)
    times = sample_hitting_times(g, x, [y], run)
    hits = int(np.count_nonzero(times != CENSORED))
    est = wilson(hits, plan.trials)
    exact = float(hitting_time_distribution(g, x, y, limit).sum()) if limit > 0 else 0.0
    return EscapeResult(est, exact, R, epsilon, limit, est.ci_low <= epsilon)


# expander windows ---------------------------------------------------------

@dataclass
class WindowReport:
    n: int
    delta_star: float
    min_prob_hit_by_n: float
    min_prob_survive_delta_n: float
    window: tuple[int, int]
    window_c: float
    window_argmin: tuple[int, int]
    mc_checks: list = field(default_factory=list)

    def to_dict(self) -> dict:
        return asdict(self)


def expander_window_experiment(decorated: Graph, v_prime: int, plan: TrialPlan,
                               window_const: float = 2.0, mc_starts: int = 4) -> WindowReport:
    """Hitting-time windows of the pendant ``v_prime`` on an expander plus pendant.

    (a) From exact hitting laws for every start u != v', the largest delta
    with min_u P_u(tau >= delta n) >= delta and min_u P_u(tau <= n) >= delta.
    (b) min over u and window_const * log n <= t <= n of n P_u(tau = t).
    A few starts are cross-checked by simulation of P_u(tau <= n).
    """
    n = decorated.n_vertices - 1
    prof = hitting_profiles(decorated, v_prime, n)  # row t-1 -> P_u(tau = t)
    starts = np.array([u for u in range(decorated.n_vertices) if u != v_prime])
    prof = prof[:, starts]
    cdf = np.cumsum(prof, axis=0)  # row t-1 -> P_u(tau <= t)
    hit_by_n = float(cdf[-1].min())
    delta_star, surv_at = 0.0, 1.0
    for t in range(1, n + 1):
        surv = 1.0 - (cdf[t - 2].max() if t >= 2 else 0.0)  # min_u P_u(tau >= t)
        d = t / n
        if surv >= d and hit_by_n >= d:
            delta_star, surv_at = d, surv
    t0 = min(n, max(1, math.ceil(window_const * math.log(n))))
    window = prof[t0 - 1:n] * n
    idx = np.unravel_index(np.argmin(window), window.shape)
    window_c = float(window[idx])
    argmin = (int(starts[idx[1]]), int(idx[0] + t0))
    rng = np.random.Generator(np.random.PCG64(int(plan.master_seed) & MASK64))
    checks = []
    for k, u in enumerate(sorted(rng.choice(starts, size=min(mc_starts, len(starts)), replace=False))):
        run = TrialPlan(plan.master_seed + k + 1, plan.trials, n, plan.workers)
        times = sample_hitting_times(decorated, int(u), [v_prime], run)
        est = wilson(int(np.count_nonzero(times != CENSORED)), plan.trials)
        exact = float(cdf[-1][np.searchsorted(starts, u)])
        checks.append({"u": int(u), "exact": exact, "estimate": est.to_dict(),
                       "within_ci": est.ci_low <= exact <= est.ci_high})
    return WindowReport(n, delta_star, hit_by_n, surv_at, (t0, n), window_c, argmin, checks)


def _collide_chunk(lo, hi, indptr, indices, u1, u2, exit_vertex, horizon, key0):
    return kernels.collide_before_exit(indptr, indices, u1, u2, exit_vertex, horizon, key0, lo, hi)


@dataclass
class ExpanderCollision:
    estimate: EstimateWithCI
    parity_obstruction: bool
    passed: bool


def collision_inside_expander(decorated: Graph, v_prime: int, u1: int, u2: int,
                              plan: TrialPlan) -> ExpanderCollision:
    """P(two walkers from u1, u2 meet at some 1 <= t <= n before either hits v')."""
    if v_prime in (u1, u2):
        raise GraphError("walkers must start off the pendant")
    n = decorated.n_vertices - 1
    parity = False
    if decorated.is_bipartite:
        parity = int(decorated.distances_from([u1])[u2]) % 2 == 1
    parts = map_trials(_collide_chunk, plan, decorated.indptr, decorated.indices, int(u1), int(u2),
                       int(v_prime), n, _key(plan))
    hits = int(sum(int(p.sum()) for p in parts))
    est = wilson(hits, plan.trials)
    return ExpanderCollision(est, parity, est.ci_low > 0.0)


# combs --------------------------------------------------------------------

_EMPTY = np.zeros(1, dtype=np.int64)


@dataclass
class ImplicitComb:
    """Comb_attach(base, tooth) without materializing it; ``None`` stands for Z."""

    base: Graph | None
    tooth: Graph | None
    attach: int = 0
    base_start: int = 0
    tooth_start: int = 0
    name: str = ""

    def _arrays(self, g):
        if g is None:
            return True, _EMPTY, _EMPTY
        return False, g.indptr, g.indices

    def kernel_args(self):
        bz, bp, bi = self._arrays(self.base)
        tz, tp, ti = self._arrays(self.tooth)
        return bz, bp, bi, tz, tp, ti, int(self.attach)

    @property
    def expander_id(self) -> np.ndarray:
        if self.tooth is None or "expander_id" not in self.tooth.meta:
            return np.zeros(0, dtype=np.int64)
        return np.asarray(self.tooth.meta["expander_id"], dtype=np.int64)

    def step_samples(self, b: int, w: int, count: int, seed: int = 0):
        bz, bp, bi, tz, tp, ti, a = self.kernel_args()
        return kernels.comb_step_samples(int(b), int(w), int(count), np.uint64(int(seed) & MASK64), 0,
                                         bz, bp, bi, tz, tp, ti, a)


def main_comb(params: ConstructionParams, total_steps: int) -> ImplicitComb:
    """Comb_0(Z, G({h_i, n_i})); the tooth half-line is long enough to be exact."""
    tooth = build_full_construction(params, buffer=max(total_steps, 1))
    return ImplicitComb(None, tooth, 0, 0, 0, f"comb(Z,{tooth.name})")


def control_comb(params: ConstructionParams, total_steps: int) -> ImplicitComb:
    """Comb_0(G({h_i, n_i}), Z): the same graph as base, Z teeth."""
    base = build_full_construction(params, buffer=max(total_steps, 1))
    return ImplicitComb(base, None, 0, 0, 0, f"comb({base.name},Z)")


@dataclass
class CollisionReport:
    name: str
    trials: int
    total_steps: int
    windows: list
    collision_trials: list
    collision_frequency: list
    total_collisions: list
    mean_collisions: list
    i_event_trials: list | None
    i_event_frequency: list | None
    checkpoints: list
    base_step_ratio: dict
    in_expander_fraction: list | None
    final_base_mean_abs: float | None

    def to_dict(self) -> dict:
        return asdict(self)

    def to_csv(self) -> str:
        lines = ["window,start,end,trials,collision_trials,frequency,ci_low,ci_high,"
                 "total_collisions,i_event_trials"]
        for i, f in enumerate(self.collision_frequency):
            a, b = self.windows[i]
            ie = "" if self.i_event_trials is None else str(self.i_event_trials[i])
            lines.append(f"{i + 1},{a},{b},{self.trials},{self.collision_trials[i]},"
                         f"{format(f['estimate'], '.17g')},{format(f['ci_low'], '.17g')},"
                         f"{format(f['ci_high'], '.17g')},{self.total_collisions[i]},{ie}")
        return "\n".join(lines) + "\n"


def _comb_chunk(lo, hi, key0, total, bz, bp, bi, bs, tz, tp, ti, ts, attach, exp_id, win_end, ck_t, ck_w):
    return kernels.comb_collisions(key0, lo, hi, total, bz, bp, bi, bs, tz, tp, ti, ts, attach,
                                   exp_id, win_end, ck_t, ck_w)


def comb_collision_experiment(comb: ImplicitComb, params: ConstructionParams, plan: TrialPlan,
                              step_budget: int = DEFAULT_STEP_BUDGET) -> CollisionReport:
    """Two walkers from the comb origin, run through the scale windows of ``params``.

    Window i is (T_{i-1}, T_i] with T_i = T_{i-1} + n_i h_i^2, cut at
    ``plan.step_cap`` when set. Checkpoints are T_{i-1} + k h_i n_i for
    k = 1..h_i. Per window the report gives the fraction of trials with at
    least one collision (Wilson interval), collision totals, and, when the
    tooth carries expander labels, how many trials saw a checkpoint with
    both walkers on the same base point inside expander E_i. Base-move
    counts at checkpoints are summarized as ratios to k h_i.
    """
    T = params.windows
    total = T[-1] if plan.step_cap is None else min(T[-1], int(plan.step_cap))
    if plan.trials * 2 * total > step_budget:
        raise ResourceGuardError(f"{plan.trials} trials x 2 x {total} steps exceeds budget {step_budget}")
    windows, win_end, ck_t, ck_w, ck_k = [], [], [], [], []
    for i, (h, n) in enumerate(zip(params.heights, params.expander_sizes)):
        if T[i] >= total:
            break
        end = min(T[i + 1], total)
        windows.append((T[i], end))
        win_end.append(end)
        for k in range(1, h + 1):
            c = T[i] + k * h * n
            if c <= end:
                ck_t.append(c)
                ck_w.append(i)
                ck_k.append(k)
    has_i = comb.expander_id.size > 0
    empty = CollisionReport(comb.name, plan.trials, total, windows, [], [], [], [],
                            [] if has_i else None, [] if has_i else None,
                            [], {}, [] if has_i else None, None)
    if not windows or plan.trials == 0:
        return empty
    bz, bp, bi, tz, tp, ti, attach = comb.kernel_args()
    exp_id = comb.expander_id if has_i else np.zeros(0, dtype=np.int64)
    parts = map_trials(_comb_chunk, plan, _key(plan), total, bz, bp, bi, int(comb.base_start),
                       tz, tp, ti, int(comb.tooth_start), attach, exp_id,
                       np.array(win_end, np.int64), np.array(ck_t, np.int64), np.array(ck_w, np.int64))
    coll = np.concatenate([p[0] for p in parts])
    ihits = np.concatenate([p[1] for p in parts])
    ell = np.concatenate([p[2] for p in parts])
    in_exp = np.concatenate([p[3] for p in parts])
    final = np.concatenate([p[4] for p in parts])
    nw = len(windows)
    any_coll = (coll > 0).sum(axis=0)
    freq = [wilson(int(any_coll[i]), plan.trials).to_dict() for i in range(nw)]
    i_trials = i_freq = exp_frac = None
    if has_i:
        i_any = (ihits > 0).sum(axis=0)
        i_trials = [int(x) for x in i_any]
        i_freq = [wilson(int(x), plan.trials).to_dict() for x in i_any]
        exp_frac = [float(x) for x in in_exp.mean(axis=(0, 1))]
    ratios = {}
    if ck_t:
        scale = np.array([k * params.heights[w] for k, w in zip(ck_k, ck_w)], dtype=float)
        r = ell / scale[None, None, :]
        ratios = {"mean": [float(x) for x in r.mean(axis=(0, 1))],
                  "q05": [float(x) for x in np.quantile(r, 0.05, axis=(0, 1))],
                  "q95": [float(x) for x in np.quantile(r, 0.95, axis=(0, 1))]}
    if comb.base is None:
        final_base = float(np.abs(final[:, [0, 2]]).mean())
    else:
        h = comb.base.heights
        final_base = float(h[final[:, [0, 2]]].mean()) if h is not None else None
    checkpoints = [{"time": int(t), "window": int(w) + 1, "k": int(k)} for t, w, k in zip(ck_t, ck_w, ck_k)]
    return CollisionReport(comb.name, plan.trials, total, windows, [int(x) for x in any_coll], freq,
                           [int(x) for x in coll.sum(axis=0)],
                           [float(x) for x in coll.mean(axis=0)], i_trials, i_freq,
                           checkpoints, ratios, exp_frac, final_base)
