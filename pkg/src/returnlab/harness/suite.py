"""Reference corpus and the exact identity/bound checks run over it."""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass
from fractions import Fraction

import numpy as np

from ..electrical import commute_identity_residual, lipschitz_margin, solve_potential, sublevel_cut
from ..exactwalk import (
    THEOREM1_CONSTANT,
    THEOREM2_CONSTANT,
    enumerate_return_times,
    even_monotonicity_check,
    green_function,
    hankel_psd_check,
    hitting_profiles,
    moment_sequence,
    return_time_distribution,
    reversibility_identity_exact,
    theorem1_margin,
    theorem2_hazard_profile,
)
from ..graphcore import (
    SMALL_PRESET,
    ConstructionParams,
    Graph,
    build_complete,
    build_cycle,
    build_full_construction,
    build_Gt,
    build_halfline,
    build_path,
    build_segment,
    build_star_halfline,
    build_torus,
)

EXPAND_TOL = 1e-10
HANKEL_TOL = 1e-10
GREEN_TOL = 1e-10
COMMUTE_TOL = 1e-9
LIPSCHITZ_TOL = 1e-10


@dataclass
class CorpusEntry:
    graph: Graph
    v: int
    horizon: int

    @property
    def name(self) -> str:
        return self.graph.name


@dataclass
class CheckResult:
    graph: str
    check: str
    value: float
    threshold: float
    passed: bool

    def to_dict(self) -> dict:
        return asdict(self)


def default_corpus(horizon: int = 500, seed: int = 0, gt_delta: float = 0.1) -> list[CorpusEntry]:
    """Segment, half-line, star half-lines with d_0 in {2, 5, 10}, G_t and the small construction.

    Every truncation is wide enough that tables up to ``horizon`` are exact.
    """
    small = ConstructionParams(**SMALL_PRESET, seed=seed)
    seg = build_segment(horizon)
    out = [CorpusEntry(seg, seg.meta["center"], horizon),
           CorpusEntry(build_halfline(horizon), 0, horizon)]
    out += [CorpusEntry(build_star_halfline(horizon, d - 1), 0, horizon) for d in (2, 5, 10)]
    out.append(CorpusEntry(build_Gt(horizon, gt_delta, 3, seed), 0, horizon))
    out.append(CorpusEntry(build_full_construction(small, buffer=horizon), 0, horizon))
    return out


def small_corpus() -> list[CorpusEntry]:
    """Graphs small enough for rational arithmetic (at most 12 vertices)."""
    graphs = [build_path(5), build_cycle(5), build_cycle(6), build_complete(4),
              build_star_halfline(6, 3), build_halfline(8), build_segment(4), build_torus(3, 3)]
    return [CorpusEntry(g, int(g.meta.get("center", 0)), 10) for g in graphs]


def bound_checks(entry: CorpusEntry, table=None) -> list[CheckResult]:
    """Lower tail bound d_v sqrt(t) s[t] >= 1/4 and the normalized hazard bound e^10."""
    if table is None:
        table = return_time_distribution(entry.graph, entry.v, entry.horizon)
    m, _ = theorem1_margin(table)
    prof = theorem2_hazard_profile(table)
    return [CheckResult(entry.name, "tail-lower-bound", m, THEOREM1_CONSTANT, m >= THEOREM1_CONSTANT),
            CheckResult(entry.name, "hazard-bound", prof.max_value, THEOREM2_CONSTANT, prof.within_e10)]


def _far_vertex(g: Graph, v: int) -> int:
    d = g.distances_from([v])
    d = np.where(np.isfinite(d), d, -1)
    return int(np.argmax(d))


def identity_checks(entry: CorpusEntry, expand_horizon: int = 60, hankel_order: int = 5,
                    pairs: int = 3, seed: int = 0, table=None) -> list[CheckResult]:
    """Split identity, even-time monotonicity, Hankel positivity, Green function,
    commute-time identity, potential Lipschitz bound and the sublevel-cut sandwich."""
    g, v = entry.graph, entry.v
    name = entry.name
    H = max(entry.horizon, 2 * hankel_order + 3)
    table = table if table is not None and table.horizon >= H else return_time_distribution(g, v, H)
    out = []

    te = min(expand_horizon, H)
    prof = hitting_profiles(g, v, (te + 1) // 2)
    res = 0.0
    for t in range(2, te + 1):
        a, b = prof[(t + 1) // 2 - 1], prof[t // 2 - 1]
        rhs = float(np.sum(g.degrees * a * b)) / g.degree(v)
        res = max(res, abs(float(table.p[t]) - rhs))
    out.append(CheckResult(name, "split-identity", res, EXPAND_TOL, res <= EXPAND_TOL))

    ok, first = even_monotonicity_check(table)
    out.append(CheckResult(name, "even-monotonicity", float(first or 0), 0.0, ok))

    m = moment_sequence(table)
    lo = min(min(c.min_eig, c.min_eig_shifted if c.min_eig_shifted is not None else math.inf)
             for c in (hankel_psd_check(m, k, HANKEL_TOL) for k in range(1, hankel_order + 1)))
    out.append(CheckResult(name, "hankel-psd", lo, -HANKEL_TOL, lo >= -HANKEL_TOL))

    gf = green_function(g, v)
    err = float(np.abs(gf - g.degrees / g.degree(v)).max())
    out.append(CheckResult(name, "green-function", err, GREEN_TOL, err <= GREEN_TOL))

    far = _far_vertex(g, v)
    rng = np.random.Generator(np.random.PCG64(seed))
    pair_list = [(v, far)] + [tuple(int(x) for x in rng.choice(g.n_vertices, 2, replace=False))
                              for _ in range(pairs - 1)]
    res = max(commute_identity_residual(g, x, y) for x, y in pair_list)
    out.append(CheckResult(name, "commute-identity", res, COMMUTE_TOL, res <= COMMUTE_TOL))

    pot = solve_potential(g, [v], [far])
    lip = lipschitz_margin(pot)
    out.append(CheckResult(name, "lipschitz", lip, 1.0 + LIPSCHITZ_TOL, lip <= 1.0 + LIPSCHITZ_TOL))
    if pot.resistance > 1.0:
        cut = sublevel_cut(pot, pot.resistance / 2)
        out.append(CheckResult(name, "cut-sandwich", cut.resistance_to_boundary, cut.threshold,
                               cut.sandwich_ok))
    return out


def rational_checks(entry: CorpusEntry) -> list[CheckResult]:
    """Exact equality of the rational table with walk enumeration, and a zero split-identity residual."""
    g, v, T = entry.graph, entry.v, entry.horizon
    table = return_time_distribution(g, v, T, exact=True)
    enum = enumerate_return_times(g, v, T)
    mismatches = sum(1 for t in range(1, T + 1) if Fraction(table.p[t]) != enum[t])
    worst = max(abs(reversibility_identity_exact(g, v, t)) for t in range(2, T + 1))
    return [CheckResult(entry.name, "rational-enumeration", float(mismatches), 0.0, mismatches == 0),
            CheckResult(entry.name, "rational-split-identity", float(worst), 0.0, worst == 0)]
