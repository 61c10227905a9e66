"""Random regular graphs and the spectral / resistance quantities of expanders."""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass

import numpy as np

from .graphcore import Graph, GraphError, validate

MAX_RETRIES = 1000


def _seed_words(seed) -> list[int]:
    if isinstance(seed, (tuple, list)):
        return [int(s) & 0xFFFFFFFFFFFFFFFF for s in seed]
    return [int(seed) & 0xFFFFFFFFFFFFFFFF]


def random_regular(n: int, d: int, seed=0, max_retries: int = MAX_RETRIES) -> Graph:
    """Simple connected d-regular graph on n vertices.

    Configuration model: the ``n*d`` half-edges are paired by a uniform
    permutation and any pairing with a loop or a repeated edge is thrown away
    whole, as is a disconnected result. Attempt ``k`` draws from
    ``SeedSequence(seed + [k])`` so the output depends only on ``(n, d, seed)``.
    """
    if d < 1 or n < d + 1:
        raise GraphError(f"need n >= d + 1 (n={n}, d={d})")
    if (n * d) % 2:
        raise GraphError(f"n * d must be even (n={n}, d={d})")
    stubs = np.repeat(np.arange(n, dtype=np.int64), d)
    words = _seed_words(seed)
    for attempt in range(max_retries):
        rng = np.random.Generator(np.random.PCG64(np.random.SeedSequence(words + [attempt])))
        pairs = np.sort(stubs[rng.permutation(n * d)].reshape(-1, 2), axis=1)
        if np.any(pairs[:, 0] == pairs[:, 1]):
            continue
        key = pairs[:, 0] * n + pairs[:, 1]
        if len(np.unique(key)) != len(key):
            continue
        edges = pairs[np.argsort(key, kind="stable")]
        g = Graph(n, edges, name=f"expander:{n}:{d}", meta={"seed": words, "attempt": attempt})
        if g.is_connected:
            return g
    raise GraphError(f"random_regular({n}, {d}) rejected {max_retries} pairings",
                     check="generation-failure")


def decorate(expander: Graph, v: int = 0) -> tuple[Graph, int]:
    """Expander plus a pendant vertex v' joined to ``v``; returns (graph, v')."""
    expander._check_vertex(v)
    vp = expander.n_vertices
    edges = np.vstack([expander.edges, [[v, vp]]])
    g = Graph(vp + 1, edges, name=f"{expander.name}+pendant", meta={"pendant": vp, "anchor": v})
    return g, vp


def estimate_lambda2(g: Graph, iterations: int = 5000, seed=0, restarts: int = 3,
                     tol: float = 1e-6) -> float:
    """Second-largest absolute eigenvalue of the walk operator of a regular graph.

    Power iteration on the complement of the constants (the mean is removed
    after every application). For symmetric P, ``||P x||`` with ``x`` the
    normalized iterate is a nondecreasing lower bound of the top absolute
    eigenvalue there and converges even when ``+lambda`` and ``-lambda`` tie.
    Iteration stops once successive estimates move by less than ``tol``.
    The maximum over ``restarts`` random starts is returned.
    """
    if not g.is_regular:
        raise GraphError("estimate_lambda2 requires a regular graph")
    if g.n_vertices == 1:
        return 0.0
    P = g.transition_matrix
    rng = np.random.Generator(np.random.PCG64(np.random.SeedSequence(_seed_words(seed))))
    best = 0.0
    for _ in range(restarts):
        x = rng.standard_normal(g.n_vertices)
        x -= x.mean()
        x /= np.linalg.norm(x)
        est = 0.0
        for _ in range(iterations):
            y = P @ x
            y -= y.mean()
            new = float(np.linalg.norm(y))
            if new == 0.0:
                break
            x = y / new
            if abs(new - est) < tol:
                est = new
                break
            est = new
        best = max(best, est)
    return min(best, 1.0)


@dataclass
class MixingReport:
    ok: bool
    worst_margin: float
    worst_t: int
    worst_start: int
    bipartite: bool


def check_mixing_bound(g: Graph, rho: float, t_max: int, starts=None, seed=0,
                       n_starts: int = 8) -> MixingReport:
    """Check |P_x(X_t = w) - 1/n| <= exp(-(1 - rho) t) for t <= t_max.

    Distributions are computed exactly by repeated sparse application of the
    walk operator. The margin is ``bound - deviation``; negative means
    violated.
    """
    n = g.n_vertices
    if starts is None:
        rng = np.random.Generator(np.random.PCG64(np.random.SeedSequence(_seed_words(seed))))
        k = min(n, n_starts)
        starts = np.sort(rng.choice(n, size=k, replace=False))
    PT = g.transition_matrix.T.tocsr()
    worst = (math.inf, 0, 0)
    for x in np.atleast_1d(starts):
        p = np.zeros(n)
        p[int(x)] = 1.0
        for t in range(t_max + 1):
            if t:
                p = PT @ p
            margin = math.exp(-(1.0 - rho) * t) - float(np.abs(p - 1.0 / n).max())
            if margin < worst[0]:
                worst = (margin, t, int(x))
    return MixingReport(worst[0] >= -1e-15, worst[0], worst[1], worst[2], g.is_bipartite)


@dataclass
class ExpanderReport:
    n: int
    d: int
    lambda2_abs: float
    connected: bool
    bipartite: bool
    resistance_diameter_sample: float

    def to_json(self) -> str:
        return json.dumps(asdict(self), sort_keys=True)


def expander_report(g: Graph, seed=0, n_pairs: int = 16, iterations: int = 5000) -> ExpanderReport:
    from .electrical import effective_resistance

    validate(g)
    rng = np.random.Generator(np.random.PCG64(np.random.SeedSequence(_seed_words(seed) + [1])))
    r_max = 0.0
    for _ in range(n_pairs):
        a, b = rng.choice(g.n_vertices, size=2, replace=False)
        r_max = max(r_max, effective_resistance(g, [int(a)], [int(b)]))
    lam = estimate_lambda2(g, iterations=iterations, seed=seed)
    return ExpanderReport(g.n_vertices, int(g.degrees[0]), lam, g.is_connected,
                          g.is_bipartite, r_max)


__all__ = ["random_regular", "decorate", "estimate_lambda2", "check_mixing_bound",
           "MixingReport", "ExpanderReport", "expander_report"]
