"""Exact return- and hitting-time distributions via the killed walk operator.

Everything here is computed by iterating the walk operator killed on hitting
a vertex ``v``. Float mode works on scipy sparse matrices; rational mode
(``exact=True``) uses :class:`fractions.Fraction` and is meant for graphs of
at most a dozen vertices.
"""

from __future__ import annotations

import io
import math
from dataclasses import dataclass, field
from fractions import Fraction
from math import lcm

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .graphcore import Graph, GraphError

THEOREM1_CONSTANT = 0.25
THEOREM2_CONSTANT = math.exp(10)
LATE_HAZARD_CONSTANT = 24.0
HAZARD_FLOOR = 1e-300
RATIONAL_MAX_VERTICES = 12


class TruncationWarning(UserWarning):
    pass


class KilledOperator:
    """Walk operator on V \\ {v} with mass stepping into ``v`` removed.

    Vectors are indexed by all of V; the entry at ``v`` is kept at zero.
    """

    def __init__(self, graph: Graph, absorbing: int):
        graph._check_vertex(absorbing)
        self.graph = graph
        self.absorbing = int(absorbing)
        P = graph.transition_matrix.tocsc()
        self._into_v = np.asarray(P[:, self.absorbing].todense()).ravel()
        keep = np.ones(graph.n_vertices)
        keep[self.absorbing] = 0.0
        K = sp.diags(keep)
        self._Q = (K @ graph.transition_matrix @ K).tocsr()
        self._QT = self._Q.T.tocsr()
        self._keep = keep

    def step(self, mass: np.ndarray) -> tuple[np.ndarray, float]:
        """Push a mass vector one step; returns (surviving mass, absorbed mass)."""
        absorbed = float(mass @ self._into_v)
        return self._QT @ mass, absorbed

    def apply(self, f: np.ndarray) -> np.ndarray:
        """(Q f)(u) = (1/d_u) sum over neighbors w != v of f(w); zero at v."""
        return self._Q @ f

    def hit_in_one(self) -> np.ndarray:
        """h(u) = P_u(tau_v = 1) for u != v (zero at v)."""
        return self._into_v * self._keep

    def inner(self, f: np.ndarray, g: np.ndarray) -> float:
        return float(np.sum(self.graph.degrees * self._keep * f * g))


@dataclass
class ReturnTimeTable:
    """Return-time law of vertex ``v`` up to ``horizon``, indexed by t.

    ``p[t] = P_v(tau_v = t)``, ``s[t] = P_v(tau_v >= t)`` and
    ``hazard[t] = p[t] / s[t]`` for ``1 <= t <= horizon``; index 0 holds
    placeholders (p=0, s=1, hazard=nan). In rational mode the arrays have
    object dtype holding Fractions and undefined hazards are ``None``.
    """

    v: int
    horizon: int
    p: np.ndarray
    s: np.ndarray
    hazard: np.ndarray
    degree: int
    exact: bool = True
    rational: bool = False
    graph_name: str = ""
    notes: list = field(default_factory=list)

    def tail_mass(self) -> float:
        """P_v(tau_v > horizon)."""
        return self.s[self.horizon] - self.p[self.horizon]

    def to_csv(self) -> str:
        buf = io.StringIO()
        buf.write("t,p,s,hazard\n")
        for t in range(1, self.horizon + 1):
            h = self.hazard[t]
            buf.write(f"{t},{_fmt(self.p[t])},{_fmt(self.s[t])},{_fmt(h)}\n")
        return buf.getvalue()


def _fmt(x) -> str:
    if x is None:
        return "nan"
    return format(float(x), ".17g")


def _check_horizon(g: Graph, v: int, horizon: int, strict: bool) -> tuple[bool, list]:
    radius = g.exactness_radius(v)
    if radius >= horizon:
        return True, []
    msg = f"horizon {horizon} exceeds truncation radius {radius:g} at vertex {v}"
    if strict:
        raise GraphError(msg, check="truncation")
    return False, [msg]


def return_time_distribution(g: Graph, v: int, horizon: int, exact: bool = False,
                             strict: bool = False) -> ReturnTimeTable:
    """Exact law of the first return time to ``v`` up to ``horizon``.

    Mass ``1/d_v`` per incident edge is placed on the neighbors of ``v``
    (loops at ``v`` are absorbed at once, giving ``p[1] = loops(v)/d_v``) and
    pushed through the killed operator; the mass absorbed at step ``t`` is
    ``p[t]``. ``s[t]`` is the surviving mass before step ``t``, so tail values
    keep full relative precision.
    """
    if horizon < 1:
        raise GraphError("horizon must be >= 1")
    g._check_vertex(v)
    is_exact, notes = _check_horizon(g, v, horizon, strict)
    if exact:
        return _rational_table(g, v, horizon, is_exact, notes)
    op = KilledOperator(g, v)
    T = horizon
    p = np.zeros(T + 1)
    s = np.ones(T + 1)
    # the first step leaves v freely; loops at v count as an immediate return
    row = g.transition_matrix.getrow(v)
    mass = np.zeros(g.n_vertices)
    mass[row.indices] = row.data
    p[1] = mass[v]
    mass[v] = 0.0
    for t in range(2, T + 1):
        s[t] = mass.sum()
        mass, p[t] = op.step(mass)
    hazard = np.full(T + 1, np.nan)
    ok = s > HAZARD_FLOOR
    hazard[ok] = p[ok] / s[ok]
    hazard[0] = np.nan
    return ReturnTimeTable(int(v), T, p, s, hazard, g.degree(v), is_exact, False, g.name, notes)


def _rational_table(g: Graph, v: int, T: int, is_exact: bool, notes: list) -> ReturnTimeTable:
    if g.n_vertices > RATIONAL_MAX_VERTICES:
        raise GraphError(f"rational mode limited to {RATIONAL_MAX_VERTICES} vertices")
    adj = g.adjacency()
    deg = [len(a) for a in adj]
    p = np.array([Fraction(0)] * (T + 1), dtype=object)
    s = np.array([Fraction(1)] * (T + 1), dtype=object)
    hazard = np.array([None] * (T + 1), dtype=object)
    mass = [Fraction(0)] * g.n_vertices
    for w in adj[v]:
        mass[w] += Fraction(1, deg[v])
    p[1] = mass[v]
    mass[v] = Fraction(0)
    for t in range(2, T + 1):
        s[t] = sum(mass, Fraction(0))
        new = [Fraction(0)] * g.n_vertices
        for u, m in enumerate(mass):
            if m:
                share = m / deg[u]
                for w in adj[u]:
                    new[w] += share
        p[t] = new[v]
        new[v] = Fraction(0)
        mass = new
    for t in range(1, T + 1):
        if s[t]:
            hazard[t] = p[t] / s[t]
    return ReturnTimeTable(int(v), T, p, s, hazard, deg[v], is_exact, True, g.name, notes)


def enumerate_return_times(g: Graph, v: int, horizon: int) -> list[Fraction]:
    """Brute-force oracle: P_v(tau_v = t) for t = 0..horizon by listing every walk.

    Each walk from ``v`` that avoids ``v`` until its last step is visited
    explicitly. Weights are kept as integers over ``M**t`` with ``M`` the
    lcm of the degrees, so the result is exact. Cost grows like the number
    of such walks; keep graphs and horizons small.
    """
    adj = g.adjacency()
    M = lcm(*[len(a) for a in adj])
    share = [M // len(a) for a in adj]
    counts = [0] * (horizon + 1)
    stack = [(v, 0, 1)]
    while stack:
        u, t, w = stack.pop()
        if t == horizon:
            continue
        w2 = w * share[u]
        for x in adj[u]:
            if x == v:
                counts[t + 1] += w2
            else:
                stack.append((x, t + 1, w2))
    return [Fraction(c, M ** t) for t, c in enumerate(counts)]


def count_avoiding_walks(g: Graph, v: int, horizon: int) -> int:
    """Number of walk prefixes the enumeration oracle visits (for budgeting)."""
    A = g.adjacency_matrix.toarray().astype(np.int64).astype(object)
    x = A[v].copy()
    total = 0
    for _ in range(horizon):
        total += int(x.sum())
        x[v] = 0
        x = x @ A
    return total


def hitting_time_distribution(g: Graph, start: int, target: int, horizon: int) -> np.ndarray:
    """``P_start(tau_target = t)`` for t = 0..horizon (entry 0 is 0)."""
    if start == target:
        return return_time_distribution(g, target, horizon).p
    g._check_vertex(start)
    op = KilledOperator(g, target)
    out = np.zeros(horizon + 1)
    mass = np.zeros(g.n_vertices)
    mass[start] = 1.0
    for t in range(1, horizon + 1):
        mass, out[t] = op.step(mass)
    return out


def hitting_profiles(g: Graph, v: int, horizon: int) -> np.ndarray:
    """Rows ``t = 1..horizon``: vector ``u -> P_u(tau_v = t)`` for all ``u != v``.

    Computed backwards as ``Q^{t-1} h``; row ``t - 1`` holds time ``t``.
    The column at ``v`` is zero.
    """
    op = KilledOperator(g, v)
    out = np.zeros((horizon, g.n_vertices))
    h = op.hit_in_one()
    for t in range(horizon):
        out[t] = h
        h = op.apply(h)
    return out


def green_function(g: Graph, v: int) -> np.ndarray:
    """Expected visits to each u during one excursion from ``v`` (g(v) = 1).

    Solves the invariance equations g(u) = sum_w g(w) P(w, u) for u != v
    with g(v) = 1 on the finite graph.
    """
    g._check_vertex(v)
    n = g.n_vertices
    P = g.transition_matrix.tocsr()
    rest = np.array([u for u in range(n) if u != v])
    if len(rest) == 0:
        return np.ones(1)
    PT = P.T.tocsr()
    A = sp.identity(len(rest), format="csc") - PT[rest][:, rest].tocsc()
    b = np.asarray(P[v].todense()).ravel()[rest]
    x = spla.spsolve(A, b)
    if not np.all(np.isfinite(x)):
        raise RuntimeError("singular Green-function system")
    out = np.empty(n)
    out[v] = 1.0
    out[rest] = x
    return out


def check_reversibility_identity(g: Graph, v: int, t: int, profiles=None, table=None) -> float:
    """|P_v(tau = t) - (1/d_v) sum_{u != v} d_u P_u(tau_v = ceil(t/2)) P_u(tau_v = floor(t/2))|.

    The left side comes from the forward mass iteration, the right side from
    the backward hitting profiles.
    """
    if t < 2:
        raise GraphError("identity needs t >= 2")
    if table is None:
        table = return_time_distribution(g, v, t)
    if profiles is None:
        profiles = hitting_profiles(g, v, (t + 1) // 2)
    a, b = profiles[(t + 1) // 2 - 1], profiles[t // 2 - 1]
    rhs = float(np.sum(g.degrees * a * b)) / g.degree(v)
    return abs(float(table.p[t]) - rhs)


def reversibility_identity_exact(g: Graph, v: int, t: int) -> Fraction:
    """Signed residual of the split identity in rational arithmetic."""
    if t < 2:
        raise GraphError("identity needs t >= 2")
    adj = g.adjacency()
    deg = [len(a) for a in adj]
    n = g.n_vertices
    h = [Fraction(sum(1 for x in adj[u] if x == v), deg[u]) if u != v else Fraction(0)
         for u in range(n)]
    rows = [h]
    for _ in range((t + 1) // 2 - 1):
        prev = rows[-1]
        rows.append([Fraction(sum(prev[x] for x in adj[u] if x != v), deg[u]) if u != v
                     else Fraction(0) for u in range(n)])
    a, b = rows[(t + 1) // 2 - 1], rows[t // 2 - 1]
    rhs = sum((deg[u] * a[u] * b[u] for u in range(n) if u != v), Fraction(0)) / deg[v]
    lhs = return_time_distribution(g, v, t, exact=True).p[t]
    return lhs - rhs


def even_monotonicity_check(table: ReturnTimeTable, tol: float = 1e-14) -> tuple[bool, int | None]:
    """Check p[2t] >= p[2t+2]; returns (ok, first t with p[2t] < p[2t+2])."""
    for t in range(2, table.horizon - 1, 2):
        if table.p[t] < table.p[t + 2] - (0 if table.rational else tol):
            return False, t
    return True, None


def moment_sequence(table: ReturnTimeTable) -> np.ndarray:
    """m[k] = P_v(tau_v = k + 2) for k = 0..horizon-2."""
    return np.asarray(table.p[2:], dtype=float)


@dataclass
class HankelCheck:
    order: int
    min_eig: float
    min_eig_shifted: float | None
    ok: bool


def hankel_psd_check(m, order: int, tol: float = 1e-10) -> HankelCheck:
    """Smallest eigenvalues of H[i][j] = m[i+j] and of m[i+j] - m[i+j+2].

    Moments of a nonnegative measure on [-1, 1] give positive semidefinite
    matrices for both. The shifted matrix is skipped when ``m`` is too short.
    """
    m = np.asarray(m, dtype=float)
    if order < 1 or 2 * order - 1 > len(m):
        raise GraphError(f"order {order} needs at least {2 * order - 1} moments")
    idx = np.add.outer(np.arange(order), np.arange(order))
    lo = float(np.linalg.eigvalsh(m[idx]).min())
    lo_shift = None
    if 2 * order + 1 <= len(m):
        lo_shift = float(np.linalg.eigvalsh(m[idx] - m[idx + 2]).min())
    ok = lo >= -tol and (lo_shift is None or lo_shift >= -tol)
    return HankelCheck(order, lo, lo_shift, ok)


def theorem1_margin(table: ReturnTimeTable, d_v: int | None = None) -> tuple[float, int]:
    """min over 1 <= t <= horizon of d_v * sqrt(t) * P_v(tau_v >= t), and its argmin."""
    d = table.degree if d_v is None else d_v
    t = np.arange(1, table.horizon + 1)
    vals = d * np.sqrt(t) * np.asarray(table.s[1:], dtype=float)
    k = int(np.argmin(vals))
    return float(vals[k]), int(t[k])


@dataclass
class HazardProfile:
    profile: np.ndarray
    profile_log_t: np.ndarray
    max_value: float
    argmax: int
    within_e10: bool
    late_max: float | None
    late_threshold: float


def theorem2_hazard_profile(table: ReturnTimeTable, d_v: int | None = None) -> HazardProfile:
    """Normalized hazard t * hazard[t] / log(d_v t), indexed by t (entry 0 nan).

    Zero-probability times give 0; undefined hazards give nan. The
    alternative normalization ``t * hazard / log t`` is kept alongside, and
    ``late_max`` is its maximum over ``t >= e^10 / d_v`` when that range
    meets the horizon (compare against 24).
    """
    d = table.degree if d_v is None else d_v
    T = table.horizon
    prof = np.full(T + 1, np.nan)
    prof_t = np.full(T + 1, np.nan)
    for t in range(1, T + 1):
        h = table.hazard[t]
        pt = float(table.p[t])
        if pt == 0.0:
            prof[t] = prof_t[t] = 0.0
            continue
        if h is None or not np.isfinite(float(h)):
            continue
        h = float(h)
        if d * t > 1:
            prof[t] = t * h / math.log(d * t)
        if t > 1:
            prof_t[t] = t * h / math.log(t)
    finite = np.where(np.isfinite(prof), prof, -np.inf)
    k = int(np.argmax(finite))
    threshold = THEOREM2_CONSTANT / d
    late = prof_t[int(math.ceil(threshold)):] if threshold <= T else np.array([])
    late = late[np.isfinite(late)]
    return HazardProfile(prof, prof_t, float(finite[k]), k,
                         bool(np.all(finite <= THEOREM2_CONSTANT)),
                         float(late.max()) if len(late) else None, threshold)
