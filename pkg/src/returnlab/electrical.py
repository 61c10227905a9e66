"""Electrical-network view of a graph: potentials, currents, resistances,
escape probabilities and expected hitting times.

Vertex sets on either side of a resistance are short-circuited (held at a
common potential), which is the usual network reduction for resistance to a
set. Loops carry no current and are ignored by the Laplacian.
"""

from __future__ import annotations

import io
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .graphcore import Graph, GraphError

DENSE_LIMIT = 500
DIRECT_LIMIT = 200_000
RTOL = 1e-12


@dataclass(frozen=True, eq=False)
class Network:
    graph: Graph
    conductance: np.ndarray | None = None

    def __post_init__(self):
        if self.conductance is not None:
            c = np.asarray(self.conductance, dtype=float)
            if c.shape != (self.graph.n_edges,) or np.any(c <= 0):
                raise GraphError("need one positive conductance per edge")
            object.__setattr__(self, "conductance", c)

    @property
    def weights(self) -> np.ndarray:
        if self.conductance is None:
            return np.ones(self.graph.n_edges)
        return self.conductance

    def laplacian(self) -> sp.csr_matrix:
        g = self.graph
        u, w = g.edges[:, 0], g.edges[:, 1]
        keep = u != w
        u, w, c = u[keep], w[keep], self.weights[keep]
        n = g.n_vertices
        A = sp.coo_matrix((np.concatenate([c, c]), (np.concatenate([u, w]), np.concatenate([w, u]))),
                          shape=(n, n)).tocsr()
        return (sp.diags(np.asarray(A.sum(axis=1)).ravel()) - A).tocsr()


def _as_network(net) -> Network:
    return net if isinstance(net, Network) else Network(net)


def _vertex_set(g: Graph, S) -> np.ndarray:
    arr = np.unique(np.atleast_1d(np.asarray(S, dtype=np.int64)))
    if len(arr) == 0:
        raise GraphError("vertex set must be nonempty")
    for v in arr:
        g._check_vertex(v)
    return arr


def _solve_spd(A: sp.csr_matrix, b: np.ndarray) -> np.ndarray:
    if A.shape[0] <= DENSE_LIMIT:
        return np.linalg.solve(A.toarray(), b)
    if A.shape[0] <= DIRECT_LIMIT:
        return spla.spsolve(A.tocsc(), b)
    diag = A.diagonal()
    M = sp.diags(1.0 / diag)
    x, info = spla.cg(A, b, rtol=RTOL, atol=0.0, M=M, maxiter=20 * A.shape[0])
    if info != 0:
        x = spla.spsolve(A.tocsc(), b)
    return x


@dataclass
class Potential:
    """Potential of a unit current from ``source`` (f = 0) to ``sink`` (f = R)."""

    graph: Graph
    f: np.ndarray
    source: np.ndarray
    sink: np.ndarray
    resistance: float
    network: Network | None = None

    def harmonic_residual(self) -> float:
        """max |f(u) - weighted neighbor average| off source and sink."""
        net = self.network or Network(self.graph)
        L = net.laplacian()
        deg = L.diagonal()
        r = np.abs(L @ self.f) / np.where(deg > 0, deg, 1.0)
        r[self.source] = 0.0
        r[self.sink] = 0.0
        return float(r.max())

    def to_csv(self) -> str:
        buf = io.StringIO()
        buf.write("vertex,f\n")
        for v, x in enumerate(self.f.tolist()):
            buf.write(f"{v},{format(x, '.17g')}\n")
        return buf.getvalue()


@dataclass
class Flow:
    """Current on each non-loop edge, oriented ``tail -> head``.

    ``i(tail, head) = c * (f(head) - f(tail))``: current runs up the potential
    from the source set into the sink set; the reverse orientation carries
    the negated value.
    """

    tail: np.ndarray
    head: np.ndarray
    current: np.ndarray
    n_vertices: int

    def divergence(self) -> np.ndarray:
        """Net current leaving each vertex."""
        out = np.zeros(self.n_vertices)
        np.add.at(out, self.tail, self.current)
        np.add.at(out, self.head, -self.current)
        return out

    def net_outflow(self, S) -> float:
        return float(self.divergence()[np.atleast_1d(S)].sum())

    def to_csv(self) -> str:
        buf = io.StringIO()
        buf.write("u,v,i\n")
        for a, b, x in zip(self.tail.tolist(), self.head.tolist(), self.current.tolist()):
            buf.write(f"{a},{b},{format(x, '.17g')}\n")
        return buf.getvalue()


def solve_potential(net, S, T) -> Potential:
    """Harmonic potential with f = 0 on S and f = R_eff(S <-> T) on T.

    Solves the Dirichlet problem with boundary values 0 and 1, reads off the
    effective conductance from the current leaving S, then rescales so the
    current is a unit flow.
    """
    net = _as_network(net)
    g = net.graph
    S, T = _vertex_set(g, S), _vertex_set(g, T)
    if np.intersect1d(S, T).size:
        raise GraphError("source and sink sets must be disjoint")
    L = net.laplacian()
    n = g.n_vertices
    f = np.zeros(n)
    f[T] = 1.0
    interior = np.setdiff1d(np.arange(n), np.concatenate([S, T]))
    if interior.size:
        L_II = L[interior][:, interior]
        b = -(L[interior][:, T] @ np.ones(len(T)))
        f[interior] = _solve_spd(L_II.tocsr(), b)
    conductance = -float((L @ f)[S].sum())
    if conductance <= 0:
        raise GraphError("source and sink are not connected")
    R = 1.0 / conductance
    return Potential(g, f * R, S, T, R, net)


def effective_resistance(net, S, T) -> float:
    return solve_potential(net, S, T).resistance


def current_flow(p: Potential) -> Flow:
    net = p.network or Network(p.graph)
    e = p.graph.edges
    keep = e[:, 0] != e[:, 1]
    tail, head = e[keep, 0], e[keep, 1]
    c = net.weights[keep]
    return Flow(tail, head, c * (p.f[head] - p.f[tail]), p.graph.n_vertices)


def escape_probability(net, v: int, A) -> float:
    """P_v(walk reaches A before returning to v) = 1 / (d_v R_eff(v <-> A))."""
    net = _as_network(net)
    g = net.graph
    A = _vertex_set(g, A)
    if v in A:
        raise GraphError("v must not lie in the target set")
    return 1.0 / (g.degree(v) * effective_resistance(net, [v], A))


def expected_hitting_times(g: Graph, A) -> np.ndarray:
    """Vector u -> E_u[tau_A], with tau_A = 0 when starting in A."""
    A = _vertex_set(g, A)
    n = g.n_vertices
    rest = np.setdiff1d(np.arange(n), A)
    out = np.zeros(n)
    if rest.size == 0:
        return out
    # (D - A) h = d on the complement of A: symmetric, refined once
    L = Network(g).laplacian().tocsr()
    M = L[rest][:, rest].tocsc()
    b = g.degrees[rest].astype(float)
    lu = spla.splu(M)
    x = lu.solve(b)
    x += lu.solve(b - M @ x)
    out[rest] = x
    return out


def expected_hitting_time(g: Graph, start: int, A) -> float:
    g._check_vertex(start)
    if start in np.atleast_1d(A):
        return 0.0
    return float(expected_hitting_times(g, A)[start])


def commute_identity_residual(g: Graph, x: int, y: int) -> float:
    """|E_x tau_y + E_y tau_x - (sum of degrees) R_eff(x <-> y)|, relative."""
    commute = expected_hitting_time(g, x, [y]) + expected_hitting_time(g, y, [x])
    rhs = float(g.degrees.sum()) * effective_resistance(g, [x], [y])
    return abs(commute - rhs) / max(1.0, rhs)


def lipschitz_margin(p: Potential) -> float:
    """Largest potential drop across a single edge (at most 1 for unit resistances)."""
    e = p.graph.edges
    e = e[e[:, 0] != e[:, 1]]
    if len(e) == 0:
        return 0.0
    return float(np.abs(p.f[e[:, 0]] - p.f[e[:, 1]]).max())


@dataclass
class Cut:
    inside: np.ndarray
    boundary: np.ndarray
    threshold: float
    resistance_to_boundary: float
    sandwich_ok: bool


def sublevel_cut(p: Potential, s: float, tol: float = 1e-9) -> Cut:
    """Cut S = {u : f(u) < s} and its outer vertex boundary N(S).

    Also reports whether s <= R_eff(source <-> N(S)) <= s + 1, which follows
    from the edge increments of a unit-current potential being at most 1.
    """
    fmax = float(p.f.max())
    if not 0.0 < s < fmax:
        raise GraphError(f"threshold must lie in (0, {fmax:g})")
    g = p.graph
    inside = np.nonzero(p.f < s)[0]
    mask = np.zeros(g.n_vertices, dtype=bool)
    mask[inside] = True
    nbrs = set()
    for u in inside:
        for w in g.neighbors(u):
            if not mask[w]:
                nbrs.add(int(w))
    if not nbrs:
        raise GraphError("sublevel set has empty outer boundary", check="degenerate-cut")
    boundary = np.array(sorted(nbrs), dtype=np.int64)
    R = effective_resistance(p.network or g, p.source, boundary)
    ok = s - tol <= R <= s + 1.0 + tol
    return Cut(inside, boundary, s, R, ok)
