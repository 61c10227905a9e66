"""Graph representation, builders for the graph families under study, and
the plain-text edge-list format.

Graphs are immutable. The primary store is the edge array in insertion
order; adjacency (CSR) and degrees are derived on first use. A loop ``(u, u)``
appears once in ``u``'s adjacency list and contributes 1 to its degree, so a
walker at ``u`` stays put with probability ``loops(u) / deg(u)``.

Infinite graphs (the half-line, Z, the sharpness constructions) are handled
by exact truncation: a builder records the vertices where the truncation cuts
the graph in ``meta["boundary"]``. Walk probabilities up to time ``T`` from a
vertex whose distance to the boundary is at least ``T`` coincide with those
of the infinite graph.
"""

from __future__ import annotations

import math
import warnings
from collections import deque
from dataclasses import dataclass, field
from functools import cached_property
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np
import scipy.sparse as sp
from scipy.sparse import csgraph


class GraphError(ValueError):
    """Raised for invalid parameters or graphs failing a structural check.

    ``check`` names the failed check (e.g. ``"symmetry"``, ``"connectivity"``)
    so that callers can report it.
    """

    def __init__(self, message: str, check: str = "invalid-parameter"):
        super().__init__(message)
        self.check = check


class SeqCondWarning(UserWarning):
    """Construction parameters violate the scaled growth condition."""


@dataclass(frozen=True, eq=False)
class Graph:
    n_vertices: int
    edges: np.ndarray
    heights: np.ndarray | None = None
    name: str = ""
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        edges = np.asarray(self.edges, dtype=np.int64).reshape(-1, 2)
        edges.setflags(write=False)
        object.__setattr__(self, "edges", edges)
        if self.heights is not None:
            h = np.asarray(self.heights, dtype=np.int64)
            h.setflags(write=False)
            object.__setattr__(self, "heights", h)
        if edges.size and (edges.min() < 0 or edges.max() >= self.n_vertices):
            raise GraphError("edge endpoint out of range", check="vertex-range")

    # derived structure ----------------------------------------------------

    @cached_property
    def _csr(self) -> tuple[np.ndarray, np.ndarray]:
        u, v = self.edges[:, 0], self.edges[:, 1]
        nonloop = u != v
        # each edge in insertion order contributes u->v, and v->u unless a loop
        src = np.concatenate([u, v[nonloop]])
        dst = np.concatenate([v, u[nonloop]])
        order = np.concatenate([2 * np.arange(len(u)), 2 * np.nonzero(nonloop)[0] + 1])
        perm = np.lexsort((order, src))
        indices = dst[perm]
        counts = np.bincount(src, minlength=self.n_vertices)
        indptr = np.zeros(self.n_vertices + 1, dtype=np.int64)
        np.cumsum(counts, out=indptr[1:])
        indptr.setflags(write=False)
        indices.setflags(write=False)
        return indptr, indices

    @property
    def indptr(self) -> np.ndarray:
        return self._csr[0]

    @property
    def indices(self) -> np.ndarray:
        return self._csr[1]

    @cached_property
    def degrees(self) -> np.ndarray:
        d = np.diff(self.indptr)
        d.setflags(write=False)
        return d

    @cached_property
    def loop_counts(self) -> np.ndarray:
        loops = self.edges[self.edges[:, 0] == self.edges[:, 1], 0]
        return np.bincount(loops, minlength=self.n_vertices)

    @property
    def n_edges(self) -> int:
        return len(self.edges)

    def neighbors(self, v: int) -> np.ndarray:
        self._check_vertex(v)
        return self.indices[self.indptr[v]:self.indptr[v + 1]]

    def degree(self, v: int) -> int:
        self._check_vertex(v)
        return int(self.degrees[v])

    def adjacency(self) -> list[list[int]]:
        ip, ind = self.indptr, self.indices
        return [ind[ip[v]:ip[v + 1]].tolist() for v in range(self.n_vertices)]

    @cached_property
    def adjacency_matrix(self) -> sp.csr_matrix:
        """Sparse matrix whose (u, w) entry counts the u->w adjacency slots."""
        data = np.ones(len(self.indices), dtype=np.float64)
        a = sp.csr_matrix((data, self.indices, self.indptr),
                          shape=(self.n_vertices, self.n_vertices))
        a.sum_duplicates()
        return a

    @cached_property
    def transition_matrix(self) -> sp.csr_matrix:
        return sp.diags(1.0 / self.degrees) @ self.adjacency_matrix

    def _check_vertex(self, v) -> None:
        if not (0 <= int(v) < self.n_vertices):
            raise GraphError(f"vertex {v} not in graph {self.name!r}", check="vertex-range")

    # properties -----------------------------------------------------------

    @cached_property
    def is_connected(self) -> bool:
        if self.n_vertices == 0:
            return False
        n_comp, _ = csgraph.connected_components(self.adjacency_matrix, directed=False)
        return n_comp == 1

    @cached_property
    def is_bipartite(self) -> bool:
        if self.loop_counts.any():
            return False
        color = np.full(self.n_vertices, -1, dtype=np.int64)
        for s in range(self.n_vertices):
            if color[s] >= 0:
                continue
            color[s] = 0
            queue = deque([s])
            while queue:
                u = queue.popleft()
                for w in self.neighbors(u):
                    if color[w] < 0:
                        color[w] = 1 - color[u]
                        queue.append(w)
                    elif color[w] == color[u]:
                        return False
        return True

    @property
    def is_regular(self) -> bool:
        return bool(self.n_vertices) and bool(np.all(self.degrees == self.degrees[0]))

    def distances_from(self, sources) -> np.ndarray:
        """Graph distance from the nearest of ``sources`` (inf if unreachable)."""
        sources = np.atleast_1d(np.asarray(sources, dtype=np.int64))
        dist = csgraph.shortest_path(self.adjacency_matrix, directed=False,
                                     unweighted=True, indices=sources)
        return np.atleast_2d(dist).min(axis=0)

    def exactness_radius(self, v: int) -> float:
        """Distance from ``v`` to the truncation boundary (inf for finite graphs)."""
        boundary = self.meta.get("boundary", ())
        if len(boundary) == 0:
            return math.inf
        return float(self.distances_from(boundary)[v])

    def with_meta(self, **updates) -> "Graph":
        meta = dict(self.meta)
        meta.update(updates)
        return Graph(self.n_vertices, self.edges, self.heights, self.name, meta)

    def __eq__(self, other):
        if not isinstance(other, Graph):
            return NotImplemented
        if self.n_vertices != other.n_vertices or not np.array_equal(self.edges, other.edges):
            return False
        if (self.heights is None) != (other.heights is None):
            return False
        return self.heights is None or np.array_equal(self.heights, other.heights)

    __hash__ = None

    def __repr__(self):
        return f"Graph(name={self.name!r}, n_vertices={self.n_vertices}, n_edges={self.n_edges})"


def validate(g: Graph, allow_multi: bool = False) -> Graph:
    """Check the structural invariants; return ``g`` or raise :class:`GraphError`."""
    if g.n_vertices < 1:
        raise GraphError("graph has no vertices", check="vertex-range")
    if np.any(g.degrees < 1):
        v = int(np.argmin(g.degrees))
        raise GraphError(f"vertex {v} has degree 0", check="degree")
    if not allow_multi:
        e = g.edges[g.edges[:, 0] != g.edges[:, 1]]
        key = np.sort(e, axis=1)
        if len(np.unique(key, axis=0)) != len(key):
            raise GraphError("multi-edge present", check="multi-edge")
    if not g.is_connected:
        raise GraphError(f"graph {g.name!r} is not connected", check="connectivity")
    if g.heights is not None:
        if len(g.heights) != g.n_vertices or np.any(g.heights < 0):
            raise GraphError("heights must be nonnegative, one per vertex", check="heights")
    return g


def from_adjacency(adj: Sequence[Iterable[int]], name: str = "", heights=None) -> Graph:
    """Build a graph from per-vertex neighbor lists, checking symmetry.

    A vertex listed in its own list encodes one loop per occurrence.
    """
    n = len(adj)
    lists = [list(map(int, a)) for a in adj]
    counts: dict[tuple[int, int], int] = {}
    for u, nbrs in enumerate(lists):
        for w in nbrs:
            if not 0 <= w < n:
                raise GraphError(f"vertex {u} lists neighbor {w} outside 0..{n - 1}",
                                 check="vertex-range")
            counts[(u, w)] = counts.get((u, w), 0) + 1
    edges = []
    for (u, w), c in sorted(counts.items()):
        if u == w:
            edges.extend([(u, u)] * c)
        elif counts.get((w, u), 0) != c:
            raise GraphError(f"adjacency not symmetric between {u} and {w}", check="symmetry")
        elif u < w:
            edges.extend([(u, w)] * c)
    return Graph(n, np.array(edges, dtype=np.int64).reshape(-1, 2), heights, name)


# builders -----------------------------------------------------------------

def _require(cond: bool, msg: str) -> None:
    if not cond:
        raise GraphError(msg)


def _path_edges(n_vertices: int, offset: int = 0) -> np.ndarray:
    k = np.arange(n_vertices - 1, dtype=np.int64) + offset
    return np.stack([k, k + 1], axis=1)


def build_path(n: int) -> Graph:
    """Finite path 0-1-...-n (no truncation semantics)."""
    _require(n >= 1, "path length must be >= 1")
    return Graph(n + 1, _path_edges(n + 1), name=f"path:{n}")


def build_halfline(length: int) -> Graph:
    """Truncation of N to {0..length}; heights h(v) = v."""
    _require(length >= 1, "half-line length must be >= 1")
    return Graph(length + 1, _path_edges(length + 1), np.arange(length + 1),
                 name=f"halfline:{length}", meta={"boundary": [length], "center": 0})


def build_segment(radius: int) -> Graph:
    """Truncation of Z to {-radius..radius}, relabeled 0..2*radius; center = radius."""
    _require(radius >= 1, "segment radius must be >= 1")
    n = 2 * radius + 1
    return Graph(n, _path_edges(n), name=f"segment:{radius}",
                 meta={"boundary": [0, n - 1], "center": radius})


def build_star_halfline(length: int, pendants: int) -> Graph:
    """Half-line with ``pendants`` extra leaves hanging off vertex 0."""
    _require(length >= 1 and pendants >= 0, "need length >= 1, pendants >= 0")
    line = build_halfline(length)
    if pendants == 0:
        return line
    leaves = np.arange(length + 1, length + 1 + pendants, dtype=np.int64)
    extra = np.stack([np.zeros_like(leaves), leaves], axis=1)
    heights = np.concatenate([line.heights, np.zeros(pendants, dtype=np.int64)])
    return Graph(length + 1 + pendants, np.vstack([line.edges, extra]), heights,
                 name=f"star:{length}:{pendants}", meta=dict(line.meta))


def build_cycle(n: int) -> Graph:
    _require(n >= 3, "cycle needs n >= 3")
    k = np.arange(n, dtype=np.int64)
    return Graph(n, np.stack([k, (k + 1) % n], axis=1), name=f"cycle:{n}")


def build_complete(n: int) -> Graph:
    _require(n >= 2, "complete graph needs n >= 2")
    iu = np.triu_indices(n, k=1)
    return Graph(n, np.stack(iu, axis=1), name=f"complete:{n}")


def build_torus(a: int, b: int) -> Graph:
    """a x b discrete torus; vertex (i, j) -> i * b + j."""
    _require(a >= 3 and b >= 3, "torus sides must be >= 3")
    i, j = np.meshgrid(np.arange(a), np.arange(b), indexing="ij")
    v = (i * b + j).ravel()
    right = (i * b + (j + 1) % b).ravel()
    down = (((i + 1) % a) * b + j).ravel()
    edges = np.vstack([np.stack([v, right], 1), np.stack([v, down], 1)])
    return Graph(a * b, edges, name=f"torus:{a}:{b}")


def disjoint_union(a: Graph, b: Graph, name: str = "") -> Graph:
    edges = np.vstack([a.edges, b.edges + a.n_vertices])
    heights = None
    if a.heights is not None or b.heights is not None:
        ha = a.heights if a.heights is not None else np.zeros(a.n_vertices, np.int64)
        hb = b.heights if b.heights is not None else np.zeros(b.n_vertices, np.int64)
        heights = np.concatenate([ha, hb])
    boundary = list(a.meta.get("boundary", [])) + [
        x + a.n_vertices for x in b.meta.get("boundary", [])]
    meta = {k: v for k, v in a.meta.items() if k != "boundary"}
    if boundary:
        meta["boundary"] = boundary
    return Graph(a.n_vertices + b.n_vertices, edges, heights, name or a.name, meta)


def attach_expander(base: Graph, anchor: int, expander: Graph, port: int) -> Graph:
    """Disjoint union of ``base`` and ``expander`` plus the edge {anchor, port}.

    Expander vertices are relabeled ``base.n_vertices + w`` and inherit the
    height of ``anchor``.
    """
    base._check_vertex(anchor)
    expander._check_vertex(port)
    h_anchor = int(base.heights[anchor]) if base.heights is not None else 0
    ex = Graph(expander.n_vertices, expander.edges,
               np.full(expander.n_vertices, h_anchor, dtype=np.int64), expander.name)
    g = disjoint_union(base, ex, name=base.name)
    bridge = np.array([[anchor, base.n_vertices + port]], dtype=np.int64)
    return Graph(g.n_vertices, np.vstack([g.edges, bridge]), g.heights, g.name, g.meta)


def expander_size_for(t: int, delta: float) -> float:
    """Unrounded expander size 3 log(1/delta) t / (delta log t)."""
    return 3.0 * math.log(1.0 / delta) * t / (delta * math.log(t))


def build_Gt(t: int, delta: float = 0.1, expander_degree: int = 3, seed: int = 0,
             length: int | None = None) -> Graph:
    """Half-line of length >= t with a d-regular expander hung off vertex 0.

    The expander size is ``ceil(3 log(1/delta) t / (delta log t))``, bumped
    to the next value with ``n * d`` even.
    """
    from .expander import random_regular

    _require(t >= 3, "G_t needs t >= 3")
    _require(0.0 < delta < 1.0, "delta must lie in (0, 1)")
    d = expander_degree
    n = math.ceil(expander_size_for(t, delta))
    if n < d + 1:
        raise GraphError(f"expander size {n} < d + 1 = {d + 1}")
    if (n * d) % 2:
        n += 1
    length = t if length is None else length
    _require(length >= t, "half-line length must be >= t")
    ex = random_regular(n, d, seed)
    g = attach_expander(build_halfline(length), 0, ex, 0)
    meta = dict(g.meta, expander_size=n, expander_port=length + 1, t=t, delta=delta)
    return Graph(g.n_vertices, g.edges, g.heights, f"Gt:{t}:{delta}:{d}", meta)


@dataclass(frozen=True)
class ConstructionParams:
    heights: tuple[int, ...]
    expander_sizes: tuple[int, ...]
    expander_degree: int = 3
    seed: int = 0

    def __post_init__(self):
        h, n = tuple(map(int, self.heights)), tuple(map(int, self.expander_sizes))
        object.__setattr__(self, "heights", h)
        object.__setattr__(self, "expander_sizes", n)
        _require(len(h) == len(n) and len(h) > 0, "heights and sizes must have equal nonzero length")
        _require(all(x > 0 for x in h + n), "heights and sizes must be positive")
        _require(all(a < b for a, b in zip(h, h[1:])), "heights must be strictly increasing")
        _require(self.expander_degree >= 3, "expander degree must be >= 3")
        for i, (hi, ni) in enumerate(zip(h, n)):
            if ni < hi ** 3:
                warnings.warn(f"n_{i + 1}={ni} < h_{i + 1}^3={hi ** 3}", SeqCondWarning, stacklevel=3)
            if i and hi <= n[i - 1] * h[i - 1] ** 2:
                warnings.warn(f"h_{i + 1}={hi} <= n_{i} h_{i}^2={n[i - 1] * h[i - 1] ** 2}",
                              SeqCondWarning, stacklevel=3)

    @property
    def windows(self) -> list[int]:
        """Scale boundaries T_0 = 0, T_i = T_{i-1} + n_i h_i^2."""
        out = [0]
        for h, n in zip(self.heights, self.expander_sizes):
            out.append(out[-1] + n * h * h)
        return out


SMALL_PRESET = dict(heights=(4,), expander_sizes=(64,))
MEDIUM_PRESET = dict(heights=(4, 16), expander_sizes=(64, 4096))


def build_full_construction(params: ConstructionParams, buffer: int = 64) -> Graph:
    """Half-line of length max(h) + buffer with expander E_i hung off h_i.

    ``meta["expanders"]`` lists ``(first_vertex, size, port)`` per scale, and
    ``meta["expander_id"]`` maps every vertex to its scale index (-1 off the
    expanders).
    """
    from .expander import random_regular

    _require(buffer >= 0, "buffer must be >= 0")
    length = max(params.heights) + buffer
    g = build_halfline(length)
    blocks = []
    for i, (h, n) in enumerate(zip(params.heights, params.expander_sizes)):
        ex = random_regular(n, params.expander_degree, (params.seed, i))
        first = g.n_vertices
        g = attach_expander(g, h, ex, 0)
        blocks.append((first, n, first))
    expander_id = np.full(g.n_vertices, -1, dtype=np.int64)
    for i, (first, n, _) in enumerate(blocks):
        expander_id[first:first + n] = i
    name = "construction:{}:{}".format(",".join(map(str, params.heights)),
                                       ",".join(map(str, params.expander_sizes)))
    meta = dict(g.meta, expanders=blocks, expander_id=expander_id)
    return Graph(g.n_vertices, g.edges, g.heights, name, meta)


def comb_product(G: Graph, H: Graph, v: int) -> Graph:
    """Comb_v(G, H): a copy of H at every vertex of G, copies joined at v.

    Vertex ``(x, w)`` has id ``x * |H| + w``.
    """
    H._check_vertex(v)
    nh = H.n_vertices
    xs = np.arange(G.n_vertices, dtype=np.int64)[:, None, None] * nh
    teeth = (xs + H.edges[None, :, :]).reshape(-1, 2)
    spine = G.edges * nh + v
    edges = np.vstack([teeth, spine])
    return Graph(G.n_vertices * nh, edges, name=f"comb({G.name},{H.name},{v})",
                 meta={"comb_shape": (G.n_vertices, nh), "comb_vertex": v})


def add_loops(g: Graph, v: int, count: int) -> Graph:
    """Return ``g`` with ``count`` extra loops at ``v``."""
    g._check_vertex(v)
    _require(count >= 0, "loop count must be >= 0")
    if count == 0:
        return g
    loops = np.full((count, 2), v, dtype=np.int64)
    return Graph(g.n_vertices, np.vstack([g.edges, loops]), g.heights, g.name, dict(g.meta))


@dataclass(frozen=True)
class TruncationSpec:
    center: int
    radius: int
    horizon: int

    def __post_init__(self):
        _require(self.radius >= 1 and self.horizon >= 1, "radius and horizon must be positive")
        _require(self.radius >= self.horizon,
                 f"radius {self.radius} < horizon {self.horizon}: truncation would not be exact")


# edge-list format ---------------------------------------------------------

def write_edgelist(g: Graph) -> str:
    lines = [f"{g.n_vertices} {g.n_edges}"]
    lines.extend(f"{u} {w}" for u, w in g.edges.tolist())
    if g.heights is not None:
        lines.extend(f"H {v} {h}" for v, h in enumerate(g.heights.tolist()))
    return "\n".join(lines) + "\n"


def read_edgelist(text: str, name: str = "") -> Graph:
    """Parse the edge-list format; errors carry 1-based line numbers."""
    raw = text.splitlines()
    rows = [(i + 1, ln.split()) for i, ln in enumerate(raw) if ln.strip()]
    if not rows:
        raise GraphError("empty edge list", check="format")
    lineno, head = rows[0]
    try:
        n, m = int(head[0]), int(head[1])
        if len(head) != 2:
            raise ValueError
    except (ValueError, IndexError):
        raise GraphError(f"line {lineno}: header must be 'n m'", check="format") from None
    body = rows[1:]
    edge_rows = [r for r in body if r[1][0] != "H"]
    height_rows = [r for r in body if r[1][0] == "H"]
    if len(edge_rows) != m:
        raise GraphError(f"header declares {m} edges, found {len(edge_rows)}", check="edge-count")
    if body and height_rows and body.index(height_rows[0]) < len(edge_rows):
        ln = height_rows[0][0]
        raise GraphError(f"line {ln}: height lines must follow all edges", check="format")
    edges = np.zeros((m, 2), dtype=np.int64)
    for k, (ln, tok) in enumerate(edge_rows):
        try:
            if len(tok) != 2:
                raise ValueError
            u, w = int(tok[0]), int(tok[1])
        except ValueError:
            raise GraphError(f"line {ln}: expected 'u v'", check="format") from None
        if not (0 <= u < n and 0 <= w < n):
            raise GraphError(f"line {ln}: vertex out of range 0..{n - 1}", check="vertex-range")
        edges[k] = u, w
    heights = None
    if height_rows:
        heights = np.full(n, -1, dtype=np.int64)
        for ln, tok in height_rows:
            try:
                if len(tok) != 3:
                    raise ValueError
                v, h = int(tok[1]), int(tok[2])
            except ValueError:
                raise GraphError(f"line {ln}: expected 'H v h'", check="format") from None
            if not 0 <= v < n or h < 0:
                raise GraphError(f"line {ln}: bad height entry", check="heights")
            heights[v] = h
        if np.any(heights < 0):
            raise GraphError("heights given for some vertices but not all", check="heights")
    return Graph(n, edges, heights, name)


def save_edgelist(g: Graph, path) -> None:
    Path(path).write_text(write_edgelist(g))


def load_edgelist(path, check: bool = True) -> Graph:
    path = Path(path)
    g = read_edgelist(path.read_text(), name=path.stem)
    return validate(g, allow_multi=True) if check else g
