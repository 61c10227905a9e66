"""Parse compact graph specifications such as ``halfline:64`` or ``Gt:2000:0.1:3``."""

from __future__ import annotations

import warnings

from ..expander import decorate, random_regular
from ..graphcore import (
    MEDIUM_PRESET,
    SMALL_PRESET,
    ConstructionParams,
    Graph,
    GraphError,
    build_complete,
    build_cycle,
    build_full_construction,
    build_Gt,
    build_halfline,
    build_path,
    build_segment,
    build_star_halfline,
    build_torus,
    load_edgelist,
)

PRESETS = {"small": SMALL_PRESET, "medium": MEDIUM_PRESET}

GRAPH_SPEC_HELP = (
    "path:N | halfline:L | segment:R | star:L:P | cycle:N | complete:N | torus:A:B | "
    "expander:N:D | decorated:N:D | Gt:T[:DELTA[:D]] | "
    "construction:H1,H2,..:N1,N2,..[:BUFFER] | construction:small|medium[:BUFFER] | file:PATH"
)


def _ints(text: str) -> tuple[int, ...]:
    return tuple(int(x) for x in text.split(",") if x)


def parse_params(text: str, seed: int = 0) -> ConstructionParams:
    """``small``, ``medium`` or ``H1,H2:N1,N2``."""
    if text in PRESETS:
        return ConstructionParams(**PRESETS[text], seed=seed)
    try:
        hs, ns = text.split(":")
        return ConstructionParams(_ints(hs), _ints(ns), seed=seed)
    except ValueError as exc:
        if isinstance(exc, GraphError):
            raise
        raise GraphError(f"bad construction parameters {text!r}; expected H1,H2:N1,N2") from None


def parse_graph(spec: str, seed: int = 0) -> tuple[Graph, int]:
    """Build the graph named by ``spec``; returns (graph, default vertex)."""
    kind, _, rest = spec.partition(":")
    args = rest.split(":") if rest else []
    try:
        if kind == "file":
            g = load_edgelist(rest)
            return g, 0
        if kind == "construction":
            if not args:
                raise ValueError
            if args[0] in PRESETS:
                params = parse_params(args[0], seed)
                extra = args[1:]
            else:
                params = parse_params(":".join(args[:2]), seed)
                extra = args[2:]
            buffer = int(extra[0]) if extra else 64
            return build_full_construction(params, buffer), 0
        if kind == "Gt":
            t = int(args[0])
            delta = float(args[1]) if len(args) > 1 else 0.1
            d = int(args[2]) if len(args) > 2 else 3
            return build_Gt(t, delta, d, seed), 0
        ints = [int(a) for a in args]
        simple = {"path": (build_path, 1), "halfline": (build_halfline, 1),
                  "segment": (build_segment, 1), "star": (build_star_halfline, 2),
                  "cycle": (build_cycle, 1), "complete": (build_complete, 1),
                  "torus": (build_torus, 2)}
        if kind in simple:
            fn, arity = simple[kind]
            if len(ints) != arity:
                raise ValueError
            g = fn(*ints)
            return g, int(g.meta.get("center", 0))
        if kind in ("expander", "decorated"):
            n, d = ints
            ex = random_regular(n, d, seed)
            if kind == "expander":
                return ex, 0
            g, _ = decorate(ex, 0)
            return g, 0
    except (ValueError, IndexError) as exc:
        if isinstance(exc, GraphError):
            raise
        raise GraphError(f"bad graph spec {spec!r}; expected {GRAPH_SPEC_HELP}") from None
    raise GraphError(f"unknown graph kind {kind!r}; expected {GRAPH_SPEC_HELP}")


def quiet_parse_graph(spec: str, seed: int = 0) -> tuple[Graph, int, list[str]]:
    """parse_graph, collecting warnings instead of printing them."""
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        g, v = parse_graph(spec, seed)
    return g, v, [str(w.message) for w in caught]
