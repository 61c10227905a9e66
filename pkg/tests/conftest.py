import itertools
import warnings

import numpy as np
import pytest
from hypothesis import HealthCheck, settings
from hypothesis import strategies as st

from returnlab.graphcore import Graph, SeqCondWarning

settings.register_profile("default", deadline=None, max_examples=40,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")


@pytest.fixture(autouse=True)
def _quiet_seqcond():
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", SeqCondWarning)
        yield


@st.composite
def connected_graphs(draw, min_n=2, max_n=8, loops=False, max_extra=6):
    """Random connected simple graph: a random tree plus extra edges (and loops if asked)."""
    n = draw(st.integers(min_n, max_n))
    edges = [(draw(st.integers(0, i - 1)), i) for i in range(1, n)]
    present = {tuple(sorted(e)) for e in edges}
    candidates = [p for p in itertools.combinations(range(n), 2) if p not in present]
    if candidates:
        extra = draw(st.lists(st.sampled_from(candidates), max_size=max_extra, unique=True))
        edges += extra
    if loops:
        edges += [(v, v) for v in draw(st.lists(st.integers(0, n - 1), max_size=2))]
    return Graph(n, np.array(edges, dtype=np.int64), name=f"random:{n}")


def random_connected_graph(n, extra, seed):
    """Seeded counterpart of :func:`connected_graphs` for non-hypothesis tests."""
    rng = np.random.default_rng(seed)
    edges = {(int(rng.integers(0, i)), i) for i in range(1, n)}
    pairs = [p for p in itertools.combinations(range(n), 2) if p not in edges]
    pick = rng.choice(len(pairs), size=min(extra, len(pairs)), replace=False)
    edges = sorted(edges) + [pairs[i] for i in sorted(pick)]
    return Graph(n, np.array(edges, dtype=np.int64), name=f"random:{n}:{seed}")
