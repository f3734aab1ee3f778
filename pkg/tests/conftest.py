import numpy as np
import pytest

from giohms import _kernels
from giohms.graph import Graph

ACCEPTANCE_RESULTS = []


@pytest.fixture(params=_kernels.available())
def backend(request):
    return request.param


def random_graph(n, p, seed):
    rng = np.random.default_rng(seed)
    edges = [(i, j) for i in range(n) for j in range(i + 1, n) if rng.random() < p]
    return Graph.from_edges(edges, vertices=range(n))


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for line in ACCEPTANCE_RESULTS:
        terminalreporter.write_line(line)


def random_ohms(seed, max_vertices=10, max_candidates=3, labels=5, edge_p=0.3, label_offset=0):
    """Small OHMS network with random observed distributions, candidates and edges.

    ``label_offset`` shifts every label id without changing label order.
    """
    from giohms.ohms import OHMSNetwork

    rng = np.random.default_rng(seed)
    n = int(rng.integers(1, max_vertices + 1))
    observed, candidates = {}, {}
    for v in range(n):
        k = int(rng.integers(1, max_candidates + 1))
        cands = (rng.choice(labels, size=k, replace=False) + label_offset).tolist()
        n_obs = int(rng.integers(1, k + 1))
        wts = rng.dirichlet(np.ones(n_obs))
        observed[v] = dict(zip(cands[:n_obs], wts.tolist()))
        # renormalize exactly to guard the 1e-9 check
        total = sum(observed[v].values())
        observed[v] = {lab: x / total for lab, x in observed[v].items()}
        candidates[v] = cands
    edges = [(u, v) for u in range(n) for v in range(u + 1, n) if rng.random() < edge_p]
    return OHMSNetwork.from_dicts(observed, candidates, edges)
