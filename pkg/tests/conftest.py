import numpy as np
import pytest

from nilclt.graph import QuotientGraph, TransitionKernel, build_hexagonal_heisenberg
from nilclt.liegroup import GradedAlgebra


def hex_params(rng):
    """Random admissible (alpha, beta, gamma, alpha', beta', gamma')."""
    a = rng.dirichlet([2.0, 2.0, 2.0])
    b = rng.dirichlet([2.0, 2.0, 2.0])
    # dirichlet output sums to 1 only up to rounding
    a[2] = 1.0 - a[0] - a[1]
    b[2] = 1.0 - b[0] - b[1]
    return (*a, *b)


def hats(params):
    a, b, c, ap, bp, cp = params
    return (a + ap, b + bp, c + cp), (a - ap, b - bp, c - cp)


def random_heisenberg_kernel(rng, n_vertices=4, extra_pairs=4, loops=True):
    """Connected quotient over the Heisenberg algebra with integer voltages
    and a strictly positive random kernel."""
    alg = GradedAlgebra.heisenberg()
    pairs = []
    for v in range(1, n_vertices):
        pairs.append((int(rng.integers(v)), v, rng.integers(-1, 2, size=3).astype(float)))
    for _ in range(extra_pairs):
        o, t = rng.integers(n_vertices, size=2)
        pairs.append((int(o), int(t), rng.integers(-1, 2, size=3).astype(float)))
    if loops:
        pairs.append((0, 0, np.array([1.0, 0.0, 0.0])))
        pairs.append((n_vertices - 1, n_vertices - 1, np.array([0.0, 1.0, 0.0])))
    graph = QuotientGraph.from_pairs(alg, [f"v{i}" for i in range(n_vertices)], pairs)
    w = rng.uniform(0.1, 1.0, size=graph.n_edges)
    sums = np.bincount(graph.origin, weights=w, minlength=n_vertices)
    p = w / sums[graph.origin]
    p = _exact_rows(graph, p)
    return graph, TransitionKernel(graph, p)


def _exact_rows(graph, p):
    # put the rounding residue on the largest entry of each row
    p = p.copy()
    for x in range(graph.n_vertices):
        e = np.flatnonzero(graph.origin == x)
        big = e[np.argmax(p[e])]
        p[big] += 1.0 - p[e].sum()
    return p


def engel_leak():
    """Step-3 algebra with [X1, X2] = X3 + X4 (a layer-3 leak) and [X1, X3] = X4."""
    return GradedAlgebra.from_brackets(
        (2, 1, 1),
        [((1, 1), (1, 2), (2, 1), 1.0), ((1, 1), (1, 2), (3, 1), 1.0), ((1, 1), (2, 1), (3, 1), 1.0)],
    )


def filiform4():
    """Step-4 model filiform algebra [X1, X_k] = X_{k+1}."""
    return GradedAlgebra.from_brackets(
        (2, 1, 1, 1),
        [((1, 1), (1, 2), (2, 1), 1.0), ((1, 1), (2, 1), (3, 1), 1.0), ((1, 1), (3, 1), (4, 1), 1.0)],
    )


def free_step3():
    """Free nilpotent algebra of rank 2, step 3."""
    return GradedAlgebra.from_brackets(
        (2, 1, 2),
        [((1, 1), (1, 2), (2, 1), 1.0), ((1, 1), (2, 1), (3, 1), 1.0), ((1, 2), (2, 1), (3, 2), 1.0)],
    )


ALGEBRAS = {
    "heisenberg": GradedAlgebra.heisenberg,
    "engel_leak": engel_leak,
    "free3": free_step3,
    "filiform4": filiform4,
}


@pytest.fixture
def rng():
    return np.random.default_rng(20240917)


@pytest.fixture
def hex_asym():
    return build_hexagonal_heisenberg(0.5, 0.3, 0.2, 0.2, 0.3, 0.5)


@pytest.fixture
def hex_sym():
    t = 1.0 / 3.0
    return build_hexagonal_heisenberg(t, t, 1.0 - 2 * t, t, t, 1.0 - 2 * t)


def pytest_configure(config):
    config.acceptance_lines = []


def pytest_terminal_summary(terminalreporter, config):
    lines = getattr(config, "acceptance_lines", [])
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in sorted(lines, key=lambda s: int(s.split()[1].rstrip(":"))):
            terminalreporter.write_line(line)
