"""Finite quotient graphs with group-valued voltages, transition kernels,
invariant measures and first homology.

Oriented edges are stored in involution pairs: edge ``2k`` is the canonical
orientation of pair ``k`` and edge ``2k + 1`` is its reverse, so ``reverse(e)
== e ^ 1``.  The infinite covering graph is never built; an edge ``e`` from
``x`` to ``y`` with voltage ``s`` lifts to edges from ``g.x`` to ``g.s.y``.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field

import numpy as np
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import connected_components

from .liegroup import DOT, GradedAlgebra, group_mul, inverse

STOCHASTIC_TOL = 1e-12


class ValidationError(ValueError):
    """Structural inconsistency in a graph or kernel.  ``report`` holds the
    full :class:`ValidationReport` when one was produced."""

    def __init__(self, message, report=None):
        super().__init__(message)
        self.report = report


@dataclass(frozen=True, eq=False)
class QuotientGraph:
    algebra: GradedAlgebra
    vertices: tuple[str, ...]
    origin: np.ndarray
    terminus: np.ndarray
    voltage: np.ndarray

    def __post_init__(self):
        origin = np.asarray(self.origin, dtype=np.intp)
        terminus = np.asarray(self.terminus, dtype=np.intp)
        voltage = np.asarray(self.voltage, dtype=float).reshape(len(origin), self.algebra.dim)
        if origin.shape != terminus.shape or origin.ndim != 1:
            raise ValidationError("origin and terminus must be 1-d arrays of equal length")
        if len(origin) % 2:
            raise ValidationError("edges must come in involution pairs (even count)")
        nv = len(self.vertices)
        for name, arr in (("origin", origin), ("terminus", terminus)):
            if arr.size and (arr.min() < 0 or arr.max() >= nv):
                raise ValidationError(f"{name} refers to a vertex outside 0..{nv - 1}")
        for arr in (origin, terminus, voltage):
            arr.setflags(write=False)
        object.__setattr__(self, "vertices", tuple(str(v) for v in self.vertices))
        object.__setattr__(self, "origin", origin)
        object.__setattr__(self, "terminus", terminus)
        object.__setattr__(self, "voltage", voltage)

    @classmethod
    def from_pairs(cls, algebra, vertices, pairs) -> "QuotientGraph":
        """``pairs`` is a sequence of ``(origin, terminus, voltage)`` for the
        canonical orientation; reverses get the swapped ends and the inverse
        voltage.  Vertices may be referenced by label or index."""
        vertices = [str(v) for v in vertices]
        lookup = {v: i for i, v in enumerate(vertices)}

        def vid(v):
            if isinstance(v, (int, np.integer)) and not isinstance(v, bool):
                return int(v)
            try:
                return lookup[str(v)]
            except KeyError:
                raise ValidationError(f"unknown vertex {v!r}") from None

        origin, terminus, volt = [], [], []
        for o, t, s in pairs:
            s = np.asarray(s, dtype=float)
            if s.shape != (algebra.dim,):
                raise ValidationError(f"voltage {s.tolist()} does not have {algebra.dim} coordinates")
            origin += [vid(o), vid(t)]
            terminus += [vid(t), vid(o)]
            volt += [s, inverse(s, algebra)]
        return cls(algebra, tuple(vertices), np.array(origin, dtype=np.intp),
                   np.array(terminus, dtype=np.intp), np.array(volt).reshape(-1, algebra.dim))

    @property
    def n_vertices(self) -> int:
        return len(self.vertices)

    @property
    def n_edges(self) -> int:
        return len(self.origin)

    @property
    def n_pairs(self) -> int:
        return len(self.origin) // 2

    @staticmethod
    def reverse(e):
        return np.asarray(e) ^ 1

    def out_edges(self, x: int) -> np.ndarray:
        return np.flatnonzero(self.origin == x)

    def vertex_index(self, v) -> int:
        if isinstance(v, (int, np.integer)):
            return int(v)
        return self.vertices.index(str(v))

    def boundary(self, chain: "Chain1") -> np.ndarray:
        """``d(e) = t(e) - o(e)`` extended linearly; returns vertex coefficients."""
        out = np.zeros(self.n_vertices)
        canon = np.arange(0, self.n_edges, 2)
        np.add.at(out, self.terminus[canon], chain.coef)
        np.add.at(out, self.origin[canon], -chain.coef)
        return out


@dataclass(frozen=True, eq=False)
class TransitionKernel:
    """Transition probabilities ``p(e)`` on the oriented edges of ``graph``."""

    graph: QuotientGraph
    p: np.ndarray

    def __post_init__(self):
        p = np.array(self.p, dtype=float)
        if p.shape != (self.graph.n_edges,):
            raise ValidationError(f"kernel needs {self.graph.n_edges} entries, got shape {p.shape}")
        p.setflags(write=False)
        object.__setattr__(self, "p", p)

    def matrix(self) -> np.ndarray:
        """Dense transition operator ``L[x, y] = sum of p(e) over e: x -> y``."""
        g = self.graph
        L = np.zeros((g.n_vertices, g.n_vertices))
        np.add.at(L, (g.origin, g.terminus), self.p)
        return L

    def row_sums(self) -> np.ndarray:
        return np.bincount(self.graph.origin, weights=self.p, minlength=self.graph.n_vertices)


@dataclass(frozen=True)
class Chain1:
    """Real 1-chain ``sum_k coef[k] e_k`` over the canonical orientations.

    The value on a reversed edge is ``-coef``, so antisymmetry is exact."""

    coef: np.ndarray

    def __getitem__(self, e):
        e = np.asarray(e)
        sign = np.where(e % 2 == 0, 1.0, -1.0)
        return sign * np.asarray(self.coef)[e // 2]

    def pair(self, form) -> float:
        """``<c, w>`` for an antisymmetric 1-form given on all oriented edges."""
        form = np.asarray(form, dtype=float)
        return float(np.dot(self.coef, form[0::2]))

    def __add__(self, other):
        return Chain1(np.asarray(self.coef) + np.asarray(other.coef))

    def __mul__(self, k):
        return Chain1(k * np.asarray(self.coef))

    __rmul__ = __mul__

    def __neg__(self):
        return Chain1(-np.asarray(self.coef))


@dataclass
class ValidationReport:
    checks: dict[str, bool] = field(default_factory=dict)
    messages: list[str] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return all(self.checks.values())

    def fail(self, check, message):
        self.checks[check] = False
        self.messages.append(message)

    def to_dict(self) -> dict:
        return {"ok": self.ok, "checks": dict(self.checks), "messages": list(self.messages)}

    def raise_if_failed(self):
        if not self.ok:
            raise ValidationError("; ".join(self.messages), self)


def _components(n, rows, cols, connection):
    adj = csr_matrix((np.ones(len(rows)), (rows, cols)), shape=(n, n))
    return connected_components(adj, directed=True, connection=connection)


def validate(graph: QuotientGraph, kernel: TransitionKernel | None = None) -> ValidationReport:
    """Check involution and voltage consistency, connectivity, and (if a
    kernel is given) stochasticity and irreducibility.  Nothing is repaired."""
    rep = ValidationReport()
    alg = graph.algebra
    e = np.arange(graph.n_edges)
    r = graph.reverse(e)

    rep.checks["involution"] = True
    bad = np.flatnonzero((graph.origin[r] != graph.terminus) | (graph.terminus[r] != graph.origin))
    if bad.size:
        rep.fail("involution", f"edges {bad.tolist()} do not reverse their partners (o(rev e) != t(e))")

    rep.checks["voltage"] = True
    prod = group_mul(graph.voltage, graph.voltage[r], alg, DOT)
    vbad = np.flatnonzero(np.abs(prod).max(axis=1) > 1e-12)
    if vbad.size:
        rep.fail("voltage", f"edges {vbad.tolist()} have voltage(rev e) != voltage(e)^-1")

    rep.checks["connected"] = True
    n_comp, labels = _components(graph.n_vertices, graph.origin, graph.terminus, "weak")
    if n_comp > 1:
        groups = [[graph.vertices[i] for i in np.flatnonzero(labels == c)] for c in range(n_comp)]
        rep.fail("connected", f"graph has {n_comp} connected components: {groups}")

    if kernel is not None:
        p = kernel.p
        rep.checks["nonnegative"] = True
        neg = np.flatnonzero((p < 0) | (p > 1) | ~np.isfinite(p))
        if neg.size:
            rep.fail("nonnegative", f"edges {neg.tolist()} have probabilities outside [0, 1]")

        rep.checks["stochastic"] = True
        sums = kernel.row_sums()
        for x in np.flatnonzero(np.abs(sums - 1.0) > STOCHASTIC_TOL):
            rep.fail("stochastic", f"vertex {graph.vertices[x]!r}: outgoing probabilities sum to {sums[x]!r}")

        rep.checks["pair_positive"] = True
        zero = np.flatnonzero(p + p[r] <= 0)
        if zero.size:
            rep.fail("pair_positive", f"edges {zero.tolist()} have p(e) + p(rev e) = 0")

        rep.checks["irreducible"] = True
        groups = strong_components(kernel)
        if len(groups) > 1:
            named = [[graph.vertices[i] for i in g] for g in groups]
            rep.fail("irreducible", f"kernel support splits into strongly connected classes {named}")
    return rep


def strong_components(kernel: TransitionKernel) -> list[list[int]]:
    g = kernel.graph
    pos = kernel.p > 0
    n_comp, labels = _components(g.n_vertices, g.origin[pos], g.terminus[pos], "strong")
    return [np.flatnonzero(labels == c).tolist() for c in range(n_comp)]


def invariant_measure(kernel: TransitionKernel) -> np.ndarray:
    """Unique probability vector with ``m(x) = sum_{e in E_x} p(rev e) m(t(e))``.

    Solved densely: the stationarity system ``(I - L^T) m = 0`` with its last
    row replaced by the normalisation ``sum m = 1``.
    """
    groups = strong_components(kernel)
    if len(groups) > 1:
        named = [[kernel.graph.vertices[i] for i in g] for g in groups]
        raise ValidationError(f"kernel is not irreducible; strongly connected classes: {named}")
    L = kernel.matrix()
    n = L.shape[0]
    A = np.eye(n) - L.T
    A[-1, :] = 1.0
    b = np.zeros(n)
    b[-1] = 1.0
    return np.linalg.solve(A, b)


def stationarity_defect(kernel: TransitionKernel, m) -> float:
    m = np.asarray(m, dtype=float)
    return float(np.abs(kernel.matrix().T @ m - m).max())


def edge_measure(kernel: TransitionKernel, m) -> np.ndarray:
    """``m~(e) = p(e) m(o(e))``."""
    return kernel.p * np.asarray(m)[kernel.graph.origin]


def symmetrize(kernel: TransitionKernel, m, tol: float = 1e-10):
    """Split ``p = p0 + q`` with ``p0`` the ``m``-symmetric part.

    Returns ``(p0, q)`` as a :class:`TransitionKernel` and a signed edge array.
    """
    m = np.asarray(m, dtype=float)
    defect = stationarity_defect(kernel, m)
    if defect > tol or abs(m.sum() - 1.0) > tol:
        raise ValidationError(f"m is not the invariant measure of the kernel (defect {defect:.3g})")
    g = kernel.graph
    p = kernel.p
    swapped = m[g.terminus] / m[g.origin] * p[g.reverse(np.arange(g.n_edges))]
    p0 = 0.5 * (p + swapped)
    q = 0.5 * (p - swapped)
    return TransitionKernel(g, p0), q


def interpolate(p0: TransitionKernel, q, eps: float) -> TransitionKernel:
    """``p_eps = p0 + eps q`` for ``eps`` in ``[0, 1]``."""
    if not 0.0 <= eps <= 1.0:
        raise ValueError(f"eps must lie in [0, 1], got {eps}")
    p = p0.p + eps * np.asarray(q)
    # rounding can leave -1e-17 where p0 == |q|
    p = np.where((p < 0) & (p > -1e-15), 0.0, p)
    return TransitionKernel(p0.graph, p)


def _spanning_tree(graph: QuotientGraph) -> np.ndarray:
    """BFS tree from vertex 0 returning, per vertex, the oriented edge used to
    reach it (-1 at the root).  Among candidate edges, trivial-voltage edges
    win, then lower edge index."""
    trivial = np.abs(graph.voltage).max(axis=1) == 0
    parent = np.full(graph.n_vertices, -1)
    seen = np.zeros(graph.n_vertices, dtype=bool)
    seen[0] = True
    queue = deque([0])
    while queue:
        x = queue.popleft()
        cand = [e for e in graph.out_edges(x) if not seen[graph.terminus[e]]]
        cand.sort(key=lambda e: (not trivial[e], e))
        for e in cand:
            y = graph.terminus[e]
            if not seen[y]:
                seen[y] = True
                parent[y] = e
                queue.append(y)
    if not seen.all():
        raise ValidationError("graph is not connected")
    return parent


def _path_to_root(graph, parent, x):
    """Chain of the tree path from the root to ``x``."""
    coef = np.zeros(graph.n_pairs)
    while parent[x] >= 0:
        e = parent[x]
        coef[e // 2] += 1.0 if e % 2 == 0 else -1.0
        x = graph.origin[e]
    return coef


def cycle_basis(graph: QuotientGraph) -> list[Chain1]:
    """Fundamental cycles of a BFS spanning tree, one per non-tree pair,
    each oriented along the canonical orientation of its non-tree edge."""
    parent = _spanning_tree(graph)
    tree_pairs = {e // 2 for e in parent if e >= 0}
    basis = []
    for k in range(graph.n_pairs):
        if k in tree_pairs:
            continue
        e = 2 * k
        coef = _path_to_root(graph, parent, graph.origin[e]) - _path_to_root(graph, parent, graph.terminus[e])
        coef[k] += 1.0
        basis.append(Chain1(coef))
    return basis


def cycle_coordinates(chain: Chain1, basis: list[Chain1], tol: float = 1e-10) -> np.ndarray:
    """Coefficients of a 1-cycle in ``basis``; raises if ``chain`` is not in their span."""
    if not basis:
        if np.abs(chain.coef).max(initial=0.0) > tol:
            raise ValueError("chain is not a cycle (empty cycle basis)")
        return np.zeros(0)
    B = np.array([b.coef for b in basis]).T
    coords, *_ = np.linalg.lstsq(B, chain.coef, rcond=None)
    resid = np.abs(B @ coords - chain.coef).max(initial=0.0)
    if resid > tol:
        raise ValueError(f"chain is not in the span of the cycle basis (residual {resid:.3g})")
    return coords


def homological_direction(kernel: TransitionKernel, m) -> Chain1:
    """``gamma_p = sum_e m~(e) e``; on each canonical edge the coefficient is
    ``m~(e) - m~(rev e)``."""
    mt = edge_measure(kernel, m)
    return Chain1(mt[0::2] - mt[1::2])


def abelianized_voltage(graph: QuotientGraph) -> np.ndarray:
    """Layer-1 part of each edge voltage, shape ``(n_edges, d1)``."""
    return graph.voltage[:, graph.algebra.layer(1)]


def rho_R(chain: Chain1, graph: QuotientGraph) -> np.ndarray:
    """Image of a 1-cycle in ``g^(1)`` under the abelianized voltage map."""
    return np.asarray(chain.coef) @ abelianized_voltage(graph)[0::2]


HEX_EDGE_LABELS = ("e1", "e2", "e3")


def build_hexagonal_heisenberg(alpha, beta, gamma, alpha_p, beta_p, gamma_p):
    """Quotient of the Heisenberg hexagonal lattice with its kernel.

    Two vertices ``x, y`` and three edge pairs ``e1, e2, e3`` from ``x`` to
    ``y`` with voltages ``X1``, identity and ``X2``, so the cycles
    ``e1 - e2`` and ``e3 - e2`` carry the lattice generators.  Forward
    probabilities are ``(alpha, beta, gamma)`` out of ``x`` and the reverse
    ones ``(alpha_p, beta_p, gamma_p)`` out of ``y``.
    """
    fwd = np.array([alpha, beta, gamma], dtype=float)
    back = np.array([alpha_p, beta_p, gamma_p], dtype=float)
    if (fwd <= 0).any() or (back <= 0).any():
        raise ValidationError(f"all six probabilities must be positive, got {fwd.tolist()} / {back.tolist()}")
    if abs(fwd.sum() - 1.0) > STOCHASTIC_TOL or abs(back.sum() - 1.0) > STOCHASTIC_TOL:
        raise ValidationError(
            f"alpha+beta+gamma and alpha'+beta'+gamma' must equal 1, got {float(fwd.sum())!r} and {float(back.sum())!r}"
        )
    alg = GradedAlgebra.heisenberg()
    graph = QuotientGraph.from_pairs(
        alg,
        ["x", "y"],
        [("x", "y", [1.0, 0.0, 0.0]), ("x", "y", [0.0, 0.0, 0.0]), ("x", "y", [0.0, 1.0, 0.0])],
    )
    p = np.empty(6)
    p[0::2] = fwd
    p[1::2] = back
    return graph, TransitionKernel(graph, p)
