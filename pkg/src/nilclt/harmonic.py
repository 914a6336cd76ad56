"""Modified harmonic realizations, Albanese metrics and the drift functional.

A realization is stored by its values on the fundamental domain (one group
element per quotient vertex); equivariance ``Phi(s.x) = s.Phi(x)`` turns
the increment along an edge ``e`` with voltage ``s`` into

    dPhi(e) = Phi(o(e))^-1 . s . Phi(t(e)).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .graph import (
    TransitionKernel,
    QuotientGraph,
    ValidationError,
    edge_measure,
    homological_direction,
    interpolate,
    invariant_measure,
    symmetrize,
)
from .liegroup import DOT, group_mul, hom_norm, inverse


class NumericalError(ArithmeticError):
    """A linear-algebra step failed (singular system, non-SPD Gram matrix)."""


@dataclass(frozen=True, eq=False)
class PeriodicRealization:
    graph: QuotientGraph
    coords: np.ndarray

    def __post_init__(self):
        c = np.array(self.coords, dtype=float)
        if c.shape != (self.graph.n_vertices, self.graph.algebra.dim):
            raise ValueError(f"realization needs shape {(self.graph.n_vertices, self.graph.algebra.dim)}")
        c.setflags(write=False)
        object.__setattr__(self, "coords", c)

    def increments(self) -> np.ndarray:
        """``dPhi(e)`` for every oriented edge, shape ``(n_edges, d)``."""
        g = self.graph
        alg = g.algebra
        left = group_mul(inverse(self.coords[g.origin]), g.voltage, alg, DOT)
        return group_mul(left, self.coords[g.terminus], alg, DOT)

    def layer1(self) -> np.ndarray:
        return self.coords[:, self.graph.algebra.layer(1)]


def asymptotic_direction(kernel: TransitionKernel, m, realization: PeriodicRealization) -> np.ndarray:
    """``sum_e m~(e) log(dPhi(e))|_1``; the realization-dependent terms cancel
    by stationarity, so any realization gives the same vector."""
    g = kernel.graph
    inc = realization.increments()[:, g.algebra.layer(1)]
    return edge_measure(kernel, m) @ inc


def _mean_increment(kernel, realization):
    inc = realization.increments()[:, kernel.graph.algebra.layer(1)]
    out = np.zeros((kernel.graph.n_vertices, inc.shape[1]))
    np.add.at(out, kernel.graph.origin, kernel.p[:, None] * inc)
    return out


def harmonicity_residual(kernel: TransitionKernel, realization: PeriodicRealization, target) -> np.ndarray:
    """Per-vertex defect ``sum_{E_x} p(e) log(dPhi(e))|_1 - target``."""
    return _mean_increment(kernel, realization) - np.asarray(target)


def solve_modified_harmonic(kernel: TransitionKernel, m, rho=None, gauge=None) -> PeriodicRealization:
    """Realization whose expected layer-1 increment equals ``rho`` at every vertex.

    ``rho`` defaults to the asymptotic direction of ``kernel`` (the only
    value for which the system is solvable); ``gauge`` is the prescribed
    ``sum_x m(x) Phi(x)|_1`` (default 0).  Higher layers are zero on the
    fundamental domain.
    """
    g = kernel.graph
    alg = g.algebra
    m = np.asarray(m, dtype=float)
    d1 = alg.dims[0]
    zero = PeriodicRealization(g, np.zeros((g.n_vertices, alg.dim)))
    natural = asymptotic_direction(kernel, m, zero)
    if rho is None:
        rho = natural
    rho = np.asarray(rho, dtype=float)
    if np.abs(rho - natural).max() > 1e-10 * max(1.0, np.abs(natural).max()):
        raise ValueError(
            f"no modified harmonic realization with mean increment {rho.tolist()}; "
            f"the kernel forces {natural.tolist()}"
        )
    c = np.zeros(d1) if gauge is None else np.asarray(gauge, dtype=float)

    # (I - L) phi = b - rho with b(x) = sum p(e) s(e)|_1; the rows are m-dependent,
    # so the last one is swapped for the gauge row.
    b = _mean_increment(kernel, zero)
    A = np.eye(g.n_vertices) - kernel.matrix()
    rhs = b - rho
    A[-1, :] = m
    rhs[-1, :] = c
    try:
        lu_cond = np.linalg.cond(A)
        if not np.isfinite(lu_cond) or lu_cond > 1e14:
            raise np.linalg.LinAlgError(f"condition number {lu_cond:.3g}")
        phi = np.linalg.solve(A, rhs)
    except np.linalg.LinAlgError as exc:
        raise NumericalError(f"modified harmonic system is singular: {exc}") from exc
    coords = np.zeros((g.n_vertices, alg.dim))
    coords[:, alg.layer(1)] = phi
    return PeriodicRealization(g, coords)


def modified_harmonic_forms(kernel: TransitionKernel, m, realization: PeriodicRealization | None = None) -> np.ndarray:
    """1-forms ``w_i(e) = <x_i, log(dPhi0(e))|_1>``, shape ``(d1, n_edges)``.

    Any modified harmonic realization gives the same forms; one is solved
    for if none is passed.
    """
    if realization is None:
        realization = solve_modified_harmonic(kernel, m)
    inc = realization.increments()[:, kernel.graph.algebra.layer(1)]
    return inc.T.copy()


def albanese_gram(kernel: TransitionKernel, m, forms) -> np.ndarray:
    """``<<w_i, w_j>> = sum m~(e) w_i(e) w_j(e) - <gamma, w_i><gamma, w_j>``.

    The sum runs over all oriented edges, as does ``<gamma, w>``.
    """
    forms = np.asarray(forms, dtype=float)
    mt = edge_measure(kernel, m)
    pairing = forms @ mt
    gram = (forms * mt) @ forms.T - np.outer(pairing, pairing)
    gram = 0.5 * (gram + gram.T)
    try:
        np.linalg.cholesky(gram)
    except np.linalg.LinAlgError:
        raise NumericalError(f"Albanese Gram matrix is not positive definite: eigenvalues {np.linalg.eigvalsh(gram)}")
    return gram


@dataclass(frozen=True)
class AlbaneseMetric:
    """Metric on ``g^(1)`` in the ``X`` basis and an orthonormal frame.

    ``frame[i]`` holds the ``X``-coordinates of ``V_{i+1}``.
    """

    metric: np.ndarray
    frame: np.ndarray
    order: tuple[int, ...]


def gram_schmidt(metric, order) -> np.ndarray:
    d = metric.shape[0]
    frame = np.zeros((d, d))
    done = []
    for i in order:
        v = np.zeros(d)
        v[i] = 1.0
        for j in done:
            v = v - (frame[j] @ metric @ v) * frame[j]
        frame[i] = v / np.sqrt(v @ metric @ v)
        done.append(i)
    return frame


def albanese_metric(gram, order=None) -> AlbaneseMetric:
    """Dual metric ``gram^-1`` on ``g^(1)`` and its Gram-Schmidt frame.

    ``order`` is the sequence in which the ``X_i`` are orthogonalised; the
    default runs from the last basis vector to the first, so ``V_d`` is
    parallel to ``X_d`` and the frame is upper triangular in ``X``.
    """
    gram = np.asarray(gram, dtype=float)
    d = gram.shape[0]
    try:
        np.linalg.cholesky(gram)
    except np.linalg.LinAlgError:
        raise NumericalError("Gram matrix is singular or indefinite") from None
    metric = np.linalg.inv(gram)
    metric = 0.5 * (metric + metric.T)
    order = tuple(range(d - 1, -1, -1)) if order is None else tuple(int(i) for i in order)
    if sorted(order) != list(range(d)):
        raise ValueError(f"order must be a permutation of 0..{d - 1}, got {order}")
    return AlbaneseMetric(metric, gram_schmidt(metric, order), order)


def beta(kernel: TransitionKernel, m, realization: PeriodicRealization) -> np.ndarray:
    """Drift functional ``sum_e m~_eps(e) log(dPhi(e))|_2``."""
    inc = realization.increments()
    alg = kernel.graph.algebra
    if alg.step < 2:
        return np.zeros(0)
    return edge_measure(kernel, m) @ inc[:, alg.layer(2)]


@dataclass(frozen=True)
class Corrector:
    values: np.ndarray
    max_norm: float
    weighted_mean: np.ndarray


def corrector(phi: PeriodicRealization, phi0: PeriodicRealization, m) -> Corrector:
    """Layer-1 gap ``log Phi(x)|_1 - log Phi0(x)|_1`` on the fundamental domain."""
    if phi.graph is not phi0.graph and phi.graph.n_vertices != phi0.graph.n_vertices:
        raise ValueError("realizations live on different graphs")
    values = phi.layer1() - phi0.layer1()
    m = np.asarray(m, dtype=float)
    return Corrector(values, float(np.linalg.norm(values, axis=1).max()), m @ values)


def a1_defect(phi_eps: PeriodicRealization, phi_0: PeriodicRealization, m) -> np.ndarray:
    """``sum_x m(x) log(Phi_eps(x)^-1 . Phi_0(x))|_1``; zero when the family keeps
    its weighted layer-1 mean fixed."""
    alg = phi_eps.graph.algebra
    diff = group_mul(inverse(phi_eps.coords), phi_0.coords, alg, DOT)
    return np.asarray(m) @ diff[:, alg.layer(1)]


def increment_sup_norm(realization: PeriodicRealization) -> float:
    """``max_e |dPhi(e)|_Hom``."""
    return float(hom_norm(realization.increments(), realization.graph.algebra).max())


def generator_coefficients(frame, rho) -> np.ndarray:
    """Coordinates ``k`` of ``rho`` in the frame: ``sum_i k_i V_i = rho``."""
    frame = np.asarray(frame, dtype=float)
    return np.linalg.solve(frame.T, np.asarray(rho, dtype=float))


@dataclass(eq=False)
class RealizationFamily:
    """The interpolated kernels ``p_eps`` with their modified harmonic realizations.

    ``gauge='anchor'`` pins ``Phi^(0)(anchor) = 1`` and then keeps the
    ``m``-weighted layer-1 mean of every ``Phi^(eps)`` equal to that of
    ``Phi^(0)``; ``gauge='mean'`` keeps the mean at zero.  Either way the
    layer-1 mean is constant in ``eps``, and higher layers are zero on the
    fundamental domain, so their gap to ``Phi^(0)`` stays bounded.
    """

    kernel: TransitionKernel
    gauge: str = "anchor"
    anchor: int = 0
    m: np.ndarray = field(init=False)
    p0: TransitionKernel = field(init=False)
    q: np.ndarray = field(init=False)
    rho: np.ndarray = field(init=False)
    mean: np.ndarray = field(init=False)
    _cache: dict = field(init=False, default_factory=dict, repr=False)

    def __post_init__(self):
        if self.gauge not in ("anchor", "mean"):
            raise ValueError(f"gauge must be 'anchor' or 'mean', got {self.gauge!r}")
        self.m = invariant_measure(self.kernel)
        self.p0, self.q = symmetrize(self.kernel, self.m)
        g = self.kernel.graph
        zero = PeriodicRealization(g, np.zeros((g.n_vertices, g.algebra.dim)))
        self.rho = asymptotic_direction(self.kernel, self.m, zero)
        d1 = g.algebra.dims[0]
        if self.gauge == "mean":
            self.mean = np.zeros(d1)
        else:
            base = solve_modified_harmonic(self.p0, self.m, np.zeros(d1))
            self.mean = -base.layer1()[self.anchor]

    @property
    def graph(self) -> QuotientGraph:
        return self.kernel.graph

    def kernel_at(self, eps: float) -> TransitionKernel:
        return interpolate(self.p0, self.q, eps)

    def at(self, eps: float) -> PeriodicRealization:
        eps = float(eps)
        if eps not in self._cache:
            self._cache[eps] = solve_modified_harmonic(self.kernel_at(eps), self.m, eps * self.rho, self.mean)
        return self._cache[eps]

    def gram(self, eps: float) -> np.ndarray:
        k = self.kernel_at(eps)
        return albanese_gram(k, self.m, modified_harmonic_forms(k, self.m, self.at(eps)))

    def beta(self, eps: float) -> np.ndarray:
        return beta(self.kernel_at(eps), self.m, self.at(eps))

    def residual(self, eps: float) -> float:
        res = harmonicity_residual(self.kernel_at(eps), self.at(eps), eps * self.rho)
        return float(np.abs(res).max())


def analyze(kernel: TransitionKernel, eps: float = 1.0, gauge: str = "anchor", order=None) -> dict:
    """Every structural quantity of the walk at interpolation level ``eps``.

    The frame and drift coefficients always refer to the ``eps = 0`` metric,
    which is the one governing the limiting diffusion.
    """
    from .graph import cycle_basis, cycle_coordinates, rho_R, validate

    report = validate(kernel.graph, kernel)
    report.raise_if_failed()
    fam = RealizationFamily(kernel, gauge=gauge)
    g = kernel.graph
    basis = cycle_basis(g)
    gamma = homological_direction(kernel, fam.m)
    k_eps = fam.kernel_at(eps)
    phi = fam.at(eps)
    gram_eps = fam.gram(eps)
    alb_eps = albanese_metric(gram_eps, order)
    alb0 = albanese_metric(fam.gram(0.0), order)
    drift = generator_coefficients(alb0.frame, fam.rho)
    return {
        "eps": eps,
        "vertices": list(g.vertices),
        "m": fam.m.tolist(),
        "gamma_p": {
            "edge_coefficients": gamma.coef.tolist(),
            "cycle_basis": [b.coef.tolist() for b in basis],
            "cycle_coordinates": cycle_coordinates(gamma, basis).tolist(),
        },
        "rho": fam.rho.tolist(),
        "rho_from_cycles": rho_R(gamma, g).tolist(),
        "realization": phi.coords.tolist(),
        "p_eps": k_eps.p.tolist(),
        "gram": gram_eps.tolist(),
        "metric": alb_eps.metric.tolist(),
        "volume_inverse": float(np.sqrt(np.linalg.det(gram_eps))),
        "frame": alb0.frame.tolist(),
        "frame_order": list(alb0.order),
        "beta": fam.beta(eps).tolist(),
        "drift_coefficients": drift.tolist(),
        "harmonicity_residual": fam.residual(eps),
    }


__all__ = [
    "AlbaneseMetric",
    "Corrector",
    "NumericalError",
    "PeriodicRealization",
    "RealizationFamily",
    "ValidationError",
    "a1_defect",
    "albanese_gram",
    "albanese_metric",
    "analyze",
    "asymptotic_direction",
    "beta",
    "corrector",
    "generator_coefficients",
    "harmonicity_residual",
    "increment_sup_norm",
    "modified_harmonic_forms",
    "solve_modified_harmonic",
]
