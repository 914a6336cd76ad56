"""Graded nilpotent Lie algebras and group arithmetic in exponential coordinates.

Group elements are plain ``numpy`` arrays of exponential coordinates of the
first kind, ``g = exp(Z)`` with ``Z = (Z^(1), ..., Z^(r))`` laid out layer by
layer.  Every function here broadcasts over leading axes, so a batch of
``N`` elements is just an ``(N, d)`` array.

Two products live on the same coordinates:

* ``dot``: the original nilpotent group ``(G, .)``, BCH with the full bracket;
* ``star``: the limit group ``(G, *)``, BCH with the graded bracket, which keeps
  only the part of ``[Z1^(i), Z2^(j)]`` lying in layer ``i + j``.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

MAX_STEP = 4

DOT = "dot"
STAR = "star"


@dataclass(frozen=True, eq=False)
class GradedAlgebra:
    """Structure constants of ``g = g^(1) + ... + g^(r)``.

    ``structure[a, b, c]`` is the coefficient of basis vector ``c`` in
    ``[e_a, e_b]`` where basis vectors are numbered layer by layer.
    """

    dims: tuple[int, ...]
    structure: np.ndarray
    graded_structure: np.ndarray = field(init=False, repr=False)
    grades: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        dims = tuple(int(k) for k in self.dims)
        if not dims or any(k <= 0 for k in dims):
            raise ValueError(f"layer dimensions must be positive, got {dims}")
        if len(dims) > MAX_STEP:
            raise ValueError(f"step {len(dims)} exceeds the supported maximum {MAX_STEP}")
        d = sum(dims)
        c = np.array(self.structure, dtype=float)
        if c.shape != (d, d, d):
            raise ValueError(f"structure constants must have shape {(d, d, d)}, got {c.shape}")
        grades = np.repeat(np.arange(1, len(dims) + 1), dims)

        asym = np.abs(c + c.transpose(1, 0, 2)).max(initial=0.0)
        if asym > 1e-12:
            raise ValueError(f"structure constants are not antisymmetric (max defect {asym:.3g})")

        gi = grades[:, None, None]
        gj = grades[None, :, None]
        gk = grades[None, None, :]
        low = (gk < gi + gj) & (c != 0)
        if low.any():
            a, b, k = np.argwhere(low)[0]
            raise ValueError(
                f"grading violated: [e{a}, e{b}] has a component in layer {grades[k]} "
                f"< {grades[a] + grades[b]}"
            )
        # Jacobi: [[a,b],c] + [[b,c],a] + [[c,a],b] = 0 for all basis triples
        ab_c = np.einsum("abm,mcn->abcn", c, c)
        jac = ab_c + ab_c.transpose(1, 2, 0, 3) + ab_c.transpose(2, 0, 1, 3)
        defect = np.abs(jac).max(initial=0.0)
        if defect > 1e-12:
            raise ValueError(f"Jacobi identity fails (max defect {defect:.3g})")

        c.setflags(write=False)
        graded = np.where(gk == gi + gj, c, 0.0)
        graded.setflags(write=False)
        grades.setflags(write=False)
        object.__setattr__(self, "dims", dims)
        object.__setattr__(self, "structure", c)
        object.__setattr__(self, "graded_structure", graded)
        object.__setattr__(self, "grades", grades)

    @property
    def step(self) -> int:
        return len(self.dims)

    @property
    def dim(self) -> int:
        return sum(self.dims)

    def layer(self, k: int) -> slice:
        """Coordinate slice of layer ``k`` (1-based)."""
        if not 1 <= k <= self.step:
            raise ValueError(f"layer {k} out of range 1..{self.step}")
        start = sum(self.dims[: k - 1])
        return slice(start, start + self.dims[k - 1])

    def index(self, k: int, i: int) -> int:
        """Flat index of basis vector ``X_i^(k)`` (both 1-based)."""
        if not 1 <= i <= self.dims[k - 1]:
            raise ValueError(f"basis index {i} out of range for layer {k}")
        return self.layer(k).start + i - 1

    def identity(self) -> np.ndarray:
        return np.zeros(self.dim)

    def same_as(self, other: "GradedAlgebra") -> bool:
        return self.dims == other.dims and np.array_equal(self.structure, other.structure)

    @classmethod
    def from_brackets(cls, dims, brackets) -> "GradedAlgebra":
        """Build from entries ``((i, a), (j, b), (k, c), coef)`` meaning
        ``[X_a^(i), X_b^(j)] += coef * X_c^(k)``; the antisymmetric partner is
        filled in automatically."""
        dims = tuple(int(k) for k in dims)
        probe = _Layout(dims)
        d = sum(dims)
        c = np.zeros((d, d, d))
        for lhs, rhs, out, coef in brackets:
            a = probe.index(*lhs)
            b = probe.index(*rhs)
            k = probe.index(*out)
            if a == b:
                if coef != 0:
                    raise ValueError(f"[X, X] must vanish, got a nonzero entry for {lhs}")
                continue
            c[a, b, k] += coef
            c[b, a, k] -= coef
        return cls(dims, c)

    @classmethod
    def heisenberg(cls) -> "GradedAlgebra":
        """3-dimensional Heisenberg algebra, ``[X1, X2] = X3``."""
        return cls.from_brackets((2, 1), [((1, 1), (1, 2), (2, 1), 1.0)])

    def to_dict(self) -> dict:
        brackets = []
        d = self.dim
        for a in range(d):
            for b in range(a + 1, d):
                for k in range(d):
                    coef = self.structure[a, b, k]
                    if coef != 0:
                        brackets.append(
                            {"a": self.label(a), "b": self.label(b), "out": self.label(k), "c": float(coef)}
                        )
        return {"dims": list(self.dims), "brackets": brackets}

    @classmethod
    def from_dict(cls, spec: dict) -> "GradedAlgebra":
        if spec == "heisenberg" or (isinstance(spec, dict) and spec.get("preset") == "heisenberg"):
            return cls.heisenberg()
        try:
            dims = spec["dims"]
            entries = [
                (tuple(b["a"]), tuple(b["b"]), tuple(b["out"]), float(b["c"]))
                for b in spec.get("brackets", [])
            ]
        except (KeyError, TypeError) as exc:
            raise ValueError(f"malformed algebra spec: {exc!r}") from exc
        return cls.from_brackets(dims, entries)

    def label(self, flat: int) -> list[int]:
        k = int(self.grades[flat])
        return [k, flat - self.layer(k).start + 1]


class _Layout:
    def __init__(self, dims):
        self.dims = dims

    def index(self, k, i):
        if not 1 <= k <= len(self.dims):
            raise ValueError(f"layer {k} out of range 1..{len(self.dims)}")
        if not 1 <= i <= self.dims[k - 1]:
            raise ValueError(f"basis index {i} out of range for layer {k}")
        return sum(self.dims[: k - 1]) + i - 1


def _check(z, alg):
    z = np.asarray(z, dtype=float)
    if z.shape[-1] != alg.dim:
        raise ValueError(f"expected trailing dimension {alg.dim}, got {z.shape[-1]}")
    return z


def _contract(c, z1, z2):
    d = c.shape[0]
    z1, z2 = np.broadcast_arrays(z1, z2)
    outer = z1[..., :, None] * z2[..., None, :]
    return outer.reshape(*outer.shape[:-2], d * d) @ c.reshape(d * d, d)


def bracket(z1, z2, alg: GradedAlgebra) -> np.ndarray:
    """Full Lie bracket ``[Z1, Z2]``."""
    return _contract(alg.structure, _check(z1, alg), _check(z2, alg))


def graded_bracket(z1, z2, alg: GradedAlgebra) -> np.ndarray:
    """Limit bracket ``[[Z1, Z2]]``: the layer ``i+j`` part of ``[Z1^(i), Z2^(j)]``."""
    return _contract(alg.graded_structure, _check(z1, alg), _check(z2, alg))


def _constants(alg, kind):
    if kind == DOT:
        return alg.structure
    if kind == STAR:
        return alg.graded_structure
    raise ValueError(f"unknown product kind {kind!r}; use 'dot' or 'star'")


def bch(z1, z2, c, step: int) -> np.ndarray:
    """Baker-Campbell-Hausdorff series truncated at nesting depth ``step``.

    Exact for nilpotent algebras of that step: every omitted term is a
    bracket of ``step + 1`` or more elements.
    """
    xy = _contract(c, z1, z2)
    z = z1 + z2 + 0.5 * xy
    if step >= 3:
        xxy = _contract(c, z1, xy)
        yxy = _contract(c, z2, xy)
        z = z + (xxy - yxy) / 12.0
        if step >= 4:
            z = z - _contract(c, z2, xxy) / 24.0
    return z


def group_mul(g, h, alg: GradedAlgebra, kind: str = DOT) -> np.ndarray:
    """Exponential coordinates of ``exp(g) . exp(h)`` (``kind='dot'``) or of
    ``exp(g) * exp(h)`` in the limit group (``kind='star'``)."""
    c = _constants(alg, kind)
    return bch(_check(g, alg), _check(h, alg), c, alg.step)


def inverse(g, alg: GradedAlgebra | None = None, kind: str = DOT) -> np.ndarray:
    """Group inverse; ``exp(Z)^-1 = exp(-Z)`` for either product."""
    if kind not in (DOT, STAR):
        raise ValueError(f"unknown product kind {kind!r}")
    g = np.asarray(g, dtype=float)
    if alg is not None:
        _check(g, alg)
    return -g


def dilate(g, eps, alg: GradedAlgebra) -> np.ndarray:
    """Dilation ``tau_eps``: scales layer ``k`` by ``eps**k``.

    ``eps`` may be an array broadcasting against ``g[..., :1]``.
    """
    eps = np.asarray(eps, dtype=float)
    if (eps < 0).any():
        raise ValueError(f"dilation factor must be nonnegative, got {eps}")
    g = _check(g, alg)
    return g * eps[..., None] ** alg.grades if eps.ndim else g * float(eps) ** alg.grades


def layer_norms(g, alg: GradedAlgebra) -> np.ndarray:
    """Euclidean norm of each layer, shape ``(..., r)``."""
    g = _check(g, alg)
    return np.stack([np.linalg.norm(g[..., alg.layer(k)], axis=-1) for k in range(1, alg.step + 1)], axis=-1)


def hom_norm(g, alg: GradedAlgebra) -> np.ndarray:
    """Homogeneous norm ``sum_k |Z^(k)|^(1/k)``."""
    norms = layer_norms(g, alg)
    powers = 1.0 / np.arange(1, alg.step + 1)
    return np.sum(norms**powers, axis=-1)


def dist_surrogate(g, h, alg: GradedAlgebra) -> np.ndarray:
    """``|g^-1 * h|_Hom``: left-invariant stand-in for the Carnot-Caratheodory
    distance, equivalent to it up to multiplicative constants."""
    return hom_norm(group_mul(inverse(g), h, alg, STAR), alg)


def heisenberg_from_matrix(x, y, z) -> np.ndarray:
    """Exponential coordinates of the unipotent matrix ``[[1,x,z],[0,1,y],[0,0,1]]``."""
    return np.array([x, y, z - 0.5 * x * y], dtype=float)


def heisenberg_to_matrix(g) -> tuple[float, float, float]:
    x, y, z = np.asarray(g, dtype=float)
    return float(x), float(y), float(z + 0.5 * x * y)
