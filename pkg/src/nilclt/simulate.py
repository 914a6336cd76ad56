"""Monte Carlo samplers: dilation-scaled random walks on the covering graph
and the limiting diffusion on the limit group."""

from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .harmonic import PeriodicRealization, RealizationFamily
from .liegroup import STAR, GradedAlgebra, bch, group_mul, inverse
from .rng import NOISE_STREAM, WALK_STREAM, normals, uniforms

GRID_TOL = 1e-9


@dataclass(frozen=True, eq=False)
class PathSampleSet:
    """Group-valued samples: ``values[l, i]`` is path ``i`` at ``times[l]``."""

    algebra: GradedAlgebra
    times: np.ndarray
    values: np.ndarray
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        times = np.asarray(self.times, dtype=float)
        values = np.asarray(self.values, dtype=float)
        if times.ndim != 1 or (np.diff(times) <= 0).any():
            raise ValueError("time grid must be strictly increasing")
        if values.shape[0] != len(times) or values.shape[-1] != self.algebra.dim or values.ndim != 3:
            raise ValueError(f"values must have shape (len(times), N, {self.algebra.dim}), got {values.shape}")
        object.__setattr__(self, "times", times)
        object.__setattr__(self, "values", values)

    @property
    def n_paths(self) -> int:
        return self.values.shape[1]

    def time_index(self, t: float) -> int:
        hit = np.flatnonzero(np.abs(self.times - t) <= GRID_TOL)
        if not hit.size:
            raise ValueError(f"t = {t} is not on the sample grid {self.times.tolist()}")
        return int(hit[0])

    def at(self, t: float) -> np.ndarray:
        return self.values[self.time_index(t)]


def grid_steps(grid, n: int) -> np.ndarray:
    """Step indices ``k`` with ``grid[l] = k / n``; refuses anything else."""
    grid = np.asarray(grid, dtype=float)
    if grid.ndim != 1 or grid.size == 0:
        raise ValueError("grid must be a nonempty 1-d sequence of times")
    if (np.diff(grid) <= 0).any():
        raise ValueError("grid must be strictly increasing")
    if grid[0] < 0 or grid[-1] > 1 + GRID_TOL:
        raise ValueError("grid times must lie in [0, 1]")
    k = np.rint(grid * n)
    off = np.abs(grid * n - k) > GRID_TOL * max(n, 1)
    if off.any():
        raise ValueError(f"grid times {grid[off].tolist()} are not multiples of 1/{n}")
    return k.astype(np.int64)


def _chunks(n_paths, chunk):
    return [np.arange(s, min(s + chunk, n_paths)) for s in range(0, n_paths, chunk)]


def _run(fn, jobs, workers):
    if workers <= 1 or len(jobs) <= 1:
        return [fn(*job) for job in jobs]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, *zip(*jobs)))


def _edge_tables(graph, p):
    deg = np.bincount(graph.origin, minlength=graph.n_vertices)
    width = int(deg.max())
    out = np.zeros((graph.n_vertices, width), dtype=np.intp)
    cum = np.full((graph.n_vertices, max(width - 1, 1)), 2.0)
    last = np.zeros(graph.n_vertices, dtype=np.intp)
    for x in range(graph.n_vertices):
        edges = np.flatnonzero(graph.origin == x)
        out[x, : len(edges)] = edges
        c = np.cumsum(p[edges])
        cum[x, : len(edges) - 1] = c[:-1]
        last[x] = np.flatnonzero(p[edges] > 0).max()
    return out, cum, last


def _walk_chunk(path_ids, seed, n, steps, start, origin_pos, increments, terminus, out, cum, last, c, r, grades):
    B = len(path_ids)
    u = uniforms(seed, path_ids, n, WALK_STREAM)
    pos = np.repeat(origin_pos[None, :], B, axis=0)
    v = np.full(B, start, dtype=np.intp)
    rec = np.empty((len(steps), B, len(origin_pos)))
    scale = float(n) ** (-0.5 * grades)
    wanted = {int(k): i for i, k in enumerate(steps)}
    if 0 in wanted:
        rec[wanted[0]] = pos * scale
    for k in range(1, n + 1):
        j = (u[:, k - 1, None] >= cum[v]).sum(axis=1)
        j = np.minimum(j, last[v])
        e = out[v, j]
        pos = bch(pos, increments[e], c, r)
        v = terminus[e]
        if k in wanted:
            rec[wanted[k]] = pos * scale
    return rec


def sample_walk(
    family: RealizationFamily,
    n: int,
    grid,
    n_paths: int,
    seed: int,
    start: int | None = None,
    center: bool = False,
    realization: PeriodicRealization | None = None,
    workers: int = 1,
    chunk: int = 4096,
) -> PathSampleSet:
    """Dilation-scaled walk ``tau_{n^-1/2}(Phi^(eps)(w_[nt]))`` with ``eps = n^-1/2``.

    Each path runs the ``p_eps`` walk on the quotient from ``start`` (the
    family's anchor by default) and accumulates its position with
    ``.``-products of edge increments.  ``center=True`` starts from the
    identity instead of ``Phi^(eps)(start)``.
    """
    if n < 1:
        raise ValueError("n must be at least 1")
    if n_paths < 1:
        raise ValueError("need at least one path")
    steps = grid_steps(grid, n)
    eps = n ** -0.5
    graph = family.graph
    alg = graph.algebra
    kernel = family.kernel_at(eps)
    phi = family.at(eps) if realization is None else realization
    start = family.anchor if start is None else graph.vertex_index(start)
    origin_pos = alg.identity() if center else phi.coords[start].copy()
    out, cum, last = _edge_tables(graph, kernel.p)
    jobs = [
        (ids, seed, n, steps, start, origin_pos, phi.increments(), graph.terminus, out, cum, last,
         alg.structure, alg.step, alg.grades)
        for ids in _chunks(n_paths, chunk)
    ]
    parts = _run(_walk_chunk, jobs, workers)
    meta = {
        "kind": "walk",
        "n": int(n),
        "eps": eps,
        "seed": int(seed),
        "n_paths": int(n_paths),
        "start": graph.vertices[start],
        "center": bool(center),
        "scheme": "quotient walk, dot-product accumulation",
    }
    return PathSampleSet(alg, steps / n, np.concatenate(parts, axis=1), meta)


def _sde_chunk(path_ids, seed, steps, noise_steps, rec_steps, frame, drift, c, r, dim, d1):
    B = len(path_ids)
    h = 1.0 / steps
    sub = noise_steps // steps
    z = normals(seed, path_ids, (noise_steps, d1), NOISE_STREAM) * math.sqrt(1.0 / noise_steps)
    if sub > 1:
        z = z.reshape(B, steps, sub, d1).sum(axis=2)
    dz = z @ frame + drift * h
    y = np.zeros((B, dim))
    inc = np.zeros((B, dim))
    rec = np.empty((len(rec_steps), B, dim))
    wanted = {int(k): i for i, k in enumerate(rec_steps)}
    if 0 in wanted:
        rec[wanted[0]] = y
    for k in range(1, steps + 1):
        inc[:, :d1] = dz[:, k - 1]
        y = bch(y, inc, c, r)
        if k in wanted:
            rec[wanted[k]] = y
    return rec


def sample_diffusion(
    algebra: GradedAlgebra,
    frame,
    drift,
    grid,
    steps: int,
    n_paths: int,
    seed: int,
    noise_steps: int | None = None,
    workers: int = 1,
    chunk: int = 4096,
) -> PathSampleSet:
    """Exponential Euler scheme on ``(G, *)`` for
    ``dY = sum_i V_i(Y) o dB^i + rho(Y) dt``, ``Y_0 = 1``:
    ``Y_{k+1} = Y_k * exp(sum_i V_i dB_i + rho h)``.

    ``frame[i]`` are the layer-1 coordinates of ``V_i``.  Brownian
    increments are drawn on ``noise_steps`` sub-intervals (a multiple of
    ``steps``) and summed, so runs with different ``steps`` but the same
    ``noise_steps`` and seed share their Brownian paths.
    """
    if steps < 1:
        raise ValueError("steps must be at least 1")
    if n_paths < 1:
        raise ValueError("need at least one path")
    noise_steps = steps if noise_steps is None else int(noise_steps)
    if noise_steps % steps:
        raise ValueError("noise_steps must be a multiple of steps")
    d1 = algebra.dims[0]
    frame = np.atleast_2d(np.asarray(frame, dtype=float))
    drift = np.asarray(drift, dtype=float)
    if frame.shape[1] != d1 or drift.shape != (d1,):
        raise ValueError(f"frame must be (k, {d1}) and drift ({d1},)")
    rec_steps = grid_steps(grid, steps)
    jobs = [
        (ids, seed, steps, noise_steps, rec_steps, frame, drift, algebra.graded_structure, algebra.step,
         algebra.dim, frame.shape[0])
        for ids in _chunks(n_paths, chunk)
    ]
    parts = _run(_sde_chunk, jobs, workers)
    meta = {
        "kind": "sde",
        "steps": int(steps),
        "noise_steps": int(noise_steps),
        "seed": int(seed),
        "n_paths": int(n_paths),
        "scheme": "exponential Euler on the limit group",
    }
    return PathSampleSet(algebra, rec_steps / steps, np.concatenate(parts, axis=1), meta)


def semigroup_expectation(f, samples: PathSampleSet, t: float):
    """Mean and standard error of ``f`` over the paths at time ``t``.

    ``f`` maps an ``(N, d)`` array of group coordinates to ``N`` values.
    """
    if samples.n_paths == 0:
        raise ValueError("empty sample set")
    vals = np.asarray(f(samples.at(t)), dtype=float)
    if vals.shape != (samples.n_paths,):
        raise ValueError("test function must return one value per path")
    if samples.n_paths == 1:
        return float(vals[0]), 0.0
    return float(vals.mean()), float(vals.std(ddof=1) / math.sqrt(len(vals)))


def increments_along(samples: PathSampleSet, s: float, t: float, kind: str = STAR) -> np.ndarray:
    """``Y_s^-1 Y_t`` for every path."""
    return group_mul(inverse(samples.at(s)), samples.at(t), samples.algebra, kind)


__all__ = [
    "PathSampleSet",
    "grid_steps",
    "increments_along",
    "sample_diffusion",
    "sample_walk",
    "semigroup_expectation",
]
