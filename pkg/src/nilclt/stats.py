"""Comparison statistics for path sample sets."""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field

import numpy as np
from scipy import stats as sps

from .liegroup import dist_surrogate
from .simulate import PathSampleSet

KS_LEVEL_1PCT = 1.63


@dataclass
class LayerMoments:
    mean: np.ndarray
    cov: np.ndarray
    se_mean: np.ndarray
    se_cov: np.ndarray
    n: int


def layer_moments(samples: PathSampleSet, k: int, t: float, basis=None) -> LayerMoments:
    """Mean and covariance of the layer-``k`` coordinates at time ``t``.

    ``basis`` (rows = basis vectors in ``X``-coordinates) re-expresses the
    layer in another frame, e.g. the Albanese orthonormal frame.
    """
    x = samples.at(t)[:, samples.algebra.layer(k)]
    n = x.shape[0]
    if n < 2:
        raise ValueError("need at least two paths for moments")
    if basis is not None:
        x = np.linalg.solve(np.asarray(basis, dtype=float).T, x.T).T
    mean = x.mean(axis=0)
    c = x - mean
    cov = c.T @ c / (n - 1)
    prod = c[:, :, None] * c[:, None, :]
    se_cov = prod.std(axis=0, ddof=1) / math.sqrt(n)
    se_mean = np.sqrt(np.diag(cov) / n)
    return LayerMoments(mean, cov, se_mean, se_cov, n)


def ks_distance(a, b) -> float:
    """Two-sample Kolmogorov-Smirnov statistic ``sup |F_a - F_b|``."""
    a = np.sort(np.asarray(a, dtype=float).ravel())
    b = np.sort(np.asarray(b, dtype=float).ravel())
    if a.size == 0 or b.size == 0:
        raise ValueError("both samples must be nonempty")
    pts = np.concatenate([a, b])
    fa = np.searchsorted(a, pts, side="right") / a.size
    fb = np.searchsorted(b, pts, side="right") / b.size
    return float(np.abs(fa - fb).max())


def ks_threshold(na: int, nb: int, c: float = KS_LEVEL_1PCT) -> float:
    return c * math.sqrt((na + nb) / (na * nb))


def ecdf_points(x) -> tuple[np.ndarray, np.ndarray]:
    x = np.sort(np.asarray(x, dtype=float).ravel())
    return x, np.arange(1, x.size + 1) / x.size


@dataclass
class ExponentFit:
    slope: float
    intercept: float
    ci: tuple[float, float]
    gaps: list
    moments: list
    dropped: list


def moment_exponent_fit(samples: PathSampleSet, gaps, power: float = 4.0, drop_largest: int = 2) -> ExponentFit:
    """Least-squares slope of ``log E[dist(Y_s, Y_t)^power]`` against ``log(t - s)``.

    For each gap every grid pair ``(s, s + gap)`` contributes; the
    ``drop_largest`` largest gaps are left out of the fit.
    """
    times = samples.times
    gaps = sorted({float(g) for g in gaps})
    if any(g <= 0 for g in gaps):
        raise ValueError("gaps must be positive")
    kept = gaps[: len(gaps) - drop_largest] if drop_largest else gaps
    dropped = gaps[len(kept):]
    if len(kept) < 3:
        raise ValueError(f"need at least 3 distinct gaps after dropping {drop_largest}, got {len(kept)}")
    moments = []
    for g in kept:
        vals = []
        for i, s in enumerate(times):
            j = np.flatnonzero(np.abs(times - (s + g)) <= 1e-9)
            if j.size:
                d = dist_surrogate(samples.values[i], samples.values[j[0]], samples.algebra)
                vals.append(np.mean(d**power))
        if not vals:
            raise ValueError(f"no grid pair is {g} apart")
        moments.append(float(np.mean(vals)))
    if min(moments) <= 0:
        raise ValueError("degenerate moments (zero distance)")
    lg = np.log(kept)
    lm = np.log(moments)
    fit = sps.linregress(lg, lm)
    half = sps.t.ppf(0.975, len(kept) - 2) * fit.stderr
    return ExponentFit(float(fit.slope), float(fit.intercept), (float(fit.slope - half), float(fit.slope + half)),
                       kept, moments, dropped)


@dataclass
class ComparisonReport:
    times: list
    layers: dict = field(default_factory=dict)
    ks: dict = field(default_factory=dict)
    exponents: dict = field(default_factory=dict)
    passed: bool = True

    def to_json(self) -> str:
        return json.dumps(_plain(asdict(self)), indent=2)


def _plain(obj):
    if isinstance(obj, dict):
        return {str(k): _plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_plain(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    if isinstance(obj, (np.floating, np.integer, np.bool_)):
        return obj.item()
    return obj


def compare(a: PathSampleSet, b: PathSampleSet, times=None, ks_c: float = KS_LEVEL_1PCT,
            exponent_gaps=None) -> ComparisonReport:
    """Moments and per-coordinate KS distances at shared grid times."""
    if not a.algebra.same_as(b.algebra):
        raise ValueError("sample sets live on different algebras")
    if times is None:
        times = [t for t in a.times if np.any(np.abs(b.times - t) <= 1e-9) and t > 0]
    rep = ComparisonReport(times=[float(t) for t in times])
    alg = a.algebra
    threshold = ks_threshold(a.n_paths, b.n_paths, ks_c)
    for t in times:
        key = f"{t:g}"
        rep.layers[key] = {}
        for k in range(1, alg.step + 1):
            ma, mb = layer_moments(a, k, t), layer_moments(b, k, t)
            rep.layers[key][f"layer{k}"] = {"A": asdict(ma), "B": asdict(mb)}
        xa, xb = a.at(t), b.at(t)
        rep.ks[key] = {}
        for flat in range(alg.dim):
            k, i = alg.label(flat)
            d = ks_distance(xa[:, flat], xb[:, flat])
            ok = d <= threshold
            rep.ks[key][f"g{k}_{i}"] = {"D": d, "threshold": threshold, "pass": ok}
            rep.passed = rep.passed and ok
    if exponent_gaps is not None:
        for name, s in (("A", a), ("B", b)):
            try:
                rep.exponents[name] = asdict(moment_exponent_fit(s, exponent_gaps))
            except ValueError as exc:
                rep.exponents[name] = {"error": str(exc)}
    return rep
