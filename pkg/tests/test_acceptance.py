"""Acceptance suite.  Each test records one PASS/FAIL line, shown in the
pytest terminal summary (and printed directly with ``-s``).

The Monte Carlo criteria share three large sample sets built once per
session; expect a few minutes on one core.
"""

import time

import numpy as np
import pytest

from conftest import ALGEBRAS, hats, hex_params, random_heisenberg_kernel
from nilclt.graph import build_hexagonal_heisenberg, cycle_basis, cycle_coordinates, homological_direction, rho_R
from nilclt.harmonic import RealizationFamily, albanese_metric, analyze
from nilclt.liegroup import DOT, STAR, dilate, group_mul, hom_norm, inverse
from nilclt.simulate import sample_diffusion, sample_walk, semigroup_expectation
from nilclt.stats import ks_distance, layer_moments, moment_exponent_fit

ASYM = (0.5, 0.3, 0.2, 0.2, 0.3, 0.5)
UNIFORM = (1 / 3, 1 / 3, 1 / 3, 1 / 3, 1 / 3, 1 / 3)
N_WALK = 4096
N_PATHS = 50_000
SDE_STEPS = 1024
GRID = [j / 128 for j in range(129)]


@pytest.fixture
def record(pytestconfig):
    def _record(k, ok, detail):
        line = f"ACCEPTANCE {k}: {'PASS' if ok else 'FAIL'}  {detail}"
        print(line)
        pytestconfig.acceptance_lines.append(line)
        assert ok, line

    return _record


def hex_family(params):
    return RealizationFamily(build_hexagonal_heisenberg(*params)[1])


@pytest.fixture(scope="session")
def asym_family():
    return hex_family(ASYM)


@pytest.fixture(scope="session")
def asym_walk(asym_family):
    return sample_walk(asym_family, N_WALK, GRID, N_PATHS, seed=2024)


@pytest.fixture(scope="session")
def asym_sde(asym_family):
    frame = albanese_metric(asym_family.gram(0.0)).frame
    return sample_diffusion(asym_family.graph.algebra, frame, asym_family.rho, [0.5, 1.0], SDE_STEPS, N_PATHS,
                            seed=77, noise_steps=2 * SDE_STEPS)


@pytest.fixture(scope="session")
def asym_sde_fine(asym_family):
    frame = albanese_metric(asym_family.gram(0.0)).frame
    return sample_diffusion(asym_family.graph.algebra, frame, asym_family.rho, [0.5, 1.0], 2 * SDE_STEPS,
                            N_PATHS, seed=77, noise_steps=2 * SDE_STEPS)


# closed forms for the hexagonal lattice

def closed_gram(params, eps):
    (ah, bh, ch), (av, bv, cv) = hats(params)
    return ((ah * (bh + ch) - eps**2 * av**2) / 4, ((ah + bh) * ch - eps**2 * cv**2) / 4,
            (ah * ch + eps**2 * av * cv) / 4)


def closed_vol_inverse(params, eps):
    (ah, bh, ch), (av, bv, cv) = hats(params)
    e2 = eps**2
    inner = (2 * ah * bh * ch + e2 * ah * av * (bh * cv + bv * ch) + e2 * bh * bv * (ah * cv + av * ch)
             + e2 * ch * cv * (ah * bv + av * bh))
    return np.sqrt(inner) / 4


def test_1_albanese_golden_values(record):
    rng = np.random.default_rng(1)
    t0 = time.perf_counter()
    err = 0.0
    for _ in range(20):
        params = hex_params(rng)
        fam = hex_family(params)
        for eps in (0.0, 0.25, 0.5, 1.0):
            g = fam.gram(eps)
            g11, g22, g12 = closed_gram(params, eps)
            err = max(err, abs(g[0, 0] - g11), abs(g[1, 1] - g22), abs(abs(g[0, 1]) - g12),
                      abs(np.sqrt(np.linalg.det(g)) - closed_vol_inverse(params, eps)))
    elapsed = time.perf_counter() - t0
    record(1, err <= 1e-9 and elapsed < 1.0, f"max error {err:.2e} (<= 1e-9), runtime {elapsed:.3f}s (< 1s)")


def test_2_hex_exact_structure(record):
    rng = np.random.default_rng(2)
    err = 0.0
    for params in [ASYM] + [hex_params(rng) for _ in range(10)]:
        g, k = build_hexagonal_heisenberg(*params)
        info = analyze(k, 1.0)
        (ah, bh, ch), (av, bv, cv) = hats(params)
        gamma = homological_direction(k, np.array(info["m"]))
        coords = cycle_coordinates(gamma, cycle_basis(g))
        s = np.sqrt(ah * (bh + ch))
        v0 = 1.0 / closed_vol_inverse(params, 0.0)
        drift = [av / s, v0 * (av * ah * ch + cv * ah * bh + cv * ah * ch) / (4 * s)]
        err = max(
            err,
            np.abs(np.array(info["m"]) - 0.5).max(),
            np.abs(coords - [av / 2, cv / 2]).max(),
            np.abs(rho_R(gamma, g) - [av / 2, cv / 2]).max(),
            np.abs(np.array(info["rho"]) - [av / 2, cv / 2]).max(),
            np.abs(np.array(info["drift_coefficients"]) - drift).max(),
        )
    record(2, err <= 1e-12, f"max error {err:.2e} (<= 1e-12) on m, gamma_p, rho, drift coefficients")


def test_3_beta_linear(record):
    rng = np.random.default_rng(3)
    eps = 2.0 ** -np.arange(1, 9)
    worst_zero, worst_slope = 0.0, np.inf
    for params in [ASYM] + [hex_params(rng) for _ in range(5)]:
        fam = hex_family(params)
        worst_zero = max(worst_zero, np.abs(fam.beta(0.0)).max())
        norms = np.array([np.linalg.norm(fam.beta(e)) for e in eps])
        slope = np.polyfit(np.log(eps), np.log(norms), 1)[0]
        worst_slope = min(worst_slope, slope)
    for _ in range(5):
        fam = RealizationFamily(random_heisenberg_kernel(rng)[1])
        worst_zero = max(worst_zero, np.abs(fam.beta(0.0)).max())
        norms = np.array([np.linalg.norm(fam.beta(e)) for e in eps])
        if norms.min() > 0:
            worst_slope = min(worst_slope, np.polyfit(np.log(eps), np.log(norms), 1)[0])
    ok = worst_zero <= 1e-12 and worst_slope >= 0.95
    record(3, ok, f"|beta(0)| max {worst_zero:.2e} (<= 1e-12), min log-log slope {worst_slope:.4f} (>= 0.95)")


def test_4_group_law_suite(record):
    rng = np.random.default_rng(4)
    n = 1000
    err = {}
    for name, make in ALGEBRAS.items():
        alg = make()
        a, b, c = rng.uniform(-2, 2, size=(3, n, alg.dim))
        eps, delta = rng.uniform(0.05, 3, size=(2, n))
        for kind in (DOT, STAR):
            lhs = group_mul(group_mul(a, b, alg, kind), c, alg, kind)
            rhs = group_mul(a, group_mul(b, c, alg, kind), alg, kind)
            err[f"assoc-{kind}"] = max(err.get(f"assoc-{kind}", 0), np.abs(lhs - rhs).max())
            inv = group_mul(a, inverse(a, alg, kind), alg, kind)
            err[f"inverse-{kind}"] = max(err.get(f"inverse-{kind}", 0), np.abs(inv).max())
        hom = (dilate(group_mul(a, b, alg, STAR), eps, alg)
               - group_mul(dilate(a, eps, alg), dilate(b, eps, alg), alg, STAR))
        err["dilation-hom"] = max(err.get("dilation-hom", 0), np.abs(hom).max())
        comp = dilate(dilate(a, eps, alg), delta, alg) - dilate(a, eps * delta, alg)
        err["dilation-comp"] = max(err.get("dilation-comp", 0), np.abs(comp).max())
        lo = slice(0, sum(alg.dims[:2]))
        rel = group_mul(a, b, alg, DOT)[:, lo] - group_mul(a, b, alg, STAR)[:, lo]
        err["rel-1"] = max(err.get("rel-1", 0), np.abs(rel).max())
        hn = hom_norm(dilate(a, eps, alg), alg) - eps * hom_norm(a, alg)
        err["hom-norm"] = max(err.get("hom-norm", 0), np.abs(hn).max())
    worst = max(err.values())
    detail = ", ".join(f"{k} {v:.1e}" for k, v in err.items())
    record(4, worst <= 1e-10, f"{n} instances x {len(ALGEBRAS)} algebras, max error {worst:.2e}: {detail}")


def test_5_harmonicity_residuals(record):
    rng = np.random.default_rng(5)
    grid = np.linspace(0, 1, 11)
    worst = 0.0
    for i in range(50):
        nv = int(rng.integers(1, 7))
        _, k = random_heisenberg_kernel(rng, n_vertices=nv, extra_pairs=int(rng.integers(1, 6)))
        fam = RealizationFamily(k, gauge="anchor" if i % 2 else "mean")
        worst = max(worst, max(fam.residual(e) for e in grid))
    record(5, worst <= 1e-12, f"50 kernels x 11 eps, max residual {worst:.2e} (<= 1e-12)")


@pytest.mark.slow
def test_6_clt_drift(record, asym_family, asym_walk):
    mom = layer_moments(asym_walk, 1, 1.0)
    z = (mom.mean - asym_family.rho) / mom.se_mean
    ok = np.all(np.abs(z) <= 4)
    record(6, ok, f"mean {np.round(mom.mean, 5).tolist()} vs rho {asym_family.rho.tolist()}, "
                  f"z-scores {np.round(z, 2).tolist()} (|z| <= 4), N={mom.n}, n={N_WALK}")


@pytest.mark.slow
def test_7_clt_covariance(record):
    fam = hex_family(UNIFORM)
    frame = albanese_metric(fam.gram(0.0)).frame
    walk = sample_walk(fam, N_WALK, [0.5, 1.0], N_PATHS, seed=7)
    errs = []
    for t in (0.5, 1.0):
        cov = layer_moments(walk, 1, t, basis=frame).cov
        errs.append(np.linalg.norm(cov - t * np.eye(2)) / np.linalg.norm(t * np.eye(2)))
    ok = max(errs) <= 0.05
    record(7, ok, f"relative Frobenius error t=0.5: {errs[0]:.4f}, t=1: {errs[1]:.4f} (<= 0.05)")


@pytest.mark.slow
def test_8_functional_agreement(record, asym_walk, asym_sde, asym_sde_fine):
    d_walk = ks_distance(asym_walk.at(1.0)[:, 2], asym_sde.at(1.0)[:, 2])
    d_ref = ks_distance(asym_sde.at(1.0)[:, 2], asym_sde_fine.at(1.0)[:, 2])
    ok = d_walk <= 0.02 and d_ref <= 0.01
    record(8, ok, f"KS(X3) walk vs SDE {d_walk:.4f} (<= 0.02), SDE h vs h/2 {d_ref:.4f} (<= 0.01)")


@pytest.mark.slow
def test_9_moment_scaling(record, asym_walk):
    gaps = [2.0**-k for k in range(7, 1, -1)]
    fit = moment_exponent_fit(asym_walk, gaps, power=4)
    ok = 1.8 <= fit.slope <= 2.2
    record(9, ok, f"slope {fit.slope:.4f} in [1.8, 2.2], CI ({fit.ci[0]:.3f}, {fit.ci[1]:.3f}), "
                  f"fitted gaps {fit.gaps}")


TEST_FUNCTIONS = {
    "exp(-|x|^2)": lambda g: np.exp(-(g[:, 0] ** 2 + g[:, 1] ** 2)),
    "cos(2 z)": lambda g: np.cos(2 * g[:, 2]),
    "1/(1+x1^2+x2^2+z^2)": lambda g: 1 / (1 + g[:, 0] ** 2 + g[:, 1] ** 2 + g[:, 2] ** 2),
}


@pytest.mark.slow
def test_10_semigroup(record, asym_walk, asym_sde):
    parts, ok = [], True
    for t in (0.5, 1.0):
        for name, f in TEST_FUNCTIONS.items():
            mw, sw = semigroup_expectation(f, asym_walk, t)
            md, sd = semigroup_expectation(f, asym_sde, t)
            z = abs(mw - md) / np.hypot(sw, sd)
            ok = ok and z <= 3
            parts.append(f"t={t:g} {name}: {z:.2f}")
    record(10, ok, "|walk - diffusion| / combined SE (<= 3): " + "; ".join(parts))


if __name__ == "__main__":
    raise SystemExit(pytest.main([__file__, "-v", "-s"]))
