"""Monte Carlo oracles for the closed-form results.

Replicates are simulated in blocks with counter-keyed generators, so every
report is a pure function of (inputs, seed, reps) whatever the thread count.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np
from scipy import stats

from .coeffs import (
    WeightScheme,
    coefficient_set,
    enumerate_oracle,
    ff_weight_moments,
    mc_weight_moments,
    std_j_coeff,
    std_v_coeff,
)
from .design import PERFECT, Ranker, jps_batch
from .distcat import Distribution, GFunction, parse_distribution
from .estimators import batch_estimates, theoretical_variance
from .streams import run_blocks
from .strata import stratum_moments

IDENTITY = GFunction.identity()
SCHEMES = (WeightScheme.SRS, WeightScheme.JPS, WeightScheme.FF)


@dataclass(frozen=True)
class McReport:
    reps: int
    mean: float
    var: float
    se_mean: float
    se_var: float
    seed: int
    elapsed: float = field(default=0.0, compare=False)

    def as_dict(self) -> dict:
        # elapsed time is left out so reports serialise reproducibly
        return {"reps": self.reps, "mean": self.mean, "var": self.var,
                "se_mean": self.se_mean, "se_var": self.se_var, "seed": self.seed}


def summarize(values: np.ndarray, seed: int, elapsed: float = 0.0) -> McReport:
    """Mean, unbiased variance and their standard errors (fourth-moment plug-in)."""
    v = np.asarray(values, dtype=float)
    reps = v.size
    mean = float(np.mean(v))
    d = v - mean
    m2 = float(np.mean(d * d))
    m4 = float(np.mean(d ** 4))
    var = m2 * reps / (reps - 1)
    se_var = float(np.sqrt(max(m4 - m2 * m2, 0.0) / reps))
    return McReport(reps, mean, var, float(np.sqrt(var / reps)), se_var, seed, elapsed)


def _block_size(n: int, H: int) -> int:
    return max(1, min(20_000, 1_000_000 // (n * H)))


def simulate_estimates(
    dist: Distribution, n: int, H: int, ranker: Ranker, reps: int, seed: int,
    schemes=SCHEMES, gs=(IDENTITY,), targets=("mean",), threads: int = 1,
) -> dict[tuple, np.ndarray]:
    """Replicate estimates for several (scheme, g, target) on shared samples.

    Keys are ``(scheme, g, target)``; ``target="variance"`` ignores g.
    """
    if reps < 2:
        raise ValueError("need at least two replicates")
    schemes = [WeightScheme.parse(s) for s in schemes]
    combos = [(s, g, t) for s in schemes for g in gs for t in targets]

    def block(rng, size):
        x, r = jps_batch(rng, dist, n, H, ranker, size)
        return [batch_estimates(x, r, H, s, g, t) for s, g, t in combos]

    # the key depends on the design only, so schemes and g share samples
    parts = run_blocks(block, reps, _block_size(n, H), seed,
                       key=(1, n, H, int(round(ranker.rho * 1_000_000))), threads=threads)
    return {c: np.concatenate([p[i] for p in parts]) for i, c in enumerate(combos)}


def mc_estimator_stats(
    scheme, dist: Distribution, g: GFunction, n: int, H: int, ranker: Ranker = PERFECT,
    reps: int = 100_000, seed: int = 0, threads: int = 1, target: str = "mean",
) -> McReport:
    """Replicate mean and variance of one class estimator."""
    scheme = WeightScheme.parse(scheme)
    t0 = time.perf_counter()
    est = simulate_estimates(dist, n, H, ranker, reps, seed, (scheme,), (g,), (target,), threads)
    return summarize(est[(scheme, g, target)], seed, time.perf_counter() - t0)


def _standardized(est: np.ndarray, sm, n: int) -> np.ndarray:
    return np.sqrt(n) * (est - sm.mu_g) / np.sqrt(sm.within / sm.H)


def _ks_record(z: np.ndarray) -> dict:
    reps = z.size
    return {"ks_distance": float(stats.kstest(z, "norm").statistic),
            "critical_95": float(1.358 / np.sqrt(reps)), "z_var": float(np.var(z, ddof=1))}


def mc_normality(
    scheme, dist: Distribution, n: int, H: int, reps: int = 10_000, seed: int = 0,
    threads: int = 1,
) -> dict:
    """Kolmogorov distance of sqrt(n)(estimate - mu)/sqrt(mean within-stratum variance) from N(0,1)."""
    scheme = WeightScheme.parse(scheme)
    sm = stratum_moments(dist, IDENTITY, H)
    est = simulate_estimates(dist, n, H, PERFECT, reps, seed, (scheme,), threads=threads)
    z = _standardized(est[(scheme, IDENTITY, "mean")], sm, n)
    return {"scheme": scheme.value, "dist": dist.name, "n": n, "h": H, "reps": reps,
            "seed": seed, **_ks_record(z)}


def _equivalence(std: np.ndarray, ff: np.ndarray, sm, n: int) -> dict:
    rms = float(np.sqrt(np.mean((ff - std) ** 2)))
    return {"rms_diff_scaled": float(rms * np.sqrt(n) / np.sqrt(sm.within / sm.H)),
            "var_ratio": float(np.var(ff, ddof=1) / np.var(std, ddof=1))}


def mc_scheme_equivalence(
    dist: Distribution, n: int, H: int, reps: int = 10_000, seed: int = 0, threads: int = 1
) -> dict:
    """Standard JPS vs Frey-Feeman on the same samples, scaled by the asymptotic SD."""
    sm = stratum_moments(dist, IDENTITY, H)
    est = simulate_estimates(dist, n, H, PERFECT, reps, seed, (WeightScheme.JPS, WeightScheme.FF),
                             threads=threads)
    return {"dist": dist.name, "n": n, "h": H, "reps": reps, "seed": seed,
            **_equivalence(est[(WeightScheme.JPS, IDENTITY, "mean")],
                           est[(WeightScheme.FF, IDENTITY, "mean")], sm, n)}


def mc_coefficient(scheme, n: int, H: int, functional: str, reps: int = 1_000_000, seed: int = 0,
                   threads: int = 1) -> tuple[float, float]:
    """(estimate, standard error) of V_C1 or E_J1C1SQ from multinomial count draws."""
    out = mc_weight_moments(scheme, n, H, reps, seed, threads)
    key = {"V_C1": "v_c1", "E_J1C1SQ": "e_j1c1sq"}[functional.upper()]
    return float(out[key]), float(out["se_" + key])


# ---------------------------------------------------------------------------
# suites
# ---------------------------------------------------------------------------

VERIFY_DISTS = ("uniform", "normal", "exp")


def verify_gs(dist: Distribution) -> tuple[GFunction, ...]:
    """identity, x^2 and the indicator at the median."""
    return (IDENTITY, GFunction.power(2), GFunction.indicator(float(dist.quantile(0.5))))


def _exact_closed(scheme: WeightScheme, n: int, H: int) -> tuple[Fraction, Fraction]:
    if scheme is WeightScheme.SRS:
        return Fraction(H - 1, n * H * H), Fraction(1, n * H)
    if scheme is WeightScheme.JPS:
        return std_v_coeff(n, H), std_j_coeff(n, H)
    ff = ff_weight_moments(n, H, "enumerate")
    return ff["v_c1"], ff["e_j1c1sq"]


def suite_coeffs(seed: int, reps: int, threads: int = 1) -> list[dict]:
    checks = []
    for scheme in SCHEMES:
        for n in range(1, 9):
            for H in range(1, 5):
                v, e = _exact_closed(scheme, n, H)
                ok = (enumerate_oracle(scheme, n, H, "V_C1") == v
                      and enumerate_oracle(scheme, n, H, "E_J1C1SQ") == e)
                checks.append({"check": "enumeration", "scheme": scheme.value, "n": n, "h": H,
                               "pass": bool(ok)})
    for scheme in SCHEMES:
        for n, H in ((2, 2), (3, 2), (5, 3), (15, 5)):
            v, e = (float(x) for x in _exact_closed(scheme, n, H))
            for name, exact in (("V_C1", v), ("E_J1C1SQ", e)):
                est, se = mc_coefficient(scheme, n, H, name, reps, seed, threads)
                err = abs(est - exact)
                if se > 0:
                    dev = err / se
                else:
                    # a degenerate functional: only rounding error is allowed
                    dev = 0.0 if err <= 1e-12 * max(abs(exact), 1e-300) else float("inf")
                checks.append({"check": "mc_coefficient", "scheme": scheme.value, "n": n, "h": H,
                               "functional": name, "exact": exact, "mc": est, "se": se,
                               "deviation_se": dev, "pass": bool(dev <= 3.0)})
    return checks


def variance_grid(ns=(3, 5, 15), hs=(2, 3), dists=VERIFY_DISTS) -> list[tuple]:
    return [(d, n, H) for d in dists for n in ns for H in hs]


def suite_moments(seed: int, reps: int, threads: int = 1, grid=None, unbiased=True, variance=True) -> list[dict]:
    """Unbiasedness (4 SE) and exact-variance agreement (3 SE) on shared samples."""
    checks = []
    for dname, n, H in (grid or variance_grid()):
        dist = parse_distribution(dname)
        gs = verify_gs(dist)
        est = simulate_estimates(dist, n, H, PERFECT, reps, seed, SCHEMES, gs, threads=threads)
        for scheme in SCHEMES:
            co = coefficient_set(scheme, n, H)
            for g in gs:
                sm = stratum_moments(dist, g, H)
                rep = summarize(est[(scheme, g, "mean")], seed)
                base = {"dist": dname, "g": g.name, "n": n, "h": H, "scheme": scheme.value,
                        "reps": reps}
                if unbiased:
                    dev = abs(rep.mean - sm.mu_g) / rep.se_mean
                    checks.append({**base, "check": "unbiased", "mc_mean": rep.mean,
                                   "exact": sm.mu_g, "deviation_se": dev, "pass": bool(dev <= 4.0)})
                if variance:
                    tv = theoretical_variance(co, sm)
                    dev = abs(rep.var - tv) / rep.se_var
                    checks.append({**base, "check": "variance", "mc_var": rep.var,
                                   "exact": tv, "deviation_se": dev, "pass": bool(dev <= 3.0)})
    return checks


def suite_normality(seed: int, reps: int, threads: int = 1, n: int = 2000, H: int = 5) -> list[dict]:
    """Asymptotic normality of both JPS schemes and their equivalence, on one simulation."""
    dist = parse_distribution("normal")
    sm = stratum_moments(dist, IDENTITY, H)
    pair = (WeightScheme.JPS, WeightScheme.FF)
    est = simulate_estimates(dist, n, H, PERFECT, reps, seed, pair, threads=threads)
    base = {"dist": dist.name, "n": n, "h": H, "reps": reps, "seed": seed}
    checks = []
    for scheme in pair:
        rec = _ks_record(_standardized(est[(scheme, IDENTITY, "mean")], sm, n))
        checks.append({"check": "normality", "scheme": scheme.value, **base, **rec,
                       "pass": rec["ks_distance"] < 0.02})
    eq = _equivalence(est[(WeightScheme.JPS, IDENTITY, "mean")],
                      est[(WeightScheme.FF, IDENTITY, "mean")], sm, n)
    checks.append({"check": "scheme_equivalence", **base, **eq,
                   "pass": eq["rms_diff_scaled"] < 0.05 and abs(eq["var_ratio"] - 1) < 0.01})
    return checks


SUITES = ("coeffs", "unbiased", "variance", "normality", "all")


def run_suite(name: str, seed: int = 0, reps: int | None = None, threads: int = 1) -> list[dict]:
    if name not in SUITES:
        raise ValueError(f"suite must be one of {SUITES}")
    out = []
    if name in ("coeffs", "all"):
        out += suite_coeffs(seed, reps or 1_000_000, threads)
    if name in ("unbiased", "variance", "all"):
        out += suite_moments(seed, reps or 100_000, threads,
                             unbiased=name != "variance", variance=name != "unbiased")
    if name in ("normality", "all"):
        out += suite_normality(seed, reps or 10_000, threads)
    return out
