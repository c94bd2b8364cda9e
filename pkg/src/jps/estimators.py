"""Class estimators of E[g(X)] from a JPS sample, and their exact variances."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .coeffs import CoefficientSet, WeightScheme, float_weights
from .design import BrssSample, JpsSample
from .distcat import GFunction
from .strata import StratumMoments

IDENTITY = GFunction.identity()


@dataclass(frozen=True)
class EstimateResult:
    value: float
    scheme: WeightScheme
    weights_used: tuple[float, ...]
    h_n: int
    full_rank: bool
    x: float | None = None

    def as_dict(self) -> dict:
        out = {
            "value": self.value,
            "scheme": self.scheme.value,
            "weights_used": list(self.weights_used),
            "h_n": self.h_n,
            "full_rank": self.full_rank,
        }
        if self.x is not None:
            out = {"x": self.x, **out}
        return out


def weights(scheme, counts) -> np.ndarray:
    """Post-stratum weights for one count vector.

    >>> weights("ff", [1, 2]).tolist() == [3 / 7, 4 / 7]
    True
    """
    N = np.asarray(counts)
    if N.ndim != 1 or N.size == 0 or np.any(N < 0):
        raise ValueError("counts must be a non-empty vector of non-negative integers")
    if N.sum() < 1:
        raise ValueError("all strata are empty")
    return float_weights(scheme, N)


def _stratum_means(values: np.ndarray, rank0: np.ndarray, H: int) -> tuple[np.ndarray, np.ndarray]:
    counts = np.bincount(rank0, minlength=H)
    sums = np.bincount(rank0, weights=values, minlength=H)
    means = np.divide(sums, counts, out=np.zeros(H), where=counts > 0)
    return means, counts


def _result(value, scheme, w, counts, x=None) -> EstimateResult:
    h = int(np.count_nonzero(counts))
    return EstimateResult(float(value), scheme, tuple(float(c) for c in w), h, h == len(counts), x)


def estimate_g_mean(sample: JpsSample, g: GFunction = IDENTITY, scheme="jps") -> EstimateResult:
    """sum_r C_r * (mean of g(X) in stratum r); empty strata carry weight 0."""
    scheme = WeightScheme.parse(scheme)
    means, counts = _stratum_means(g(sample.x), sample.rank - 1, sample.H)
    w = weights(scheme, counts)
    return _result(w @ means, scheme, w, counts)


def estimate_mean(sample: JpsSample, scheme="jps") -> EstimateResult:
    return estimate_g_mean(sample, IDENTITY, scheme)


def estimate_variance(sample: JpsSample, scheme="jps") -> EstimateResult:
    """Plug-in variance sum_r C_r mean(X^2)_r - (sum_r C_r mean(X)_r)^2."""
    if sample.n < 2:
        raise ValueError("variance estimation needs at least two observations")
    scheme = WeightScheme.parse(scheme)
    m1, counts = _stratum_means(sample.x, sample.rank - 1, sample.H)
    m2, _ = _stratum_means(sample.x ** 2, sample.rank - 1, sample.H)
    w = weights(scheme, counts)
    return _result(w @ m2 - (w @ m1) ** 2, scheme, w, counts)


def estimate_cdf(sample: JpsSample, scheme="jps", grid=()) -> list[EstimateResult]:
    """Weighted stratum empirical CDFs, at each point of ``grid``."""
    scheme = WeightScheme.parse(scheme)
    counts = np.bincount(sample.rank - 1, minlength=sample.H)
    w = weights(scheme, counts)
    out = []
    for c in grid:
        means, _ = _stratum_means((sample.x <= c).astype(float), sample.rank - 1, sample.H)
        out.append(_result(min(max(w @ means, 0.0), 1.0), scheme, w, counts, x=float(c)))
    return out


def srs_estimate(x, g: GFunction = IDENTITY) -> float:
    x = np.asarray(x, dtype=float)
    if x.size == 0:
        raise ValueError("empty sample")
    return float(np.mean(g(x)))


def brss_estimate(sample: BrssSample, g: GFunction = IDENTITY) -> float:
    return float(np.mean(g(sample.values)))


# ---------------------------------------------------------------------------
# batched estimators (rows are independent samples)
# ---------------------------------------------------------------------------

def batch_estimates(x, rank0, H: int, scheme, g: GFunction = IDENTITY, target: str = "mean"):
    """Estimates for each row of ``x`` with 0-based ``rank0``.

    ``target`` is ``mean`` (of g) or ``variance`` (plug-in variance of X).
    """
    scheme = WeightScheme.parse(scheme)
    onehot = rank0[..., None] == np.arange(H)
    counts = onehot.sum(axis=-2)
    w = float_weights(scheme, counts)
    inv = np.divide(1.0, counts, out=np.zeros(counts.shape), where=counts > 0)
    if target == "mean":
        means = np.einsum("bn,bnh->bh", g(x), onehot) * inv
        return np.einsum("bh,bh->b", w, means)
    if target == "variance":
        m1 = np.einsum("bn,bnh->bh", x, onehot) * inv
        m2 = np.einsum("bn,bnh->bh", x * x, onehot) * inv
        return np.einsum("bh,bh->b", w, m2) - np.einsum("bh,bh->b", w, m1) ** 2
    raise ValueError("target must be 'mean' or 'variance'")


# ---------------------------------------------------------------------------
# exact variances
# ---------------------------------------------------------------------------

def _same_h(coeffs: CoefficientSet, sm: StratumMoments) -> None:
    if coeffs.H != sm.H:
        raise ValueError(f"H mismatch: coefficients for H={coeffs.H}, moments for H={sm.H}")


def theoretical_variance(coeffs: CoefficientSet, sm: StratumMoments) -> float:
    """E(J1 C1^2) sum_r s2_r + H/(H-1) V(C1) sum_r (mu_r - mu)^2."""
    _same_h(coeffs, sm)
    H = sm.H
    between = 0.0 if H == 1 else H / (H - 1) * coeffs.v_c1 * sm.between
    return coeffs.e_j1c1sq * sm.within + between


def theoretical_variance_pooled(coeffs: CoefficientSet, sm: StratumMoments) -> float:
    """The same variance written through the total variance sigma^2_g."""
    _same_h(coeffs, sm)
    H = sm.H
    return coeffs.k1 * sm.sigma2_g - (coeffs.k1 - coeffs.k2) * sm.between / H


def brss_variance(sm: StratumMoments, m: int) -> float:
    """Variance of the balanced RSS mean with m cycles: sum_r s2_r / (m H^2)."""
    if m < 1:
        raise ValueError("need at least one cycle")
    return sm.within / (m * sm.H ** 2)


def srs_variance(sm: StratumMoments, n: int) -> float:
    return sm.sigma2_g / n


def variance_estimator_bias(coeffs: CoefficientSet, sm: StratumMoments) -> float:
    """E(plug-in variance) - sigma^2, which is minus the mean estimator's variance."""
    return -theoretical_variance(coeffs, sm)
