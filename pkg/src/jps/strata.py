"""Moments of g(X) within perfectly ranked post-strata.

Stratum r holds the r-th order statistic of a ranking class of size H, whose
density in quantile space is the Beta(r, H - r + 1) density.  All integrals
are taken in that space, where only the quantile function can be singular
(and only at the endpoints).
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from math import comb

import numpy as np
from scipy.special import gammaln

from .distcat import Distribution, GFunction, uniforms
from .quadrature import integrate_unit

RTOL = 1e-11


@dataclass(frozen=True)
class StratumMoments:
    """Per-stratum and overall moments of g(X) for one (distribution, g, H)."""

    H: int
    mu_g: float
    sigma2_g: float
    mu_r: tuple[float, ...]
    sigma2_r: tuple[float, ...]
    delta_g: float
    se_mu_r: tuple[float, ...] | None = None

    @property
    def between(self) -> float:
        """Sum over strata of (mu_r - mu_g)**2."""
        return float(sum((m - self.mu_g) ** 2 for m in self.mu_r))

    @property
    def within(self) -> float:
        """Sum over strata of the within-stratum variances."""
        return float(sum(self.sigma2_r))


def _log_beta_weights(H: int, u: np.ndarray, v: np.ndarray) -> np.ndarray:
    r = np.arange(1, H + 1)[:, None]
    logc = np.log(H) + gammaln(H) - gammaln(r) - gammaln(H - r + 1)
    return logc + (r - 1) * np.log(u) + (H - r) * np.log(v)


def order_stat_weights(H: int, u: np.ndarray, v: np.ndarray) -> np.ndarray:
    """Matrix of densities of the H order statistics of H uniforms at ``u``.

    ``v`` must equal ``1 - u``.  Columns sum to H.
    """
    return np.exp(_log_beta_weights(H, u, v))


def stratum_cdfs(dist: Distribution | None, H: int, x: float, *, F: float | None = None) -> np.ndarray:
    """CDFs of the H order statistics at ``x`` (or at a given F(x) value)."""
    if H < 1:
        raise ValueError("H must be at least 1")
    p = float(dist.cdf(x)) if F is None else float(F)
    q = 1.0 - p
    # binomial tail sums: P(at least r of H fall at or below x)
    pmf = np.array([comb(H, j) * p ** j * q ** (H - j) for j in range(H + 1)])
    tail = np.cumsum(pmf[::-1])[::-1]
    return np.clip(tail[1:], 0.0, 1.0)


def _gq(dist: Distribution, g: GFunction):
    def values(u, v):
        return g(dist.quantile_pair(u, v))
    return values


@lru_cache(maxsize=4096)
def _overall(dist: Distribution, g: GFunction) -> tuple[float, float]:
    g.check_moments(dist)
    gq = _gq(dist, g)
    # the g**2 component sets the scale when E g(X) is near zero
    mu, m2 = integrate_unit(lambda u, v: np.stack([gq(u, v), gq(u, v) ** 2]), rtol=RTOL)
    mu = float(mu)
    var = float(integrate_unit(lambda u, v: (gq(u, v) - mu) ** 2, rtol=RTOL))
    if not var > 0:
        raise ValueError(f"{g.name}(X) is degenerate under {dist.name}")
    return mu, var


@lru_cache(maxsize=4096)
def _stratum_offsets(dist: Distribution, g: GFunction, H: int) -> tuple[float, ...]:
    """E[g(X_(r))] - mu_g for r = 1..H."""
    mu, var = _overall(dist, g)
    if H == 1:
        return (0.0,)
    gq = _gq(dist, g)

    def f(u, v):
        return (gq(u, v) - mu)[None, :] * order_stat_weights(H, u, v)

    return tuple(float(d) for d in integrate_unit(f, rtol=RTOL, scale=np.sqrt(var)))


def heterogeneity(dist: Distribution, H: int, g: GFunction = GFunction()) -> float:
    """The between-strata share of Var g(X), delta_g."""
    if g.kind == "indicator":
        return stratum_moments(dist, g, H).delta_g
    _, var = _overall(dist, g)
    d = np.array(_stratum_offsets(dist, g, H))
    return float(np.sum(d * d) / (H * var))


@lru_cache(maxsize=4096)
def stratum_moments(dist: Distribution, g: GFunction, H: int) -> StratumMoments:
    """Stratum means and variances of g(X) under perfect ranking with class size H."""
    if H < 1:
        raise ValueError("H must be at least 1")
    g.check_moments(dist)
    if g.kind == "indicator":
        F = float(dist.cdf(g.c))
        Fr = stratum_cdfs(None, H, 0.0, F=F)
        mu_r = tuple(float(p) for p in Fr)
        s2_r = tuple(float(p * (1.0 - p)) for p in Fr)
        var = F * (1.0 - F)
        if var <= 0:
            raise ValueError(f"{g.name}(X) is degenerate under {dist.name}")
        between = float(sum((p - F) ** 2 for p in Fr))
        return StratumMoments(H, F, var, mu_r, s2_r, between / (H * var))

    mu, var = _overall(dist, g)
    offsets = np.array(_stratum_offsets(dist, g, H))
    mu_r = mu + offsets
    if H == 1:
        return StratumMoments(1, mu, var, (mu,), (var,), 0.0)
    gq = _gq(dist, g)

    def f(u, v):
        return (gq(u, v)[None, :] - mu_r[:, None]) ** 2 * order_stat_weights(H, u, v)

    s2_r = integrate_unit(f, rtol=RTOL, scale=var)
    delta = float(np.sum(offsets ** 2) / (H * var))
    return StratumMoments(
        H, mu, var, tuple(float(m) for m in mu_r), tuple(float(s) for s in s2_r), delta
    )


def transformed_stratum_moments(
    dist: Distribution,
    g: GFunction,
    H: int,
    rank_by: str = "X",
    *,
    reps: int = 10_000_000,
    seed: int = 0,
) -> StratumMoments:
    """Stratum moments when ranking is done on X or on Y = g(X).

    With ``rank_by="Y"`` a monotone g gives the X-ranked moments (reversed for
    a decreasing g).  Otherwise the order statistics of g(X) are estimated by
    Monte Carlo from ``reps`` ranking classes and ``se_mu_r`` is filled in.
    """
    base = stratum_moments(dist, g, H)
    rank_by = rank_by.upper()
    if rank_by == "X":
        return base
    if rank_by != "Y":
        raise ValueError("rank_by must be 'X' or 'Y'")
    direction = g.direction(dist)
    if direction > 0:
        return base
    if direction < 0:
        return StratumMoments(
            H, base.mu_g, base.sigma2_g, base.mu_r[::-1], base.sigma2_r[::-1], base.delta_g
        )

    rng = np.random.default_rng(np.random.SeedSequence(seed))
    s1 = np.zeros(H)
    s2 = np.zeros(H)
    done = 0
    block = max(1, 2_000_000 // H)
    while done < reps:
        m = min(block, reps - done)
        y = np.sort(g(dist.from_uniform(uniforms(rng, (m, H)))), axis=1)
        s1 += y.sum(axis=0)
        s2 += (y * y).sum(axis=0)
        done += m
    mu_r = s1 / reps
    s2_r = s2 / reps - mu_r ** 2
    se = np.sqrt(s2_r / reps)
    delta = float(np.sum((mu_r - base.mu_g) ** 2) / (H * base.sigma2_g))
    return StratumMoments(
        H, base.mu_g, base.sigma2_g, tuple(mu_r.tolist()), tuple(s2_r.tolist()), delta,
        se_mu_r=tuple(se.tolist()),
    )
