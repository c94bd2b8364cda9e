"""Sample generators for SRS, JPS and balanced RSS designs.

A JPS unit is one measured draw ranked within a class of H draws; the other
H - 1 class members only contribute to the rank and are never measured.
Ranking works on uniforms (the draws' probability-integral transforms), so
auxiliary values never pass through the quantile function.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import numpy as np
from scipy.special import ndtri

from .distcat import Distribution, uniforms


@dataclass(frozen=True)
class Ranker:
    """Perfect ranking (rho = 1) or ranking on a noisy normal concomitant."""

    rho: float = 1.0

    def __post_init__(self):
        if not 0.0 <= self.rho <= 1.0:
            raise ValueError("ranker correlation must lie in [0, 1]")

    @property
    def perfect(self) -> bool:
        return self.rho == 1.0

    @classmethod
    def parse(cls, text: str) -> "Ranker":
        s = text.strip().lower()
        if s == "perfect":
            return cls(1.0)
        kind, _, arg = s.partition(":")
        if kind == "concomitant" and arg:
            return cls(float(arg))
        raise ValueError(f"cannot parse ranker {text!r}")

    def __str__(self) -> str:
        return "perfect" if self.perfect else f"concomitant:{self.rho!r}"


PERFECT = Ranker(1.0)


@dataclass(frozen=True)
class JpsSample:
    """n measured values with judgment ranks 1..H."""

    H: int
    x: np.ndarray
    rank: np.ndarray

    def __post_init__(self):
        x = np.asarray(self.x, dtype=float)
        r = np.asarray(self.rank, dtype=int)
        if x.ndim != 1 or x.shape != r.shape:
            raise ValueError("x and rank must be 1-d and of equal length")
        if x.size == 0:
            raise ValueError("a JPS sample needs at least one observation")
        if self.H < 1 or r.min() < 1 or r.max() > self.H:
            raise ValueError(f"ranks must lie in 1..{self.H}")
        object.__setattr__(self, "x", x)
        object.__setattr__(self, "rank", r)

    @property
    def n(self) -> int:
        return int(self.x.size)

    @cached_property
    def counts(self) -> np.ndarray:
        return np.bincount(self.rank - 1, minlength=self.H)

    @property
    def occupied(self) -> np.ndarray:
        return self.counts > 0

    @property
    def h_n(self) -> int:
        return int(self.occupied.sum())

    @property
    def full_rank(self) -> bool:
        return self.h_n == self.H


@dataclass(frozen=True)
class BrssSample:
    """m cycles of H measured judgment order statistics; ``values[j, r-1]``."""

    H: int
    values: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float)
        if v.ndim != 2 or v.shape[1] != self.H or v.shape[0] < 1:
            raise ValueError("BRSS values must be an (m, H) grid with m >= 1")
        object.__setattr__(self, "values", v)

    @property
    def m(self) -> int:
        return int(self.values.shape[0])


def _ranks_from_classes(rng, u: np.ndarray, ranker: Ranker) -> np.ndarray:
    """0-based rank of slot 0 within each class (last axis)."""
    if ranker.perfect:
        key = u
    else:
        noise = rng.standard_normal(u.shape)
        key = ranker.rho * ndtri(u) + np.sqrt(1.0 - ranker.rho ** 2) * noise
    return (key[..., 1:] < key[..., :1]).sum(axis=-1)


def jps_batch(
    rng: np.random.Generator, dist: Distribution, n: int, H: int, ranker: Ranker, reps: int
) -> tuple[np.ndarray, np.ndarray]:
    """``reps`` JPS samples as arrays ``x`` (reps, n) and 0-based ranks."""
    u = uniforms(rng, (reps, n, H))
    ranks = _ranks_from_classes(rng, u, ranker)
    return dist.from_uniform(u[..., 0]), ranks


def draw_jps(
    rng: np.random.Generator, dist: Distribution, n: int, H: int, ranker: Ranker = PERFECT
) -> JpsSample:
    if n < 1 or H < 1:
        raise ValueError("need n >= 1 and H >= 1")
    x, r = jps_batch(rng, dist, n, H, ranker, 1)
    return JpsSample(H, x[0], r[0] + 1)


def draw_brss(
    rng: np.random.Generator, dist: Distribution, m: int, H: int, ranker: Ranker = PERFECT
) -> BrssSample:
    """Balanced RSS: in each cycle, the unit judged r-th in the r-th set is measured."""
    if m < 1 or H < 1:
        raise ValueError("need m >= 1 and H >= 1")
    u = uniforms(rng, (m, H, H))
    if ranker.perfect:
        key = u
    else:
        key = ranker.rho * ndtri(u) + np.sqrt(1.0 - ranker.rho ** 2) * rng.standard_normal(u.shape)
    order = np.argsort(key, axis=-1, kind="stable")
    r = np.arange(H)
    idx = order[:, r, r]  # (m, H): position of the rank-r unit in set r
    picked = u[np.arange(m)[:, None], r[None, :], idx]
    return BrssSample(H, dist.from_uniform(picked))


def draw_srs(rng: np.random.Generator, dist: Distribution, n: int) -> np.ndarray:
    if n < 1:
        raise ValueError("an SRS needs at least one unit")
    return dist.sample(rng, n)
