"""Population models and the g-functions whose means are estimated."""

from __future__ import annotations

import math
import re
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Callable

import numpy as np
from scipy import stats


class MomentError(ValueError):
    """A requested moment does not exist for the distribution."""


# family -> (scipy constructor, parameter names, defaults)
_FAMILIES: dict[str, tuple[str, ...]] = {
    "normal": ("mu", "sigma"),
    "t": ("df",),
    "uniform": ("a", "b"),
    "beta": ("alpha", "beta"),
    "exp": ("rate",),
    "chisq": ("df",),
    "weibull": ("shape", "scale"),
    "pareto": ("shape", "scale"),
}

_DEFAULTS: dict[str, tuple[float, ...]] = {
    "normal": (0.0, 1.0),
    "t": (3.0,),
    "uniform": (0.0, 1.0),
    "beta": (0.5, 0.5),
    "exp": (1.0,),
    "chisq": (5.0,),
    "weibull": (1.0, 1.0),
    "pareto": (2.5, 1.0),
}


@lru_cache(maxsize=None)
def _frozen(family: str, params: tuple[float, ...]):
    if family == "normal":
        return stats.norm(loc=params[0], scale=params[1])
    if family == "t":
        return stats.t(params[0])
    if family == "uniform":
        return stats.uniform(loc=params[0], scale=params[1] - params[0])
    if family == "beta":
        return stats.beta(params[0], params[1])
    if family == "exp":
        return stats.expon(scale=1.0 / params[0])
    if family == "chisq":
        return stats.chi2(params[0])
    if family == "weibull":
        return stats.weibull_min(params[0], scale=params[1])
    if family == "pareto":
        # F(x) = 1 - (scale/x)**shape on x >= scale
        return stats.pareto(params[0], scale=params[1])
    raise ValueError(f"unknown family {family!r}")


@dataclass(frozen=True)
class Distribution:
    """An immutable member of the population catalog.

    >>> Distribution("exp").quantile(1 - math.exp(-1))
    1.0000000000000002
    """

    family: str
    params: tuple[float, ...] = ()

    def __post_init__(self):
        if self.family not in _FAMILIES:
            raise ValueError(f"unknown distribution family {self.family!r}")
        names = _FAMILIES[self.family]
        params = tuple(float(p) for p in self.params)
        defaults = _DEFAULTS[self.family]
        if len(params) > len(names):
            raise ValueError(f"{self.family} takes at most {len(names)} parameters")
        params = params + defaults[len(params):]
        object.__setattr__(self, "params", params)
        if not all(math.isfinite(p) for p in params):
            raise ValueError("distribution parameters must be finite")
        fam = self.family
        if fam == "normal" and params[1] <= 0:
            raise ValueError("normal sigma must be positive")
        if fam == "uniform" and not params[0] < params[1]:
            raise ValueError("uniform requires a < b")
        if fam in ("t", "chisq", "exp", "beta", "weibull", "pareto") and min(params) <= 0:
            raise ValueError(f"{fam} parameters must be positive")

    # -- naming --------------------------------------------------------
    @property
    def name(self) -> str:
        p = self.params
        fam = self.family
        if fam == "t":
            return f"t{_fmt(p[0])}"
        if fam in ("normal", "uniform") and p == _DEFAULTS[fam]:
            return fam
        if fam == "exp" and p == (1.0,):
            return "exp"
        if fam in ("weibull", "pareto") and p[1] == 1.0:
            return f"{fam}({_fmt(p[0])})"
        return f"{fam}({','.join(_fmt(x) for x in p)})"

    def __str__(self) -> str:
        return self.name

    @property
    def _dist(self):
        return _frozen(self.family, self.params)

    @property
    def support(self) -> tuple[float, float]:
        lo, hi = self._dist.support()
        return float(lo), float(hi)

    # -- distribution functions ---------------------------------------
    def cdf(self, x):
        return self._dist.cdf(x)

    def pdf(self, x):
        return self._dist.pdf(x)

    def quantile(self, u):
        u_arr = np.asarray(u, dtype=float)
        if np.any((u_arr <= 0) | (u_arr >= 1)) or np.any(np.isnan(u_arr)):
            raise ValueError("quantile level must lie in the open interval (0, 1)")
        out = self.quantile_pair(u_arr, 1.0 - u_arr)
        return float(out) if np.ndim(out) == 0 else out

    def quantile_pair(self, u: np.ndarray, v: np.ndarray) -> np.ndarray:
        """Quantile at ``u`` where ``v = 1 - u`` is supplied exactly.

        The upper half is evaluated through the survival function so that
        points a few ulps away from 1 keep their tail accuracy.
        """
        u = np.asarray(u, dtype=float)
        v = np.asarray(v, dtype=float)
        lower = u <= 0.5
        return np.where(lower, self._dist.ppf(np.where(lower, u, 0.5)),
                        self._dist.isf(np.where(lower, 0.5, v)))

    # -- moments -------------------------------------------------------
    def moment_exists(self, k: float) -> bool:
        """Whether E|X|^k is finite."""
        if self.family == "t":
            return k < self.params[0]
        if self.family == "pareto":
            return k < self.params[0]
        return True

    def mean(self) -> float:
        if not self.moment_exists(1):
            raise MomentError(f"{self.name} has no finite mean")
        return float(self._dist.mean())

    def var(self) -> float:
        if not self.moment_exists(2):
            raise MomentError(f"moment does not exist: {self.name} has infinite variance")
        return float(self._dist.var())

    # -- sampling ------------------------------------------------------
    def sample(self, rng: np.random.Generator, count: int) -> np.ndarray:
        """Draw ``count`` values by quantile inversion of ``rng`` uniforms."""
        if count < 1:
            raise ValueError("sample size must be positive")
        return self.from_uniform(uniforms(rng, count))

    def from_uniform(self, u: np.ndarray) -> np.ndarray:
        return self.quantile_pair(u, 1.0 - u)


def uniforms(rng: np.random.Generator, size) -> np.ndarray:
    """Uniforms on the open interval (0, 1)."""
    u = rng.random(size)
    # rng.random() is on [0, 1); 0 occurs with probability 2**-53
    return np.where(u == 0.0, np.nextafter(0.0, 1.0), u)


def _fmt(x: float) -> str:
    return str(int(x)) if float(x).is_integer() else repr(float(x))


_DIST_RE = re.compile(r"^\s*([a-z]+)\s*(?:\(([^)]*)\))?\s*$")
_ALIASES = {
    "n": "normal", "norm": "normal", "gauss": "normal",
    "u": "uniform", "unif": "uniform",
    "e": "exp", "expon": "exp", "exponential": "exp",
    "chi2": "chisq", "chisquare": "chisq",
    "student": "t",
}


def parse_distribution(text: str) -> Distribution:
    """Parse compact names such as ``normal``, ``t3``, ``beta(0.5,0.5)``."""
    s = text.strip().lower()
    m = re.fullmatch(r"t\s*(\d+(?:\.\d*)?)", s)
    if m:
        return Distribution("t", (float(m.group(1)),))
    m = _DIST_RE.match(s)
    if not m:
        raise ValueError(f"cannot parse distribution {text!r}")
    fam = _ALIASES.get(m.group(1), m.group(1))
    args = m.group(2)
    params = tuple(float(a) for a in args.split(",")) if args and args.strip() else ()
    return Distribution(fam, params)


#: The population set used for the efficiency figures and tables, in table order.
CATALOG: dict[str, Distribution] = {
    "normal": Distribution("normal"),
    "t3": Distribution("t", (3,)),
    "uniform": Distribution("uniform"),
    "beta(0.5,0.5)": Distribution("beta", (0.5, 0.5)),
    "exp": Distribution("exp"),
    "chisq(5)": Distribution("chisq", (5,)),
    "weibull(0.5)": Distribution("weibull", (0.5,)),
    "weibull(1.5)": Distribution("weibull", (1.5,)),
    "pareto(2.5)": Distribution("pareto", (2.5,)),
    "pareto(4)": Distribution("pareto", (4,)),
}


@dataclass(frozen=True)
class GFunction:
    """The function g whose population mean E[g(X)] is the target.

    ``kind`` is one of ``identity``, ``power`` (x**k), ``indicator``
    (1 if x <= c) or ``custom``.  A custom g carries its own vectorised rule
    and a monotonicity flag: +1 increasing, -1 decreasing, 0 unknown/none.
    """

    kind: str = "identity"
    k: int = 1
    c: float = 0.0
    func: Callable[[np.ndarray], np.ndarray] | None = field(default=None, compare=False)
    monotone: int = 0
    label: str = ""

    def __post_init__(self):
        if self.kind not in ("identity", "power", "indicator", "custom"):
            raise ValueError(f"unknown g kind {self.kind!r}")
        if self.kind == "power" and (int(self.k) != self.k or self.k < 1):
            raise ValueError("power exponent must be a positive integer")
        if self.kind == "custom" and self.func is None:
            raise ValueError("custom g needs an evaluation rule")

    @classmethod
    def identity(cls) -> "GFunction":
        return cls("identity")

    @classmethod
    def power(cls, k: int) -> "GFunction":
        return cls("identity") if k == 1 else cls("power", k=int(k))

    @classmethod
    def indicator(cls, c: float) -> "GFunction":
        return cls("indicator", c=float(c))

    @classmethod
    def custom(cls, func, monotone: int = 0, label: str = "custom") -> "GFunction":
        return cls("custom", func=func, monotone=monotone, label=label)

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        if self.kind == "identity":
            return x
        if self.kind == "power":
            return x ** self.k
        if self.kind == "indicator":
            return (x <= self.c).astype(float)
        return np.asarray(self.func(x), dtype=float)

    @property
    def name(self) -> str:
        if self.kind == "identity":
            return "identity"
        if self.kind == "power":
            return f"pow:{self.k}"
        if self.kind == "indicator":
            return f"ind:{_fmt(self.c)}"
        return self.label or "custom"

    def x_moment_needed(self) -> float | None:
        """Order of |X| moment that makes Var g(X) finite (None if unknown)."""
        if self.kind == "identity":
            return 2
        if self.kind == "power":
            return 2 * self.k
        if self.kind == "indicator":
            return 0
        return None

    def check_moments(self, dist: Distribution) -> None:
        k = self.x_moment_needed()
        if k and not dist.moment_exists(k):
            raise MomentError(
                f"moment does not exist: Var[{self.name}(X)] is infinite under {dist.name}"
            )

    def direction(self, dist: Distribution) -> int:
        """+1/-1 if g is (weakly) monotone on the support of ``dist``, else 0."""
        if self.kind == "identity":
            return 1
        if self.kind == "power":
            if self.k % 2 == 1:
                return 1
            lo, hi = dist.support
            if lo >= 0:
                return 1
            if hi <= 0:
                return -1
            return 0
        if self.kind == "indicator":
            return -1
        return int(np.sign(self.monotone))


def parse_g(text: str) -> GFunction:
    """Parse ``identity``, ``pow:k`` or ``ind:c``."""
    s = text.strip().lower()
    if s in ("identity", "id", "x", "mean"):
        return GFunction.identity()
    kind, _, arg = s.partition(":")
    if kind in ("pow", "power") and arg:
        return GFunction.power(int(arg))
    if kind in ("ind", "indicator") and arg:
        return GFunction.indicator(float(arg))
    raise ValueError(f"cannot parse g-function {text!r}")
