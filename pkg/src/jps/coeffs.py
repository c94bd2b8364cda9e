"""Distribution-free moments of post-stratum weights.

Every estimator in the class is sum_r C_r * (mean of g over stratum r), with
weights that depend on the sample only through the stratum counts
N ~ Multinomial(n; 1/H, ..., 1/H).  Its variance needs just two moments of
the weights, V(C_1) and E(J_1 C_1^2), where J_r = 1/N_r (0 for an empty
stratum).  This module computes them exactly where possible.
"""

from __future__ import annotations

import enum
import itertools
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache
import math
from math import comb, factorial, lcm

import numpy as np
from scipy import stats
from scipy.special import gammaln

from .streams import run_blocks

ENUMERATION_BUDGET = 2_000_000
DEFAULT_MC_REPS = 10_000_000
# exact rational Frey-Feeman enumeration up to this n; floating point beyond
FF_EXACT_MAX_N = 60


class WeightScheme(str, enum.Enum):
    SRS = "srs"  # C_r = N_r / n
    JPS = "jps"  # C_r = I_r / h_n
    FF = "ff"  # C_r = a_r / sum(a), a_r = N_r / (H N_r + 2)

    @classmethod
    def parse(cls, text: "str | WeightScheme") -> "WeightScheme":
        if isinstance(text, WeightScheme):
            return text
        key = str(text).strip().lower()
        aliases = {"standard": "jps", "std": "jps", "frey-feeman": "ff", "freyfeeman": "ff"}
        try:
            return cls(aliases.get(key, key))
        except ValueError:
            raise ValueError(f"unknown weight scheme {text!r}") from None


class EnumerationBudgetError(RuntimeError):
    pass


@dataclass(frozen=True)
class CoefficientSet:
    scheme: WeightScheme
    n: int
    H: int
    e_c1: float
    v_c1: float
    cov_c1c2: float
    e_j1c1sq: float
    m1: float
    m2: float
    k1: float
    k2: float
    exactness: str  # closed_form | enumerated | monte_carlo
    se: dict | None = None
    exact: tuple[Fraction, Fraction] | None = field(default=None, compare=False)

    def as_dict(self) -> dict:
        out = {
            "scheme": self.scheme.value,
            "n": self.n,
            "h": self.H,
            "e_c1": self.e_c1,
            "v_c1": self.v_c1,
            "cov_c1c2": self.cov_c1c2,
            "e_j1c1sq": self.e_j1c1sq,
            "m1": self.m1,
            "m2": self.m2,
            "k1": self.k1,
            "k2": self.k2,
            "exactness": self.exactness,
        }
        if self.se:
            out["se"] = dict(self.se)
        return out


def _check(n: int, H: int) -> None:
    if n < 1 or H < 1:
        raise ValueError("need n >= 1 and H >= 1")


# ---------------------------------------------------------------------------
# standard JPS weights, I_r / h_n
# ---------------------------------------------------------------------------

def std_inv_hn_pmf(n: int, H: int) -> dict[Fraction, Fraction]:
    """Exact distribution of I_1/h_n, as {value: probability} (zero masses dropped)."""
    _check(n, H)
    denom = H ** n
    pmf = {Fraction(0): Fraction((H - 1) ** n, denom)}
    for k in range(1, H + 1):
        onto = sum((-1) ** (j - 1) * comb(k, j - 1) * (k - j + 1) ** n for j in range(1, k + 1))
        pmf[Fraction(1, k)] = Fraction(comb(H - 1, k - 1) * onto, denom)
    return {v: p for v, p in pmf.items() if p}


def std_v_coeff(n: int, H: int) -> Fraction:
    """V(I_1/h_n) = H^-2 * sum_{k<H} (k/H)^(n-1)."""
    _check(n, H)
    return Fraction(sum(k ** (n - 1) for k in range(1, H)), H ** (n + 1))


@lru_cache(maxsize=1024)
def std_j_coeff(n: int, H: int) -> Fraction:
    """E(J_1/h_n^2) in exact rationals.

    The alternating triple sum over (h_n, j, n_1) is regrouped by the base
    b = h_n - j of the power term.  For fixed h_n, the n_1 terms beyond
    n - h_n + 1 sum over j to a count of surjections onto h_n - 1 cells from
    fewer balls, which is zero, so each inner sum runs over n_1 = 1..n-1 and
    is shared by every h_n.  Inner sums are carried as integers over
    lcm(1..n-1) to keep big-integer work linear in n.
    """
    _check(n, H)
    if H == 1 or n == 1:
        # n == 1: the lone observation sits alone with h_n = 1, E = P(N_1 = 1)
        return Fraction(1, n) if H == 1 else Fraction(1, H)
    L = lcm(*range(1, n))
    total = Fraction(0)
    for b in range(1, H):
        cb = Fraction(0)
        for h in range(b + 1, H + 1):
            j = h - b
            cb += Fraction((-1) ** (j - 1) * comb(H - 1, h - 1) * comb(h - 1, j - 1), h * h)
        if not cb:
            continue
        acc = 0
        binom = 1
        power = b ** (n - 1)
        for n1 in range(1, n):
            binom = binom * (n - n1 + 1) // n1
            acc += binom * power * (L // n1)
            power //= b
        total += cb * Fraction(acc, L)
    return (Fraction(1, n) + total) / H ** n


def std_j_coeff_float(n: int, H: int) -> float:
    """E(J_1/h_n^2) in floating point through a sum of positive terms only.

    Conditions on N_1 ~ Binomial(n, 1/H); the number K of the other H - 1
    strata that are occupied by the remaining balls follows the classical
    occupancy chain, so E = sum P(N_1 = m) / m * E[(1 + K)^-2 | n - m balls].
    """
    _check(n, H)
    if H == 1:
        return 1.0 / n
    others = H - 1
    occ = np.zeros((n, others + 1))  # occ[m, k] = P(K = k | m balls)
    occ[0, 0] = 1.0
    k = np.arange(others + 1)
    for m in range(1, n):
        prev = occ[m - 1]
        occ[m] = prev * k / others
        occ[m, 1:] += prev[:-1] * (others - k[:-1]) / others
    inv_sq = 1.0 / (1.0 + k) ** 2
    cond = occ @ inv_sq  # cond[m] = E[(1+K)^-2 | m balls]
    n1 = np.arange(1, n + 1)
    p = stats.binom.pmf(n1, n, 1.0 / H)
    return float(np.sum(p / n1 * cond[n - n1]))


# ---------------------------------------------------------------------------
# enumeration over count vectors
# ---------------------------------------------------------------------------

def composition_count(n: int, H: int) -> int:
    return comb(n + H - 1, H - 1)


@lru_cache(maxsize=None)
def partition_count(n: int, H: int) -> int:
    """Number of partitions of n into at most H parts."""
    # ways[m] counts partitions of m into parts of size <= k, k = 1..H
    ways = [1] + [0] * n
    for k in range(1, H + 1):
        for m in range(k, n + 1):
            ways[m] += ways[m - k]
    return ways[n]


def compositions(n: int, H: int):
    """Yield every count vector N with sum n and H parts, with n!/prod(N_r!).

    Stars and bars: the H - 1 bar positions among n + H - 1 slots.
    """
    fact = [factorial(i) for i in range(n + 1)]
    for bars in itertools.combinations(range(n + H - 1), H - 1):
        prev = -1
        parts = []
        for b in bars:
            parts.append(b - prev - 1)
            prev = b
        parts.append(n + H - 2 - prev)
        coef = fact[n]
        for p in parts:
            coef //= fact[p]
        yield tuple(parts), coef


def partitions(n: int, H: int, largest: int | None = None):
    """Yield non-increasing count vectors of length H summing to n."""
    if largest is None:
        largest = n
    if H == 1:
        if n <= largest:
            yield (n,)
        return
    for first in range(min(n, largest), -1, -1):
        if first * H < n:
            break
        for rest in partitions(n - first, H - 1, first):
            yield (first,) + rest


def exact_weights(scheme: WeightScheme, counts) -> list[Fraction]:
    """Weights as exact rationals for one count vector."""
    scheme = WeightScheme.parse(scheme)
    H = len(counts)
    n = sum(counts)
    if n < 1:
        raise ValueError("at least one observation is needed")
    if scheme is WeightScheme.SRS:
        return [Fraction(c, n) for c in counts]
    if scheme is WeightScheme.JPS:
        h = sum(1 for c in counts if c)
        return [Fraction(1, h) if c else Fraction(0) for c in counts]
    a = [Fraction(c, H * c + 2) for c in counts]
    s = sum(a)
    return [x / s for x in a]


def _budget(n: int, H: int, count: int | None = None) -> None:
    count = composition_count(n, H) if count is None else count
    if count > ENUMERATION_BUDGET:
        raise EnumerationBudgetError(
            f"{count} count vectors for n={n}, H={H} exceed the enumeration budget "
            f"of {ENUMERATION_BUDGET}; use the Monte Carlo method"
        )


FUNCTIONALS = ("E_C1", "V_C1", "COV_C1C2", "E_J1C1SQ", "PMF")


def enumerate_oracle(scheme, n: int, H: int, functional: str = "V_C1"):
    """Exact weight functional by summing over every multinomial count vector.

    Each vector has probability n!/prod(N_r!) * H^-n.  ``PMF`` returns the
    distribution of C_1 as ``{value: probability}``.
    """
    scheme = WeightScheme.parse(scheme)
    _check(n, H)
    _budget(n, H)
    functional = functional.upper()
    if functional not in FUNCTIONALS:
        raise ValueError(f"functional must be one of {FUNCTIONALS}")
    total = H ** n
    e1 = e2 = e12 = ej = Fraction(0)
    pmf: dict[Fraction, int] = {}
    for counts, coef in compositions(n, H):
        w = exact_weights(scheme, counts)
        c1 = w[0]
        e1 += coef * c1
        e2 += coef * c1 * c1
        if H > 1:
            e12 += coef * c1 * w[1]
        if counts[0]:
            ej += coef * c1 * c1 / counts[0]
        pmf[c1] = pmf.get(c1, 0) + coef
    e1 /= total
    e2 /= total
    if functional == "E_C1":
        return e1
    if functional == "V_C1":
        return e2 - e1 * e1
    if functional == "COV_C1C2":
        return e12 / total - e1 * e1 if H > 1 else Fraction(0)
    if functional == "E_J1C1SQ":
        return ej / total
    return {v: Fraction(c, total) for v, c in sorted(pmf.items())}


# ---------------------------------------------------------------------------
# Frey-Feeman weights
# ---------------------------------------------------------------------------

def _ff_enumerate(n: int, H: int) -> tuple[Fraction, Fraction]:
    """(V(A_1), E(J_1 A_1^2)) summing over unordered occupancy patterns.

    Each pattern is weighted by its number of arrangements, and the stratum-1
    functional is replaced by its average over strata (exchangeability).
    """
    fact = [factorial(i) for i in range(max(n, H) + 1)]
    e2 = Fraction(0)
    ej = Fraction(0)
    for pattern in partitions(n, H):
        arrangements = fact[H]
        run = 1
        for i in range(1, H + 1):
            if i < H and pattern[i] == pattern[i - 1]:
                run += 1
            else:
                arrangements //= fact[run]
                run = 1
        coef = fact[n]
        for p in pattern:
            coef //= fact[p]
        w = exact_weights(WeightScheme.FF, pattern)
        sq = sum(x * x for x in w)
        sj = sum(x * x / c for x, c in zip(w, pattern) if c)
        mult = arrangements * coef
        e2 += mult * sq
        ej += mult * sj
    total = H ** n * H
    return e2 / total - Fraction(1, H * H), ej / total


def _ff_enumerate_float(n: int, H: int) -> tuple[float, float]:
    """Floating-point version of :func:`_ff_enumerate` for larger n."""
    pats = np.array(list(partitions(n, H)), dtype=np.int64)
    # arrangements: H! / prod(multiplicity of each distinct count)!
    log_arr = np.full(len(pats), gammaln(H + 1))
    run = np.ones(len(pats))
    for i in range(1, H + 1):
        if i < H:
            same = pats[:, i] == pats[:, i - 1]
        else:
            same = np.zeros(len(pats), dtype=bool)
        closing = ~same
        log_arr -= np.where(closing, gammaln(run + 1), 0.0)
        run = np.where(same, run + 1, 1.0)
    log_p = log_arr + gammaln(n + 1) - gammaln(pats + 1).sum(axis=1) - n * np.log(H) - np.log(H)
    p = np.exp(log_p)
    w = float_weights(WeightScheme.FF, pats)
    with np.errstate(divide="ignore", invalid="ignore"):
        sj = np.where(pats > 0, w * w / pats, 0.0).sum(axis=1)
    dev = ((w - 1.0 / H) ** 2).sum(axis=1)
    return math.fsum(p * dev), math.fsum(p * sj)


def mc_weight_moments(
    scheme, n: int, H: int, reps: int, seed: int, threads: int = 1
) -> dict:
    """Monte Carlo V(C_1) and E(J_1 C_1^2) over multinomial count draws.

    Per replicate the stratum average of C_r^2 and J_r C_r^2 is used (the
    strata are exchangeable), and E(C_1) = 1/H exactly.
    """
    scheme = WeightScheme.parse(scheme)
    _check(n, H)
    if reps < 2:
        raise ValueError("need at least two replicates")
    p = np.full(H, 1.0 / H)

    def block(rng, size):
        N = rng.multinomial(n, p, size=size).astype(float)
        C = float_weights(scheme, N)
        J = np.divide(1.0, N, out=np.zeros_like(N), where=N > 0)
        a = (C * C).mean(axis=1)
        b = (J * C * C).mean(axis=1)
        return np.array([a.sum(), (a * a).sum(), b.sum(), (b * b).sum()])

    block_size = max(1, 500_000 // H)
    parts = run_blocks(block, reps, block_size, seed, key=(7, n, H, _SCHEME_KEY[scheme]), threads=threads)
    s = np.sum(parts, axis=0)
    ea, eb = s[0] / reps, s[2] / reps
    va = max(s[1] / reps - ea * ea, 0.0) * reps / (reps - 1)
    vb = max(s[3] / reps - eb * eb, 0.0) * reps / (reps - 1)
    return {
        "v_c1": max(ea - 1.0 / H ** 2, 0.0) if H > 1 else 0.0,
        "e_j1c1sq": eb,
        "se_v_c1": float(np.sqrt(va / reps)),
        "se_e_j1c1sq": float(np.sqrt(vb / reps)),
        "reps": reps,
        "seed": seed,
    }


_SCHEME_KEY = {WeightScheme.SRS: 0, WeightScheme.JPS: 1, WeightScheme.FF: 2}


def float_weights(scheme, counts: np.ndarray) -> np.ndarray:
    """Weights for a batch of count vectors (last axis = strata)."""
    scheme = WeightScheme.parse(scheme)
    N = np.asarray(counts, dtype=float)
    H = N.shape[-1]
    if scheme is WeightScheme.SRS:
        w = N
    elif scheme is WeightScheme.JPS:
        w = (N > 0).astype(float)
    else:
        w = N / (H * N + 2.0)
    s = w.sum(axis=-1, keepdims=True)
    if np.any(s == 0):
        raise ValueError("weights need at least one occupied stratum")
    return w / s


def ff_weight_moments(
    n: int, H: int, method: str = "enumerate", reps: int = DEFAULT_MC_REPS, seed: int = 0,
    threads: int = 1,
) -> dict:
    """V(A_1) and E(J_1 A_1^2) for the Frey-Feeman weights."""
    _check(n, H)
    if H == 1:
        return {"v_c1": Fraction(0), "e_j1c1sq": Fraction(1, n), "exactness": "closed_form"}
    if method in ("enumerate", "enum"):
        _budget(n, H, partition_count(n, H))
        if n <= FF_EXACT_MAX_N:
            v, e = _ff_enumerate(n, H)
            return {"v_c1": v, "e_j1c1sq": e, "exactness": "enumerated"}
        v, e = _ff_enumerate_float(n, H)
        return {"v_c1": v, "e_j1c1sq": e, "exactness": "enumerated_float"}
    if method == "mc":
        out = mc_weight_moments(WeightScheme.FF, n, H, reps, seed, threads)
        out["exactness"] = "monte_carlo"
        return out
    raise ValueError("method must be 'enumerate' or 'mc'")


# ---------------------------------------------------------------------------
# assembled coefficient sets
# ---------------------------------------------------------------------------

def _assemble(scheme, n, H, v, e, exactness, se=None, exact=None) -> CoefficientSet:
    v = float(v)
    e = float(e)
    k1 = H * e
    if H == 1:
        # every scheme is the SRS mean; no between-strata term exists
        k2 = 1.0 / n
        cov = 0.0
    else:
        k2 = H * H / (H - 1) * v
        cov = -v / (H - 1)
    return CoefficientSet(
        scheme=scheme, n=n, H=H, e_c1=1.0 / H, v_c1=v, cov_c1c2=cov, e_j1c1sq=e,
        m1=n * k1, m2=n * k2, k1=k1, k2=k2, exactness=exactness, se=se, exact=exact,
    )


@lru_cache(maxsize=8192)
def coefficient_set(
    scheme, n: int, H: int, method: str | None = None, reps: int = DEFAULT_MC_REPS,
    seed: int = 0,
) -> CoefficientSet:
    """Weight moments and the derived variance multipliers M1, M2, K1, K2.

    ``method`` matters only for Frey-Feeman weights: ``enumerate``, ``mc``,
    or None to enumerate when within budget and fall back to Monte Carlo.
    """
    scheme = WeightScheme.parse(scheme)
    _check(n, H)
    if scheme is WeightScheme.SRS:
        v = Fraction(H - 1, n * H * H)
        e = Fraction(1, n * H)
        return _assemble(scheme, n, H, v, e, "closed_form", exact=(v, e))
    if scheme is WeightScheme.JPS:
        v = std_v_coeff(n, H)
        e = std_j_coeff(n, H)
        return _assemble(scheme, n, H, v, e, "closed_form", exact=(v, e))
    if method is None:
        method = "enumerate" if partition_count(n, H) <= ENUMERATION_BUDGET else "mc"
    ff = ff_weight_moments(n, H, method=method, reps=reps, seed=seed)
    if ff["exactness"] == "monte_carlo":
        se = {"v_c1": ff["se_v_c1"], "e_j1c1sq": ff["se_e_j1c1sq"], "reps": reps, "seed": seed}
        return _assemble(scheme, n, H, ff["v_c1"], ff["e_j1c1sq"], "monte_carlo", se=se)
    v, e = ff["v_c1"], ff["e_j1c1sq"]
    exact = (v, e) if isinstance(v, Fraction) else None
    return _assemble(scheme, n, H, v, e, ff["exactness"], exact=exact)
