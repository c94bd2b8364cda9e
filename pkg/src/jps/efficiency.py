"""Relative efficiency of class estimators against SRS, balanced RSS and each other."""

from __future__ import annotations

from dataclasses import dataclass, field
from decimal import ROUND_HALF_UP, Decimal
from fractions import Fraction
from statistics import multimode

from .coeffs import CoefficientSet, WeightScheme, coefficient_set
from .distcat import CATALOG, Distribution, GFunction
from .estimators import brss_variance, theoretical_variance
from .strata import StratumMoments, heterogeneity, stratum_moments, transformed_stratum_moments

IDENTITY = GFunction.identity()


@dataclass(frozen=True)
class REReport:
    re: float
    regime: str  # vs_srs | vs_brss_equal_h | vs_brss_cross_h | ff_vs_std_jps
    components: dict = field(default_factory=dict)

    def as_dict(self) -> dict:
        return {"re": self.re, "regime": self.regime, "components": dict(self.components)}


def round2(x: float) -> float:
    """Round half away from zero to two decimals, on the shortest decimal repr."""
    return float(Decimal(repr(float(x))).quantize(Decimal("0.01"), rounding=ROUND_HALF_UP))


def _check_delta(delta: float) -> None:
    if not 0.0 <= delta < 1.0:
        raise ValueError(f"delta must lie in [0, 1), got {delta!r}")


def re_vs_srs(coeffs: CoefficientSet, delta: float) -> float:
    """1 / [M1 (1 - delta) + M2 delta]."""
    _check_delta(delta)
    return 1.0 / (coeffs.m1 * (1.0 - delta) + coeffs.m2 * delta)


def are_vs_srs(delta: float) -> float:
    _check_delta(delta)
    return 1.0 / (1.0 - delta)


def re_vs_brss(coeffs: CoefficientSet, sm_j: StratumMoments, sm_b: StratumMoments, n: int) -> float:
    """Var(BRSS mean, class size H_B, n/H_B cycles) / Var(class estimator, class size H_J)."""
    if coeffs.H != sm_j.H:
        raise ValueError("coefficient and stratum class sizes differ")
    if coeffs.n != n:
        raise ValueError("coefficients were computed for a different n")
    if n % sm_b.H:
        raise ValueError(f"n={n} is not a multiple of the BRSS class size {sm_b.H}")
    return brss_variance(sm_b, n // sm_b.H) / theoretical_variance(coeffs, sm_j)


def re_ff_vs_std(n: int, H: int, sm: StratumMoments, method: str | None = None, seed: int = 0) -> float:
    """Var(standard JPS) / Var(Frey-Feeman JPS)."""
    std = coefficient_set(WeightScheme.JPS, n, H)
    ff = coefficient_set(WeightScheme.FF, n, H, method=method, seed=seed)
    return theoretical_variance(std, sm) / theoretical_variance(ff, sm)


def re_report(
    vs: str, scheme, dist: Distribution, n: int, hj: int, hb: int | None = None,
    g: GFunction = IDENTITY,
) -> REReport:
    scheme = WeightScheme.parse(scheme)
    sm_j = stratum_moments(dist, g, hj)
    co = coefficient_set(scheme, n, hj)
    comp = {"m1": co.m1, "m2": co.m2, "delta_g": sm_j.delta_g, "h_j": hj, "n": n}
    if vs == "srs":
        return REReport(re_vs_srs(co, sm_j.delta_g), "vs_srs", comp)
    if vs == "brss":
        hb = hj if hb is None else hb
        sm_b = stratum_moments(dist, g, hb)
        comp["h_b"] = hb
        comp["delta_b"] = sm_b.delta_g
        regime = "vs_brss_equal_h" if hb == hj else "vs_brss_cross_h"
        return REReport(re_vs_brss(co, sm_j, sm_b, n), regime, comp)
    if vs == "ff":
        return REReport(1.0 / re_ff_vs_std(n, hj, sm_j), "ff_vs_std_jps", comp)
    raise ValueError("vs must be 'srs', 'brss' or 'ff'")


def min_delta_for_dominance(coeffs: CoefficientSet) -> float:
    """Smallest delta with RE(class estimator, SRS) >= 1, i.e. (M1 - 1)/(M1 - M2)."""
    if coeffs.scheme is WeightScheme.SRS or coeffs.H == 1:
        raise ValueError("scheme coincides with SRS")
    if coeffs.exact is not None:
        v, e = coeffs.exact
        H, n = coeffs.H, coeffs.n
        m1 = n * H * e
        m2 = Fraction(n * H * H, H - 1) * v
        if m1 <= m2:
            raise ValueError("threshold needs M1 > M2")
        return float((m1 - 1) / (m1 - m2))
    if coeffs.m1 <= coeffs.m2:
        raise ValueError("threshold needs M1 > M2")
    return (coeffs.m1 - 1.0) / (coeffs.m1 - coeffs.m2)


def tw_bound(H: int) -> float:
    """Upper bound (H - 1)/(H + 1) on delta for the identity g."""
    if H < 1:
        raise ValueError("H must be at least 1")
    return (H - 1) / (H + 1)


def tw_check(delta: float, H: int, tol: float = 1e-12) -> bool:
    return delta <= tw_bound(H) + tol


def y_ranking_gap(
    coeffs: CoefficientSet, dist: Distribution, g: GFunction, H: int, *, reps: int = 10_000_000,
    seed: int = 0,
) -> float:
    """Var(ranking on Y = g(X)) - Var(ranking on X), both perfect.

    Equal to (K1 - K2)/H times the difference of the sums of squared stratum
    means; zero whenever g is monotone on the support.
    """
    if coeffs.H != H:
        raise ValueError("coefficient class size differs from H")
    if g.direction(dist) != 0 or H == 1:
        return 0.0
    x_ranked = stratum_moments(dist, g, H)
    y_ranked = transformed_stratum_moments(dist, g, H, "Y", reps=reps, seed=seed)
    ss_x = sum(m * m for m in x_ranked.mu_r)
    ss_y = sum(m * m for m in y_ranked.mu_r)
    return (coeffs.k1 - coeffs.k2) / H * (ss_x - ss_y)


def ordered_sumsq_gap(rows) -> Fraction:
    """sum_j (sum_i a_i(j))^2 - sum_j (sum_i a_ij)^2, exactly, with each row sorted."""
    data = [[Fraction(float(a)) for a in row] for row in rows]
    if not data or len({len(r) for r in data}) != 1:
        raise ValueError("rows must be non-empty and of equal length")
    k = len(data[0])
    raw = [sum(r[j] for r in data) for j in range(k)]
    srt = [sorted(r) for r in data]
    ordered = [sum(r[j] for r in srt) for j in range(k)]
    return sum(s * s for s in ordered) - sum(s * s for s in raw)


def ordered_sumsq_dominates(rows) -> bool:
    """Sorting every row never decreases the sum of squared column sums."""
    return ordered_sumsq_gap(rows) >= 0


# ---------------------------------------------------------------------------
# optimal class size
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class OptimalHResult:
    n: int
    h_opt: int
    mre: float  # two-decimal value used for the argmax
    re_curve: tuple[float, ...]  # unrounded RE for H = 1..h_max
    ties: tuple[int, ...] = ()  # every H attaining the rounded maximum

    def as_dict(self) -> dict:
        return {
            "n": self.n, "h_opt": self.h_opt, "mre": self.mre, "ties": list(self.ties),
            "re_curve": list(self.re_curve),
        }


def re_curve(n: int, dist: Distribution, scheme="jps", h_max: int = 25, g: GFunction = IDENTITY) -> list[float]:
    out = []
    for H in range(1, h_max + 1):
        co = coefficient_set(WeightScheme.parse(scheme), n, H)
        out.append(re_vs_srs(co, heterogeneity(dist, H, g)))
    return out


def optimal_h(
    n: int, dist: Distribution, scheme="jps", h_max: int = 25, g: GFunction = IDENTITY
) -> OptimalHResult:
    """Class size maximising RE against SRS, compared at two decimals; smallest H wins ties."""
    if h_max < 1:
        raise ValueError("h_max must be at least 1")
    curve = re_curve(n, dist, scheme, h_max, g)
    rounded = [round2(r) for r in curve]
    best = max(rounded)
    ties = tuple(h for h, r in enumerate(rounded, start=1) if r == best)
    return OptimalHResult(n, ties[0], best, tuple(curve), ties)


# ---------------------------------------------------------------------------
# table grids
# ---------------------------------------------------------------------------

TABLE_HJ = (3, 4, 5, 6, 7, 8, 10, 12, 14)
TABLE_HB = (3, 5)
TABLE_N = tuple(range(5, 55, 5))
#: not very skewed or heavy tailed; the recommended-H row is the per-n mode over these
MODERATE_TAILS = ("normal", "uniform", "beta(0.5,0.5)", "exp", "chisq(5)", "weibull(1.5)", "t3")


def brss_table(n: int, dists: dict[str, Distribution] | None = None, hj=TABLE_HJ, hb=TABLE_HB) -> list[dict]:
    """RE of the standard JPS mean (class size H_J) vs balanced RSS (H_B) at sample size n."""
    dists = CATALOG if dists is None else dists
    rows = []
    for name, dist in dists.items():
        for b in hb:
            sm_b = stratum_moments(dist, IDENTITY, b)
            for j in hj:
                co = coefficient_set(WeightScheme.JPS, n, j)
                re = re_vs_brss(co, stratum_moments(dist, IDENTITY, j), sm_b, n)
                rows.append({"dist": name, "n": n, "h_b": b, "h_j": j, "re": re})
    return rows


def optimal_h_table(dists: dict[str, Distribution] | None = None, ns=TABLE_N, h_max: int = 25) -> list[dict]:
    dists = CATALOG if dists is None else dists
    rows = []
    for name, dist in dists.items():
        for n in ns:
            res = optimal_h(n, dist, "jps", h_max)
            rows.append({"dist": name, "n": n, "h_opt": res.h_opt, "mre": res.mre,
                         "re_at_h_opt": res.re_curve[res.h_opt - 1]})
    return rows


def recommended_h(ns=TABLE_N, names=MODERATE_TAILS, h_max: int = 25) -> list[dict]:
    """Per-n mode of H_opt over the moderate-tailed populations (smallest mode on ties)."""
    rows = []
    for n in ns:
        hs = [optimal_h(n, CATALOG[name], "jps", h_max).h_opt for name in names]
        rows.append({"n": n, "h_opt": min(multimode(hs)), "h_opts": hs})
    return rows


def re_vs_n_curve(dist: Distribution, H: int, ns, vs: str = "srs", g: GFunction = IDENTITY) -> list[dict]:
    """Curve data: RE of the standard JPS mean against SRS or BRSS (equal H) over n."""
    sm = stratum_moments(dist, g, H)
    out = []
    for n in ns:
        co = coefficient_set(WeightScheme.JPS, n, H)
        re = re_vs_srs(co, sm.delta_g)
        if vs == "brss":
            re *= 1.0 - sm.delta_g
        out.append({"n": n, "h": H, "re": re})
    return out

