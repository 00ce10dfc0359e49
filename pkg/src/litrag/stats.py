"""Welch's ANOVA, Tukey's HSD pairwise comparisons, and the studentized
range distribution they depend on.

The Welch statistic weights groups by n/s^2 and uses Welch-Satterthwaite
degrees of freedom, so unequal variances are tolerated. Tukey HSD uses the
pooled mean-square error with Tukey-Kramer adjustment for unequal group
sizes; its p-values come from a direct double numerical integration of the
studentized range CDF (outer chi, inner normal-range), not table lookup,
so any (k, df) arising from experiments is supported. This classic
Welch+Tukey pairing is intentional (not Games-Howell) to mirror the
reported significance tables; the variance-assumption tension is noted in
the README.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import integrate
from scipy import stats as _sps

from .errors import DegenerateGroup, MismatchedSamples, NonConvergence

DEFAULT_ALPHA = 0.05

_CDF_TOL = 1e-6
# Probability mass outside the chi integration window, per tail.
_CHI_TAIL = 1e-12


@dataclass(frozen=True)
class SampleGroup:
    label: str
    values: tuple[float, ...]

    @property
    def n(self) -> int:
        return len(self.values)

    @property
    def mean(self) -> float:
        return float(np.mean(self.values))

    @property
    def variance(self) -> float:
        return float(np.var(self.values, ddof=1))

    def validate(self) -> None:
        if self.n < 2:
            raise DegenerateGroup(f"group {self.label} has n={self.n} < 2")


@dataclass(frozen=True)
class PairwiseComparison:
    pair: tuple[str, str]
    mean_difference: float
    p_value: float
    significant: bool

    @property
    def comparison(self) -> str:
        return f"{self.pair[0]} vs. {self.pair[1]}"


@dataclass(frozen=True)
class WelchAnovaResult:
    F: float
    df1: float
    df2: float
    p: float


def welch_anova(groups: list[SampleGroup]) -> WelchAnovaResult:
    """Welch's heteroscedastic one-way ANOVA."""
    if len(groups) < 2:
        raise DegenerateGroup("welch_anova needs at least 2 groups")
    for g in groups:
        g.validate()
        if g.variance <= 0.0:
            raise DegenerateGroup(f"group {g.label} has zero variance")

    k = len(groups)
    w = np.array([g.n / g.variance for g in groups])
    means = np.array([g.mean for g in groups])
    ns = np.array([g.n for g in groups])
    w_total = w.sum()
    grand = float((w * means).sum() / w_total)

    numerator = float((w * (means - grand) ** 2).sum() / (k - 1))
    h = float((((1.0 - w / w_total) ** 2) / (ns - 1)).sum())
    denominator = 1.0 + (2.0 * (k - 2) / (k ** 2 - 1)) * h
    f_stat = numerator / denominator
    df1 = float(k - 1)
    df2 = (k ** 2 - 1) / (3.0 * h)
    p = float(_sps.f.sf(f_stat, df1, df2))
    return WelchAnovaResult(F=f_stat, df1=df1, df2=df2, p=p)


_INV_SQRT_2PI = 1.0 / math.sqrt(2.0 * math.pi)
_INV_SQRT_2 = 1.0 / math.sqrt(2.0)


def _phi(u: float) -> float:
    return _INV_SQRT_2PI * math.exp(-0.5 * u * u)


def _Phi(u: float) -> float:
    return 0.5 * (1.0 + math.erf(u * _INV_SQRT_2))


def _normal_range_cdf(x: float, k: int) -> float:
    """P(range of k iid standard normals <= x)."""
    if x <= 0.0:
        return 0.0

    def integrand(u: float) -> float:
        return _phi(u) * (_Phi(u) - _Phi(u - x)) ** (k - 1)

    value, err = integrate.quad(integrand, -13.5, 13.5, epsabs=_CDF_TOL / 20,
                                epsrel=0.0, limit=200)
    if err > _CDF_TOL / 2:
        raise NonConvergence(f"inner range integral error {err:.2e} at x={x}")
    return min(k * value, 1.0)


def studentized_range_cdf(q: float, k: int, df: float) -> float:
    """CDF of the studentized range via adaptive double quadrature.

    Outer integral over s = chi_df / sqrt(df) (density from the chi
    distribution), inner integral over the normal-range CDF at q*s.
    Absolute error <= 1e-6; raises NonConvergence when the quadrature
    cannot certify that.
    """
    if q < 0.0:
        raise ValueError("q must be >= 0")
    if k < 2:
        raise ValueError("k must be >= 2")
    if df < 1:
        raise ValueError("df must be >= 1")
    if q == 0.0:
        return 0.0

    log_norm = (df / 2.0) * math.log(df) - math.lgamma(df / 2.0) - (df / 2.0 - 1.0) * math.log(2.0)

    def s_density(s: float) -> float:
        return math.exp(log_norm + (df - 1.0) * math.log(s) - df * s * s / 2.0)

    def integrand(s: float) -> float:
        return s_density(s) * _normal_range_cdf(q * s, k)

    # Integration window from chi-square quantiles: keeps the quadrature on
    # the density's support even for very large df, where it spikes at s=1.
    s_lo = math.sqrt(_sps.chi2.ppf(_CHI_TAIL, df) / df)
    s_hi = math.sqrt(_sps.chi2.ppf(1.0 - _CHI_TAIL, df) / df)
    value, err = integrate.quad(integrand, s_lo, s_hi, epsabs=_CDF_TOL / 4,
                                epsrel=0.0, limit=300)
    if err > _CDF_TOL / 2:
        raise NonConvergence(f"outer chi integral error {err:.2e} at q={q}")
    return min(max(value, 0.0), 1.0)


def tukey_hsd(groups: list[SampleGroup], alpha: float = DEFAULT_ALPHA) -> list[PairwiseComparison]:
    """All-pairs Tukey HSD over the pooled mean-square error.

    mean_difference for pair (a, b) is mean(b) - mean(a); p-values use the
    studentized range with total df = N - k and the Tukey-Kramer standard
    error sqrt(MSE/2 * (1/n_a + 1/n_b)). Output is sorted by pair labels.
    """
    if len(groups) < 2:
        raise DegenerateGroup("tukey_hsd needs at least 2 groups")
    for g in groups:
        g.validate()
    k = len(groups)
    total_n = sum(g.n for g in groups)
    df = total_n - k
    if df < 1:
        raise DegenerateGroup("no residual degrees of freedom")
    sse = sum((g.n - 1) * g.variance for g in groups)
    mse = sse / df
    if mse <= 0.0:
        raise DegenerateGroup("pooled mean-square error is zero")

    ordered = sorted(groups, key=lambda g: g.label)
    out: list[PairwiseComparison] = []
    for i in range(len(ordered)):
        for j in range(i + 1, len(ordered)):
            a, b = ordered[i], ordered[j]
            diff = b.mean - a.mean
            se = math.sqrt(mse / 2.0 * (1.0 / a.n + 1.0 / b.n))
            q_obs = abs(diff) / se
            p = 1.0 - studentized_range_cdf(q_obs, k, df)
            out.append(PairwiseComparison(
                pair=(a.label, b.label),
                mean_difference=diff,
                p_value=p,
                significant=p < alpha,
            ))
    return out


def format_p(p: float) -> str:
    """Report sub-millesimal p-values as '<0.001'."""
    return "<0.001" if p < 0.001 else f"{p:.4g}"


@dataclass
class MetricSignificance:
    metric: str
    welch: WelchAnovaResult | None
    comparisons: list[PairwiseComparison]
    note: str = ""


@dataclass
class SignificanceReport:
    alpha: float
    metrics: list[MetricSignificance]

    def to_csv(self) -> str:
        lines = ["metric,comparison,mean_difference,p_value,significant"]
        for ms in self.metrics:
            for c in ms.comparisons:
                lines.append(
                    f"{ms.metric},{c.comparison},{c.mean_difference:.4f},"
                    f"{format_p(c.p_value)},{'Yes' if c.significant else 'No'}")
        return "\n".join(lines) + "\n"

    def to_text(self) -> str:
        blocks = []
        for ms in self.metrics:
            if ms.welch is None:
                blocks.append(f"{ms.metric}: tests skipped ({ms.note})")
                continue
            w = ms.welch
            header = (f"{ms.metric}: Welch ANOVA F({w.df1:.0f}, {w.df2:.2f}) = "
                      f"{w.F:.4f}, p = {format_p(w.p)}")
            rows = [f"  {c.comparison}: diff {c.mean_difference:+.4f}, "
                    f"p {format_p(c.p_value)}, "
                    f"{'significant' if c.significant else 'not significant'}"
                    for c in ms.comparisons]
            blocks.append("\n".join([header] + rows))
        return "\n\n".join(blocks) + "\n"


def significance_report(samples_by_config: dict[str, dict[str, list[float]]],
                        metrics: list[str], alpha: float = DEFAULT_ALPHA) -> SignificanceReport:
    """Welch ANOVA + Tukey HSD per metric across configurations.

    samples_by_config maps config label -> metric key -> sample list. All
    configurations must carry equally many samples per metric (same question
    set and replication count), else MismatchedSamples. Metrics whose groups
    are degenerate (constant values) are reported as skipped, not fatal.
    """
    if len(samples_by_config) < 2:
        raise MismatchedSamples("need at least 2 configurations to compare")
    report = SignificanceReport(alpha=alpha, metrics=[])
    for metric in metrics:
        sizes = {label: len(samples[metric]) for label, samples in samples_by_config.items()}
        if len(set(sizes.values())) != 1:
            raise MismatchedSamples(f"sample counts differ for {metric}: {sizes}")
        groups = [SampleGroup(label, tuple(samples[metric]))
                  for label, samples in sorted(samples_by_config.items())]
        try:
            report.metrics.append(MetricSignificance(
                metric=metric,
                welch=welch_anova(groups),
                comparisons=tukey_hsd(groups, alpha),
            ))
        except DegenerateGroup as exc:
            report.metrics.append(MetricSignificance(
                metric=metric, welch=None, comparisons=[], note=str(exc)))
    return report
