import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import stats as sps

from litrag.errors import DegenerateGroup, MismatchedSamples
from litrag.stats import (
    PairwiseComparison,
    SampleGroup,
    format_p,
    significance_report,
    studentized_range_cdf,
    tukey_hsd,
    welch_anova,
)

# Frozen fixture (seeded normals, rounded); reference values computed once with
# statsmodels.stats.oneway.anova_oneway(use_var="unequal") and scipy.stats.tukey_hsd.
GROUP_A = (0.424377, 0.316801, 0.460036, 0.475245, 0.243917, 0.295826, 0.410227,
           0.374701, 0.398656, 0.331756, 0.470352, 0.462223, 0.405282, 0.490179,
           0.437401, 0.331257, 0.4295, 0.323289)
GROUP_B = (0.575414, 0.464009, 0.447817, 0.388288, 0.616705, 0.451456, 0.418601,
           0.427744, 0.533877, 0.513853, 0.519528, 0.521699, 0.726998, 0.42123,
           0.408531, 0.372347, 0.543918, 0.605477, 0.456326, 0.369181, 0.371062,
           0.548071)
GROUP_C = (0.557163, 0.547158, 0.486725, 0.531608, 0.525834, 0.530934, 0.563571,
           0.53118, 0.553946, 0.523379, 0.534456, 0.551564, 0.447142, 0.504016,
           0.496481)

REF_WELCH_F = 24.92860324022132
REF_WELCH_P = 3.073744327191286e-07
REF_WELCH_DF2 = 31.80291734489233
REF_TUKEY_P = {("A", "B"): 0.0006208871066586408,
               ("A", "C"): 1.2358798022416018e-05,
               ("B", "C"): 0.2583202173014494}


def welch_t_oracle(a, b):
    """Independent Welch t-test oracle (statistic and Satterthwaite df)."""
    a, b = np.asarray(a), np.asarray(b)
    va, vb = a.var(ddof=1), b.var(ddof=1)
    na, nb = len(a), len(b)
    se2 = va / na + vb / nb
    t = (a.mean() - b.mean()) / math.sqrt(se2)
    df = se2 ** 2 / ((va / na) ** 2 / (na - 1) + (vb / nb) ** 2 / (nb - 1))
    return t, df


# --- Welch ANOVA -----------------------------------------------------------------

def test_welch_two_groups_equals_t_squared():
    rng = np.random.default_rng(11)
    for _ in range(10):
        a = rng.normal(0.4, 0.05 + rng.random() * 0.2, rng.integers(5, 60))
        b = rng.normal(0.5, 0.05 + rng.random() * 0.2, rng.integers(5, 60))
        res = welch_anova([SampleGroup("a", tuple(a)), SampleGroup("b", tuple(b))])
        t, df = welch_t_oracle(a, b)
        assert res.F == pytest.approx(t * t, abs=1e-10)
        assert res.df2 == pytest.approx(df, rel=1e-12)
        p_t = 2 * sps.t.sf(abs(t), df)
        assert res.p == pytest.approx(p_t, abs=1e-10)


def test_welch_three_group_frozen_reference():
    groups = [SampleGroup("A", GROUP_A), SampleGroup("B", GROUP_B),
              SampleGroup("C", GROUP_C)]
    res = welch_anova(groups)
    assert res.F == pytest.approx(REF_WELCH_F, abs=1e-8)
    assert res.p == pytest.approx(REF_WELCH_P, abs=1e-8)
    assert res.df1 == 2.0
    assert res.df2 == pytest.approx(REF_WELCH_DF2, abs=1e-8)


def test_welch_zero_variance_degenerate():
    with pytest.raises(DegenerateGroup):
        welch_anova([SampleGroup("a", (1.0, 1.0, 1.0)), SampleGroup("b", (2.0, 2.0))])


def test_welch_small_group_degenerate():
    with pytest.raises(DegenerateGroup):
        welch_anova([SampleGroup("a", (1.0,)), SampleGroup("b", (1.0, 2.0))])


def test_welch_location_shift_invariant():
    rng = np.random.default_rng(12)
    groups = [SampleGroup(str(i), tuple(rng.normal(i * 0.1, 0.1, 20))) for i in range(3)]
    shifted = [SampleGroup(g.label, tuple(v + 123.456 for v in g.values)) for g in groups]
    assert welch_anova(groups).F == pytest.approx(welch_anova(shifted).F, abs=1e-10)


# --- studentized range CDF ---------------------------------------------------------

def test_cdf_at_zero():
    assert studentized_range_cdf(0.0, 3, 10) == 0.0


def test_cdf_large_q_tail():
    assert studentized_range_cdf(100.0, 3, 10) >= 0.999999


def test_cdf_published_table_value():
    # critical value tables list q_0.05(k=3, df=10) = 3.877
    assert 0.949 <= studentized_range_cdf(3.877, 3, 10) <= 0.951


@pytest.mark.parametrize("q,k,df", [
    (2.5, 3, 10), (3.877, 3, 10), (1.0, 2, 5), (4.2, 6, 40),
    (3.0, 4, 1500), (0.5, 2, 2), (6.0, 8, 120),
])
def test_cdf_matches_scipy_reference(q, k, df):
    ours = studentized_range_cdf(q, k, df)
    reference = float(sps.studentized_range.cdf(q, k, df))
    assert ours == pytest.approx(reference, abs=1e-6)


@settings(max_examples=15, deadline=None)
@given(st.integers(2, 6), st.integers(2, 200))
def test_cdf_monotone_in_q(k, df):
    grid = [0.0, 0.5, 1.0, 2.0, 3.0, 4.5, 6.0, 10.0]
    values = [studentized_range_cdf(q, k, df) for q in grid]
    assert all(a <= b + 1e-12 for a, b in zip(values, values[1:]))


def test_cdf_input_validation():
    with pytest.raises(ValueError):
        studentized_range_cdf(-1.0, 3, 10)
    with pytest.raises(ValueError):
        studentized_range_cdf(1.0, 1, 10)
    with pytest.raises(ValueError):
        studentized_range_cdf(1.0, 3, 0)


# --- Tukey HSD -----------------------------------------------------------------------

def test_tukey_identical_groups_p_near_one():
    g = (0.1, 0.2, 0.3, 0.4)
    comps = tukey_hsd([SampleGroup("x", g), SampleGroup("y", g)])
    assert comps[0].mean_difference == 0.0
    assert comps[0].p_value == pytest.approx(1.0, abs=1e-9)
    assert not comps[0].significant


def test_tukey_two_groups_matches_pooled_t():
    rng = np.random.default_rng(13)
    for _ in range(5):
        a = rng.normal(0.3, 0.1, int(rng.integers(5, 40)))
        b = rng.normal(0.45, 0.1, int(rng.integers(5, 40)))
        comps = tukey_hsd([SampleGroup("a", tuple(a)), SampleGroup("b", tuple(b))])
        na, nb = len(a), len(b)
        mse = ((na - 1) * a.var(ddof=1) + (nb - 1) * b.var(ddof=1)) / (na + nb - 2)
        t = abs(a.mean() - b.mean()) / math.sqrt(mse * (1 / na + 1 / nb))
        p_pooled = 2 * sps.t.sf(t, na + nb - 2)
        assert comps[0].p_value == pytest.approx(p_pooled, abs=1e-6)


def test_tukey_three_group_frozen_reference():
    groups = [SampleGroup("A", GROUP_A), SampleGroup("B", GROUP_B),
              SampleGroup("C", GROUP_C)]
    comps = {c.pair: c for c in tukey_hsd(groups)}
    assert set(comps) == set(REF_TUKEY_P)
    for pair, expected_p in REF_TUKEY_P.items():
        assert comps[pair].p_value == pytest.approx(expected_p, abs=1e-6)
    # sign convention: "A vs. B" difference = mean(B) - mean(A)
    assert comps[("A", "B")].mean_difference == pytest.approx(
        np.mean(GROUP_B) - np.mean(GROUP_A), abs=1e-12)


def test_tukey_label_permutation_invariance():
    groups = [SampleGroup("A", GROUP_A), SampleGroup("B", GROUP_B),
              SampleGroup("C", GROUP_C)]
    forward = {c.pair: c.p_value for c in tukey_hsd(groups)}
    reversed_groups = list(reversed(groups))
    backward = {c.pair: c.p_value for c in tukey_hsd(reversed_groups)}
    assert forward == backward


def test_tukey_output_sorted_by_labels():
    groups = [SampleGroup("z", GROUP_A), SampleGroup("m", GROUP_B),
              SampleGroup("a", GROUP_C)]
    pairs = [c.pair for c in tukey_hsd(groups)]
    assert pairs == [("a", "m"), ("a", "z"), ("m", "z")]


def test_tukey_degenerate():
    with pytest.raises(DegenerateGroup):
        tukey_hsd([SampleGroup("a", (1.0,)), SampleGroup("b", (1.0, 2.0))])
    with pytest.raises(DegenerateGroup):
        tukey_hsd([SampleGroup("a", (1.0, 1.0)), SampleGroup("b", (2.0, 2.0))])


# --- significance report ------------------------------------------------------------

def test_report_huge_separation_significant():
    rng = np.random.default_rng(14)
    low = list(rng.normal(0.1, 0.01, 30))
    high = list(rng.normal(0.9, 0.01, 30))
    samples = {"cfg_low": {"context_relevance": low},
               "cfg_high": {"context_relevance": high}}
    report = significance_report(samples, ["context_relevance"])
    comp = report.metrics[0].comparisons[0]
    assert comp.significant
    csv = report.to_csv()
    assert "<0.001" in csv
    assert csv.splitlines()[0] == "metric,comparison,mean_difference,p_value,significant"


def test_report_identical_configs_not_significant():
    values = list(np.linspace(0.2, 0.8, 25))
    samples = {"one": {"faithfulness": values}, "two": {"faithfulness": list(values)}}
    report = significance_report(samples, ["faithfulness"])
    assert not any(c.significant for c in report.metrics[0].comparisons)


def test_report_mismatched_counts():
    samples = {"one": {"faithfulness": [0.1] * 10}, "two": {"faithfulness": [0.2] * 9}}
    with pytest.raises(MismatchedSamples):
        significance_report(samples, ["faithfulness"])


def test_report_needs_two_configs():
    with pytest.raises(MismatchedSamples):
        significance_report({"solo": {"faithfulness": [0.1, 0.2, 0.3]}}, ["faithfulness"])


def test_format_p():
    assert format_p(0.0005) == "<0.001"
    assert format_p(0.999) == "0.999"
    assert format_p(0.0342).startswith("0.034")
