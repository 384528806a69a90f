"""Normality screening and pairwise Mann-Whitney U tests between clusters."""

from __future__ import annotations

import logging
from itertools import combinations
from typing import Iterable, Sequence

import numpy as np
import pandas as pd
from scipy import stats
from statsmodels.stats.multitest import multipletests

from src.errors import (
    EmptySample,
    NumericError,
    SampleTooLarge,
    SampleTooSmall,
    ZeroVariance,
)
from src.models import (
    FEATURE_NAMES,
    ClusterModel,
    FeatureVector,
    PairwiseTest,
    Stars,
    SurveyResponse,
    TestResult,
)

logger = logging.getLogger(__name__)

SHAPIRO_MIN_N = 3
SHAPIRO_MAX_N = 5000
EXACT_MAX_N = 16

_STAR_THRESHOLDS = (
    (1e-4, Stars.FOUR),
    (1e-3, Stars.THREE),
    (1e-2, Stars.TWO),
    (5e-2, Stars.ONE),
)


def stars_for(p: float) -> Stars:
    for threshold, stars in _STAR_THRESHOLDS:
        if p <= threshold:
            return stars
    return Stars.NS


def _clip_p(p: float) -> float:
    return float(min(1.0, max(0.0, p)))


def shapiro_wilk(sample: Sequence[float]) -> TestResult:
    """Shapiro-Wilk W with Royston's p-value approximation."""
    x = np.asarray(sample, dtype=np.float64)
    n = x.size
    if n < SHAPIRO_MIN_N:
        raise SampleTooSmall(f"Shapiro-Wilk needs n >= {SHAPIRO_MIN_N}, got {n}")
    if n > SHAPIRO_MAX_N:
        raise SampleTooLarge(f"Shapiro-Wilk supports n <= {SHAPIRO_MAX_N}, got {n}")
    if np.ptp(x) == 0:
        raise ZeroVariance("Shapiro-Wilk sample is constant")
    res = stats.shapiro(x)
    p = _clip_p(res.pvalue)
    return TestResult(statistic=float(res.statistic), p_value=p, n_a=n, stars=stars_for(p))


def mann_whitney_u(a: Sequence[float], b: Sequence[float]) -> TestResult:
    """Two-sided Mann-Whitney U for sample ``a`` against ``b``.

    Exact null distribution when nA + nB <= 16 and there are no ties; otherwise the
    normal approximation with tie and continuity corrections. The statistic is U
    of sample ``a``.
    """
    x = np.asarray(a, dtype=np.float64)
    y = np.asarray(b, dtype=np.float64)
    n1, n2 = x.size, y.size
    if n1 == 0 or n2 == 0:
        raise EmptySample("Mann-Whitney U needs two non-empty samples")
    combined = np.concatenate([x, y])
    if np.all(combined == combined[0]):
        return TestResult(statistic=n1 * n2 / 2.0, p_value=1.0, n_a=n1, n_b=n2, stars=Stars.NS)

    has_ties = np.unique(combined).size < combined.size
    method = "exact" if n1 + n2 <= EXACT_MAX_N and not has_ties else "asymptotic"
    res = stats.mannwhitneyu(x, y, alternative="two-sided", use_continuity=True, method=method)
    p = _clip_p(res.pvalue)
    return TestResult(statistic=float(res.statistic), p_value=p, n_a=n1, n_b=n2, stars=stars_for(p))


def _holm(results: list[PairwiseTest]) -> None:
    if not results:
        return
    adjusted = multipletests([r.result.p_value for r in results], method="holm")[1]
    for r, p in zip(results, adjusted):
        r.result.p_adjusted = _clip_p(p)
        r.result.stars = stars_for(r.result.p_adjusted)


def pairwise_cluster_tests(
    model: ClusterModel,
    values: dict[str, float],
    metric: str = "value",
    holm: bool = False,
) -> list[PairwiseTest]:
    """One Mann-Whitney test per unordered cluster pair."""
    groups: dict[int, list[float]] = {c: [] for c in range(model.k)}
    missing = 0
    for sid in sorted(model.assignments):
        v = values.get(sid)
        if v is None or not np.isfinite(v):
            missing += 1
            continue
        groups[model.assignments[sid]].append(float(v))
    if missing:
        logger.info("%s: %d sessions without a value dropped", metric, missing)

    results: list[PairwiseTest] = []
    for a, b in combinations(range(model.k), 2):
        if not groups[a] or not groups[b]:
            logger.warning("%s: cluster %d or %d has no values; pair skipped", metric, a, b)
            continue
        results.append(
            PairwiseTest(
                cluster_a=a,
                cluster_b=b,
                metric=metric,
                result=mann_whitney_u(groups[a], groups[b]),
            )
        )
    if holm:
        _holm(results)
    return results


def feature_values(aggregates: dict[str, FeatureVector], feature: str) -> dict[str, float]:
    return {sid: getattr(vec, feature) for sid, vec in aggregates.items()}


def survey_values(responses: Iterable[SurveyResponse], question: str) -> dict[str, float]:
    return {r.session_id: float(r.answers[question]) for r in responses if question in r.answers}


def survey_questions(responses: Iterable[SurveyResponse]) -> list[str]:
    qs = {q for r in responses for q in r.answers}
    return sorted(qs, key=lambda q: int(q[1:]))


def normality_screen(aggregates: dict[str, FeatureVector]) -> pd.DataFrame:
    """Shapiro-Wilk per session-level feature."""
    rows = []
    for feature in FEATURE_NAMES:
        sample = [getattr(v, feature) for _, v in sorted(aggregates.items())]
        try:
            res = shapiro_wilk(sample)
            rows.append(
                {"metric": feature, "n": res.n_a, "W": res.statistic, "p": res.p_value,
                 "stars": res.stars.value, "note": ""}
            )
        except NumericError as e:
            rows.append(
                {"metric": feature, "n": len(sample), "W": np.nan, "p": np.nan,
                 "stars": "", "note": str(e)}
            )
    return pd.DataFrame(rows, columns=["metric", "n", "W", "p", "stars", "note"])


def grid_frame(tests: list[PairwiseTest], metrics: Sequence[str]) -> pd.DataFrame:
    """Pair rows x metric columns with 'U stars' cells."""
    pairs = sorted({(t.cluster_a, t.cluster_b) for t in tests})
    cell = {(t.cluster_a, t.cluster_b, t.metric): t.result for t in tests}
    rows = []
    for a, b in pairs:
        row = {"pair": f"{a} vs {b}"}
        for m in metrics:
            r = cell.get((a, b, m))
            if r is None:
                row[m] = ""
            else:
                suffix = "" if r.stars is Stars.NS else r.stars.value
                row[m] = f"{r.statistic:.1f}{suffix}"
        rows.append(row)
    return pd.DataFrame(rows, columns=["pair", *metrics])


def pairwise_tests_frame(tests: list[PairwiseTest]) -> pd.DataFrame:
    """Long format: every statistic, p-value and sample size."""
    return pd.DataFrame(
        [
            {
                "metric": t.metric,
                "clusterA": t.cluster_a,
                "clusterB": t.cluster_b,
                "U": t.result.statistic,
                "p": t.result.p_value,
                "pAdjusted": t.result.p_adjusted if t.result.p_adjusted is not None else np.nan,
                "nA": t.result.n_a,
                "nB": t.result.n_b,
                "stars": t.result.stars.value,
            }
            for t in tests
        ],
        columns=["metric", "clusterA", "clusterB", "U", "p", "pAdjusted", "nA", "nB", "stars"],
    )


def survey_profile(model: ClusterModel, responses: list[SurveyResponse]) -> pd.DataFrame:
    """Question rows x cluster columns of 'mean (sd)' survey scores."""
    by_session = {r.session_id: r for r in responses}
    questions = survey_questions(responses)
    data: dict[str, list] = {"question": questions}
    for c in range(model.k):
        cells = []
        for q in questions:
            vals = np.array(
                [by_session[s].answers[q] for s in sorted(model.members(c))
                 if s in by_session and q in by_session[s].answers],
                dtype=np.float64,
            )
            if vals.size == 0:
                cells.append("")
            else:
                sd = vals.std(ddof=1) if vals.size > 1 else 0.0
                cells.append(f"{vals.mean():.2f} ({sd:.2f})")
        data[f"cluster_{c}"] = cells
    return pd.DataFrame(data)
