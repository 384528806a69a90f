from __future__ import annotations

import numpy as np
import pandas as pd
import pytest

from src.cluster import (
    REFERENCE_PROFILE,
    TRAJECTORY_LENGTH,
    assignments_frame,
    elbow_scan,
    find_knee,
    fit_kmeans_dtw,
    match_reference,
    model_inertia,
    profile_clusters,
    profile_frame,
)
from src.errors import TooFewSeries
from src.features import extract_corpus, standardize
from src.models import FEATURE_NAMES, ClusterModel, ClusterProfile, ClusterProfileRow, FeatureVector
from src.synthetic import FAMILIES, family_session
from tests.conftest import series_from


def _two_groups(rng) -> list:
    low = [series_from(f"low{i}", rng.normal(0.0, 0.1, size=int(rng.integers(5, 9)))) for i in range(4)]
    high = [series_from(f"high{i}", rng.normal(5.0, 0.1, size=int(rng.integers(5, 9)))) for i in range(4)]
    return low + high


def _family_corpus(seed: int, per_family: int) -> tuple[list, list[int]]:
    """Standardized feature series of synthetic sessions, one family per usage shape."""
    rng = np.random.default_rng(seed)
    sessions, truth = [], []
    for f, family in enumerate(FAMILIES):
        for i in range(per_family):
            sessions.append(family_session(family, f"{family}-{i:03d}", rng).session())
            truth.append(f)
    raw, _ = extract_corpus(sessions, window_seconds=60)
    series, _ = standardize(raw, "pooled")
    return series, truth


def test_two_separated_groups_split_cleanly(rng) -> None:
    corpus = _two_groups(rng)
    model = fit_kmeans_dtw(corpus, k=2, seed=0, n_restarts=3)
    low = {model.assignments[f"low{i}"] for i in range(4)}
    high = {model.assignments[f"high{i}"] for i in range(4)}
    assert len(low) == 1 and len(high) == 1
    assert low != high
    assert sorted(model.sizes()) == [4, 4]


def test_one_cluster_per_series_has_zero_inertia(rng) -> None:
    corpus = [series_from(f"s{i}", rng.normal(size=(5, 4))) for i in range(4)]
    model = fit_kmeans_dtw(corpus, k=4, seed=1, n_restarts=2, length=5)
    assert model.inertia == pytest.approx(0.0, abs=1e-12)
    assert sorted(model.assignments.values()) == [0, 1, 2, 3]


def test_same_seed_gives_the_same_model(rng) -> None:
    corpus = _two_groups(rng)
    a = fit_kmeans_dtw(corpus, k=3, seed=7, n_restarts=3)
    b = fit_kmeans_dtw(corpus, k=3, seed=7, n_restarts=3)
    assert a.assignments == b.assignments
    assert a.inertia == b.inertia
    assert a.restart_index == b.restart_index


def test_reported_inertia_matches_recomputation(rng) -> None:
    corpus = _two_groups(rng)
    model = fit_kmeans_dtw(corpus, k=2, seed=0, n_restarts=2)
    assert model_inertia(model, corpus) == pytest.approx(model.inertia)


@pytest.mark.parametrize("seed", range(100))
def test_inertia_never_increases_within_a_restart(seed) -> None:
    rng = np.random.default_rng(seed)
    corpus = [
        series_from(f"s{i}", np.cumsum(rng.normal(size=(int(rng.integers(4, 10)), 4)), axis=0))
        for i in range(12)
    ]
    model = fit_kmeans_dtw(corpus, k=3, seed=seed, n_restarts=1, max_iter=10, dba_max_iter=5)
    histories = [model.inertia_history] + [b.inertia_history for b in model.barycenters]
    for history in histories:
        assert all(b <= a + 1e-9 for a, b in zip(history, history[1:]))


def test_barycenters_have_the_requested_length(rng) -> None:
    corpus = _two_groups(rng)
    model = fit_kmeans_dtw(corpus, k=2, seed=0, n_restarts=1, length=6)
    assert all(b.to_array().shape == (6, 4) for b in model.barycenters)


def test_more_clusters_than_series_is_rejected(rng) -> None:
    with pytest.raises(TooFewSeries):
        fit_kmeans_dtw(_two_groups(rng)[:2], k=3)


def test_knee_examples() -> None:
    points = [(1, 100.0), (2, 40.0), (3, 20.0), (4, 15.0), (5, 12.0)]
    assert find_knee(points) == 2
    assert find_knee([(2, 10.0), (3, 5.0)]) == 2
    assert find_knee([(2, 3.0), (3, 3.0), (4, 3.0)]) == 2


def test_single_k_range_selects_that_k(rng) -> None:
    curve, models = elbow_scan(_two_groups(rng), k_range=(2, 2), n_restarts=2)
    assert curve.points == [(2, models[2].inertia)]
    assert curve.selected_k == 2


def test_elbow_scan_needs_at_least_k_min_series(rng) -> None:
    with pytest.raises(TooFewSeries):
        elbow_scan(_two_groups(rng)[:1], k_range=(2, 4))


def test_elbow_scan_rejects_k_below_two(rng) -> None:
    with pytest.raises(ValueError):
        elbow_scan(_two_groups(rng), k_range=(1, 3))


def test_profile_means_match_a_group_by() -> None:
    aggregates = {
        "a": FeatureVector(calls=4, accept_rate=0.5, modify_rate=0.0, ai_char_rate=0.2),
        "b": FeatureVector(calls=6, accept_rate=1.0, modify_rate=0.5, ai_char_rate=0.4),
        "c": FeatureVector(calls=10, accept_rate=0.2, modify_rate=1.0, ai_char_rate=0.1),
    }
    model = ClusterModel(
        k=2,
        assignments={"a": 0, "b": 0, "c": 1},
        barycenters=[{"series": [[0.0] * 4] * 3}, {"series": [[1.0] * 4] * 3}],
        inertia=0.0,
        seed=0,
        iterations=1,
    )
    profile = profile_clusters(model, aggregates)
    frame = pd.DataFrame({sid: v.as_list() for sid, v in aggregates.items()}, index=FEATURE_NAMES).T
    expected = frame.groupby(pd.Series(model.assignments)).mean()
    for row in profile.rows:
        for f in FEATURE_NAMES:
            assert row.mean[f] == pytest.approx(expected.loc[row.cluster, f])
    assert [r.n for r in profile.rows] == [2, 1]
    assert profile.rows[1].std_dev["calls"] == 0.0
    assert len(profile.trajectories[0]) == TRAJECTORY_LENGTH
    assert profile_frame(profile).columns.tolist() == ["metric", "cluster_0", "cluster_1"]


def test_reference_matching_recovers_a_permutation() -> None:
    order = [3, 1, 4, 2]
    rows = [
        ClusterProfileRow(
            cluster=c,
            n=10,
            mean={f: REFERENCE_PROFILE[ref][f] * 1.02 for f in FEATURE_NAMES},
            std_dev={f: 0.0 for f in FEATURE_NAMES},
        )
        for c, ref in enumerate(order)
    ]
    assert match_reference(ClusterProfile(rows=rows)) == dict(enumerate(order))


def test_assignments_frame_is_sorted_by_session() -> None:
    model = ClusterModel(
        k=2, assignments={"b": 1, "a": 0}, barycenters=[], inertia=0.0, seed=0, iterations=1
    )
    assert assignments_frame(model)["sessionId"].tolist() == ["a", "b"]


def test_synthetic_families_separate_at_four_clusters() -> None:
    from sklearn.metrics import adjusted_rand_score

    corpus, truth = _family_corpus(seed=11, per_family=8)
    model = fit_kmeans_dtw(corpus, k=4, seed=0, n_restarts=6, max_iter=20, dba_max_iter=10)
    labels = [model.assignments[s.session_id] for s in corpus]
    assert adjusted_rand_score(truth, labels) >= 0.9


@pytest.mark.slow
@pytest.mark.parametrize("seed", range(10))
def test_synthetic_families_are_recovered_at_the_elbow(seed) -> None:
    from sklearn.metrics import adjusted_rand_score

    corpus, truth = _family_corpus(seed=seed, per_family=50)
    curve, models = elbow_scan(
        corpus, k_range=(2, 8), seed=seed, n_restarts=6, max_iter=20, dba_max_iter=10
    )
    assert curve.selected_k == 4
    labels = [models[4].assignments[s.session_id] for s in corpus]
    assert adjusted_rand_score(truth, labels) >= 0.95
