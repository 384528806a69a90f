"""DTW k-means over standardized usage series, elbow scan and cluster profiles."""

from __future__ import annotations

import logging
from typing import Optional, Sequence

import numpy as np
import pandas as pd
from joblib import Parallel, delayed
from scipy.optimize import linear_sum_assignment

from src.dtw import as_series, dba_barycenter, dtw_cost, resample_linear
from src.errors import TooFewSeries
from src.models import (
    FEATURE_NAMES,
    Barycenter,
    ClusterModel,
    ClusterProfile,
    ClusterProfileRow,
    ElbowCurve,
    FeatureSeries,
    FeatureVector,
)

logger = logging.getLogger(__name__)

TRAJECTORY_LENGTH = 32

# Session-level means of the four features for the four usage patterns reported on
# the public CoAuthor corpus (cluster sizes 168, 368, 550, 359).
REFERENCE_PROFILE: dict[int, dict[str, float]] = {
    1: {"n": 168, "calls": 10.07, "accept_rate": 0.62, "modify_rate": 0.46, "ai_char_rate": 0.20},
    2: {"n": 368, "calls": 18.27, "accept_rate": 0.66, "modify_rate": 0.17, "ai_char_rate": 0.35},
    3: {"n": 550, "calls": 7.86, "accept_rate": 0.65, "modify_rate": 0.36, "ai_char_rate": 0.18},
    4: {"n": 359, "calls": 14.91, "accept_rate": 0.77, "modify_rate": 0.34, "ai_char_rate": 0.36},
}


def _arrays(corpus: Sequence) -> tuple[list[str], list[np.ndarray]]:
    ids: list[str] = []
    arrays: list[np.ndarray] = []
    for i, item in enumerate(corpus):
        if isinstance(item, FeatureSeries):
            ids.append(item.session_id)
            arrays.append(as_series(item.to_array()))
        else:
            ids.append(str(i))
            arrays.append(as_series(item))
    return ids, arrays


def _cost_matrix(arrays: list[np.ndarray], barys: list[np.ndarray]) -> np.ndarray:
    return np.array([[dtw_cost(a, b) for b in barys] for a in arrays])


def kmeans_plus_plus(
    arrays: list[np.ndarray], k: int, length: int, rng: np.random.Generator
) -> list[np.ndarray]:
    """Seed barycenters by DTW-cost-proportional sampling of member series."""
    n = len(arrays)
    chosen = [int(rng.integers(n))]
    nearest = np.array([dtw_cost(a, arrays[chosen[0]]) for a in arrays])
    while len(chosen) < k:
        weights = nearest.copy()
        weights[chosen] = 0.0
        total = weights.sum()
        if total > 0:
            pick = int(rng.choice(n, p=weights / total))
        else:
            remaining = [i for i in range(n) if i not in chosen]
            pick = int(rng.choice(remaining))
        chosen.append(pick)
        nearest = np.minimum(nearest, [dtw_cost(a, arrays[pick]) for a in arrays])
    return [resample_linear(arrays[i], length) for i in chosen]


def _assign(
    arrays: list[np.ndarray], barys: list[np.ndarray], k: int
) -> tuple[np.ndarray, np.ndarray]:
    """Nearest-barycenter labels; emptied clusters are reseeded with the farthest series."""
    costs = _cost_matrix(arrays, barys)
    labels = np.argmin(costs, axis=1)
    for c in range(k):
        if np.any(labels == c):
            continue
        own = costs[np.arange(len(arrays)), labels]
        sizes = np.bincount(labels, minlength=k)
        movable = np.flatnonzero(sizes[labels] > 1)
        far = int(movable[np.argmax(own[movable])])
        logger.warning("Cluster %d emptied; reseeding with series %d", c, far)
        barys[c] = resample_linear(arrays[far], barys[c].shape[0])
        costs[:, c] = [dtw_cost(a, barys[c]) for a in arrays]
        labels[far] = c
    return labels, costs[np.arange(len(arrays)), labels]


def _fit_once(
    arrays: list[np.ndarray],
    k: int,
    length: int,
    seed_seq: np.random.SeedSequence,
    max_iter: int,
    dba_max_iter: int,
) -> tuple[np.ndarray, list[Barycenter], list[float], int]:
    rng = np.random.default_rng(seed_seq)
    barys = kmeans_plus_plus(arrays, k, length, rng)
    dba_histories: list[list[float]] = [[] for _ in range(k)]
    labels: Optional[np.ndarray] = None
    history: list[float] = []
    iterations = 0
    for iterations in range(1, max_iter + 1):
        new_labels, costs = _assign(arrays, barys, k)
        history.append(float(costs.sum()))
        if labels is not None and np.array_equal(new_labels, labels):
            break
        labels = new_labels
        for c in range(k):
            members = [arrays[i] for i in np.flatnonzero(labels == c)]
            bm = dba_barycenter(members, length, max_iter=dba_max_iter, init=barys[c])
            barys[c] = bm.to_array()
            dba_histories[c] = bm.inertia_history
    else:
        new_labels, costs = _assign(arrays, barys, k)
        history.append(float(costs.sum()))
    bary_models = [
        Barycenter(series=b.tolist(), inertia_history=h) for b, h in zip(barys, dba_histories)
    ]
    return new_labels, bary_models, history, iterations


def fit_kmeans_dtw(
    corpus: Sequence,
    k: int,
    seed: int = 0,
    n_restarts: int = 10,
    max_iter: int = 50,
    length: Optional[int] = None,
    dba_max_iter: int = 30,
    jobs: int = 1,
) -> ClusterModel:
    """k-means with DTW assignment and DBA barycenters, best of ``n_restarts``.

    Inertia is the sum over series of the accumulated squared DTW cost to the
    assigned barycenter. Restarts draw independent PCG64 streams spawned from
    ``seed``, so results depend only on (seed, n_restarts).
    """
    ids, arrays = _arrays(corpus)
    if len(arrays) < k:
        raise TooFewSeries(f"{len(arrays)} series cannot fill {k} clusters")
    if k < 1:
        raise ValueError("k must be positive")
    length = max(length or max(a.shape[0] for a in arrays), 2)

    seeds = np.random.SeedSequence(seed).spawn(n_restarts)
    runs = Parallel(n_jobs=jobs)(
        delayed(_fit_once)(arrays, k, length, s, max_iter, dba_max_iter) for s in seeds
    )
    best = min(range(n_restarts), key=lambda r: (runs[r][2][-1], r))
    labels, barycenters, history, iterations = runs[best]
    logger.info(
        "k=%d: best restart %d/%d, inertia %.4f after %d iterations",
        k, best + 1, n_restarts, history[-1], iterations,
    )
    return ClusterModel(
        k=k,
        assignments={sid: int(c) for sid, c in zip(ids, labels)},
        barycenters=barycenters,
        inertia=history[-1],
        seed=seed,
        iterations=iterations,
        restart_index=best,
        inertia_history=history,
    )


def model_inertia(model: ClusterModel, corpus: Sequence) -> float:
    """Recompute inertia from assignments and barycenters."""
    ids, arrays = _arrays(corpus)
    barys = [b.to_array() for b in model.barycenters]
    return float(sum(dtw_cost(a, barys[model.assignments[sid]]) for sid, a in zip(ids, arrays)))


def find_knee(points: Sequence[tuple[int, float]]) -> int:
    """Knee of a decreasing inertia curve: farthest normalized point from the end-to-end chord."""
    ks = np.array([p[0] for p in points], dtype=np.float64)
    ys = np.array([p[1] for p in points], dtype=np.float64)
    if len(ks) <= 2 or ks[-1] == ks[0]:
        return int(ks[0])
    span = ys.max() - ys.min()
    if span <= 0:
        return int(ks[0])
    x = (ks - ks[0]) / (ks[-1] - ks[0])
    y = (ys - ys.min()) / span
    dx, dy = x[-1] - x[0], y[-1] - y[0]
    dist = np.abs(dy * x - dx * y + x[-1] * y[0] - y[-1] * x[0]) / np.hypot(dx, dy)
    return int(ks[int(np.argmax(dist))])


def elbow_scan(
    corpus: Sequence,
    k_range: tuple[int, int] = (2, 10),
    seed: int = 0,
    n_restarts: int = 10,
    max_iter: int = 50,
    length: Optional[int] = None,
    dba_max_iter: int = 30,
    jobs: int = 1,
) -> tuple[ElbowCurve, dict[int, ClusterModel]]:
    """Fit every k in range; the knee is advisory."""
    k_min, k_max = k_range
    if k_min < 2:
        raise ValueError("elbow scan needs kMin >= 2")
    if k_min > len(corpus):
        raise TooFewSeries(f"{len(corpus)} series cannot fill kMin={k_min} clusters")
    k_max = min(k_max, len(corpus))
    models: dict[int, ClusterModel] = {}
    for k in range(k_min, k_max + 1):
        models[k] = fit_kmeans_dtw(
            corpus, k, seed=seed, n_restarts=n_restarts, max_iter=max_iter,
            length=length, dba_max_iter=dba_max_iter, jobs=jobs,
        )
    points = [(k, m.inertia) for k, m in models.items()]
    curve = ElbowCurve(points=points, selected_k=find_knee(points) if points else None)
    logger.info("Elbow scan over k=%d..%d selects k=%s", k_min, k_max, curve.selected_k)
    return curve, models


def profile_clusters(
    model: ClusterModel,
    aggregates: dict[str, FeatureVector],
    trajectory_length: int = TRAJECTORY_LENGTH,
) -> ClusterProfile:
    """Per-cluster size, mean and sd of raw session aggregates, plus barycenter trajectories."""
    rows: list[ClusterProfileRow] = []
    for c in range(model.k):
        members = sorted(sid for sid in model.members(c) if sid in aggregates)
        values = np.array([aggregates[sid].as_list() for sid in members]).reshape(-1, len(FEATURE_NAMES))
        n = values.shape[0]
        mean = values.mean(axis=0) if n else np.zeros(len(FEATURE_NAMES))
        std = values.std(axis=0, ddof=1) if n > 1 else np.zeros(len(FEATURE_NAMES))
        rows.append(
            ClusterProfileRow(
                cluster=c,
                n=n,
                mean=dict(zip(FEATURE_NAMES, mean.tolist())),
                std_dev=dict(zip(FEATURE_NAMES, std.tolist())),
            )
        )
    trajectories = {
        c: resample_linear(b.to_array(), trajectory_length).tolist()
        for c, b in enumerate(model.barycenters)
    }
    return ClusterProfile(rows=rows, trajectories=trajectories)


def match_reference(profile: ClusterProfile) -> dict[int, int]:
    """Hungarian matching of discovered clusters to the reference CoAuthor profile.

    Costs are distances between mean vectors after scaling each feature by its
    spread across the reference rows. Returns cluster -> reference label.
    """
    ref_labels = sorted(REFERENCE_PROFILE)
    ref = np.array([[REFERENCE_PROFILE[r][f] for f in FEATURE_NAMES] for r in ref_labels])
    ours = np.array([[row.mean[f] for f in FEATURE_NAMES] for row in profile.rows])
    scale = ref.std(axis=0)
    scale[scale == 0] = 1.0
    cost = np.linalg.norm((ours[:, None, :] - ref[None, :, :]) / scale, axis=2)
    rows, cols = linear_sum_assignment(cost)
    return {int(r): ref_labels[int(c)] for r, c in zip(rows, cols)}


def assignments_frame(model: ClusterModel) -> pd.DataFrame:
    items = sorted(model.assignments.items())
    return pd.DataFrame({"sessionId": [s for s, _ in items], "cluster": [c for _, c in items]})


def elbow_frame(curve: ElbowCurve) -> pd.DataFrame:
    return pd.DataFrame(
        {
            "k": [k for k, _ in curve.points],
            "inertia": [v for _, v in curve.points],
            "selected": [k == curve.selected_k for k, _ in curve.points],
        }
    )


def trajectories_frame(profile: ClusterProfile) -> pd.DataFrame:
    rows = []
    for c, traj in sorted(profile.trajectories.items()):
        for t, frame in enumerate(traj):
            rows.append({"cluster": c, "window": t, **dict(zip(FEATURE_NAMES, frame))})
    return pd.DataFrame(rows, columns=["cluster", "window", *FEATURE_NAMES])


def profile_frame(profile: ClusterProfile) -> pd.DataFrame:
    """Table layout: one row per feature, one 'mean (sd)' column per cluster."""
    data: dict[str, list] = {"metric": ["n", *FEATURE_NAMES]}
    for row in profile.rows:
        data[f"cluster_{row.cluster}"] = [str(row.n)] + [
            f"{row.mean[f]:.2f} ({row.std_dev[f]:.2f})" for f in FEATURE_NAMES
        ]
    return pd.DataFrame(data)
