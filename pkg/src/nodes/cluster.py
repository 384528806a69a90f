"""DTW k-means clustering stage with on-disk caching of the expensive fits."""

from __future__ import annotations

import logging

from joblib import Memory

from src.cluster import (
    assignments_frame,
    elbow_frame,
    elbow_scan,
    fit_kmeans_dtw,
    match_reference,
    profile_clusters,
    profile_frame,
    trajectories_frame,
)
from src.dtw import distance_matrix_frame, pairwise_distance_matrix
from src.errors import AnalysisError, TooFewSeries
from src.models import Barycenter
from src.nodes import failed, output_path, save_csv, save_svg
from src.plotting import render_elbow, render_trajectories
from src.state import PipelineState

logger = logging.getLogger(__name__)


def cluster_node(state: PipelineState) -> dict:
    """LangGraph node: elbow scan (unless k is fixed), final model and cluster profiles."""
    cfg = state.config
    memory = Memory(location=str(output_path(state, ".cache")), verbose=0)
    fit_kwargs = dict(
        seed=cfg.seed,
        n_restarts=cfg.n_restarts,
        max_iter=cfg.max_iter,
        length=cfg.barycenter_length,
        dba_max_iter=cfg.dba_max_iter,
    )
    artifacts = []
    curve = None
    try:
        if cfg.k is None:
            curve, models = memory.cache(elbow_scan, ignore=["jobs"])(
                state.series, cfg.k_range, jobs=cfg.jobs, **fit_kwargs
            )
            if curve.selected_k is None:
                raise TooFewSeries(f"no k in {cfg.k_range} fits {len(state.series)} sessions")
            model = models[curve.selected_k]
        else:
            logger.info("Using configured k=%d; elbow scan skipped", cfg.k)
            model = memory.cache(fit_kmeans_dtw, ignore=["jobs"])(
                state.series, cfg.k, jobs=cfg.jobs, **fit_kwargs
            )
        profile = profile_clusters(model, state.aggregates)
        if cfg.dump_distance_matrix:
            matrix = pairwise_distance_matrix(state.series, jobs=cfg.jobs)
            ids = [s.session_id for s in state.series]
            artifacts.append(save_csv(state, distance_matrix_frame(ids, matrix), "clusters", "distances.csv"))
    except AnalysisError as e:
        return failed("cluster", e)

    matched = match_reference(profile)
    logger.info(
        "Clustered %d sessions into k=%d (sizes %s), inertia %.4f",
        len(model.assignments), model.k, model.sizes(), model.inertia,
    )
    provenance = cfg.provenance()
    artifacts.append(save_csv(state, assignments_frame(model), "clusters", "assignments.csv"))
    artifacts.append(save_csv(state, profile_frame(profile), "clusters", "profile.csv"))
    artifacts.append(save_csv(state, trajectories_frame(profile), "clusters", "trajectories.csv"))
    if curve is not None:
        artifacts.append(save_csv(state, elbow_frame(curve), "clusters", "elbow.csv"))
        artifacts.append(save_svg(state, render_elbow(curve, provenance), "elbow.svg"))

    resampled = model.model_copy(
        update={"barycenters": [Barycenter(series=t) for _, t in sorted(profile.trajectories.items())]}
    )
    artifacts.append(save_svg(state, render_trajectories(resampled, provenance), "trajectories.svg"))
    return {
        "elbow": curve,
        "model": model,
        "profile": profile,
        "reference_match": matched,
        "artifacts": artifacts,
    }
