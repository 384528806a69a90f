"""Network analysis stage: adjacency vectors, projection, node placement and subtraction."""

from __future__ import annotations

import logging
from itertools import combinations

import numpy as np
import pandas as pd

from src.ena import (
    EDGE_LABELS,
    accumulate,
    adjacency_frame,
    cluster_centroid,
    mean_network,
    network_metadata,
    node_positions_frame,
    place_nodes,
    project_space,
    subtract_networks,
    unit_points_frame,
)
from src.errors import AnalysisError, EmptyCluster
from src.nodes import failed, save_csv, save_svg
from src.plotting import render_cluster_networks, render_subtracted_network
from src.state import PipelineState

logger = logging.getLogger(__name__)


def ena_node(state: PipelineState) -> dict:
    """LangGraph node: per-session networks, shared space and per-cluster comparisons."""
    cfg = state.config
    model = state.model
    try:
        vectors = accumulate(state.coded_lines, jobs=cfg.jobs)
        space = place_nodes(project_space(vectors), vectors)
    except AnalysisError as e:
        return failed("ena", e)

    provenance = {**cfg.provenance(), **network_metadata(space)}
    artifacts = [
        save_csv(state, adjacency_frame(vectors), "ena", "adjacency.csv"),
        save_csv(state, unit_points_frame(space, model), "ena", "unit_points.csv"),
        save_csv(state, node_positions_frame(space), "ena", "node_positions.csv"),
    ]
    logger.info(
        "Network space: %d units, variance explained %s, fit %s",
        len(space.unit_ids),
        ", ".join(f"{v:.3f}" for v in space.variance_explained),
        ", ".join(f"{f:.3f}" for f in space.fit),
    )

    subtracted = []
    if model is not None:
        means = {}
        for c in range(model.k):
            try:
                means[c] = mean_network(model, vectors, c)
            except EmptyCluster as e:
                logger.warning("%s", e)
        centroids = {c: cluster_centroid(space, model, c) for c in means}
        unit_clusters = [model.assignments.get(u, -1) for u in space.unit_ids]
        if means:
            frame = pd.DataFrame(np.vstack([means[c] for c in sorted(means)]), columns=list(EDGE_LABELS))
            frame.insert(0, "cluster", sorted(means))
            artifacts.append(save_csv(state, frame, "ena", "cluster_networks.csv"))
            artifacts.append(
                save_svg(
                    state,
                    render_cluster_networks(
                        space.node_positions, means, space.unit_points, unit_clusters, centroids, provenance
                    ),
                    "networks.svg",
                )
            )
        rows = []
        for a, b in combinations(sorted(means), 2):
            net = subtract_networks(model, vectors, (a, b))
            subtracted.append(net)
            rows.append([a, b, *net.edge_deltas.tolist()])
            svg = render_subtracted_network(
                net, space.node_positions, space.unit_points, (centroids[a], centroids[b]), provenance
            )
            artifacts.append(save_svg(state, svg, f"subtracted_{a}_vs_{b}.svg"))
        if rows:
            deltas = pd.DataFrame(rows, columns=["clusterA", "clusterB", *EDGE_LABELS])
            artifacts.append(save_csv(state, deltas, "ena", "subtracted.csv"))

    return {"networks": vectors, "space": space, "subtracted": subtracted, "artifacts": artifacts}
