"""Epistemic network analysis over coded lines.

Units are writing sessions, conversations are sentences within a session and the
stanza window is infinite: every line co-occurs with every earlier line of its
conversation.
"""

from __future__ import annotations

import logging
from collections import defaultdict
from typing import Iterable, Optional, Sequence

import numpy as np
import pandas as pd
from joblib import Parallel, delayed

from src.errors import DegenerateSpace, EmptyCluster, SingularSystem
from src.models import (
    CODE_INDEX,
    CODE_NAMES,
    EDGE_PAIRS,
    AdjacencyVector,
    ClusterModel,
    CodedLine,
    EnaSpace,
    SubtractedNetwork,
)

logger = logging.getLogger(__name__)

N_DIMENSIONS = 2
RANK_TOLERANCE = 1e-10
RIDGE_LAMBDA = 1e-8

_EDGE_ROWS = np.array([CODE_INDEX[a] for a, _ in EDGE_PAIRS])
_EDGE_COLS = np.array([CODE_INDEX[b] for _, b in EDGE_PAIRS])
EDGE_LABELS = tuple(f"{a}-{b}" for a, b in EDGE_PAIRS)


def conversation_weights(codes: np.ndarray) -> np.ndarray:
    """Edge weights of one conversation from its ordered (lines x codes) binary matrix.

    A code pair scores 1 per line pair in which one line carries each code, and 1
    per line that carries both.
    """
    n_codes = len(CODE_NAMES)
    x = np.asarray(codes, dtype=np.float64).reshape(-1, n_codes)
    prior_sum = np.zeros(n_codes)
    prior_outer = np.zeros((n_codes, n_codes))
    total = np.zeros((n_codes, n_codes))
    for line in x:
        own = np.outer(line, line)
        total += np.outer(line, prior_sum) + np.outer(prior_sum, line) - own * prior_outer
        total += own
        prior_sum += line
        prior_outer += own
    return total[_EDGE_ROWS, _EDGE_COLS]


def normalize(weights: np.ndarray) -> tuple[np.ndarray, bool]:
    """Sphere normalization; an all-zero vector stays zero and is flagged."""
    norm = float(np.linalg.norm(weights))
    if norm == 0.0:
        return np.zeros_like(weights, dtype=np.float64), True
    return weights / norm, False


def _unit_vector(unit_id: str, lines: Sequence[CodedLine]) -> AdjacencyVector:
    conversations: dict[int, list[CodedLine]] = defaultdict(list)
    for line in lines:
        conversations[line.sentence_index].append(line)
    weights = np.zeros(len(EDGE_PAIRS))
    for key in sorted(conversations):
        ordered = sorted(conversations[key], key=lambda ln: (ln.line_index, ln.event_index))
        weights += conversation_weights(np.array([ln.codes for ln in ordered]))
    normalized, is_zero = normalize(weights)
    return AdjacencyVector(unit_id=unit_id, weights=weights, normalized=normalized, is_zero=is_zero)


def accumulate(lines: Iterable[CodedLine], jobs: int = 1) -> dict[str, AdjacencyVector]:
    """Adjacency vector per session, summed over its sentence conversations."""
    by_unit: dict[str, list[CodedLine]] = defaultdict(list)
    for line in lines:
        by_unit[line.session_id].append(line)
    units = sorted(by_unit)
    vectors = Parallel(n_jobs=jobs, prefer="threads")(
        delayed(_unit_vector)(u, by_unit[u]) for u in units
    )
    zero = [v.unit_id for v in vectors if v.is_zero]
    if zero:
        logger.warning("%d units have no co-occurrences: %s", len(zero), ", ".join(zero[:5]))
    return {v.unit_id: v for v in vectors}


def _fix_signs(vt: np.ndarray) -> np.ndarray:
    # largest-magnitude component of each direction is positive
    signs = np.sign(vt[np.arange(vt.shape[0]), np.argmax(np.abs(vt), axis=1)])
    signs[signs == 0] = 1.0
    return vt * signs[:, None]


def project_space(vectors: dict[str, AdjacencyVector] | Sequence[AdjacencyVector]) -> EnaSpace:
    """Mean-centre the normalized vectors and project onto the top singular directions.

    Units with no co-occurrences are left out. With rank 1 the space falls back to
    one dimension, and with rank 0 every unit projects to the origin. Fewer than two
    usable units raise DegenerateSpace.
    """
    items = sorted(vectors.values() if isinstance(vectors, dict) else vectors, key=lambda v: v.unit_id)
    usable = [v for v in items if not v.is_zero]
    if len(usable) < len(items):
        logger.info("%d zero units left out of the projection", len(items) - len(usable))
    if len(usable) < 2:
        raise DegenerateSpace(f"need at least 2 non-zero units, got {len(usable)}")

    matrix = np.vstack([v.normalized for v in usable])
    centered = matrix - matrix.mean(axis=0)
    _, s, vt = np.linalg.svd(centered, full_matrices=False)
    rank = int(np.sum(s > RANK_TOLERANCE * max(s[0], 1.0)))
    dims = N_DIMENSIONS
    if rank < N_DIMENSIONS:
        dims = max(rank, 1)
        logger.warning("Network space has rank %d; falling back to %d dimension(s)", rank, dims)

    directions = _fix_signs(vt[:dims]).T
    energy = s**2
    if rank == 0:
        # every unit sits at the centroid
        centered = np.zeros_like(centered)
        variance_explained = [0.0]
    else:
        variance_explained = [float(e / energy.sum()) for e in energy[:dims]]
    return EnaSpace(
        unit_ids=[v.unit_id for v in usable],
        centered=centered,
        projection=directions,
        unit_points=centered @ directions,
        variance_explained=variance_explained,
    )


def _pearson(a: np.ndarray, b: np.ndarray) -> float:
    if np.std(a) == 0 or np.std(b) == 0:
        return float("nan")
    return float(np.corrcoef(a, b)[0, 1])


def node_weights(vectors: Sequence[AdjacencyVector]) -> np.ndarray:
    """Units x codes matrix mapping node positions to each unit's weighted edge-midpoint centroid."""
    a = np.zeros((len(vectors), len(CODE_NAMES)))
    for u, v in enumerate(vectors):
        total = v.normalized.sum()
        if total == 0:
            continue
        share = v.normalized / (2.0 * total)
        np.add.at(a[u], _EDGE_ROWS, share)
        np.add.at(a[u], _EDGE_COLS, share)
    return a


def place_nodes(space: EnaSpace, vectors: dict[str, AdjacencyVector]) -> EnaSpace:
    """Least-squares node positions so edge-midpoint centroids track the unit points."""
    units = [vectors[u] for u in space.unit_ids]
    a = node_weights(units)
    targets = space.unit_points
    active = np.flatnonzero(a.sum(axis=0) > 0)
    positions = np.zeros((len(CODE_NAMES), targets.shape[1]))

    sub = a[:, active]
    solution, _, rank, _ = np.linalg.lstsq(sub, targets, rcond=None)
    if rank < sub.shape[1]:
        logger.warning(
            "Node placement system is singular (rank %d < %d); using ridge solve (lambda=%g)",
            rank, sub.shape[1], RIDGE_LAMBDA,
        )
        gram = sub.T @ sub + RIDGE_LAMBDA * np.eye(sub.shape[1])
        try:
            solution = np.linalg.solve(gram, sub.T @ targets)
        except np.linalg.LinAlgError as e:
            raise SingularSystem(f"node placement failed: {e}") from e
    positions[active] = solution

    approx = a @ positions
    fit = [_pearson(approx[:, d], targets[:, d]) for d in range(targets.shape[1])]
    logger.info("Node placement fit per dimension: %s", ", ".join(f"{f:.3f}" for f in fit))
    return space.model_copy(update={"node_positions": positions, "fit": fit})


def _cluster_vectors(model: ClusterModel, vectors: dict[str, AdjacencyVector], cluster: int) -> np.ndarray:
    members = [vectors[s].normalized for s in sorted(model.members(cluster)) if s in vectors]
    if not members:
        raise EmptyCluster(f"cluster {cluster} has no units with networks")
    return np.vstack(members)


def mean_network(model: ClusterModel, vectors: dict[str, AdjacencyVector], cluster: int) -> np.ndarray:
    return _cluster_vectors(model, vectors, cluster).mean(axis=0)


def subtract_networks(
    model: ClusterModel,
    vectors: dict[str, AdjacencyVector],
    pair: tuple[int, int],
) -> SubtractedNetwork:
    a, b = pair
    deltas = mean_network(model, vectors, a) - mean_network(model, vectors, b)
    return SubtractedNetwork(
        cluster_a=a,
        cluster_b=b,
        edge_deltas=deltas,
        color_sign=[int(s) for s in np.sign(deltas)],
    )


def cluster_centroid(space: EnaSpace, model: ClusterModel, cluster: int) -> Optional[np.ndarray]:
    idx = [i for i, u in enumerate(space.unit_ids) if model.assignments.get(u) == cluster]
    if not idx:
        return None
    return space.unit_points[idx].mean(axis=0)


def adjacency_frame(vectors: dict[str, AdjacencyVector]) -> pd.DataFrame:
    ids = sorted(vectors)
    frame = pd.DataFrame(
        np.vstack([vectors[u].weights for u in ids]) if ids else np.zeros((0, len(EDGE_LABELS))),
        columns=list(EDGE_LABELS),
    )
    frame.insert(0, "sessionId", ids)
    return frame


def unit_points_frame(space: EnaSpace, model: Optional[ClusterModel] = None) -> pd.DataFrame:
    frame = pd.DataFrame(
        space.unit_points, columns=[f"dim{d + 1}" for d in range(space.unit_points.shape[1])]
    )
    frame.insert(0, "sessionId", space.unit_ids)
    if model is not None:
        frame.insert(1, "cluster", [model.assignments.get(u, -1) for u in space.unit_ids])
    return frame


def node_positions_frame(space: EnaSpace) -> pd.DataFrame:
    positions = space.node_positions if space.node_positions is not None else np.zeros((len(CODE_NAMES), 0))
    frame = pd.DataFrame(positions, columns=[f"dim{d + 1}" for d in range(positions.shape[1])])
    frame.insert(0, "code", list(CODE_NAMES))
    return frame


def network_metadata(space: EnaSpace) -> dict[str, str]:
    meta = {
        "rotation": space.rotation,
        "within_line_cooccurrence": "counted",
        "dimensions": str(space.unit_points.shape[1]),
    }
    for d, (var, fit) in enumerate(zip(space.variance_explained, space.fit or [np.nan] * 2)):
        meta[f"variance_dim{d + 1}"] = f"{var:.6f}"
        meta[f"fit_dim{d + 1}"] = f"{fit:.6f}"
    return meta
