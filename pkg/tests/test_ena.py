from __future__ import annotations

import numpy as np
import pytest

from src.ena import (
    EDGE_LABELS,
    accumulate,
    adjacency_frame,
    cluster_centroid,
    conversation_weights,
    network_metadata,
    normalize,
    place_nodes,
    project_space,
    subtract_networks,
)
from src.errors import DegenerateSpace, EmptyCluster
from src.models import CODE_INDEX, CODE_NAMES, EDGE_PAIRS, AdjacencyVector, ClusterModel, CodedLine


def _line(*codes: str, sentence: int = 0, line: int = 0, session: str = "u", event: int = 0) -> CodedLine:
    values = [0] * len(CODE_NAMES)
    for c in codes:
        values[CODE_INDEX[c]] = 1
    return CodedLine(
        session_id=session, sentence_index=sentence, line_index=line, event_index=event, codes=tuple(values)
    )


def _rows(*lines: tuple[str, ...]) -> np.ndarray:
    out = np.zeros((len(lines), len(CODE_NAMES)))
    for i, codes in enumerate(lines):
        for c in codes:
            out[i, CODE_INDEX[c]] = 1
    return out


def _edge(weights: np.ndarray, a: str, b: str) -> float:
    return float(weights[EDGE_PAIRS.index(tuple(sorted((a, b))))])


def _brute_force(x: np.ndarray) -> np.ndarray:
    weights = np.zeros(len(EDGE_PAIRS))
    for e, (a, b) in enumerate(EDGE_PAIRS):
        ia, ib = CODE_INDEX[a], CODE_INDEX[b]
        for j in range(len(x)):
            weights[e] += x[j, ia] * x[j, ib]
            for i in range(j):
                weights[e] += bool((x[i, ia] and x[j, ib]) or (x[i, ib] and x[j, ia]))
    return weights


def _vector(unit_id: str, weights) -> AdjacencyVector:
    weights = np.asarray(weights, dtype=np.float64)
    normalized, is_zero = normalize(weights)
    return AdjacencyVector(unit_id=unit_id, weights=weights, normalized=normalized, is_zero=is_zero)


def _model(assignments: dict[str, int], k: int) -> ClusterModel:
    return ClusterModel(k=k, assignments=assignments, barycenters=[], inertia=0.0, seed=0, iterations=1)


def test_three_single_code_lines_connect_every_pair() -> None:
    weights = conversation_weights(_rows(("seekSugg",), ("acceptSugg",), ("compose",)))
    assert _edge(weights, "seekSugg", "acceptSugg") == 1
    assert _edge(weights, "seekSugg", "compose") == 1
    assert _edge(weights, "acceptSugg", "compose") == 1
    assert weights.sum() == 3


def test_single_line_with_one_code_has_no_edges() -> None:
    assert not conversation_weights(_rows(("compose",))).any()


def test_codes_on_the_same_line_co_occur() -> None:
    weights = conversation_weights(_rows(("acceptSugg", "compose")))
    assert _edge(weights, "acceptSugg", "compose") == 1
    assert weights.sum() == 1


def test_repeated_pair_lines() -> None:
    weights = conversation_weights(_rows(("acceptSugg", "compose"), ("acceptSugg", "compose")))
    assert _edge(weights, "acceptSugg", "compose") == 3


def _random_conversation(rng) -> np.ndarray:
    """Up to six lines drawing on at most four distinct codes."""
    codes = rng.choice(len(CODE_NAMES), size=int(rng.integers(1, 5)), replace=False)
    x = np.zeros((int(rng.integers(1, 7)), len(CODE_NAMES)))
    x[:, codes] = rng.random((x.shape[0], codes.size)) < 0.5
    return x


@pytest.mark.parametrize("seed", range(50))
def test_weights_match_brute_force_counting(seed) -> None:
    x = _random_conversation(np.random.default_rng(seed))
    assert np.array_equal(conversation_weights(x), _brute_force(x))


def test_random_sessions_normalize_centre_and_subtract_cleanly() -> None:
    rng = np.random.default_rng(50)
    lines = []
    for s in range(50):
        for sentence in range(int(rng.integers(1, 4))):
            for i, row in enumerate(_random_conversation(rng)):
                codes = [CODE_NAMES[c] for c in np.flatnonzero(row)]
                if "lowModification" in codes:
                    codes = [c for c in codes if c != "highModification"]
                lines.append(_line(*codes, sentence=sentence, line=i, session=f"s{s:02d}"))
    vectors = accumulate(lines)
    for v in vectors.values():
        assert np.linalg.norm(v.normalized) == pytest.approx(0.0 if v.is_zero else 1.0, abs=1e-12)
    space = project_space(vectors)
    assert np.all(np.abs(space.centered.mean(axis=0)) <= 1e-9)

    model = _model({sid: i % 2 for i, sid in enumerate(sorted(vectors))}, k=2)
    ab = subtract_networks(model, vectors, (0, 1))
    ba = subtract_networks(model, vectors, (1, 0))
    assert np.array_equal(ab.edge_deltas, -ba.edge_deltas)
    assert ab.color_sign == [-s for s in ba.color_sign]


def test_conversations_do_not_mix() -> None:
    lines = [_line("seekSugg", sentence=0), _line("compose", sentence=1)]
    vectors = accumulate(lines)
    assert vectors["u"].is_zero
    assert not vectors["u"].normalized.any()


def test_accumulated_vectors_have_unit_norm() -> None:
    lines = [
        _line("seekSugg", session="a", line=0),
        _line("acceptSugg", session="a", line=1, event=1),
        _line("compose", "reflect", session="b"),
    ]
    vectors = accumulate(lines)
    assert sorted(vectors) == ["a", "b"]
    for v in vectors.values():
        assert np.linalg.norm(v.normalized) == pytest.approx(1.0)


def test_projection_centres_and_spans(rng) -> None:
    vectors = [_vector(f"u{i}", rng.random(len(EDGE_PAIRS))) for i in range(12)]
    space = project_space(vectors)
    assert np.allclose(space.centered.mean(axis=0), 0.0)
    assert np.allclose(space.unit_points, space.centered @ space.projection)
    assert np.allclose(space.projection.T @ space.projection, np.eye(2))
    assert space.unit_points.shape == (12, 2)
    assert space.variance_explained[0] >= space.variance_explained[1]
    assert sum(space.variance_explained) <= 1.0 + 1e-12


def test_points_on_a_line_fall_back_to_one_dimension() -> None:
    a = np.zeros(len(EDGE_PAIRS))
    b = np.zeros(len(EDGE_PAIRS))
    a[0], b[1] = 1.0, 1.0
    space = project_space([_vector("x", a), _vector("y", b), _vector("z", a)])
    assert space.unit_points.shape == (3, 1)
    assert space.variance_explained == [pytest.approx(1.0)]


def test_scaling_raw_weights_does_not_move_points(rng) -> None:
    raw = [rng.random(len(EDGE_PAIRS)) for _ in range(6)]
    a = project_space([_vector(f"u{i}", w) for i, w in enumerate(raw)])
    b = project_space([_vector(f"u{i}", 3.0 * w) for i, w in enumerate(raw)])
    assert np.allclose(a.unit_points, b.unit_points)


def test_zero_units_are_left_out(rng) -> None:
    vectors = [_vector(f"u{i}", rng.random(len(EDGE_PAIRS))) for i in range(4)]
    vectors.append(_vector("empty", np.zeros(len(EDGE_PAIRS))))
    assert "empty" not in project_space(vectors).unit_ids


def test_a_single_unit_is_degenerate(rng) -> None:
    with pytest.raises(DegenerateSpace):
        project_space([_vector("only", rng.random(len(EDGE_PAIRS)))])


def test_identical_units_project_to_the_origin(rng, caplog) -> None:
    w = rng.random(len(EDGE_PAIRS))
    vectors = {"a": _vector("a", w), "b": _vector("b", 2 * w)}
    with caplog.at_level("WARNING", logger="src.ena"):
        space = project_space(vectors)
    assert space.unit_points.shape == (2, 1)
    assert not space.unit_points.any()
    assert space.variance_explained == [0.0]
    assert "rank 0" in caplog.text
    placed = place_nodes(space, vectors)
    assert np.all(np.isfinite(placed.node_positions))


def test_node_placement_tracks_unit_points(rng) -> None:
    vectors = {f"u{i}": _vector(f"u{i}", rng.random(len(EDGE_PAIRS))) for i in range(8)}
    space = place_nodes(project_space(vectors), vectors)
    assert space.node_positions.shape == (len(CODE_NAMES), 2)
    assert all(f > 0.99 for f in space.fit)


def test_unused_codes_sit_at_the_origin(rng) -> None:
    used = [e for e, (a, b) in enumerate(EDGE_PAIRS) if "reflect" not in (a, b)]
    vectors = {}
    for i in range(20):
        w = np.zeros(len(EDGE_PAIRS))
        w[used] = rng.random(len(used))
        vectors[f"u{i}"] = _vector(f"u{i}", w)
    space = place_nodes(project_space(vectors), vectors)
    assert np.all(space.node_positions[CODE_INDEX["reflect"]] == 0.0)
    meta = network_metadata(space)
    assert meta["rotation"] == "svd"
    assert meta["dimensions"] == "2"


def test_subtraction_is_antisymmetric(rng) -> None:
    vectors = {f"u{i}": _vector(f"u{i}", rng.random(len(EDGE_PAIRS))) for i in range(6)}
    model = _model({f"u{i}": i % 2 for i in range(6)}, k=2)
    ab = subtract_networks(model, vectors, (0, 1))
    ba = subtract_networks(model, vectors, (1, 0))
    assert np.allclose(ab.edge_deltas, -ba.edge_deltas)
    assert ab.color_sign == [-s for s in ba.color_sign]
    assert not subtract_networks(model, vectors, (0, 0)).edge_deltas.any()


def test_subtracting_an_empty_cluster_raises(rng) -> None:
    vectors = {"u0": _vector("u0", rng.random(len(EDGE_PAIRS)))}
    with pytest.raises(EmptyCluster):
        subtract_networks(_model({"u0": 0}, k=2), vectors, (0, 1))


def test_cluster_centroid_and_frames(rng) -> None:
    vectors = {f"u{i}": _vector(f"u{i}", rng.random(len(EDGE_PAIRS))) for i in range(4)}
    space = project_space(vectors)
    model = _model({"u0": 0, "u1": 0, "u2": 1, "u3": 1}, k=3)
    centroid = cluster_centroid(space, model, 0)
    assert np.allclose(centroid, space.unit_points[:2].mean(axis=0))
    assert cluster_centroid(space, model, 2) is None
    frame = adjacency_frame(vectors)
    assert frame.columns.tolist() == ["sessionId", *EDGE_LABELS]
    assert len(EDGE_LABELS) == 91
