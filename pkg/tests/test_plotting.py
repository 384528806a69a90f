from __future__ import annotations

import xml.etree.ElementTree as ET

import numpy as np
import pytest

from src.ena import subtract_networks
from src.models import CODE_NAMES, EDGE_PAIRS, AdjacencyVector, ClusterModel, ElbowCurve, PlotSpec
from src.plotting import (
    MAX_STROKE,
    MIN_STROKE,
    render_cluster_networks,
    render_elbow,
    render_network,
    render_subtracted_network,
    render_trajectories,
    stroke_widths,
)

SVG = "{http://www.w3.org/2000/svg}"


def _parse(svg: str) -> ET.Element:
    return ET.fromstring(svg.encode("utf-8"))


def _by_class(root: ET.Element, tag: str, cls: str) -> list[ET.Element]:
    return [el for el in root.iter(f"{SVG}{tag}") if el.get("class") == cls]


def _edges(root: ET.Element) -> dict[str, ET.Element]:
    return {el.get("data-edge"): el for el in _by_class(root, "line", "edge")}


def _nodes(rng) -> np.ndarray:
    return rng.normal(size=(len(CODE_NAMES), 2))


def _model(k: int) -> ClusterModel:
    barycenters = [{"series": (np.arange(12.0).reshape(3, 4) * (c + 1)).tolist()} for c in range(k)]
    return ClusterModel(
        k=k,
        assignments={f"s{i}": i % k for i in range(2 * k)},
        barycenters=barycenters,
        inertia=1.0,
        seed=0,
        iterations=1,
    )


def test_elbow_is_well_formed_with_canvas_defaults() -> None:
    curve = ElbowCurve(points=[(2, 10.0), (3, 4.0), (4, 3.5)], selected_k=3)
    root = _parse(render_elbow(curve, {"config_hash": "abc", "version": "0.1.0"}))
    spec = PlotSpec(kind="elbow")
    assert root.get("width") == str(spec.width) == "960"
    assert root.get("height") == "720"
    assert root.get("font-size") == "12"
    assert len(_by_class(root, "circle", "marker")) == 3
    assert len(_by_class(root, "circle", "knee")) == 1


def test_two_point_elbow_draws_two_markers() -> None:
    root = _parse(render_elbow(ElbowCurve(points=[(2, 5.0), (3, 1.0)], selected_k=2)))
    assert len(_by_class(root, "circle", "marker")) == 2


def test_provenance_is_stamped_in_a_comment() -> None:
    svg = render_elbow(ElbowCurve(points=[(2, 5.0), (3, 1.0)]), {"config_hash": "abc123"})
    assert "<!-- config_hash=abc123 -->" in svg


def test_rendering_is_byte_identical(rng) -> None:
    nodes = _nodes(rng)
    weights = rng.random(len(EDGE_PAIRS))
    assert render_network(nodes, weights) == render_network(nodes.copy(), weights.copy())
    assert render_trajectories(_model(3)) == render_trajectories(_model(3))


def test_single_cluster_trajectories() -> None:
    root = _parse(render_trajectories(_model(1)))
    panels = [g for g in root.iter(f"{SVG}g") if g.get("class") == "panel"]
    assert [g.get("id") for g in panels] == ["calls", "accept_rate", "modify_rate", "ai_char_rate"]
    for g in panels:
        assert len(_by_class(g, "polyline", "cluster-0")) == 1


def test_stroke_widths_are_affine_in_weight() -> None:
    widths = stroke_widths(np.array([0.0, 1.0, 2.0, 4.0]))
    assert widths[0] == 0.0
    assert widths[3] == pytest.approx(MAX_STROKE)
    assert widths[1] - MIN_STROKE == pytest.approx((widths[2] - MIN_STROKE) / 2)
    assert not stroke_widths(np.zeros(3)).any()


def test_zero_edges_are_omitted_and_the_heaviest_is_widest(rng) -> None:
    weights = np.zeros(len(EDGE_PAIRS))
    weights[0], weights[5] = 0.5, 2.0
    edges = _edges(_parse(render_network(_nodes(rng), weights)))
    first, sixth = ("-".join(EDGE_PAIRS[0]), "-".join(EDGE_PAIRS[5]))
    assert set(edges) == {first, sixth}
    assert float(edges[sixth].get("stroke-width")) == pytest.approx(MAX_STROKE)
    assert float(edges[first].get("stroke-width")) < MAX_STROKE


def test_non_finite_nodes_are_rejected(rng) -> None:
    nodes = _nodes(rng)
    nodes[3, 0] = np.nan
    with pytest.raises(ValueError):
        render_network(nodes, np.ones(len(EDGE_PAIRS)))


def test_one_dimensional_space_still_renders(rng) -> None:
    root = _parse(render_network(rng.normal(size=(len(CODE_NAMES), 1)), rng.random(len(EDGE_PAIRS))))
    assert len(_by_class(root, "circle", "node")) == len(CODE_NAMES)


def test_subtracted_pair_swaps_sign_colors_and_keeps_edge_colors(rng) -> None:
    vectors = {}
    for i in range(6):
        w = rng.random(len(EDGE_PAIRS))
        vectors[f"u{i}"] = AdjacencyVector(unit_id=f"u{i}", weights=w, normalized=w / np.linalg.norm(w))
    model = ClusterModel(
        k=2, assignments={f"u{i}": i % 2 for i in range(6)}, barycenters=[], inertia=0.0, seed=0, iterations=1
    )
    nodes = _nodes(rng)
    ab = subtract_networks(model, vectors, (0, 1))
    ba = subtract_networks(model, vectors, (1, 0))
    edges_ab = _edges(_parse(render_subtracted_network(ab, nodes)))
    edges_ba = _edges(_parse(render_subtracted_network(ba, nodes)))
    assert edges_ab.keys() == edges_ba.keys()

    palette = PlotSpec(kind="subtracted-network").palette
    for e, (a, b) in enumerate(EDGE_PAIRS):
        label = f"{a}-{b}"
        if ab.color_sign[e] == 0:
            continue
        stronger = 0 if ab.color_sign[e] > 0 else 1
        assert edges_ab[label].get("stroke") == palette[stronger]
        assert edges_ba[label].get("stroke") == edges_ab[label].get("stroke")
        assert edges_ab[label].get("stroke-width") == edges_ba[label].get("stroke-width")

    positive_ab = {edges_ab["-".join(EDGE_PAIRS[e])].get("stroke") for e, s in enumerate(ab.color_sign) if s > 0}
    positive_ba = {edges_ba["-".join(EDGE_PAIRS[e])].get("stroke") for e, s in enumerate(ba.color_sign) if s > 0}
    assert positive_ab == {palette[0]}
    assert positive_ba == {palette[1]}


def test_cluster_networks_draw_one_panel_per_cluster(rng) -> None:
    networks = {c: rng.random(len(EDGE_PAIRS)) for c in range(3)}
    points = rng.normal(size=(6, 2))
    svg = render_cluster_networks(
        _nodes(rng), networks, points, [0, 1, 2, 0, 1, 2], {0: points[[0, 3]].mean(axis=0)}
    )
    root = _parse(svg)
    panels = [g.get("id") for g in root.iter(f"{SVG}g") if g.get("class") == "panel"]
    assert panels == ["cluster-0", "cluster-1", "cluster-2"]
    assert len(_by_class(root, "rect", "centroid")) == 1
    assert len(_by_class(root, "circle", "unit")) == 6
