"""Dependency-free SVG figures.

Every renderer is a pure function of its inputs and returns the same bytes for the
same data: coordinates are printed with fixed precision and elements are emitted
in a fixed order.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Mapping, Optional, Sequence

import numpy as np

from src.models import (
    CODE_INDEX,
    CODE_NAMES,
    EDGE_PAIRS,
    FEATURE_LABELS,
    FEATURE_NAMES,
    ClusterModel,
    ElbowCurve,
    PlotSpec,
    SubtractedNetwork,
)

logger = logging.getLogger(__name__)

MIN_STROKE = 0.75
MAX_STROKE = 8.0
_PAD = 56


def _esc(text: str) -> str:
    return (
        (text or "")
        .replace("&", "&amp;")
        .replace("<", "&lt;")
        .replace(">", "&gt;")
        .replace('"', "&quot;")
    )


def _f(value: float) -> str:
    return f"{value:.2f}"


@dataclass(frozen=True)
class _Panel:
    """Maps data coordinates into a rectangle of the canvas."""

    x: float
    y: float
    width: float
    height: float
    xlim: tuple[float, float]
    ylim: tuple[float, float]

    def sx(self, v: float) -> float:
        lo, hi = self.xlim
        span = hi - lo or 1.0
        return self.x + (v - lo) / span * self.width

    def sy(self, v: float) -> float:
        lo, hi = self.ylim
        span = hi - lo or 1.0
        return self.y + self.height - (v - lo) / span * self.height


def _padded(lo: float, hi: float, frac: float = 0.05) -> tuple[float, float]:
    if hi == lo:
        return lo - 1.0, hi + 1.0
    pad = (hi - lo) * frac
    return lo - pad, hi + pad


def _document(spec: PlotSpec, body: list[str], provenance: Optional[Mapping[str, str]]) -> str:
    head = ['<?xml version="1.0" encoding="UTF-8"?>']
    if provenance:
        stamp = " ".join(f"{k}={v}" for k, v in sorted(provenance.items()))
        head.append(f"<!-- {_esc(stamp).replace('--', '- -')} -->")
    head.append(
        f'<svg xmlns="http://www.w3.org/2000/svg" version="1.1" width="{spec.width}" '
        f'height="{spec.height}" viewBox="0 0 {spec.width} {spec.height}" '
        f'font-family="Helvetica, Arial, sans-serif" font-size="{spec.font_size}">'
    )
    head.append(f"<title>{_esc(spec.title)}</title>")
    head.append('<rect width="100%" height="100%" fill="white"/>')
    if spec.title:
        head.append(
            f'<text x="{_f(spec.width / 2)}" y="{_f(spec.font_size * 2)}" text-anchor="middle" '
            f'font-size="{spec.font_size + 2}">{_esc(spec.title)}</text>'
        )
    return "\n".join(head + body + ["</svg>"]) + "\n"


def _axes(panel: _Panel, spec: PlotSpec, xlabel: str = "", ylabel: str = "", ticks: int = 4) -> list[str]:
    out = [
        f'<rect x="{_f(panel.x)}" y="{_f(panel.y)}" width="{_f(panel.width)}" '
        f'height="{_f(panel.height)}" fill="none" stroke="#333333" stroke-width="1"/>'
    ]
    for i in range(ticks + 1):
        v = panel.ylim[0] + (panel.ylim[1] - panel.ylim[0]) * i / ticks
        y = panel.sy(v)
        out.append(f'<line x1="{_f(panel.x - 4)}" y1="{_f(y)}" x2="{_f(panel.x)}" y2="{_f(y)}" stroke="#333333"/>')
        out.append(
            f'<text x="{_f(panel.x - 6)}" y="{_f(y + spec.font_size / 3)}" text-anchor="end">{_esc(f"{v:.2g}")}</text>'
        )
    if xlabel:
        out.append(
            f'<text x="{_f(panel.x + panel.width / 2)}" y="{_f(panel.y + panel.height + spec.font_size * 2.5)}" '
            f'text-anchor="middle">{_esc(xlabel)}</text>'
        )
    if ylabel:
        cx, cy = panel.x - spec.font_size * 3.5, panel.y + panel.height / 2
        out.append(
            f'<text x="{_f(cx)}" y="{_f(cy)}" text-anchor="middle" '
            f'transform="rotate(-90 {_f(cx)} {_f(cy)})">{_esc(ylabel)}</text>'
        )
    return out


def _polyline(points: Sequence[tuple[float, float]], color: str, width: float = 2.0) -> str:
    coords = " ".join(f"{_f(x)},{_f(y)}" for x, y in points)
    return f'<polyline points="{coords}" fill="none" stroke="{color}" stroke-width="{_f(width)}"/>'


def render_elbow(curve: ElbowCurve, provenance: Optional[Mapping[str, str]] = None) -> str:
    """Within-cluster inertia against k with the selected knee marked."""
    spec = PlotSpec(kind="elbow", title="Elbow: DTW inertia by number of clusters")
    ks = [p[0] for p in curve.points]
    inertias = [p[1] for p in curve.points]
    panel = _Panel(
        _PAD * 1.5, _PAD * 1.2, spec.width - _PAD * 2.5, spec.height - _PAD * 2.6,
        _padded(min(ks), max(ks)), _padded(min(inertias), max(inertias)),
    )
    body = _axes(panel, spec, "k (number of clusters)", "inertia")
    for k in ks:
        body.append(
            f'<text x="{_f(panel.sx(k))}" y="{_f(panel.y + panel.height + spec.font_size * 1.2)}" '
            f'text-anchor="middle">{k}</text>'
        )
    body.append(_polyline([(panel.sx(k), panel.sy(v)) for k, v in curve.points], spec.palette[0]))
    for k, v in curve.points:
        body.append(f'<circle class="marker" cx="{_f(panel.sx(k))}" cy="{_f(panel.sy(v))}" r="4" fill="{spec.palette[0]}"/>')
    if curve.selected_k is not None and curve.selected_k in ks:
        v = inertias[ks.index(curve.selected_k)]
        x, y = panel.sx(curve.selected_k), panel.sy(v)
        body.append(f'<circle class="knee" cx="{_f(x)}" cy="{_f(y)}" r="9" fill="none" stroke="{spec.palette[5]}" stroke-width="2"/>')
        body.append(f'<text x="{_f(x + 12)}" y="{_f(y - 12)}" fill="{spec.palette[5]}">knee k={curve.selected_k}</text>')
    return _document(spec, body, provenance)


def render_trajectories(model: ClusterModel, provenance: Optional[Mapping[str, str]] = None) -> str:
    """One panel per feature with one barycenter curve per cluster."""
    spec = PlotSpec(kind="trajectories", title="Cluster barycenters over normalized session time")
    barys = [b.to_array() for b in model.barycenters]
    gap = _PAD * 1.4
    pw = (spec.width - _PAD * 1.5 - gap) / 2 - _PAD * 0.5
    ph = (spec.height - _PAD * 2.2 - gap) / 2
    body: list[str] = []
    for f, feature in enumerate(FEATURE_NAMES):
        values = np.concatenate([b[:, f] for b in barys]) if barys else np.zeros(1)
        row, col = divmod(f, 2)
        length = max(b.shape[0] for b in barys) if barys else 2
        panel = _Panel(
            _PAD * 1.5 + col * (pw + gap), _PAD * 1.3 + row * (ph + gap), pw, ph,
            (0.0, float(length - 1)), _padded(float(values.min()), float(values.max())),
        )
        body.append(f'<g class="panel" id="{feature}">')
        body.extend(_axes(panel, spec, "normalized time", FEATURE_LABELS[feature]))
        for c, b in enumerate(barys):
            color = spec.palette[c % len(spec.palette)]
            points = [(panel.sx(t), panel.sy(v)) for t, v in enumerate(b[:, f])]
            body.append(_polyline(points, color).replace("<polyline", f'<polyline class="cluster-{c}"', 1))
        body.append("</g>")
    legend_y = spec.height - _PAD * 0.4
    for c in range(len(barys)):
        x = _PAD * 1.5 + c * 130
        color = spec.palette[c % len(spec.palette)]
        body.append(f'<rect x="{_f(x)}" y="{_f(legend_y - 10)}" width="14" height="10" fill="{color}"/>')
        body.append(
            f'<text x="{_f(x + 20)}" y="{_f(legend_y)}">{_esc(f"Cluster {c} (n={model.sizes()[c]})")}</text>'
        )
    return _document(spec, body, provenance)


def stroke_widths(weights: np.ndarray) -> np.ndarray:
    """Affine map of |weight| to stroke width; zero weights map to 0 (omitted)."""
    magnitude = np.abs(np.asarray(weights, dtype=np.float64))
    top = magnitude.max() if magnitude.size else 0.0
    if top == 0:
        return np.zeros_like(magnitude)
    widths = MIN_STROKE + (MAX_STROKE - MIN_STROKE) * magnitude / top
    widths[magnitude == 0] = 0.0
    return widths


def _network_body(
    panel: _Panel,
    spec: PlotSpec,
    nodes: np.ndarray,
    weights: np.ndarray,
    colors: Sequence[str],
    points: Optional[np.ndarray] = None,
    point_colors: Optional[Sequence[str]] = None,
    centroids: Sequence[tuple[np.ndarray, str]] = (),
) -> list[str]:
    body = [
        f'<line x1="{_f(panel.x)}" y1="{_f(panel.sy(0))}" x2="{_f(panel.x + panel.width)}" y2="{_f(panel.sy(0))}" stroke="#DDDDDD"/>',
        f'<line x1="{_f(panel.sx(0))}" y1="{_f(panel.y)}" x2="{_f(panel.sx(0))}" y2="{_f(panel.y + panel.height)}" stroke="#DDDDDD"/>',
    ]
    if points is not None:
        for i, p in enumerate(points):
            color = point_colors[i] if point_colors is not None else "#999999"
            body.append(f'<circle class="unit" cx="{_f(panel.sx(p[0]))}" cy="{_f(panel.sy(p[1]))}" r="2" fill="{color}" fill-opacity="0.5"/>')
    widths = stroke_widths(weights)
    for e, (a, b) in enumerate(EDGE_PAIRS):
        if widths[e] == 0:
            continue
        pa, pb = nodes[CODE_INDEX[a]], nodes[CODE_INDEX[b]]
        body.append(
            f'<line class="edge" data-edge="{a}-{b}" x1="{_f(panel.sx(pa[0]))}" y1="{_f(panel.sy(pa[1]))}" '
            f'x2="{_f(panel.sx(pb[0]))}" y2="{_f(panel.sy(pb[1]))}" stroke="{colors[e]}" '
            f'stroke-width="{_f(widths[e])}" stroke-opacity="0.8"/>'
        )
    for c, name in enumerate(CODE_NAMES):
        x, y = panel.sx(nodes[c][0]), panel.sy(nodes[c][1])
        body.append(f'<circle class="node" cx="{_f(x)}" cy="{_f(y)}" r="5" fill="#333333"/>')
        body.append(f'<text x="{_f(x + 7)}" y="{_f(y - 7)}">{_esc(name)}</text>')
    for centroid, color in centroids:
        x, y = panel.sx(centroid[0]), panel.sy(centroid[1])
        body.append(
            f'<rect class="centroid" x="{_f(x - 6)}" y="{_f(y - 6)}" width="12" height="12" '
            f'fill="{color}" stroke="#000000"/>'
        )
    return body


def _as_plane(arr: Optional[np.ndarray]) -> Optional[np.ndarray]:
    if arr is None:
        return None
    arr = np.asarray(arr, dtype=np.float64)
    if arr.ndim == 2 and arr.shape[1] == 1:
        arr = np.hstack([arr, np.zeros((arr.shape[0], 1))])
    return arr


def _extent(*arrays: Optional[np.ndarray]) -> tuple[tuple[float, float], tuple[float, float]]:
    stacked = np.vstack([a for a in arrays if a is not None and a.size])
    lo, hi = stacked.min(axis=0), stacked.max(axis=0)
    half = max(float(np.max(np.abs(np.concatenate([lo, hi])))), 1e-9) * 1.1
    return (-half, half), (-half, half)


def render_network(
    node_positions: np.ndarray,
    edge_weights: np.ndarray,
    unit_points: Optional[np.ndarray] = None,
    title: str = "Network",
    provenance: Optional[Mapping[str, str]] = None,
) -> str:
    """Nodes at their co-registered positions, edges with width proportional to weight."""
    spec = PlotSpec(kind="network", title=title)
    nodes = _as_plane(node_positions)
    points = _as_plane(unit_points)
    if not np.all(np.isfinite(nodes)):
        raise ValueError("node positions must be finite")
    xlim, ylim = _extent(nodes, points)
    side = min(spec.width, spec.height) - _PAD * 2
    panel = _Panel((spec.width - side) / 2, _PAD * 1.2, side, side - _PAD * 0.4, xlim, ylim)
    colors = [spec.palette[0]] * len(EDGE_PAIRS)
    body = _network_body(panel, spec, nodes, np.asarray(edge_weights), colors, points)
    return _document(spec, body, provenance)


def render_cluster_networks(
    node_positions: np.ndarray,
    networks: Mapping[int, np.ndarray],
    unit_points: Optional[np.ndarray] = None,
    unit_clusters: Optional[Sequence[int]] = None,
    centroids: Optional[Mapping[int, np.ndarray]] = None,
    provenance: Optional[Mapping[str, str]] = None,
) -> str:
    """Grid of per-cluster mean networks sharing one set of node positions."""
    spec = PlotSpec(kind="network", title="Mean network per cluster")
    nodes = _as_plane(node_positions)
    points = _as_plane(unit_points)
    xlim, ylim = _extent(nodes, points)
    clusters = sorted(networks)
    cols = 2 if len(clusters) > 1 else 1
    rows = -(-len(clusters) // cols)
    gap = _PAD * 0.6
    pw = (spec.width - _PAD - gap * (cols - 1)) / cols
    ph = (spec.height - _PAD * 1.4 - gap * (rows - 1)) / rows
    body: list[str] = []
    for i, c in enumerate(clusters):
        row, col = divmod(i, cols)
        panel = _Panel(_PAD / 2 + col * (pw + gap), _PAD * 1.2 + row * (ph + gap), pw, ph, xlim, ylim)
        color = spec.palette[c % len(spec.palette)]
        own = None
        if points is not None and unit_clusters is not None:
            own = points[[j for j, u in enumerate(unit_clusters) if u == c]]
        marks = [(centroids[c], color)] if centroids and centroids.get(c) is not None else []
        body.append(f'<g class="panel" id="cluster-{c}">')
        body.append(
            f'<rect x="{_f(panel.x)}" y="{_f(panel.y)}" width="{_f(pw)}" height="{_f(ph)}" fill="none" stroke="#CCCCCC"/>'
        )
        body.append(f'<text x="{_f(panel.x + 6)}" y="{_f(panel.y + spec.font_size + 4)}">Cluster {c}</text>')
        body.extend(
            _network_body(panel, spec, nodes, np.asarray(networks[c]), [color] * len(EDGE_PAIRS), own,
                          [color] * (0 if own is None else len(own)), marks)
        )
        body.append("</g>")
    return _document(spec, body, provenance)


def render_subtracted_network(
    network: SubtractedNetwork,
    node_positions: np.ndarray,
    unit_points: Optional[np.ndarray] = None,
    centroids: Optional[tuple[Optional[np.ndarray], Optional[np.ndarray]]] = None,
    provenance: Optional[Mapping[str, str]] = None,
) -> str:
    """Edge color marks which cluster has the stronger connection; width is |delta|."""
    a, b = network.cluster_a, network.cluster_b
    spec = PlotSpec(kind="subtracted-network", title=f"Cluster {a} minus cluster {b}")
    color_a = spec.palette[a % len(spec.palette)]
    color_b = spec.palette[b % len(spec.palette)]
    if color_a == color_b:
        color_b = spec.palette[(a + 1) % len(spec.palette)]
    nodes = _as_plane(node_positions)
    points = _as_plane(unit_points)
    xlim, ylim = _extent(nodes, points)
    side = min(spec.width, spec.height) - _PAD * 2
    panel = _Panel((spec.width - side) / 2, _PAD * 1.2, side, side - _PAD * 0.4, xlim, ylim)
    colors = [color_a if s > 0 else color_b for s in network.color_sign]
    marks = []
    if centroids is not None:
        marks = [(pt, col) for pt, col in zip(centroids, (color_a, color_b)) if pt is not None]
    body = _network_body(panel, spec, nodes, network.edge_deltas, colors, points, None,
                         [(_as_plane(np.atleast_2d(p))[0], col) for p, col in marks])
    legend_y = spec.height - _PAD * 0.4
    for i, (label, color) in enumerate(((f"stronger in cluster {a}", color_a), (f"stronger in cluster {b}", color_b))):
        x = _PAD + i * 220
        body.append(f'<rect x="{_f(x)}" y="{_f(legend_y - 10)}" width="14" height="10" fill="{color}"/>')
        body.append(f'<text x="{_f(x + 20)}" y="{_f(legend_y)}">{_esc(label)}</text>')
    return _document(spec, body, provenance)
