"""SVG rendering of a forest: thin edges, bold highlighted paths, grains.

The output is plain SVG 1.1 built from line and circle elements, so an
empty forest renders to a valid empty canvas and element counts stay
predictable for tests.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path as FsPath

import numpy as np

from .dsf import Forest
from .point_process import BooleanModel


@dataclass
class RenderSpec:
    """What to draw and how.

    ``highlight_x`` selects start points by abscissa range (optionally
    narrowed by ``highlight_y``); their full ancestor paths, traced to the
    window edge regardless of certification, get the heavy stroke.  When
    ``height`` is None it is derived from the window aspect ratio so
    grains stay circular.
    """

    forest: Forest
    highlight_x: tuple | None = None
    highlight_y: tuple | None = None
    grains: BooleanModel | None = None
    width: int = 800
    height: int | None = None
    edge_stroke: float = 0.6
    highlight_stroke: float = 2.2
    edge_color: str = "#555555"
    highlight_color: str = "#cc2222"
    grain_color: str = "#4477bb"
    grain_opacity: float = 0.25


def _highlighted_edges(spec: RenderSpec) -> set:
    """Set of edge west-endpoint indices lying on a highlighted path."""
    forest = spec.forest
    x, y = forest.source.x, forest.source.y
    lo, hi = spec.highlight_x
    mask = (x >= lo) & (x <= hi)
    if spec.highlight_y is not None:
        ylo, yhi = spec.highlight_y
        mask &= (y >= ylo) & (y <= yhi)
    parent = forest.parent
    marked = set()
    for s in np.nonzero(mask)[0]:
        v = int(s)
        while parent[v] >= 0 and v not in marked:
            marked.add(v)
            v = int(parent[v])
    return marked


def render_forest(spec: RenderSpec) -> str:
    """Render the forest to an SVG 1.1 document string."""
    forest = spec.forest
    window = forest.source.window
    width = spec.width
    height = spec.height
    if height is None:
        height = max(1, round(width * window.height / window.width))
    x_scale = width / window.width
    y_scale = height / window.height

    def to_px(px_x, px_y):
        return ((px_x - window.x_min) * x_scale,
                height - (px_y - window.y_min) * y_scale)

    parts = [
        '<?xml version="1.0" encoding="UTF-8"?>',
        f'<svg xmlns="http://www.w3.org/2000/svg" version="1.1" '
        f'width="{width}" height="{height}" viewBox="0 0 {width} {height}">',
        f'<rect x="0" y="0" width="{width}" height="{height}" fill="#ffffff"/>',
    ]
    if spec.grains is not None and len(spec.grains):
        parts.append(f'<g fill="{spec.grain_color}" fill-opacity="{spec.grain_opacity}" stroke="none">')
        r_px = spec.grains.radius * x_scale
        for gx, gy in spec.grains.germs:
            cx, cy = to_px(gx, gy)
            parts.append(f'<circle cx="{cx:.2f}" cy="{cy:.2f}" r="{r_px:.2f}"/>')
        parts.append('</g>')

    x, y = forest.source.x, forest.source.y
    parent = forest.parent
    edge_idx = np.nonzero(parent >= 0)[0]
    if edge_idx.size:
        parts.append(f'<g stroke="{spec.edge_color}" stroke-width="{spec.edge_stroke}" '
                     f'stroke-linecap="round">')
        for i in edge_idx:
            p = int(parent[i])
            x1, y1 = to_px(x[i], y[i])
            x2, y2 = to_px(x[p], y[p])
            parts.append(f'<line x1="{x1:.2f}" y1="{y1:.2f}" x2="{x2:.2f}" y2="{y2:.2f}"/>')
        parts.append('</g>')

    if spec.highlight_x is not None:
        marked = _highlighted_edges(spec)
        if marked:
            parts.append(f'<g stroke="{spec.highlight_color}" '
                         f'stroke-width="{spec.highlight_stroke}" stroke-linecap="round">')
            for i in sorted(marked):
                p = int(parent[i])
                x1, y1 = to_px(x[i], y[i])
                x2, y2 = to_px(x[p], y[p])
                parts.append(f'<line x1="{x1:.2f}" y1="{y1:.2f}" x2="{x2:.2f}" y2="{y2:.2f}"/>')
            parts.append('</g>')

    parts.append('</svg>')
    return "\n".join(parts) + "\n"


def save_svg(spec: RenderSpec, path) -> None:
    FsPath(path).write_text(render_forest(spec))
