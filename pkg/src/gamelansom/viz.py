"""SVG figures: SOM maps over u-matrix backgrounds, component planes, strip plots.

Documents are built as plain strings with fixed float formatting, so the
same inputs always give the same bytes. Nothing external is referenced.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from xml.sax.saxutils import escape

import numpy as np

from .corpus import CorpusManifest
from .errors import InconsistentInputs, MissingValue
from .som import Placement, SomModel, component_planes, u_matrix

# matplotlib's tab10
TAB10 = ("#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd",
         "#8c564b", "#e377c2", "#7f7f7f", "#bcbd22", "#17becf")
# viridis sampled at 9 stops; dark = low (similar), light = high (dissimilar)
VIRIDIS = ((68, 1, 84), (71, 44, 122), (59, 81, 139), (44, 113, 142), (33, 144, 141),
           (39, 173, 129), (92, 200, 99), (170, 220, 50), (253, 231, 37))
MARKERS = {"Indonesian": "circle", "Western": "diamond"}
GOLDEN_ANGLE = math.pi * (3.0 - math.sqrt(5.0))
CELL = 24.0


def _f(x: float) -> str:
    return f"{x:.2f}"


def colormap(t: float) -> str:
    """Hex colour for ``t`` in [0, 1] by linear interpolation of the viridis stops."""
    t = min(max(float(t), 0.0), 1.0) * (len(VIRIDIS) - 1)
    i = min(int(t), len(VIRIDIS) - 2)
    w = t - i
    rgb = [round(a + (b - a) * w) for a, b in zip(VIRIDIS[i], VIRIDIS[i + 1])]
    return "#%02x%02x%02x" % tuple(rgb)


@dataclass(frozen=True)
class PlotStyle:
    ensemble_colors: dict = field(default_factory=dict)
    region_markers: dict = field(default_factory=lambda: dict(MARKERS))
    cell: float = CELL

    @classmethod
    def for_manifest(cls, manifest: CorpusManifest) -> "PlotStyle":
        names = sorted({e.ensemble for e in manifest})
        return cls({n: TAB10[i % len(TAB10)] for i, n in enumerate(names)})


def median(values) -> float:
    """Median; an even count gives the mean of the two middle values."""
    v = sorted(float(x) for x in values)
    if not v:
        raise MissingValue("median of an empty set")
    mid = len(v) // 2
    return v[mid] if len(v) % 2 else (v[mid - 1] + v[mid]) / 2.0


class _Svg:
    def __init__(self, width: float, height: float):
        self.width, self.height = width, height
        self.parts: list[str] = []

    def add(self, s: str):
        self.parts.append(s)

    def rect(self, x, y, w, h, fill, cls="", extra=""):
        c = f' class="{cls}"' if cls else ""
        self.add(f'<rect{c} x="{_f(x)}" y="{_f(y)}" width="{_f(w)}" height="{_f(h)}" '
                 f'fill="{fill}"{extra}/>')

    def text(self, x, y, s, size=11, anchor="start", extra=""):
        self.add(f'<text x="{_f(x)}" y="{_f(y)}" font-size="{size}" font-family="sans-serif" '
                 f'text-anchor="{anchor}"{extra}>{escape(str(s))}</text>')

    def line(self, x1, y1, x2, y2, stroke="#000", width=1.0, cls=""):
        c = f' class="{cls}"' if cls else ""
        self.add(f'<line{c} x1="{_f(x1)}" y1="{_f(y1)}" x2="{_f(x2)}" y2="{_f(y2)}" '
                 f'stroke="{stroke}" stroke-width="{_f(width)}"/>')

    def marker(self, shape, x, y, r, fill, rid="", cls="marker"):
        title = f"<title>{escape(rid)}</title>" if rid else ""
        if shape == "circle":
            self.add(f'<circle class="{cls}" cx="{_f(x)}" cy="{_f(y)}" r="{_f(r)}" fill="{fill}" '
                     f'stroke="#000" stroke-width="0.8">{title}</circle>')
        else:
            pts = " ".join(f"{_f(px)},{_f(py)}" for px, py in
                           ((x, y - r), (x + r, y), (x, y + r), (x - r, y)))
            self.add(f'<polygon class="{cls}" points="{pts}" fill="{fill}" '
                     f'stroke="#000" stroke-width="0.8">{title}</polygon>')

    def render(self) -> str:
        head = ('<?xml version="1.0" encoding="UTF-8"?>\n'
                f'<svg xmlns="http://www.w3.org/2000/svg" version="1.1" '
                f'width="{_f(self.width)}" height="{_f(self.height)}" '
                f'viewBox="0 0 {_f(self.width)} {_f(self.height)}">\n')
        return head + "\n".join(self.parts) + "\n</svg>\n"


def _heatmap(svg: _Svg, values: np.ndarray, x0: float, y0: float, cell: float):
    lo, hi = float(values.min()), float(values.max())
    span = hi - lo
    h, w = values.shape
    for y in range(h):
        for x in range(w):
            t = (values[y, x] - lo) / span if span > 0 else 0.0
            svg.rect(x0 + x * cell, y0 + y * cell, cell, cell, colormap(t), cls="cell")
    return lo, hi


def _colorbar(svg: _Svg, x0, y0, height, lo, hi, steps=32):
    step = height / steps
    for k in range(steps):
        svg.rect(x0, y0 + (steps - 1 - k) * step, 10, step, colormap((k + 0.5) / steps))
    if hi > lo:
        svg.text(x0 + 14, y0 + 8, f"{hi:.4g}", size=9)
        svg.text(x0 + 14, y0 + height, f"{lo:.4g}", size=9)
    else:
        svg.text(x0 + 14, y0 + height / 2, f"constant {lo:.4g}", size=9)


def jitter_offsets(n: int, radius: float) -> list[tuple[float, float]]:
    """Golden-angle spiral offsets for ``n`` markers sharing a cell, all within ``radius``."""
    if n == 1:
        return [(0.0, 0.0)]
    return [(radius * math.sqrt((k + 0.5) / n) * math.cos(k * GOLDEN_ANGLE),
             radius * math.sqrt((k + 0.5) / n) * math.sin(k * GOLDEN_ANGLE)) for k in range(n)]


def plot_som_map(model: SomModel, umatrix: np.ndarray | None, placements: list[Placement],
                 manifest: CorpusManifest, style: PlotStyle | None = None,
                 title: str = "") -> str:
    """Pieces at their best-matching cells over the u-matrix heatmap."""
    umatrix = u_matrix(model) if umatrix is None else np.asarray(umatrix)
    if umatrix.shape != (model.height, model.width):
        raise InconsistentInputs(f"u-matrix shape {umatrix.shape} does not match "
                                 f"{model.height}x{model.width} grid")
    entries = manifest.by_id()
    for p in placements:
        if p.recording_id not in entries:
            raise InconsistentInputs(f"placement {p.recording_id!r} not in manifest")
        if not (0 <= p.cell[0] < model.width and 0 <= p.cell[1] < model.height):
            raise InconsistentInputs(f"placement {p.recording_id!r} outside the grid")
    style = style or PlotStyle.for_manifest(manifest)
    cell = style.cell
    x0, y0 = 20.0, 30.0
    legend_x = x0 + model.width * cell + 50
    ensembles = sorted(style.ensemble_colors)
    height = max(y0 + model.height * cell + 20, y0 + 20 * (len(ensembles) + 3))
    svg = _Svg(legend_x + 200, height)
    if title:
        svg.text(x0, 18, title, size=13)
    lo, hi = _heatmap(svg, umatrix, x0, y0, cell)
    _colorbar(svg, x0 + model.width * cell + 8, y0, model.height * cell, lo, hi)

    groups: dict[tuple, list[Placement]] = {}
    for p in placements:
        groups.setdefault(tuple(p.cell), []).append(p)
    r = cell * 0.18
    for key in sorted(groups):
        group = groups[key]
        cx, cy = x0 + (key[0] + 0.5) * cell, y0 + (key[1] + 0.5) * cell
        for p, (dx, dy) in zip(group, jitter_offsets(len(group), cell / 2 - r - 1)):
            e = entries[p.recording_id]
            color = style.ensemble_colors.get(e.ensemble, "#ffffff")
            svg.marker(style.region_markers[e.region], cx + dx, cy + dy, r, color, p.recording_id)

    svg.add('<g class="legend">')
    for i, name in enumerate(ensembles):
        ly = y0 + 8 + i * 18
        svg.rect(legend_x, ly - 6, 12, 12, style.ensemble_colors[name])
        svg.text(legend_x + 18, ly + 4, name)
    ly = y0 + 8 + len(ensembles) * 18 + 10
    for j, region in enumerate(sorted(style.region_markers)):
        svg.marker(style.region_markers[region], legend_x + 6, ly + j * 18, 6, "#ffffff",
                   cls="legend-marker")
        svg.text(legend_x + 18, ly + j * 18 + 4, region)
    svg.add("</g>")
    return svg.render()


def plot_component_planes(model: SomModel, feature_names=None, title: str = "") -> str:
    """One independently scaled heatmap per weight dimension, with colorbars."""
    planes = component_planes(model, feature_names)
    cell = CELL if model.dim <= 8 else 8.0
    pw, ph = model.width * cell, model.height * cell
    cols = min(len(planes), 4)
    rows = math.ceil(len(planes) / cols)
    gap_x, gap_y = 80.0, 50.0
    svg = _Svg(20 + cols * (pw + gap_x), 30 + rows * (ph + gap_y))
    if title:
        svg.text(20, 16, title, size=13)
    for k, plane in enumerate(planes):
        r, c = divmod(k, cols)
        px, py = 20 + c * (pw + gap_x), 30 + 20 + r * (ph + gap_y)
        svg.add(f'<g class="plane" id="plane{k}">')
        svg.text(px, py - 6, plane.name, size=12, extra=' class="plane-title"')
        lo, hi = _heatmap(svg, plane.values, px, py, cell)
        _colorbar(svg, px + pw + 6, py, ph, lo, hi)
        svg.add("</g>")
    return svg.render()


def plot_scalar_by_ensemble(values: dict, manifest: CorpusManifest, label: str,
                            median_line: bool = True, log_y: bool = False,
                            style: PlotStyle | None = None, title: str = "") -> str:
    """Strip plot: one point per piece, grouped by ensemble, red corpus-median line."""
    entries = manifest.by_id()
    if not values:
        raise MissingValue("no values to plot")
    for rid, v in values.items():
        if rid not in entries:
            raise InconsistentInputs(f"value for unknown id {rid!r}")
        if v is None or not math.isfinite(v) or (log_y and v <= 0):
            raise MissingValue(f"value for {rid!r} is missing or not plottable")
    style = style or PlotStyle.for_manifest(manifest)
    ensembles = sorted({entries[rid].ensemble for rid in values})
    tr = (lambda v: math.log10(v)) if log_y else (lambda v: v)
    ys = [tr(v) for v in values.values()]
    lo, hi = min(ys), max(ys)
    if hi == lo:
        lo, hi = lo - 1.0, hi + 1.0
    pad = 0.05 * (hi - lo)
    lo, hi = lo - pad, hi + pad
    x0, y0, pw, ph, slot = 70.0, 30.0, 0.0, 300.0, 60.0
    pw = slot * len(ensembles)
    svg = _Svg(x0 + pw + 20, y0 + ph + 90)
    if title:
        svg.text(x0, 18, title, size=13)

    def ypix(v):
        return y0 + ph - (tr(v) - lo) / (hi - lo) * ph

    svg.rect(x0, y0, pw, ph, "#ffffff", extra=' stroke="#000"')
    ticks = range(math.floor(lo), math.ceil(hi) + 1) if log_y else np.linspace(lo, hi, 5)
    for t in ticks:
        if lo <= t <= hi:
            yy = y0 + ph - (t - lo) / (hi - lo) * ph
            svg.line(x0 - 4, yy, x0, yy)
            svg.text(x0 - 6, yy + 4, f"1e{int(t)}" if log_y else f"{t:.3g}", size=9, anchor="end")
    svg.text(14, y0 + ph / 2, label, size=11, anchor="middle",
             extra=f' transform="rotate(-90 14 {_f(y0 + ph / 2)})"')
    for i, ens in enumerate(ensembles):
        ids = sorted(rid for rid in values if entries[rid].ensemble == ens)
        cx = x0 + (i + 0.5) * slot
        for j, rid in enumerate(ids):
            dx = (j - (len(ids) - 1) / 2) * min(6.0, (slot - 16) / max(len(ids), 1))
            e = entries[rid]
            svg.marker(style.region_markers[e.region], cx + dx, ypix(values[rid]), 4,
                       style.ensemble_colors.get(ens, "#888888"), rid)
        svg.text(cx, y0 + ph + 14, ens, size=9, anchor="end",
                 extra=f' transform="rotate(-40 {_f(cx)} {_f(y0 + ph + 14)})"')
    if median_line:
        m = median(values.values())
        svg.line(x0, ypix(m), x0 + pw, ypix(m), stroke="#ff0000", width=1.5, cls="median")
        svg.text(x0 + pw - 2, ypix(m) - 4, f"median {m:.4g}", size=9, anchor="end",
                 extra=' fill="#ff0000"')
    return svg.render()


def embed_metadata(svg: str, metadata: dict) -> str:
    """Insert a ``<metadata>`` element holding ``metadata`` as JSON after the root tag."""
    head, sep, rest = svg.partition('">\n')
    blob = escape(json.dumps(metadata, sort_keys=True, separators=(",", ":")))
    return f'{head}{sep}<metadata>{blob}</metadata>\n{rest}'


def figure_name(corpus: str, figure: str, mode: str) -> str:
    return f"{corpus}_{figure}_{mode}.svg"
