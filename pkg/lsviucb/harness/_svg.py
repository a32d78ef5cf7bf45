# Copyright 2026 The lsviucb Authors
#
# Licensed under the Apache License, Version 2.0 (the "License");
# you may not use this file except in compliance with the License.
# You may obtain a copy of the License at
#
#      http://www.apache.org/licenses/LICENSE-2.0
#
# Unless required by applicable law or agreed to in writing, software
# distributed under the License is distributed on an "AS IS" BASIS,
# WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
# See the License for the specific language governing permissions and
# limitations under the License.

"""
Static SVG line charts of aggregated regret.
"""

from __future__ import annotations

import html
import logging
from pathlib import Path
from typing import List, NamedTuple, Union

import numpy as np

from lsviucb.errors import OutputError, PlotError
from lsviucb.harness._csv import AggregatedTable, read_aggregated_csv

_logger = logging.getLogger(__name__)

WIDTH = 720
HEIGHT = 440
PADDING = 0.05

_MARGIN_LEFT = 70
_MARGIN_RIGHT = 150
_MARGIN_TOP = 20
_MARGIN_BOTTOM = 50
_TICKS = 5

_PALETTE = ("#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b")


class PlotBounds(NamedTuple):
    """
    The data-space rectangle an SVG chart shows.
    """

    x_min: float
    x_max: float
    y_min: float
    y_max: float


def _padded(lo: float, hi: float) -> tuple[float, float]:
    span = hi - lo
    if span == 0.0:
        span = abs(lo) or 1.0
    return lo - PADDING * span, hi + PADDING * span


def plot_bounds(table: AggregatedTable, *, bands: bool = True) -> PlotBounds:
    """
    The data bounds of what a chart of `table` draws, padded by 5% of their
    span on every side. The one-standard-deviation bands count only when
    `bands` is set.
    """
    if not table.series:
        raise PlotError("no series to plot")
    width = 1.0 if bands else 0.0
    lows = [np.min(mean - width * std) for mean, std in table.series.values()]
    highs = [np.max(mean + width * std) for mean, std in table.series.values()]
    x_min, x_max = _padded(float(table.episodes.min()), float(table.episodes.max()))
    y_min, y_max = _padded(float(min(lows)), float(max(highs)))
    return PlotBounds(x_min, x_max, y_min, y_max)


class _Frame:
    def __init__(self, bounds: PlotBounds) -> None:
        self.bounds = bounds
        self.left = _MARGIN_LEFT
        self.right = WIDTH - _MARGIN_RIGHT
        self.top = _MARGIN_TOP
        self.bottom = HEIGHT - _MARGIN_BOTTOM

    def x(self, value: np.ndarray) -> np.ndarray:
        b = self.bounds
        return self.left + (value - b.x_min) / (b.x_max - b.x_min) * (self.right - self.left)

    def y(self, value: np.ndarray) -> np.ndarray:
        b = self.bounds
        return self.bottom - (value - b.y_min) / (b.y_max - b.y_min) * (self.bottom - self.top)


def _points(xs: np.ndarray, ys: np.ndarray) -> str:
    return " ".join(f"{x:.2f},{y:.2f}" for x, y in zip(xs, ys))


def render_svg(table: AggregatedTable, *, title: str = "cumulative regret", bands: bool = True) -> str:
    """
    Renders one polyline per agent, over a shaded band of one standard
    deviation unless `bands` is unset.
    """
    bounds = plot_bounds(table, bands=bands)
    frame = _Frame(bounds)
    xs = frame.x(table.episodes.astype(float))

    parts: List[str] = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" '
        f'viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="11">',
        f"<title>{html.escape(title)}</title>",
        f'<rect width="{WIDTH}" height="{HEIGHT}" fill="white"/>',
        f'<line class="axis" x1="{frame.left}" y1="{frame.bottom}" x2="{frame.right}" y2="{frame.bottom}" stroke="black"/>',
        f'<line class="axis" x1="{frame.left}" y1="{frame.top}" x2="{frame.left}" y2="{frame.bottom}" stroke="black"/>',
    ]

    for value in np.linspace(bounds.x_min, bounds.x_max, _TICKS):
        x = float(frame.x(value))
        parts.append(f'<line x1="{x:.2f}" y1="{frame.bottom}" x2="{x:.2f}" y2="{frame.bottom + 4}" stroke="black"/>')
        parts.append(f'<text x="{x:.2f}" y="{frame.bottom + 16}" text-anchor="middle">{value:.4g}</text>')
    for value in np.linspace(bounds.y_min, bounds.y_max, _TICKS):
        y = float(frame.y(value))
        parts.append(f'<line x1="{frame.left - 4}" y1="{y:.2f}" x2="{frame.left}" y2="{y:.2f}" stroke="black"/>')
        parts.append(f'<text x="{frame.left - 6}" y="{y + 4:.2f}" text-anchor="end">{value:.4g}</text>')

    parts.append(
        f'<text x="{(frame.left + frame.right) / 2:.2f}" y="{HEIGHT - 12}" text-anchor="middle">episode</text>'
    )
    parts.append(
        f'<text x="16" y="{(frame.top + frame.bottom) / 2:.2f}" text-anchor="middle" '
        f'transform="rotate(-90 16 {(frame.top + frame.bottom) / 2:.2f})">{html.escape(title)}</text>'
    )

    for i, (agent, (mean, std)) in enumerate(table.series.items()):
        color = _PALETTE[i % len(_PALETTE)]
        if bands:
            upper = frame.y(mean + std)
            lower = frame.y(mean - std)
            band = _points(np.concatenate([xs, xs[::-1]]), np.concatenate([upper, lower[::-1]]))
            parts.append(
                f'<polygon class="band" data-agent="{html.escape(agent)}" points="{band}" '
                f'fill="{color}" fill-opacity="0.2" stroke="none"/>'
            )
        parts.append(
            f'<polyline class="series" data-agent="{html.escape(agent)}" points="{_points(xs, frame.y(mean))}" '
            f'fill="none" stroke="{color}" stroke-width="1.5"/>'
        )
        legend_y = frame.top + 16 * (i + 1)
        parts.append(
            f'<rect x="{frame.right + 12}" y="{legend_y - 9}" width="10" height="10" fill="{color}"/>'
        )
        parts.append(f'<text x="{frame.right + 28}" y="{legend_y}">{html.escape(agent)}</text>')

    parts.append("</svg>")
    return "\n".join(parts) + "\n"


def emit_plot(csv_path: Union[str, Path], svg_path: Union[str, Path], *, bands: bool = True) -> None:
    """
    Plots the aggregated regret CSV at `csv_path` into `svg_path`, with
    standard-deviation bands when `bands` is set.

    Raises `PlotError` for a malformed CSV, with the offending row where
    there is one.
    """
    svg = render_svg(read_aggregated_csv(csv_path), bands=bands)
    try:
        Path(svg_path).write_text(svg)
    except OSError as e:
        raise OutputError(f"unable to write {svg_path}") from e
    _logger.info(f"wrote {svg_path}")
