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

import re

import numpy as np
import pretend
import pytest

from lsviucb.errors import OutputError, PlotError
from lsviucb.harness import _svg
from lsviucb.harness._csv import AggregatedTable, write_aggregated_csv


def _table(series=None):
    if series is None:
        series = {
            "lsvi_ucb": (np.array([0.1, 0.15, 0.2]), np.array([0.0, 0.01, 0.02])),
            "random": (np.array([0.5, 1.0, 1.5]), np.array([0.1, 0.1, 0.1])),
        }
    return AggregatedTable(episodes=np.arange(1, 4), series=series)


def _polyline_points(svg, agent):
    match = re.search(rf'<polyline class="series" data-agent="{agent}" points="([^"]*)"', svg)
    return np.array([[float(v) for v in pair.split(",")] for pair in match.group(1).split()])


class TestPlotBounds:
    def test_padding(self):
        bounds = _svg.plot_bounds(_table())
        assert bounds.x_min == pytest.approx(0.9)
        assert bounds.x_max == pytest.approx(3.1)
        assert bounds.y_min == pytest.approx(0.1 - 0.05 * 1.5)
        assert bounds.y_max == pytest.approx(1.6 + 0.05 * 1.5)

    def test_degenerate_span(self):
        table = AggregatedTable(episodes=np.array([4]), series={"a": (np.array([0.0]), np.array([0.0]))})
        assert _svg.plot_bounds(table) == (pytest.approx(3.8), pytest.approx(4.2), -0.05, 0.05)

    def test_mean_only(self):
        bounds = _svg.plot_bounds(_table(), bands=False)
        assert bounds.y_min == pytest.approx(0.1 - 0.05 * 1.4)
        assert bounds.y_max == pytest.approx(1.5 + 0.05 * 1.4)

    def test_empty(self):
        with pytest.raises(PlotError, match="no series to plot"):
            _svg.plot_bounds(_table(series={}))


class TestRenderSvg:
    def test_one_polyline_per_agent(self):
        svg = _svg.render_svg(_table())
        assert svg.startswith("<svg ")
        assert svg.rstrip().endswith("</svg>")
        assert svg.count('class="series"') == 2
        assert svg.count('class="band"') == 2
        assert svg.count('class="axis"') == 2

    def test_without_bands(self):
        svg = _svg.render_svg(_table(), bands=False)
        assert svg.count('class="series"') == 2
        assert 'class="band"' not in svg

    def test_points_stay_inside_the_frame(self):
        svg = _svg.render_svg(_table())
        for agent in ("lsvi_ucb", "random"):
            points = _polyline_points(svg, agent)
            assert points.shape == (3, 2)
            assert np.all((points[:, 0] > 70) & (points[:, 0] < _svg.WIDTH - 150))
            assert np.all((points[:, 1] > 20) & (points[:, 1] < _svg.HEIGHT - 50))

    def test_regret_grows_upward(self):
        points = _polyline_points(_svg.render_svg(_table()), "random")
        assert np.all(np.diff(points[:, 1]) < 0)

    def test_escaping(self):
        table = _table(series={"<a&b>": (np.zeros(3), np.zeros(3))})
        svg = _svg.render_svg(table, title="regret & more")
        assert "<title>regret &amp; more</title>" in svg
        assert 'data-agent="&lt;a&amp;b&gt;"' in svg
        assert "<a&b>" not in svg


class TestEmitPlot:
    def test_writes_svg(self, tmp_path):
        write_aggregated_csv(tmp_path / "aggregated.csv", _table())
        _svg.emit_plot(tmp_path / "aggregated.csv", tmp_path / "regret.svg")
        assert (tmp_path / "regret.svg").read_text().count("<polyline") == 2

    def test_malformed_csv(self, asset, tmp_path):
        with pytest.raises(PlotError) as e:
            _svg.emit_plot(asset("integration/malformed.csv"), tmp_path / "regret.svg")
        assert e.value.row == 3
        assert not (tmp_path / "regret.svg").exists()

    def test_unwritable_destination(self, tmp_path, monkeypatch):
        write_aggregated_csv(tmp_path / "aggregated.csv", _table())
        monkeypatch.setattr(_svg.Path, "write_text", pretend.raiser(PermissionError("denied")))
        with pytest.raises(OutputError, match="unable to write") as e:
            _svg.emit_plot(tmp_path / "aggregated.csv", tmp_path / "regret.svg")
        assert "denied" in e.value.diagnostics()
