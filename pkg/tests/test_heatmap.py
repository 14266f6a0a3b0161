"""SVG heatmap rendering."""

import numpy as np
import pytest

from pdnsim.heatmap import _color, heatmap_svg


def test_color_endpoints():
    assert _color(0.0) == "#0000ff"
    assert _color(0.5) == "#ffffff"
    assert _color(1.0) == "#ff0000"
    assert _color(-1.0) == "#0000ff"   # clamped
    assert _color(2.0) == "#ff0000"


def test_heatmap_structure_and_determinism():
    arr = np.array([[1.0, 2.0], [3.0, 4.0]])
    svg = heatmap_svg(arr, title="IR drop")
    assert svg.startswith("<svg") and svg.rstrip().endswith("</svg>")
    assert svg.count("<rect") == 4
    assert "1.000–4.000 mV" in svg
    assert heatmap_svg(arr, title="IR drop") == svg


def test_heatmap_constant_map_uses_midscale():
    svg = heatmap_svg(np.full((2, 2), 7.0))
    assert svg.count('fill="#ffffff"') == 4


def test_heatmap_rejects_empty_map():
    with pytest.raises(ValueError, match="empty"):
        heatmap_svg(np.empty((0, 0)))
