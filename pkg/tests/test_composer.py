"""Grid layout geometry, content fidelity and byte determinism."""

from __future__ import annotations

import random

import numpy as np
import pytest
from PIL import Image

from icl_xray.composer import GridLayout, compose_grid, default_layout
from icl_xray.errors import (CapacityError, CompositionError,
                             UnsupportedLayoutError)


def solid(color, size=(40, 40)):
    return Image.new("RGB", size, color)


def test_default_layout_shapes():
    assert (default_layout(1).rows, default_layout(1).cols) == (1, 1)
    assert (default_layout(3).rows, default_layout(3).cols) == (1, 3)
    assert (default_layout(4).rows, default_layout(4).cols) == (3, 2)
    assert (default_layout(9).rows, default_layout(9).cols) == (3, 3)


def test_default_layout_defaults():
    layout = default_layout(3)
    assert (layout.cell_width, layout.cell_height) == (512, 512)
    assert layout.padding == 8
    assert layout.annotation_band_height == 32
    assert layout.background_color == (255, 255, 255)


def test_default_layout_rejects_out_of_range():
    with pytest.raises(UnsupportedLayoutError):
        default_layout(10)
    with pytest.raises(UnsupportedLayoutError):
        default_layout(0)


def test_canvas_dimensions_formula():
    layout = GridLayout(rows=2, cols=3, cell_width=100, cell_height=80,
                        padding=5, annotation_band_height=20)
    assert layout.canvas_width == 3 * 100 + 4 * 5
    assert layout.canvas_height == 2 * (80 + 20) + 3 * 5


def test_single_cell_no_padding_no_band_matches_cell_size():
    layout = GridLayout(rows=1, cols=1, cell_width=64, cell_height=48,
                        padding=0, annotation_band_height=0)
    figure = compose_grid([solid((10, 200, 30), size=(64, 48))], layout)
    assert figure.image.size == (64, 48)
    assert figure.placements[0].box == (0, 0, 64, 48)
    assert figure.annotations == ()  # no band, no caption


def test_nine_images_three_by_three_row_major(paper_dataset):
    items = sorted(paper_dataset.split_items("train"),
                   key=lambda item: item.id)[:9]
    layout = default_layout(9)
    figure = compose_grid(items, layout)
    assert len(figure.placements) == 9
    for idx, placement in enumerate(figure.placements, start=1):
        assert placement.index == idx
        assert placement.box == layout.cell_box(idx)
        assert placement.source_id == items[idx - 1].id
    assert [a.caption for a in figure.annotations] == [
        f"Image {i}" for i in range(1, 10)]


def test_geometry_formula_randomized_cases():
    rng = random.Random(2024)
    for _ in range(100):
        rows = rng.randint(1, 4)
        cols = rng.randint(1, 4)
        pad = rng.randint(0, 12)
        band = rng.choice([0, 16, 32])
        cw, ch = rng.randint(16, 64), rng.randint(16, 64)
        layout = GridLayout(rows=rows, cols=cols, cell_width=cw, cell_height=ch,
                            padding=pad, annotation_band_height=band)
        n = rng.randint(1, rows * cols)
        figure = compose_grid([solid((5, 5, 5), size=(10, 10))] * n, layout)
        assert figure.image.size == (layout.canvas_width, layout.canvas_height)
        boxes = []
        for placement in figure.placements:
            r, c = divmod(placement.index - 1, cols)
            x0 = pad + c * (cw + pad)
            y0 = pad + r * (ch + band + pad)
            assert placement.box == (x0, y0, x0 + cw, y0 + ch)
            assert 0 <= x0 and placement.box[2] <= layout.canvas_width
            assert 0 <= y0 and placement.box[3] <= layout.canvas_height
            boxes.append(placement.box)
        for i, a in enumerate(boxes):
            for b in boxes[i + 1:]:
                disjoint = (a[2] <= b[0] or b[2] <= a[0]
                            or a[3] <= b[1] or b[3] <= a[1])
                assert disjoint


def test_solid_color_probe_center_pixels():
    colors = [(255, 0, 0), (0, 255, 0), (0, 0, 255)]
    layout = default_layout(3)
    figure = compose_grid([solid(c, size=(50, 50)) for c in colors], layout)
    for placement, color in zip(figure.placements, colors):
        x0, y0, x1, y1 = placement.box
        assert figure.image.getpixel(((x0 + x1) // 2, (y0 + y1) // 2)) == color


def test_solid_color_mean_within_one_per_channel():
    colors = [(200, 40, 90), (12, 230, 77), (66, 66, 66), (255, 255, 0)]
    layout = GridLayout(rows=2, cols=2, cell_width=96, cell_height=64)
    sizes = [(30, 60), (60, 30), (96, 64), (13, 47)]  # force letterboxing
    figure = compose_grid(
        [solid(c, size=s) for c, s in zip(colors, sizes)], layout)
    pixels = np.asarray(figure.image, dtype=np.float64)
    for placement, color in zip(figure.placements, colors):
        x0, y0, x1, y1 = placement.content_box
        mean = pixels[y0:y1, x0:x1].mean(axis=(0, 1))
        assert np.all(np.abs(mean - np.array(color)) <= 1.0)


def test_letterbox_preserves_aspect_ratio():
    layout = GridLayout(rows=1, cols=1, cell_width=100, cell_height=100,
                        padding=0, annotation_band_height=0)
    figure = compose_grid([solid((1, 2, 3), size=(200, 100))], layout)
    x0, y0, x1, y1 = figure.placements[0].content_box
    assert (x1 - x0, y1 - y0) == (100, 50)  # 2:1 source fits as 100x50


def test_composition_is_byte_deterministic(paper_dataset):
    items = sorted(paper_dataset.split_items("train"),
                   key=lambda item: item.id)[:6]
    layout = default_layout(6)
    first = compose_grid(items, layout).to_png_bytes()
    second = compose_grid(items, layout).to_png_bytes()
    assert first == second


def test_capacity_error():
    with pytest.raises(CapacityError):
        compose_grid([solid((0, 0, 0))] * 4, GridLayout(rows=1, cols=3))


def test_undecodable_source_names_it(tmp_path):
    bad = tmp_path / "broken.png"
    bad.write_bytes(b"not a png")
    with pytest.raises(CompositionError, match="broken.png"):
        compose_grid([bad], GridLayout(rows=1, cols=1))


def test_empty_sources_rejected():
    with pytest.raises(CompositionError):
        compose_grid([], GridLayout(rows=1, cols=1))
