"""Deterministic grid montages: tile N images into one annotated figure.

Sources are letterboxed (aspect preserved) into fixed-size cells laid out
row-major, each with an "Image N" caption band underneath. Output encoding
is PNG so identical inputs produce byte-identical figures.
"""

from __future__ import annotations

import hashlib
import io
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence, Union

from PIL import Image, ImageDraw, ImageFont

from .dataset import LabeledImage
from .errors import CapacityError, CompositionError, UnsupportedLayoutError

RGB = tuple[int, int, int]
Box = tuple[int, int, int, int]
Source = Union[LabeledImage, Image.Image, str, Path]

MAX_DEFAULT_IMAGES = 9

_CAPTION_FONT = ImageFont.load_default()  # embedded bitmap font, machine-independent
_CAPTION_HEIGHT = 11
_CAPTION_MARGIN = 2


@dataclass(frozen=True)
class GridLayout:
    rows: int
    cols: int
    cell_width: int = 512
    cell_height: int = 512
    padding: int = 8
    annotation_band_height: int = 32
    background_color: RGB = (255, 255, 255)

    def __post_init__(self) -> None:
        if self.rows < 1 or self.cols < 1:
            raise ValueError("rows and cols must be positive")
        if self.cell_width < 1 or self.cell_height < 1:
            raise ValueError("cell dimensions must be positive")
        if self.padding < 0 or self.annotation_band_height < 0:
            raise ValueError("padding and annotation band must be non-negative")

    @property
    def capacity(self) -> int:
        return self.rows * self.cols

    @property
    def canvas_width(self) -> int:
        return self.cols * self.cell_width + (self.cols + 1) * self.padding

    @property
    def canvas_height(self) -> int:
        return (self.rows * (self.cell_height + self.annotation_band_height)
                + (self.rows + 1) * self.padding)

    def cell_box(self, index: int) -> Box:
        """Image area of 1-based cell ``index``, row-major."""
        if not 1 <= index <= self.capacity:
            raise ValueError(f"cell index {index} outside 1..{self.capacity}")
        row, col = divmod(index - 1, self.cols)
        x0 = self.padding + col * (self.cell_width + self.padding)
        y0 = (self.padding
              + row * (self.cell_height + self.annotation_band_height + self.padding))
        return (x0, y0, x0 + self.cell_width, y0 + self.cell_height)

    def annotation_box(self, index: int) -> Box:
        x0, _, x1, y1 = self.cell_box(index)
        return (x0, y1, x1, y1 + self.annotation_band_height)


@dataclass(frozen=True)
class Placement:
    index: int
    box: Box          # full cell rectangle
    content_box: Box  # letterboxed image area inside the cell
    source_id: str


@dataclass(frozen=True)
class Annotation:
    index: int
    caption: str


@dataclass(frozen=True)
class ComposedFigure:
    image: Image.Image
    layout: GridLayout
    placements: tuple[Placement, ...]
    annotations: tuple[Annotation, ...]

    def to_png_bytes(self) -> bytes:
        buf = io.BytesIO()
        self.image.save(buf, format="PNG", optimize=False)
        return buf.getvalue()

    def digest(self) -> str:
        return hashlib.sha256(self.to_png_bytes()).hexdigest()

    def to_record(self) -> dict:
        return {
            "canvas": [self.layout.canvas_width, self.layout.canvas_height],
            "placements": [
                {"index": p.index, "box": list(p.box),
                 "content_box": list(p.content_box), "source_id": p.source_id}
                for p in self.placements
            ],
            "annotations": [{"index": a.index, "caption": a.caption}
                            for a in self.annotations],
        }


def default_layout(n: int) -> GridLayout:
    """Grid shape for n images: a single row up to 3, then 3 rows up to 9."""
    if n < 1:
        raise UnsupportedLayoutError(f"cannot lay out {n} images")
    if n > MAX_DEFAULT_IMAGES:
        raise UnsupportedLayoutError(
            f"no default layout for {n} images (max {MAX_DEFAULT_IMAGES})")
    if n <= 3:
        return GridLayout(rows=1, cols=n)
    return GridLayout(rows=3, cols=min(3, math.ceil(n / 3)))


def compose_grid(sources: Sequence[Source], layout: GridLayout) -> ComposedFigure:
    """Place each source in its row-major cell and caption it "Image N"."""
    if not sources:
        raise CompositionError("no source images supplied")
    if len(sources) > layout.capacity:
        raise CapacityError(
            f"{len(sources)} images exceed {layout.rows}x{layout.cols} capacity"
            f" ({layout.capacity})")

    canvas = Image.new("RGB", (layout.canvas_width, layout.canvas_height),
                       layout.background_color)
    placements: list[Placement] = []
    annotations: list[Annotation] = []

    for index, source in enumerate(sources, start=1):
        source_id, bitmap = _open_source(source)
        box = layout.cell_box(index)
        content_box = _paste_letterboxed(canvas, bitmap, box, layout.background_color)
        placements.append(Placement(index=index, box=box,
                                    content_box=content_box, source_id=source_id))
        if layout.annotation_band_height >= _CAPTION_HEIGHT + _CAPTION_MARGIN:
            caption = f"Image {index}"
            _paste_caption(canvas, caption, layout.annotation_box(index),
                           layout.background_color)
            annotations.append(Annotation(index=index, caption=caption))

    return ComposedFigure(image=canvas, layout=layout,
                          placements=tuple(placements),
                          annotations=tuple(annotations))


def _open_source(source: Source) -> tuple[str, Image.Image]:
    if isinstance(source, Image.Image):
        return getattr(source, "source_id", "bitmap"), source.convert("RGB")
    if isinstance(source, LabeledImage):
        source_id, path = source.id, source.path
    else:
        path = Path(source)
        source_id = path.name
    try:
        with Image.open(path) as im:
            return source_id, im.convert("RGB")
    except Exception as exc:
        raise CompositionError(
            f"cannot decode source {source_id!r}: {type(exc).__name__}") from exc


def _paste_letterboxed(canvas: Image.Image, bitmap: Image.Image,
                       box: Box, background: RGB) -> Box:
    x0, y0, x1, y1 = box
    cell_w, cell_h = x1 - x0, y1 - y0
    scale = min(cell_w / bitmap.width, cell_h / bitmap.height)
    new_w = max(1, min(cell_w, round(bitmap.width * scale)))
    new_h = max(1, min(cell_h, round(bitmap.height * scale)))
    fitted = bitmap.resize((new_w, new_h), Image.Resampling.LANCZOS)
    off_x = x0 + (cell_w - new_w) // 2
    off_y = y0 + (cell_h - new_h) // 2
    canvas.paste(fitted, (off_x, off_y))
    return (off_x, off_y, off_x + new_w, off_y + new_h)


def _paste_caption(canvas: Image.Image, caption: str, box: Box,
                   background: RGB) -> None:
    # text is drawn on a band-sized tile and pasted, so it can never bleed
    # into neighbouring cells whatever the font metrics are
    x0, y0, x1, y1 = box
    band = Image.new("RGB", (x1 - x0, y1 - y0), background)
    draw = ImageDraw.Draw(band)
    y_text = max(0, (band.height - _CAPTION_HEIGHT) // 2)
    draw.text((_CAPTION_MARGIN, y_text), caption, fill=(0, 0, 0), font=_CAPTION_FONT)
    canvas.paste(band, (x0, y0))
