#!/usr/bin/env python3
"""Compose annotated grid figures: a 1x3 strip and a full 3x3 montage.

Outputs land in ./demo_output/figures; open the PNGs to see the "Image N"
caption bands used by the figure-combining prompt strategies.
"""

from pathlib import Path

from PIL import Image

from icl_xray import compose_grid, default_layout

OUT = Path(__file__).parent / "demo_output" / "figures"


def gradient(shade: int, size=(120, 160)) -> Image.Image:
    img = Image.new("RGB", size)
    for y in range(size[1]):
        for x in range(size[0]):
            img.putpixel((x, y), (shade, (x * 2) % 256, (y * 2) % 256))
    return img


def main() -> None:
    OUT.mkdir(parents=True, exist_ok=True)

    strip = compose_grid([gradient(s) for s in (40, 130, 220)], default_layout(3))
    strip_path = OUT / "strip_1x3.png"
    strip_path.write_bytes(strip.to_png_bytes())
    print(f"wrote {strip_path} ({strip.image.size[0]}x{strip.image.size[1]})")

    montage = compose_grid([gradient(20 * i, size=(90 + 10 * i, 140))
                            for i in range(1, 10)], default_layout(9))
    montage_path = OUT / "montage_3x3.png"
    montage_path.write_bytes(montage.to_png_bytes())
    print(f"wrote {montage_path} ({montage.image.size[0]}x{montage.image.size[1]})")

    print("\nplacements (index -> cell box):")
    for placement in montage.placements:
        print(f"  Image {placement.index}: {placement.box}")

    print("\nbyte-determinism check:",
          compose_grid([gradient(40)], default_layout(1)).to_png_bytes()
          == compose_grid([gradient(40)], default_layout(1)).to_png_bytes())


if __name__ == "__main__":
    main()
