"""Deterministic raster rendering of scenes, belief maps, and trajectories.

Output is binary PPM (P6) so golden-file tests compare bytes directly; an
optional PNG conversion is available when Pillow is installed.
"""

from __future__ import annotations

from .dataio import DataFormatError, rle_decode
from .episode import EpisodeResult
from .scene import FREE, Scene

LAYERS = ("occupancy", "semantic", "regions", "masked", "trajectory")

_COLOR_FREE = (230, 230, 230)
_COLOR_OCCUPIED = (40, 40, 40)
_COLOR_TRAJECTORY = (220, 30, 30)
_COLOR_START = (30, 180, 30)
_COLOR_END = (30, 60, 220)

# fixed palette cycled by region id
_REGION_PALETTE = (
    (166, 206, 227), (31, 120, 180), (178, 223, 138), (51, 160, 44),
    (251, 154, 153), (227, 26, 28), (253, 191, 111), (255, 127, 0),
    (202, 178, 214), (106, 61, 154), (255, 255, 153), (177, 89, 40),
)


def _heat(v: float) -> tuple[int, int, int]:
    v = min(1.0, max(0.0, v))
    return (int(round(255 * v)), int(round(64 * v)), int(round(255 * (1.0 - v))))


class _Canvas:
    def __init__(self, width: int, height: int, scale: int):
        self.w = width * scale
        self.h = height * scale
        self.scale = scale
        self.buf = bytearray(self.w * self.h * 3)

    def fill_cell(self, x: int, y: int, color) -> None:
        s = self.scale
        r, g, b = color
        for py in range(y * s, (y + 1) * s):
            base = (py * self.w + x * s) * 3
            for px in range(s):
                o = base + px * 3
                self.buf[o] = r
                self.buf[o + 1] = g
                self.buf[o + 2] = b

    def set_pixel(self, px: int, py: int, color) -> None:
        if 0 <= px < self.w and 0 <= py < self.h:
            o = (py * self.w + px) * 3
            self.buf[o], self.buf[o + 1], self.buf[o + 2] = color

    def draw_line(self, x0: int, y0: int, x1: int, y1: int, color) -> None:
        dx = abs(x1 - x0)
        dy = -abs(y1 - y0)
        sx = 1 if x0 < x1 else -1
        sy = 1 if y0 < y1 else -1
        err = dx + dy
        while True:
            self.set_pixel(x0, y0, color)
            if x0 == x1 and y0 == y1:
                return
            e2 = 2 * err
            if e2 >= dy:
                err += dy
                x0 += sx
            if e2 <= dx:
                err += dx
                y0 += sy

    def fill_square(self, px: int, py: int, half: int, color) -> None:
        for y in range(py - half, py + half + 1):
            for x in range(px - half, px + half + 1):
                self.set_pixel(x, y, color)

    def to_ppm(self) -> bytes:
        return b"P6\n%d %d\n255\n" % (self.w, self.h) + bytes(self.buf)


def _base_occupancy(scene: Scene, scale: int) -> _Canvas:
    canvas = _Canvas(scene.width, scene.height, scale)
    for y in range(scene.height):
        for x in range(scene.width):
            color = _COLOR_FREE if scene.occupancy[y, x] == FREE else _COLOR_OCCUPIED
            canvas.fill_cell(x, y, color)
    return canvas


def _grid_from_snapshot(maps: dict, key: str, scene: Scene) -> list:
    if maps.get("width") != scene.width or maps.get("height") != scene.height:
        raise DataFormatError("trace map snapshot does not match the scene dimensions")
    runs = maps[key] if key != "masked" else maps["masked"]["values"]
    if key == "regions":
        runs = maps["regions"]["ids"]
    return rle_decode(runs, scene.width * scene.height)


def render_layer(scene: Scene, result: EpisodeResult | None, layer: str,
                 scale: int = 8) -> bytes:
    """Render one layer to PPM bytes; identical inputs give identical bytes."""
    if layer not in LAYERS:
        raise ValueError(f"unknown layer {layer!r}; expected one of {', '.join(LAYERS)}")
    if scale < 1:
        raise ValueError("scale must be >= 1")
    canvas = _base_occupancy(scene, scale)
    if layer == "occupancy":
        return canvas.to_ppm()
    if layer in ("semantic", "masked"):
        maps = result.maps if result else {}
        if maps:
            values = _grid_from_snapshot(maps, "semantic" if layer == "semantic" else "masked",
                                         scene)
            for y in range(scene.height):
                for x in range(scene.width):
                    if scene.occupancy[y, x] == FREE:
                        canvas.fill_cell(x, y, _heat(values[y * scene.width + x]))
        return canvas.to_ppm()
    if layer == "regions":
        maps = result.maps if result else {}
        if maps:
            ids = _grid_from_snapshot(maps, "regions", scene)
            for y in range(scene.height):
                for x in range(scene.width):
                    rid = ids[y * scene.width + x]
                    if rid > 0:
                        canvas.fill_cell(x, y, _REGION_PALETTE[(rid - 1) % len(_REGION_PALETTE)])
        return canvas.to_ppm()
    # trajectory
    if result is not None and result.records:
        points = []
        for rec in result.records:
            points.extend(rec.path)
        pix = [(int(x / scene.resolution * scale), int(y / scene.resolution * scale))
               for x, y in points]
        for (x0, y0), (x1, y1) in zip(pix, pix[1:]):
            canvas.draw_line(x0, y0, x1, y1, _COLOR_TRAJECTORY)
        half = max(1, scale // 3)
        canvas.fill_square(pix[0][0], pix[0][1], half, _COLOR_START)
        canvas.fill_square(pix[-1][0], pix[-1][1], half, _COLOR_END)
    return canvas.to_ppm()


def write_image(data: bytes, path: str, png: bool = False) -> None:
    """Write PPM bytes, or convert to PNG (requires Pillow)."""
    if not png:
        with open(path, "wb") as fh:
            fh.write(data)
        return
    import io

    from PIL import Image

    Image.open(io.BytesIO(data)).save(path, format="PNG")
