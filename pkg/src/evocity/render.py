"""Deterministic raster rendering of a city genome.

Images are plain (height, width, 3) uint8 arrays.  The isometric view
projects each grid cell to a 2:1 diamond position and extrudes buildings
into flat-topped prisms, painted back to front one anti-diagonal at a time
(cells on one anti-diagonal occupy disjoint pixel columns, so a whole
diagonal is composited in a single masked write).  Rendering is a pure
function of (genome, view); the PNG encoder uses a fixed filter and
compression level so the bytes are stable too.
"""

from __future__ import annotations

import hashlib
import struct
import zlib
from dataclasses import dataclass, field

import numpy as np

from .genome import (
    BUILDING_CYLINDER,
    BUILDING_NONE,
    STREET,
    WATER,
    CityGenome,
)

PROJECTION_TOP_DOWN = "TopDown"
PROJECTION_ISOMETRIC = "Isometric"


@dataclass(frozen=True)
class Palette:
    water: tuple[int, int, int] = (58, 120, 189)
    land: tuple[int, int, int] = (104, 156, 92)
    street: tuple[int, int, int] = (72, 72, 78)
    building_low: tuple[int, int, int] = (176, 173, 163)
    building_high: tuple[int, int, int] = (232, 98, 62)
    cylinder_cap: tuple[int, int, int] = (214, 205, 188)
    centre: tuple[int, int, int] = (247, 214, 84)
    background: tuple[int, int, int] = (24, 26, 32)

    @classmethod
    def from_json_dict(cls, d: dict) -> Palette:
        fields = {k: tuple(int(c) for c in v) for k, v in d.items()}
        return cls(**fields)


@dataclass(frozen=True)
class ViewConfig:
    image_width: int = 480
    image_height: int = 270
    projection: str = PROJECTION_ISOMETRIC
    palette: Palette = field(default_factory=Palette)
    ramp_max_height: int = 60

    def __post_init__(self) -> None:
        if self.image_width <= 0 or self.image_height <= 0:
            raise ValueError("image dimensions must be positive")
        if self.projection not in (PROJECTION_TOP_DOWN, PROJECTION_ISOMETRIC):
            raise ValueError(f"unknown projection {self.projection!r}")


def _cell_colors(g: CityGenome, v: ViewConfig) -> tuple[np.ndarray, np.ndarray]:
    """(top, side) RGB color per cell, with the height ramp applied."""
    pal = v.palette
    h, w = g.ground.shape
    top = np.empty((h, w, 3), dtype=np.float32)
    top[:] = pal.land
    top[g.ground == WATER] = pal.water
    top[g.streets == STREET] = pal.street

    occupied = g.buildings != BUILDING_NONE
    t = np.clip(g.heightmap / max(v.ramp_max_height, 1), 0.0, 1.0)[..., None]
    lo = np.array(pal.building_low, dtype=np.float32)
    hi = np.array(pal.building_high, dtype=np.float32)
    ramp = lo + (hi - lo) * t
    top[occupied] = ramp[occupied]
    top[g.city == 1] = pal.centre

    side = top * 0.55
    return top, side


def render_genome(g: CityGenome, v: ViewConfig | None = None) -> np.ndarray:
    """Render a genome to an RGB8 buffer (deterministic)."""
    v = v or ViewConfig()
    if v.projection == PROJECTION_TOP_DOWN:
        return _render_top_down(g, v)
    return _render_isometric(g, v)


def _render_top_down(g: CityGenome, v: ViewConfig) -> np.ndarray:
    h, w = g.ground.shape
    top, _ = _cell_colors(g, v)
    scale = max(1, min(v.image_width // w, v.image_height // h))
    tiles = np.repeat(np.repeat(top, scale, axis=0), scale, axis=1)
    img = np.empty((v.image_height, v.image_width, 3), dtype=np.uint8)
    img[:] = v.palette.background
    ph, pw = min(tiles.shape[0], v.image_height), min(tiles.shape[1], v.image_width)
    y0 = (v.image_height - ph) // 2
    x0 = (v.image_width - pw) // 2
    img[y0:y0 + ph, x0:x0 + pw] = tiles[:ph, :pw].astype(np.uint8)
    return img


def _render_isometric(g: CityGenome, v: ViewConfig) -> np.ndarray:
    gh, gw = g.ground.shape
    diag = gw + gh
    sx = int(np.clip((v.image_width - 4) // diag, 1, 16))
    sy = max(1, sx // 2)
    tw = 2 * sx       # tile width in px
    th = 2 * sy       # tile height in px
    hz = max(1, (v.image_height - (diag - 2) * sy - th - 8) // max(v.ramp_max_height, 1))

    span_x = (diag - 2) * sx + tw
    span_y = (diag - 2) * sy + th + v.ramp_max_height * hz
    x_left = max(0, (v.image_width - span_x) // 2)
    y_top = max(0, (v.image_height - span_y) // 2)
    ox = x_left + (gh - 1) * sx
    oy = y_top + v.ramp_max_height * hz

    top, side = _cell_colors(g, v)
    top8 = top.astype(np.uint8)
    side8 = side.astype(np.uint8)
    heights = np.where(g.buildings != BUILDING_NONE, g.heightmap, 0).astype(np.int32)
    is_cyl = g.buildings == BUILDING_CYLINDER

    img = np.empty((v.image_height, v.image_width, 3), dtype=np.uint8)
    img[:] = v.palette.background

    inset = sx // 2 if sx > 1 else 0
    H, W = v.image_height, v.image_width

    for d in range(diag - 1):  # back to front
        i_lo = max(0, d - gw + 1)
        i_hi = min(gh - 1, d)
        # ascending x: i descends along the diagonal
        ii = np.arange(i_hi, i_lo - 1, -1)
        jj = d - ii
        k = len(ii)
        base_y = oy + d * sy
        x_lo = ox + int(jj[0] - ii[0]) * sx

        # Base band: ground tile for flat cells, prism foot for built ones.
        hcol = heights[ii, jj] * hz
        built = hcol > 0
        colors = np.where(built[:, None], side8[ii, jj], top8[ii, jj])
        band = np.broadcast_to(
            colors[None, :, None, :], (th, k, tw, 3)
        ).reshape(th, k * tw, 3)
        ya, yb = max(0, base_y), min(H, base_y + th)
        xa, xb = max(0, x_lo), min(W, x_lo + k * tw)
        if yb > ya and xb > xa:
            img[ya:yb, xa:xb] = band[ya - base_y:yb - base_y, xa - x_lo:xb - x_lo]

        # Prism columns above the band, one small write per face.
        for t in np.nonzero(built)[0]:
            i, j = int(ii[t]), int(jj[t])
            x0 = x_lo + t * tw
            top_y = base_y - int(hcol[t])
            cxa, cxb = max(0, x0), min(W, x0 + tw)
            if cxb <= cxa:
                continue
            fya, fyb = max(0, top_y), min(H, top_y + th)
            if fyb > fya:
                if is_cyl[i, j] and inset:  # inset cap reads as a rounded top
                    txa, txb = max(cxa, x0 + inset), min(cxb, x0 + tw - inset)
                    if txb > txa:
                        img[fya:fyb, txa:txb] = top8[i, j]
                else:
                    img[fya:fyb, cxa:cxb] = top8[i, j]
            sya, syb = max(0, top_y + th), min(H, base_y)
            if syb > sya:
                img[sya:syb, cxa:cxb] = side8[i, j]
    return img


def render_hash(img: np.ndarray) -> str:
    """Content hash of a render (shape plus raw pixels)."""
    h = hashlib.sha256()
    h.update(struct.pack(">III", img.shape[0], img.shape[1], img.shape[2]))
    h.update(np.ascontiguousarray(img).tobytes())
    return h.hexdigest()


# ----------------------------------------------------------------------
# PNG encoding
# ----------------------------------------------------------------------

PNG_SIGNATURE = bytes((137, 80, 78, 71, 13, 10, 26, 10))
_PNG_COMPRESS_LEVEL = 6  # fixed so output bytes are reproducible


def _chunk(tag: bytes, payload: bytes) -> bytes:
    return (
        struct.pack(">I", len(payload))
        + tag
        + payload
        + struct.pack(">I", zlib.crc32(tag + payload) & 0xFFFFFFFF)
    )


def encode_png(img: np.ndarray) -> bytes:
    """Encode an RGB8 buffer as a non-interlaced PNG (filter 0, fixed level)."""
    if img.ndim != 3 or img.shape[2] != 3:
        raise ValueError(f"expected (h, w, 3) RGB image, got shape {img.shape}")
    h, w = img.shape[:2]
    if h == 0 or w == 0:
        raise ValueError("cannot encode a zero-dimension image")
    data = np.ascontiguousarray(img, dtype=np.uint8)
    raw = np.zeros((h, 1 + w * 3), dtype=np.uint8)
    raw[:, 1:] = data.reshape(h, w * 3)
    ihdr = struct.pack(">IIBBBBB", w, h, 8, 2, 0, 0, 0)
    idat = zlib.compress(raw.tobytes(), _PNG_COMPRESS_LEVEL)
    return (
        PNG_SIGNATURE
        + _chunk(b"IHDR", ihdr)
        + _chunk(b"IDAT", idat)
        + _chunk(b"IEND", b"")
    )
