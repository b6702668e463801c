"""2.5D elevation maps: storage, file I/O and height-sample queries.

Heights live in a ``(rows, cols)`` float array indexed ``[iy, ix]`` with NaN
marking missing cells.  ``origin`` is the world position of the center of
cell ``(0, 0)``, which is the south-west corner of the grid; ``iy`` grows
northwards.  Height samples are returned as ``(N, 3)`` arrays of ``x, y, z``
rows.
"""
from __future__ import annotations

import math
import os
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np


class MapFormatError(ValueError):
    """Raised when a map file cannot be parsed."""


class DegenerateEdgeError(ValueError):
    pass


_EMPTY = np.empty((0, 3))


@dataclass(frozen=True, eq=False)
class ElevationMap:
    heights: np.ndarray
    resolution: float
    origin: tuple[float, float] = (0.0, 0.0)
    _valid: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        h = np.array(self.heights, dtype=np.float64, copy=True)
        if h.ndim != 2 or h.shape[0] < 1 or h.shape[1] < 1:
            raise ValueError(f"heights must be a non-empty 2D grid, got shape {h.shape}")
        if not (self.resolution > 0 and math.isfinite(self.resolution)):
            raise ValueError(f"resolution must be positive, got {self.resolution}")
        h[~np.isfinite(h)] = np.nan
        h.setflags(write=False)
        valid = ~np.isnan(h)
        valid.setflags(write=False)
        object.__setattr__(self, "heights", h)
        object.__setattr__(self, "resolution", float(self.resolution))
        object.__setattr__(self, "origin", (float(self.origin[0]), float(self.origin[1])))
        object.__setattr__(self, "_valid", valid)

    @property
    def width_cells(self) -> int:
        return self.heights.shape[1]

    @property
    def height_cells(self) -> int:
        return self.heights.shape[0]

    @property
    def missing(self) -> np.ndarray:
        return ~self._valid

    @property
    def extent(self) -> tuple[float, float, float, float]:
        """``(xmin, xmax, ymin, ymax)`` of the covered area (cell edges)."""
        ox, oy = self.origin
        r = self.resolution
        return (ox - r / 2, ox + (self.width_cells - 0.5) * r,
                oy - r / 2, oy + (self.height_cells - 0.5) * r)

    def cell_center(self, ix, iy):
        ox, oy = self.origin
        return ox + np.asarray(ix) * self.resolution, oy + np.asarray(iy) * self.resolution

    def world_to_cell(self, x, y):
        ox, oy = self.origin
        ix = np.rint((np.asarray(x) - ox) / self.resolution).astype(np.int64)
        iy = np.rint((np.asarray(y) - oy) / self.resolution).astype(np.int64)
        return ix, iy

    def in_bounds(self, x, y) -> bool:
        ix, iy = self.world_to_cell(x, y)
        return bool(0 <= ix < self.width_cells and 0 <= iy < self.height_cells)

    def height_at(self, x, y) -> float:
        """Height of the cell containing ``(x, y)``; NaN if missing or off-map."""
        ix, iy = self.world_to_cell(x, y)
        if 0 <= ix < self.width_cells and 0 <= iy < self.height_cells:
            return float(self.heights[iy, ix])
        return math.nan

    def with_heights(self, heights) -> "ElevationMap":
        return ElevationMap(heights, self.resolution, self.origin)

    def _window(self, cx, cy, rx, ry):
        ox, oy = self.origin
        r = self.resolution
        ix0 = max(int(math.floor((cx - rx - ox) / r)), 0)
        ix1 = min(int(math.ceil((cx + rx - ox) / r)), self.width_cells - 1)
        iy0 = max(int(math.floor((cy - ry - oy) / r)), 0)
        iy1 = min(int(math.ceil((cy + ry - oy) / r)), self.height_cells - 1)
        if ix0 > ix1 or iy0 > iy1:
            return None
        ix = np.arange(ix0, ix1 + 1)
        iy = np.arange(iy0, iy1 + 1)
        xs = ox + ix * r
        ys = oy + iy * r
        return iy0, iy1, ix0, ix1, xs[None, :], ys[:, None]


def heights_in_disk(emap: ElevationMap, center, radius: float) -> np.ndarray:
    """Non-missing samples whose cell centers lie within ``radius`` of ``center``."""
    if radius <= 0:
        raise ValueError("radius must be positive")
    cx, cy = float(center[0]), float(center[1])
    win = emap._window(cx, cy, radius, radius)
    if win is None:
        return _EMPTY.copy()
    iy0, iy1, ix0, ix1, xs, ys = win
    dx = xs - cx
    dy = ys - cy
    z = emap.heights[iy0:iy1 + 1, ix0:ix1 + 1]
    inside = (dx * dx + dy * dy <= radius * radius) & emap._valid[iy0:iy1 + 1, ix0:ix1 + 1]
    X, Y = np.broadcast_arrays(xs, ys)
    return np.column_stack((X[inside], Y[inside], z[inside]))


def ellipse_axes(p_i, p_j, lateral_halfwidth: float):
    """Center, unit edge direction and semi-axes of the edge region."""
    dx = float(p_j[0]) - float(p_i[0])
    dy = float(p_j[1]) - float(p_i[1])
    d = math.hypot(dx, dy)
    center = (0.5 * (float(p_i[0]) + float(p_j[0])), 0.5 * (float(p_i[1]) + float(p_j[1])))
    return center, (dx / d if d > 0 else 0.0, dy / d if d > 0 else 0.0), 0.5 * d + lateral_halfwidth, lateral_halfwidth, d


def heights_in_ellipse(emap: ElevationMap, p_i, p_j, lateral_halfwidth: float) -> np.ndarray:
    """Non-missing samples inside the ellipse spanning the edge ``p_i -> p_j``.

    The ellipse is centered at the xy midpoint with its major axis along the
    edge.  The semi-major axis is half the edge length padded by
    ``lateral_halfwidth`` so both endpoint regions contribute samples; the
    semi-minor axis is ``lateral_halfwidth``.
    """
    (cx, cy), (ux, uy), a, b, d = ellipse_axes(p_i, p_j, lateral_halfwidth)
    if d < emap.resolution:
        raise DegenerateEdgeError(
            f"edge xy length {d:.4g} is below the map resolution {emap.resolution}")
    win = emap._window(cx, cy, a, a)
    if win is None:
        return _EMPTY.copy()
    iy0, iy1, ix0, ix1, xs, ys = win
    dx = xs - cx
    dy = ys - cy
    s = (dx * ux + dy * uy) / a
    t = (dy * ux - dx * uy) / b
    z = emap.heights[iy0:iy1 + 1, ix0:ix1 + 1]
    inside = (s * s + t * t <= 1.0) & emap._valid[iy0:iy1 + 1, ix0:ix1 + 1]
    X, Y = np.broadcast_arrays(xs, ys)
    return np.column_stack((X[inside], Y[inside], z[inside]))


def median_height(samples) -> float:
    """Median z; the mean of the two central values for even counts."""
    z = np.asarray(samples, dtype=np.float64)
    if z.ndim == 2:
        z = z[:, 2]
    if z.size == 0:
        raise ValueError("median of an empty sample set")
    return float(np.median(z))


# -- file formats -----------------------------------------------------------

_ASCII_KEYS = ("ncols", "nrows", "xllcorner", "yllcorner", "cellsize", "nodata_value")


def _parse_number(key, text, kind=float):
    try:
        return kind(text)
    except ValueError:
        raise MapFormatError(f"{key}: cannot parse {text!r}") from None


def load_ascii_grid(path) -> ElevationMap:
    with open(path, "r", encoding="ascii") as fh:
        lines = fh.read().split("\n")
    header = {}
    i = 0
    while i < len(lines):
        parts = lines[i].split()
        if not parts:
            i += 1
            continue
        key = parts[0].lower()
        if key in _ASCII_KEYS or key in ("xllcenter", "yllcenter"):
            if len(parts) != 2:
                raise MapFormatError(f"{key}: expected one value")
            header[key] = parts[1]
            i += 1
        else:
            break
    for key in ("ncols", "nrows", "cellsize"):
        if key not in header:
            raise MapFormatError(f"{key}: missing from header")
    ncols = _parse_number("ncols", header["ncols"], int)
    nrows = _parse_number("nrows", header["nrows"], int)
    if ncols < 1 or nrows < 1:
        raise MapFormatError(f"ncols/nrows: grid size must be positive, got {ncols}x{nrows}")
    cellsize = _parse_number("cellsize", header["cellsize"])
    if not cellsize > 0:
        raise MapFormatError(f"cellsize: must be positive, got {cellsize}")
    if "xllcenter" in header:
        ox = _parse_number("xllcenter", header["xllcenter"])
    elif "xllcorner" in header:
        ox = _parse_number("xllcorner", header["xllcorner"]) + cellsize / 2
    else:
        raise MapFormatError("xllcorner: missing from header")
    if "yllcenter" in header:
        oy = _parse_number("yllcenter", header["yllcenter"])
    elif "yllcorner" in header:
        oy = _parse_number("yllcorner", header["yllcorner"]) + cellsize / 2
    else:
        raise MapFormatError("yllcorner: missing from header")
    nodata = header.get("nodata_value")
    tokens = " ".join(lines[i:]).split()
    if len(tokens) != ncols * nrows:
        raise MapFormatError(f"data: expected {ncols * nrows} values, found {len(tokens)}")
    grid = np.empty(len(tokens))
    for k, tok in enumerate(tokens):
        if nodata is not None and (tok == nodata or _same_number(tok, nodata)):
            grid[k] = np.nan
            continue
        try:
            grid[k] = float(tok)
        except ValueError:
            grid[k] = np.nan
    # file rows run north to south
    heights = grid.reshape(nrows, ncols)[::-1]
    return ElevationMap(heights, cellsize, (ox, oy))


def _same_number(a, b):
    try:
        return float(a) == float(b)
    except ValueError:
        return False


NODATA = -9999


def save_ascii_grid(emap: ElevationMap, path) -> None:
    """Write an ESRI-style ASCII grid; heights use shortest round-trip repr."""
    r = emap.resolution
    rows = [
        f"ncols {emap.width_cells}",
        f"nrows {emap.height_cells}",
        f"xllcorner {emap.origin[0] - r / 2!r}",
        f"yllcorner {emap.origin[1] - r / 2!r}",
        f"cellsize {r!r}",
        f"NODATA_value {NODATA}",
    ]
    for row in emap.heights[::-1]:
        rows.append(" ".join(str(NODATA) if math.isnan(v) else repr(float(v)) for v in row))
    Path(path).write_text("\n".join(rows) + "\n", encoding="ascii")


def pgm_sidecar(path) -> Path:
    return Path(str(path) + ".meta")


def load_pgm16(path, sidecar=None) -> ElevationMap:
    """Load a 16-bit binary PGM plus its ``key value`` sidecar.

    Sidecar keys: ``scale_m_per_lsb``, ``z_offset_m``, ``cellsize``,
    ``origin_x``, ``origin_y`` and optionally ``nodata_lsb``.  Image rows run
    north to south like the ASCII format.
    """
    meta = {}
    side = Path(sidecar) if sidecar else pgm_sidecar(path)
    for line in side.read_text().splitlines():
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        key, _, val = line.replace(":", " ").partition(" ")
        meta[key.strip()] = val.strip()
    vals = {}
    for key in ("scale_m_per_lsb", "z_offset_m", "cellsize", "origin_x", "origin_y"):
        if key not in meta:
            raise MapFormatError(f"{key}: missing from sidecar")
        vals[key] = _parse_number(key, meta[key])
    if not vals["cellsize"] > 0:
        raise MapFormatError(f"cellsize: must be positive, got {vals['cellsize']}")
    data = Path(path).read_bytes()
    tokens = []
    pos = 0
    while len(tokens) < 4:
        while pos < len(data) and data[pos:pos + 1].isspace():
            pos += 1
        if data[pos:pos + 1] == b"#":
            while pos < len(data) and data[pos:pos + 1] != b"\n":
                pos += 1
            continue
        start = pos
        while pos < len(data) and not data[pos:pos + 1].isspace():
            pos += 1
        if start == pos:
            raise MapFormatError("header: truncated PGM header")
        tokens.append(data[start:pos])
    pos += 1  # single whitespace byte before raster
    if tokens[0] != b"P5":
        raise MapFormatError(f"magic: expected P5, got {tokens[0]!r}")
    w = _parse_number("width", tokens[1].decode(), int)
    h = _parse_number("height", tokens[2].decode(), int)
    maxval = _parse_number("maxval", tokens[3].decode(), int)
    if w < 1 or h < 1:
        raise MapFormatError(f"width/height: grid size must be positive, got {w}x{h}")
    if maxval != 65535:
        raise MapFormatError(f"maxval: expected 65535, got {maxval}")
    raw = np.frombuffer(data, dtype=">u2", count=w * h, offset=pos) if len(data) - pos >= 2 * w * h else None
    if raw is None:
        raise MapFormatError("data: raster shorter than width*height")
    raw = raw.reshape(h, w)[::-1].astype(np.float64)
    heights = raw * vals["scale_m_per_lsb"] + vals["z_offset_m"]
    if "nodata_lsb" in meta:
        heights[raw == _parse_number("nodata_lsb", meta["nodata_lsb"], int)] = np.nan
    return ElevationMap(heights, vals["cellsize"], (vals["origin_x"], vals["origin_y"]))


def load_map(path, format: str | None = None) -> ElevationMap:
    """Load an ``ascii_grid`` or ``pgm16`` map; the format defaults from the suffix."""
    if not os.path.exists(path):
        raise FileNotFoundError(path)
    if format is None:
        format = "pgm16" if str(path).lower().endswith(".pgm") else "ascii_grid"
    if format == "ascii_grid":
        return load_ascii_grid(path)
    if format == "pgm16":
        return load_pgm16(path)
    raise ValueError(f"unknown map format {format!r}")
