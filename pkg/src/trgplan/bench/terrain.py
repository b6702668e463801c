"""Synthetic terrain: spectral fractal noise plus analytic features."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ..elevation import ElevationMap


@dataclass(frozen=True)
class TerrainSpec:
    """Heightfield recipe.

    ``roughness`` in (0, 1) sets the spectral slope: the noise power falls
    off as ``f ** -(3 + 2 * (1 - roughness))``, so larger values keep more
    short-wavelength relief.  ``features`` is a list of dicts, each with a
    ``type`` of ``ramp``, ``wall``, ``step`` or ``plateau`` (see
    :func:`apply_feature`).
    """

    size_m: tuple[float, float] = (50.0, 50.0)
    resolution_m: float = 0.1
    relief_m: float = 6.9
    roughness: float = 0.3
    features: tuple = ()
    seed: int = 0
    origin: tuple[float, float] = (0.0, 0.0)

    def __post_init__(self):
        if min(self.size_m) <= 0 or self.resolution_m <= 0:
            raise ValueError("terrain size and resolution must be positive")
        if self.relief_m < 0:
            raise ValueError("relief_m must be >= 0")
        if not 0 < self.roughness < 1:
            raise ValueError("roughness must lie in (0, 1)")

    @classmethod
    def from_dict(cls, d: dict) -> "TerrainSpec":
        d = dict(d)
        for key in ("size_m", "origin"):
            if key in d:
                d[key] = tuple(d[key])
        d["features"] = tuple(dict(f) for f in d.get("features", ()))
        return cls(**d)

    def to_dict(self) -> dict:
        return {"size_m": list(self.size_m), "resolution_m": self.resolution_m, "relief_m": self.relief_m,
                "roughness": self.roughness, "features": [dict(f) for f in self.features],
                "seed": self.seed, "origin": list(self.origin)}


def fractal_noise(shape, roughness: float, rng: np.random.Generator) -> np.ndarray:
    """Zero-mean spectral-synthesis fBm surface scaled to unit peak-to-peak."""
    ny, nx = shape
    fy = np.fft.fftfreq(ny)[:, None]
    fx = np.fft.rfftfreq(nx)[None, :]
    f = np.sqrt(fx * fx + fy * fy)
    beta = 3.0 + 2.0 * (1.0 - roughness)
    amp = np.zeros_like(f)
    nz = f > 0
    amp[nz] = f[nz] ** (-beta / 2.0)
    spec = amp * (rng.standard_normal(f.shape) + 1j * rng.standard_normal(f.shape))
    z = np.fft.irfft2(spec, s=(ny, nx))
    span = z.max() - z.min()
    return (z - z.min()) / span if span > 0 else np.zeros(shape)


def _local_frame(X, Y, center, direction_deg):
    th = math.radians(direction_deg)
    c, s = math.cos(th), math.sin(th)
    dx = X - center[0]
    dy = Y - center[1]
    return dx * c + dy * s, -dx * s + dy * c


def apply_feature(Z, X, Y, feat: dict) -> None:
    """Apply one feature in place.

    * ``ramp``: ``center``, ``size`` ``[length, width]``, ``angle_deg``,
      ``direction_deg`` (uphill heading), optional ``base`` height at the low
      end.  Heights inside the rectangle are replaced by the plane.
    * ``wall``: ``start``, ``end``, ``width``, ``height``; added to the band.
    * ``step``: ``center``, ``size``, ``height``, optional ``direction_deg``;
      added to the rectangle.
    * ``plateau``: ``center``, ``radius``, ``height``; the disk is flattened
      to ``height``.
    """
    kind = feat["type"]
    if kind == "ramp":
        length, width = feat["size"]
        u, v = _local_frame(X, Y, feat["center"], feat.get("direction_deg", 0.0))
        inside = (np.abs(u) <= length / 2) & (np.abs(v) <= width / 2)
        plane = feat.get("base", 0.0) + (u + length / 2) * math.tan(math.radians(feat["angle_deg"]))
        Z[inside] = plane[inside]
    elif kind == "wall":
        (x0, y0), (x1, y1) = feat["start"], feat["end"]
        L = math.hypot(x1 - x0, y1 - y0)
        ux, uy = (x1 - x0) / L, (y1 - y0) / L
        t = (X - x0) * ux + (Y - y0) * uy
        n = -(X - x0) * uy + (Y - y0) * ux
        band = (t >= 0) & (t <= L) & (np.abs(n) <= feat.get("width", 0.3) / 2)
        Z[band] += feat["height"]
    elif kind == "step":
        length, width = feat["size"]
        u, v = _local_frame(X, Y, feat["center"], feat.get("direction_deg", 0.0))
        Z[(np.abs(u) <= length / 2) & (np.abs(v) <= width / 2)] += feat["height"]
    elif kind == "plateau":
        cx, cy = feat["center"]
        Z[(X - cx) ** 2 + (Y - cy) ** 2 <= feat["radius"] ** 2] = feat["height"]
    else:
        raise ValueError(f"unknown terrain feature {kind!r}")


def generate_terrain(spec: TerrainSpec) -> ElevationMap:
    res = spec.resolution_m
    nx = int(round(spec.size_m[0] / res))
    ny = int(round(spec.size_m[1] / res))
    ox = spec.origin[0] + res / 2
    oy = spec.origin[1] + res / 2
    if spec.relief_m > 0:
        rng = np.random.Generator(np.random.PCG64(np.random.SeedSequence(int(spec.seed))))
        Z = spec.relief_m * fractal_noise((ny, nx), spec.roughness, rng)
    else:
        Z = np.zeros((ny, nx))
    X = ox + np.arange(nx)[None, :] * res
    Y = oy + np.arange(ny)[:, None] * res
    X, Y = np.broadcast_arrays(X, Y)
    for feat in spec.features:
        apply_feature(Z, X, Y, feat)
    return ElevationMap(Z, res, (ox, oy))
