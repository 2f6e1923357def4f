"""Neighbourhoods, direction sets and the count-matrix containers shared by all texture families."""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from ..errors import ConfigurationError, DataError

NORMS = ("chebyshev", "manhattan", "euclidean")
MODES = ("2D", "3D")


@dataclass(frozen=True)
class NeighbourhoodSpec:
    distance: float = 1.0
    norm: str = "chebyshev"
    alpha: int = 0                 # NGLDM coarseness
    linkage: str = "chebyshev"     # voxel linkage for size/distance zones
    edge_norm: str = "manhattan"   # distance-to-edge norm for the distance zone map

    def __post_init__(self):
        if not self.distance > 0:
            raise ConfigurationError(f"distance must be positive, got {self.distance}")
        for name in ("norm", "linkage", "edge_norm"):
            if getattr(self, name) not in NORMS:
                raise ConfigurationError(f"unknown {name} {getattr(self, name)!r}")
        if self.edge_norm == "euclidean":
            raise ConfigurationError("euclidean edge distance is not supported")
        if int(self.alpha) != self.alpha or self.alpha < 0:
            raise ConfigurationError("alpha must be a non-negative integer")


DEFAULT_SPEC = NeighbourhoodSpec()


def vector_norm(m, norm):
    m = np.abs(np.asarray(m, dtype=float))
    if norm == "chebyshev":
        return m.max(axis=-1)
    if norm == "manhattan":
        return m.sum(axis=-1)
    return np.sqrt((m ** 2).sum(axis=-1))


def _check_mode(mode):
    if mode not in MODES:
        raise ConfigurationError(f"mode must be '2D' or '3D', got {mode!r}")


def _box(r, mode):
    r = int(np.ceil(r))
    rz = 0 if mode == "2D" else r
    dz, dy, dx = np.mgrid[-rz:rz + 1, -r:r + 1, -r:r + 1]
    off = np.stack([dx.ravel(), dy.ravel(), dz.ravel()], axis=1)
    return off[np.any(off != 0, axis=1)]


def _positive_half(off):
    dx, dy, dz = off[:, 0], off[:, 1], off[:, 2]
    return (dz > 0) | ((dz == 0) & ((dy > 0) | ((dy == 0) & (dx > 0))))


def neighbourhood_offsets(spec: NeighbourhoodSpec = DEFAULT_SPEC, mode="3D"):
    """All (dx, dy, dz) with 0 < |m| <= delta under the spec norm; no cross-slice offsets in 2D."""
    _check_mode(mode)
    off = _box(spec.distance, mode)
    return off[vector_norm(off, spec.norm) <= spec.distance + 1e-9]


def directions(spec: NeighbourhoodSpec = DEFAULT_SPEC, mode="3D"):
    """Unique direction vectors (one of each +/- pair) for co-occurrence and run length matrices.

    Chebyshev: the 13 (3D) or 4 (2D) unit directions scaled by delta. Other norms: offsets whose
    length lies in (delta - 1, delta].
    """
    _check_mode(mode)
    if spec.norm == "chebyshev":
        d = spec.distance
        if abs(d - round(d)) > 1e-9:
            raise ConfigurationError("chebyshev directions need an integer distance")
        off = _box(1, mode)
        off = off[_positive_half(off)] * int(round(d))
    else:
        off = _box(spec.distance, mode)
        n = vector_norm(off, spec.norm)
        off = off[(n <= spec.distance + 1e-9) & (n > spec.distance - 1 + 1e-9)]
        off = off[_positive_half(off)]
    return [tuple(int(v) for v in m) for m in off]


def level_volume(vol) -> np.ndarray:
    """Integer grey level volume (z, y, x) with 0 outside the ROI; NaN input marks outside voxels."""
    v = np.asarray(vol)
    if v.ndim == 2:
        v = v[None]
    if v.ndim != 3:
        raise DataError("texture volumes must be 2D or 3D")
    if np.issubdtype(v.dtype, np.floating):
        out = np.where(np.isnan(v), 0, v)
        if np.any(out != np.round(out)):
            raise DataError("grey levels must be integers")
        v = out
    v = v.astype(np.int64)
    if v.min(initial=0) < 0:
        raise DataError("grey levels must be positive")
    return v


def pad_to(counts, width):
    if counts.shape[1] >= width:
        return counts
    out = np.zeros((counts.shape[0], width))
    out[:, :counts.shape[1]] = counts
    return out


def shifted_pair(shape, off_zyx):
    """Index slices (src, dst) so that vol[dst] is the voxel at vol[src] + offset."""
    src, dst = [], []
    for n, o in zip(shape, off_zyx):
        src.append(slice(max(0, -o), n - max(0, o)))
        dst.append(slice(max(0, o), n - max(0, -o)))
    return tuple(src), tuple(dst)


# --------------------------------------------------------------- containers

@dataclass
class TextureMatrix:
    counts: np.ndarray
    n_v: float
    mode: str = "3D"
    slice: Optional[int] = None
    direction: Optional[tuple] = None
    family = None

    @property
    def n_g(self):
        return self.counts.shape[0]

    @property
    def n_s(self):
        return float(self.counts.sum())

    @property
    def empty(self):
        return self.n_s == 0

    @property
    def row_sums(self):
        return self.counts.sum(axis=1)

    @property
    def col_sums(self):
        return self.counts.sum(axis=0)

    @property
    def p(self):
        return self.counts / self.n_s

    @classmethod
    def merge(cls, mats):
        mats = list(mats)
        width = max(m.counts.shape[1] for m in mats)
        counts = sum(pad_to(m.counts, width) for m in mats)
        return cls(counts, float(sum(m.n_v for m in mats)), mats[0].mode)


@dataclass
class Glcm(TextureMatrix):
    family = "cm"

    @property
    def marginal(self):
        return self.p.sum(axis=1)

    @property
    def p_diff(self):
        n = self.n_g
        i = np.arange(n)
        k = np.abs(i[:, None] - i[None, :])
        return np.bincount(k.ravel(), self.p.ravel(), minlength=n)

    @property
    def p_sum(self):
        """Cross-diagonal probabilities for k = 2 .. 2 N_g."""
        n = self.n_g
        i = np.arange(1, n + 1)
        k = i[:, None] + i[None, :]
        return np.bincount(k.ravel(), self.p.ravel(), minlength=2 * n + 1)[2:]


@dataclass
class Rlm(TextureMatrix):
    family = "rlm"


@dataclass
class Szm(TextureMatrix):
    family = "szm"


@dataclass
class Dzm(TextureMatrix):
    family = "dzm"


@dataclass
class Ngldm(TextureMatrix):
    family = "ngl"


@dataclass
class Ngtdm:
    n: np.ndarray              # voxels per level with a valid neighbourhood
    s: np.ndarray              # summed absolute grey tone differences
    n_v: float
    mode: str = "3D"
    slice: Optional[int] = None
    direction: Optional[tuple] = None
    family = "ngt"

    @property
    def n_g(self):
        return len(self.n)

    @property
    def n_vc(self):
        return float(self.n.sum())

    @property
    def p(self):
        return self.n / self.n_vc

    @property
    def empty(self):
        return self.n_vc == 0

    @classmethod
    def merge(cls, mats):
        mats = list(mats)
        return cls(sum(m.n for m in mats), sum(m.s for m in mats),
                   float(sum(m.n_v for m in mats)), mats[0].mode)


def entropy(p):
    p = np.asarray(p, dtype=float).ravel()
    p = p[p > 0]
    return float(-np.sum(p * np.log2(p)))
