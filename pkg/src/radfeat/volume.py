"""Image volumes, grid geometry, ROI masks and contour rasterization.

Arrays are stored with shape ``(n_z, n_y, n_x)`` so that C order scans x
fastest, then y, then z.  Geometry triples (dims, spacing, origin) are always
given in (x, y, z) order.
"""
from __future__ import annotations

import logging
import warnings
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .errors import DataError, EmptyRoiError, MalformedContourError

log = logging.getLogger(__name__)


def _triple(v, cast=float):
    t = tuple(cast(a) for a in np.broadcast_to(np.asarray(v), (3,)))
    return t


@dataclass(frozen=True)
class GridGeometry:
    dims: tuple
    spacing: tuple = (1.0, 1.0, 1.0)
    origin: tuple = (0.0, 0.0, 0.0)

    def __post_init__(self):
        dims = _triple(self.dims, int)
        spacing = _triple(self.spacing)
        origin = _triple(self.origin)
        if min(dims) < 1:
            raise DataError(f"grid dimensions must be >= 1, got {dims}")
        if min(spacing) <= 0:
            raise DataError(f"grid spacing must be > 0, got {spacing}")
        object.__setattr__(self, "dims", dims)
        object.__setattr__(self, "spacing", spacing)
        object.__setattr__(self, "origin", origin)

    @classmethod
    def from_shape(cls, shape, spacing=(1.0, 1.0, 1.0), origin=(0.0, 0.0, 0.0)):
        """Build from an array shape given as (n_z, n_y, n_x)."""
        nz, ny, nx = shape
        return cls((nx, ny, nz), spacing, origin)

    @property
    def shape(self):
        """Array shape (n_z, n_y, n_x)."""
        return self.dims[::-1]

    @property
    def size(self):
        return int(np.prod(self.dims))

    @property
    def voxel_volume(self):
        return float(np.prod(self.spacing))

    @property
    def center(self):
        """World coordinates of the grid center."""
        return tuple(o + s * (n - 1) / 2.0 for o, s, n in zip(self.origin, self.spacing, self.dims))

    def axis_coords(self, axis):
        """World coordinates of the voxel centers along axis 0=x, 1=y, 2=z."""
        return self.origin[axis] + self.spacing[axis] * np.arange(self.dims[axis])

    def same_as(self, other, tol=1e-9):
        return (self.dims == other.dims
                and np.allclose(self.spacing, other.spacing, rtol=0, atol=tol)
                and np.allclose(self.origin, other.origin, rtol=0, atol=tol))


def grid_to_world(index, g: GridGeometry):
    """Map an integer (x, y, z) index to world coordinates (mm)."""
    idx = np.asarray(index)
    if idx.shape[-1] != 3:
        raise DataError("index must be an (x, y, z) triple")
    if np.any(idx < 0) or np.any(idx >= np.asarray(g.dims)):
        raise IndexError(f"grid index {index} out of bounds for dims {g.dims}")
    w = np.asarray(g.origin) + idx * np.asarray(g.spacing)
    return tuple(w) if w.ndim == 1 else w


def world_to_grid(world, g: GridGeometry):
    """Continuous grid coordinates for world points; integers on voxel centers."""
    w = np.asarray(world, dtype=float)
    return (w - np.asarray(g.origin)) / np.asarray(g.spacing)


@dataclass(frozen=True)
class ImageVolume:
    geometry: GridGeometry
    data: np.ndarray

    def __post_init__(self):
        data = np.asarray(self.data)
        if data.ndim == 2:
            data = data[np.newaxis]
        if tuple(data.shape) != tuple(self.geometry.shape):
            raise DataError(f"intensity array shape {data.shape} does not match grid {self.geometry.shape}")
        if not np.issubdtype(data.dtype, np.floating) or data.dtype.itemsize < 8:
            data = data.astype(np.float64)
        data = np.array(data, copy=True)
        data.setflags(write=False)
        object.__setattr__(self, "data", data)

    @classmethod
    def from_array(cls, arr, spacing=(1.0, 1.0, 1.0), origin=(0.0, 0.0, 0.0)):
        arr = np.asarray(arr)
        if arr.ndim == 2:
            arr = arr[np.newaxis]
        return cls(GridGeometry.from_shape(arr.shape, spacing, origin), arr)

    def __add__(self, c):
        return ImageVolume(self.geometry, self.data + c)


@dataclass(frozen=True)
class RoiMask:
    geometry: GridGeometry
    labels: np.ndarray

    def __post_init__(self):
        lab = np.asarray(self.labels)
        if lab.ndim == 2:
            lab = lab[np.newaxis]
        if tuple(lab.shape) != tuple(self.geometry.shape):
            raise DataError(f"mask shape {lab.shape} does not match grid {self.geometry.shape}")
        if lab.dtype != np.uint8:
            if lab.dtype == bool:
                lab = lab.astype(np.uint8)
            else:
                if not np.all(np.isin(lab, (0, 1))):
                    raise DataError("mask labels must be binary")
                lab = lab.astype(np.uint8)
        elif lab.size and lab.max() > 1:
            raise DataError("mask labels must be binary")
        lab = np.array(lab, copy=True)
        lab.setflags(write=False)
        object.__setattr__(self, "labels", lab)

    @classmethod
    def from_array(cls, arr, spacing=(1.0, 1.0, 1.0), origin=(0.0, 0.0, 0.0)):
        arr = np.asarray(arr)
        if arr.ndim == 2:
            arr = arr[np.newaxis]
        return cls(GridGeometry.from_shape(arr.shape, spacing, origin), arr)

    @property
    def bool(self):
        return self.labels.astype(bool)

    @property
    def count(self):
        return int(self.labels.sum())

    def bounding_box(self):
        """Bounding-box extent in voxels as (x, y, z); zeros for an empty mask."""
        if not self.count:
            return (0, 0, 0)
        idx = np.nonzero(self.labels)
        ext = [int(i.max() - i.min() + 1) for i in idx]
        return tuple(ext[::-1])


@dataclass(frozen=True)
class RoiMaskPair:
    morphological: RoiMask
    intensity: RoiMask

    def __post_init__(self):
        if not self.morphological.geometry.same_as(self.intensity.geometry):
            raise DataError("morphological and intensity masks have different geometry")
        if np.any(self.intensity.labels > self.morphological.labels):
            raise DataError("intensity mask is not a subset of the morphological mask")

    @classmethod
    def from_mask(cls, m: RoiMask):
        return cls(m, m)

    @property
    def geometry(self):
        return self.morphological.geometry


def voxel_centers(mask: RoiMask) -> np.ndarray:
    """World coordinates (x, y, z) of mask voxels, in scan order."""
    g = mask.geometry
    kz, jy, ix = np.nonzero(mask.labels)
    return np.column_stack([
        g.origin[0] + ix * g.spacing[0],
        g.origin[1] + jy * g.spacing[1],
        g.origin[2] + kz * g.spacing[2],
    ])


@dataclass(frozen=True)
class RoiIntensitySet:
    values: np.ndarray
    centers: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float).ravel()
        c = np.asarray(self.centers, dtype=float).reshape(-1, 3)
        if len(v) != len(c):
            raise DataError("values and centers differ in length")
        if len(v) < 1:
            raise EmptyRoiError()
        object.__setattr__(self, "values", v)
        object.__setattr__(self, "centers", c)

    @property
    def count(self):
        return len(self.values)


def extract_intensity_set(img: ImageVolume, m: RoiMask) -> RoiIntensitySet:
    if not img.geometry.same_as(m.geometry):
        raise DataError("image and mask geometry differ")
    sel = m.labels.astype(bool)
    if not sel.any():
        raise EmptyRoiError()
    return RoiIntensitySet(img.data[sel], voxel_centers(m))


def roi_volume(img: ImageVolume, m: RoiMask) -> np.ndarray:
    """Copy of the image with voxels outside the mask set to NaN."""
    out = np.array(img.data, dtype=float)
    out[~m.labels.astype(bool)] = np.nan
    return out


def pad_replicate(img: ImageVolume, margin) -> ImageVolume:
    """Pad by edge replication; ``margin`` is an int or an (x, y, z) triple."""
    mx, my, mz = _triple(margin, int)
    if min(mx, my, mz) < 0:
        raise ValueError("margin must be >= 0")
    if mx == my == mz == 0:
        return img
    data = np.pad(img.data, ((mz, mz), (my, my), (mx, mx)), mode="edge")
    g = img.geometry
    origin = tuple(o - m * s for o, m, s in zip(g.origin, (mx, my, mz), g.spacing))
    return ImageVolume(GridGeometry.from_shape(data.shape, g.spacing, origin), data)


# ---------------------------------------------------------------- contours

@dataclass(frozen=True)
class ContourSet:
    """Closed planar polygons, each an (n, 3) array of world vertices."""
    polygons: tuple = field(default_factory=tuple)

    def __post_init__(self):
        polys = []
        for p in self.polygons:
            p = np.asarray(p, dtype=float)
            if p.ndim != 2 or p.shape[1] != 3:
                raise MalformedContourError("polygon vertices must be (x, y, z) triples")
            if len(p) < 3:
                raise MalformedContourError(f"polygon has {len(p)} vertices, need at least 3")
            if np.ptp(p[:, 2]) > 1e-6:
                raise MalformedContourError("polygon is not planar in z")
            polys.append(p)
        object.__setattr__(self, "polygons", tuple(polys))


def _segments_cross(p1, p2, q1, q2):
    def orient(a, b, c):
        return np.sign((b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0]))

    def on_seg(a, b, c):
        return min(a[0], b[0]) <= c[0] <= max(a[0], b[0]) and min(a[1], b[1]) <= c[1] <= max(a[1], b[1])

    o1, o2 = orient(p1, p2, q1), orient(p1, p2, q2)
    o3, o4 = orient(q1, q2, p1), orient(q1, q2, p2)
    if o1 != o2 and o3 != o4 and 0 not in (o1, o2, o3, o4):
        return True
    if o1 == 0 and on_seg(p1, p2, q1):
        return True
    if o2 == 0 and on_seg(p1, p2, q2):
        return True
    if o3 == 0 and on_seg(q1, q2, p1):
        return True
    if o4 == 0 and on_seg(q1, q2, p2):
        return True
    return False


def is_simple_polygon(xy) -> bool:
    """True when no two non-adjacent edges touch."""
    xy = np.asarray(xy, dtype=float)
    n = len(xy)
    for i in range(n):
        a, b = xy[i], xy[(i + 1) % n]
        for j in range(i + 1, n):
            if j == i or (j + 1) % n == i or j == (i + 1) % n:
                continue
            if _segments_cross(a, b, xy[j], xy[(j + 1) % n]):
                return False
    return True


def _row_crossings(xy, y):
    """x positions where a horizontal line at ``y`` crosses polygon edges.

    Edges are half-open in y, [y_lo, y_hi), so a vertex on the line is counted once.
    """
    x1, y1 = xy[:, 0], xy[:, 1]
    x2, y2 = np.roll(x1, -1), np.roll(y1, -1)
    hit = ((y1 <= y) & (y < y2)) | ((y2 <= y) & (y < y1))
    if not hit.any():
        return np.empty(0)
    x1, y1, x2, y2 = x1[hit], y1[hit], x2[hit], y2[hit]
    return x1 + (y - y1) * (x2 - x1) / (y2 - y1)


def rasterize_polygon_slice(xy, xs, ys) -> np.ndarray:
    """Boolean (len(ys), len(xs)) array of voxel centers inside one polygon.

    A center counts an edge crossing when the crossing lies at or left of it,
    so points on a left/bottom edge are inside and on a right/top edge outside.
    """
    out = np.zeros((len(ys), len(xs)), dtype=bool)
    lo, hi = xy[:, 1].min(), xy[:, 1].max()
    for j, y in enumerate(ys):
        if y < lo or y > hi:
            continue
        xc = np.sort(_row_crossings(xy, y))
        if not len(xc):
            continue
        counts = np.searchsorted(xc, xs, side="right")
        out[j] = counts % 2 == 1
    return out


def rasterize_contours(c: ContourSet, g: GridGeometry, check_simple=True) -> RoiMask:
    """Even-odd rasterization of contours onto the voxel centers of ``g``.

    Polygons sharing a slice are combined with the even-odd rule, so nested
    polygons act as holes.
    """
    labels = np.zeros(g.shape, dtype=bool)
    xs, ys = g.axis_coords(0), g.axis_coords(1)
    for poly in c.polygons:
        z = poly[0, 2]
        kf = (z - g.origin[2]) / g.spacing[2]
        k = int(np.round(kf))
        if abs(kf - k) > 0.5 + 1e-9 or k < 0 or k >= g.dims[2]:
            raise MalformedContourError(f"polygon at z={z} does not lie on a grid slice")
        xy = poly[:, :2]
        if check_simple and not is_simple_polygon(xy):
            raise MalformedContourError(f"self-intersecting polygon at z={z}")
        labels[k] ^= rasterize_polygon_slice(xy, xs, ys)
    if not labels.any():
        warnings.warn("rasterized contour mask is empty", RuntimeWarning, stacklevel=2)
    return RoiMask(g, labels)


def read_contours(path) -> ContourSet:
    """Parse the text contour format: ``slice z=<mm>`` header then ``x y`` lines."""
    polys, cur, z = [], [], None
    with open(path) as fh:
        lines = fh.read().splitlines()
    for n, raw in enumerate(lines + [""], 1):
        line = raw.strip()
        if line.startswith("#"):
            continue
        if not line:
            if z is not None:
                polys.append([(x, y, z) for x, y in cur])
            cur, z = [], None
            continue
        if line.lower().startswith("slice"):
            if z is not None:
                polys.append([(x, y, z) for x, y in cur])
                cur = []
            try:
                z = float(line.split("=", 1)[1])
            except (IndexError, ValueError):
                raise MalformedContourError(f"{path}:{n}: bad slice header {raw!r}") from None
            continue
        if z is None:
            raise MalformedContourError(f"{path}:{n}: vertex before slice header")
        try:
            x, y = (float(t) for t in line.replace(",", " ").split())
        except ValueError:
            raise MalformedContourError(f"{path}:{n}: expected 'x y', got {raw!r}") from None
        cur.append((x, y))
    return ContourSet(tuple(polys))


def write_contours(c: ContourSet, path):
    with open(path, "w") as fh:
        for i, p in enumerate(c.polygons):
            if i:
                fh.write("\n")
            fh.write(f"slice z={float(p[0, 2])!r}\n")
            for x, y, _ in p:
                fh.write(f"{float(x)!r} {float(y)!r}\n")
