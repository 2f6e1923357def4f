"""Interpolation, re-segmentation and intensity discretisation."""
from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Optional

import numpy as np
from scipy import ndimage

from .errors import ConfigurationError, DomainError, EmptyRoiError
from .volume import (GridGeometry, ImageVolume, RoiIntensitySet, RoiMask, RoiMaskPair,
                     pad_replicate)

IMAGE_METHODS = ("nearest", "linear", "cubic_spline", "cubic_convolution")
MASK_METHODS = ("nearest", "linear")


@dataclass(frozen=True)
class InterpolationSpec:
    mode: str = "none"                     # none | 2d | 3d
    spacing: tuple = (1.0, 1.0, 1.0)       # target spacing (x, y, z); z ignored in 2d mode
    image_method: str = "linear"
    mask_method: str = "linear"
    threshold: float = 0.5                 # partial volume threshold
    rounding: str = "none"                 # none | nearest

    def __post_init__(self):
        if self.mode not in ("none", "2d", "3d"):
            raise ConfigurationError(f"unknown interpolation mode {self.mode!r}")
        sp = tuple(float(s) for s in np.broadcast_to(np.asarray(self.spacing, dtype=float), (3,)))
        if min(sp) <= 0:
            raise ConfigurationError("target spacing must be positive")
        object.__setattr__(self, "spacing", sp)
        if self.image_method not in IMAGE_METHODS:
            raise ConfigurationError(f"unsupported image interpolation method {self.image_method!r}")
        if self.mask_method not in MASK_METHODS:
            raise ConfigurationError(f"unsupported mask interpolation method {self.mask_method!r}")
        if not 0 < self.threshold <= 1:
            raise ConfigurationError("partial volume threshold must lie in (0, 1]")
        if self.rounding not in ("none", "nearest"):
            raise ConfigurationError(f"unknown rounding {self.rounding!r}")


@dataclass(frozen=True)
class ResegmentationSpec:
    range: Optional[tuple] = None          # (a, b); b may be inf
    sigma: Optional[float] = None          # outlier filter width, e.g. 3
    order: str = "range_first"             # range_first | outlier_first

    def __post_init__(self):
        if self.range is not None:
            a, b = (float(v) for v in self.range)
            if not a <= b:
                raise ConfigurationError(f"empty re-segmentation range [{a}, {b}]")
            object.__setattr__(self, "range", (a, b))
        if self.sigma is not None and self.sigma <= 0:
            raise ConfigurationError("outlier sigma must be positive")
        if self.order not in ("range_first", "outlier_first"):
            raise ConfigurationError(f"unknown re-segmentation order {self.order!r}")

    @property
    def active(self):
        return self.range is not None or self.sigma is not None

    @property
    def lower(self):
        return None if self.range is None else self.range[0]

    @property
    def upper(self):
        if self.range is None or math.isinf(self.range[1]):
            return None
        return self.range[1]


@dataclass(frozen=True)
class DiscretisationSpec:
    algorithm: str = "none"                # none | fbn | fbs
    n_bins: Optional[int] = None
    bin_width: Optional[float] = None
    minimum: Optional[float] = None        # explicit lower bound for fbs

    def __post_init__(self):
        if self.algorithm not in ("none", "fbn", "fbs"):
            raise ConfigurationError(f"unknown discretisation {self.algorithm!r}")
        if self.algorithm == "fbn" and (self.n_bins is None or int(self.n_bins) < 1):
            raise ConfigurationError("fixed bin number needs n_bins >= 1")
        if self.algorithm == "fbs" and (self.bin_width is None or self.bin_width <= 0):
            raise ConfigurationError("fixed bin size needs a positive bin_width")


@dataclass(frozen=True)
class DiscretisedRoi:
    levels: np.ndarray                     # X_d, integers >= 1, scan order
    n_g: int
    spec: DiscretisationSpec
    source: RoiIntensitySet
    minimum: Optional[float] = None        # fbs lower bound actually used

    @property
    def count(self):
        return len(self.levels)


# -------------------------------------------------------------- interpolation

def plan_interpolation_grid(g: GridGeometry, spec: InterpolationSpec) -> GridGeometry:
    """Interpolation grid with the same center as ``g`` (align grid centers)."""
    if spec.mode == "none":
        raise ConfigurationError("interpolation mode is 'none'")
    dims, spacing, origin = [], [], []
    for ax in range(3):
        n_a, s_a, x_a = g.dims[ax], g.spacing[ax], g.origin[ax]
        if spec.mode == "2d" and ax == 2:
            dims.append(n_a), spacing.append(s_a), origin.append(x_a)
            continue
        s_b = spec.spacing[ax]
        n_b = max(1, math.ceil(n_a * s_a / s_b - 1e-9))
        dims.append(n_b)
        spacing.append(s_b)
        origin.append(x_a + (s_a * (n_a - 1) - s_b * (n_b - 1)) / 2.0)
    return GridGeometry(tuple(dims), tuple(spacing), tuple(origin))


def _keys_weights(t, a=-0.5):
    """Cubic convolution kernel weights for offsets t in [0, 1)."""
    def k(x):
        x = np.abs(x)
        return np.where(x <= 1, (a + 2) * x ** 3 - (a + 3) * x ** 2 + 1,
                        np.where(x < 2, a * x ** 3 - 5 * a * x ** 2 + 8 * a * x - 4 * a, 0.0))
    return np.stack([k(t + 1), k(t), k(1 - t), k(2 - t)], axis=-1)


def _cubic_convolution_axis(arr, coords, axis):
    """Resample ``arr`` along ``axis`` at fractional indices, replicating edges."""
    n = arr.shape[axis]
    base = np.floor(coords).astype(int)
    t = coords - base
    w = _keys_weights(t)
    out = 0.0
    for m in range(4):
        idx = np.clip(base - 1 + m, 0, n - 1)
        taken = np.take(arr, idx, axis=axis)
        shape = [1] * arr.ndim
        shape[axis] = len(coords)
        out = out + taken * w[:, m].reshape(shape)
    return out


def _grid_coords(src: GridGeometry, dst: GridGeometry, ax):
    return (dst.axis_coords(ax) - src.origin[ax]) / src.spacing[ax]


def _resample_array(data, src: GridGeometry, dst: GridGeometry, method, planar):
    """Evaluate ``data`` (z, y, x) at the voxel centers of ``dst``."""
    cx, cy, cz = (_grid_coords(src, dst, ax) for ax in range(3))
    if method == "cubic_convolution":
        out = _cubic_convolution_axis(data, cx, 2)
        out = _cubic_convolution_axis(out, cy, 1)
        if not planar:
            out = _cubic_convolution_axis(out, cz, 0)
        return out
    order = {"nearest": 0, "linear": 1, "cubic_spline": 3}[method]
    # replicate-pad explicitly so spline prefiltering sees the extended boundary
    margin = 4 if order == 3 else 1
    padded = np.pad(data, margin if not planar else ((0, 0), (margin, margin), (margin, margin)), mode="edge")
    if planar:
        gy, gx = np.meshgrid(cy + margin, cx + margin, indexing="ij")
        out = np.empty((len(cz), len(cy), len(cx)))
        for k in range(len(cz)):
            kk = int(round(cz[k]))
            out[k] = ndimage.map_coordinates(padded[kk], [gy, gx], order=order, mode="nearest")
        return out
    gz, gy, gx = np.meshgrid(cz + margin, cy + margin, cx + margin, indexing="ij")
    return ndimage.map_coordinates(padded, [gz, gy, gx], order=order, mode="nearest")


def resample_image(img: ImageVolume, target: GridGeometry, spec: InterpolationSpec) -> ImageVolume:
    src = img.geometry
    if src.same_as(target) and spec.image_method in ("nearest", "linear"):
        out = np.array(img.data)
    else:
        out = _resample_array(img.data.astype(np.float64), src, target, spec.image_method,
                              planar=spec.mode == "2d")
    if spec.rounding == "nearest":
        out = np.round(out)   # ties to even
    return ImageVolume(target, out)


def resample_mask(m: RoiMask, target: GridGeometry, spec: InterpolationSpec) -> RoiMask:
    src = m.geometry
    if src.same_as(target):
        return RoiMask(target, m.labels)
    frac = _resample_array(m.labels.astype(np.float64), src, target, spec.mask_method,
                           planar=spec.mode == "2d")
    if spec.mask_method == "nearest":
        return RoiMask(target, frac >= 0.5)
    # guard against 0.4999... from accumulated rounding
    return RoiMask(target, frac >= spec.threshold - 1e-9)


def interpolate(img: ImageVolume, pair: RoiMaskPair, spec: InterpolationSpec):
    if spec.mode == "none":
        return img, pair
    target = plan_interpolation_grid(img.geometry, spec)
    im = resample_image(img, target, spec)
    mm = resample_mask(pair.morphological, target, spec)
    if pair.intensity is pair.morphological or np.array_equal(pair.intensity.labels, pair.morphological.labels):
        im_mask = mm
    else:
        im_mask = RoiMask(target, resample_mask(pair.intensity, target, spec).labels & mm.labels)
    return im, RoiMaskPair(mm, im_mask)


# ------------------------------------------------------------ re-segmentation

def _range_filter(vals, sel, rng):
    a, b = rng
    return sel & (vals >= a) & (vals <= b)


def _outlier_filter(vals, sel, k):
    x = vals[sel]
    if not len(x):
        return sel
    mu, sd = x.mean(), x.std()
    return sel & (vals >= mu - k * sd) & (vals <= mu + k * sd)


def resegment(pair: RoiMaskPair, img: ImageVolume, spec: Optional[ResegmentationSpec]) -> RoiMaskPair:
    """Restrict the intensity mask by range and/or outlier rules.

    The morphological mask is passed through untouched.
    """
    if spec is None or not spec.active:
        return pair
    vals = img.data
    sel = pair.intensity.labels.astype(bool)
    steps = []
    if spec.range is not None:
        steps.append(lambda s: _range_filter(vals, s, spec.range))
    if spec.sigma is not None:
        steps.append(lambda s: _outlier_filter(vals, s, spec.sigma))
    if spec.order == "outlier_first":
        steps.reverse()
    for step in steps:
        sel = step(sel)
    if not sel.any():
        raise EmptyRoiError("re-segmentation removed every voxel", stage="re-segmentation")
    return RoiMaskPair(pair.morphological, RoiMask(pair.geometry, sel))


# ------------------------------------------------------------- discretisation

def discretise_fbn(s: RoiIntensitySet, n_g: int) -> DiscretisedRoi:
    n_g = int(n_g)
    if n_g < 1:
        raise ConfigurationError("n_g must be >= 1")
    x = s.values
    lo, hi = x.min(), x.max()
    if hi > lo:
        d = np.floor(n_g * (x - lo) / (hi - lo)).astype(np.int64) + 1
        d = np.minimum(d, n_g)
        d[x == hi] = n_g
    else:
        d = np.full(len(x), n_g, dtype=np.int64)
    return DiscretisedRoi(d, n_g, DiscretisationSpec("fbn", n_bins=n_g), s)


def discretise_fbs(s: RoiIntensitySet, w_b: float, minimum: float) -> DiscretisedRoi:
    if w_b <= 0:
        raise ConfigurationError("bin width must be positive")
    x = s.values
    if x.min() < minimum:
        raise DomainError(f"intensity {x.min()} lies below the discretisation minimum {minimum}")
    d = np.floor((x - minimum) / w_b).astype(np.int64) + 1
    return DiscretisedRoi(d, int(d.max()), DiscretisationSpec("fbs", bin_width=w_b, minimum=minimum),
                          s, minimum=minimum)


def discretise_none(s: RoiIntensitySet) -> DiscretisedRoi:
    """Use intensities directly as grey levels; they must be positive integers."""
    x = s.values
    if np.any(x != np.round(x)) or x.min() < 1:
        raise DomainError("undiscretised intensities must be positive integers to serve as grey levels")
    d = x.astype(np.int64)
    return DiscretisedRoi(d, int(d.max()), DiscretisationSpec("none"), s)


def discretise(s: RoiIntensitySet, spec: DiscretisationSpec, reseg: Optional[ResegmentationSpec] = None):
    if spec.algorithm == "fbn":
        return discretise_fbn(s, spec.n_bins)
    if spec.algorithm == "fbs":
        return discretise_fbs(s, spec.bin_width, fbs_minimum(s, spec, reseg))
    return discretise_none(s)


def fbs_minimum(s, spec, reseg):
    """Lower bound for fixed bin size: explicit, then re-segmentation bound, then ROI minimum."""
    if spec.minimum is not None:
        return float(spec.minimum)
    if reseg is not None and reseg.lower is not None:
        return reseg.lower
    return float(s.values.min())


def discretised_volume(d: DiscretisedRoi, mask: RoiMask) -> np.ndarray:
    """Grey level volume (z, y, x) with 0 marking voxels outside the mask."""
    vol = np.zeros(mask.geometry.shape, dtype=np.int64)
    sel = mask.labels.astype(bool)
    if sel.sum() != d.count:
        raise DomainError("mask and discretised ROI have different voxel counts")
    vol[sel] = d.levels
    return vol


# ------------------------------------------------------------------------ IVH

@dataclass(frozen=True)
class IvhData:
    values: np.ndarray       # X_d,gl
    g_min: float
    g_max: float
    w_d: float
    levels: np.ndarray
    gamma: np.ndarray
    nu: np.ndarray
    mode: str = "discrete"


def ivh_curve(x, g_min, g_max, w_d):
    """Fractional volumes and grey level fractions on the grid G_min..G_max."""
    n = int(round((g_max - g_min) / w_d)) + 1 if g_max > g_min else 1
    levels = g_min + w_d * np.arange(max(n, 1))
    xs = np.sort(np.asarray(x, dtype=float))
    below = np.searchsorted(xs, levels - 1e-9 * max(1.0, w_d), side="left")
    nu = 1.0 - below / len(xs)
    if g_max > g_min:
        gamma = (levels - g_min) / (g_max - g_min)
    else:
        gamma = np.zeros(len(levels))
    return levels, gamma, nu


def prepare_ivh(s: RoiIntensitySet, mode: str = "discrete", reseg: Optional[ResegmentationSpec] = None,
                bin_width: Optional[float] = None, n_bins: int = 1000, minimum: Optional[float] = None,
                maximum: Optional[float] = None) -> IvhData:
    """IVH input for the three intensity-unit cases.

    mode: ``discrete`` (calibrated integer units), ``continuous`` (calibrated,
    fixed bin size ``bin_width``) or ``arbitrary`` (fixed bin number ``n_bins``).
    """
    x = s.values
    if mode == "discrete":
        if reseg is not None and reseg.range is not None:
            g_min = reseg.range[0]
            g_max = reseg.upper if reseg.upper is not None else float(x.max())
        else:
            g_min, g_max = float(x.min()), float(x.max())
        xd, w_d = x, 1.0
    elif mode == "continuous":
        if bin_width is None or bin_width <= 0:
            raise ConfigurationError("continuous IVH requires a positive bin width")
        lo = minimum if minimum is not None else (reseg.lower if reseg is not None else None)
        if lo is None:
            raise ConfigurationError("continuous IVH requires a re-segmentation lower bound or explicit minimum")
        hi = maximum if maximum is not None else (reseg.upper if reseg is not None else None)
        if hi is None:
            hi = float(x.max())
        d = discretise_fbs(s, bin_width, lo).levels
        xd = lo + (d - 0.5) * bin_width
        g_min, g_max, w_d = lo + 0.5 * bin_width, hi - 0.5 * bin_width, float(bin_width)
    elif mode == "arbitrary":
        xd = discretise_fbn(s, n_bins).levels.astype(float)
        g_min, g_max, w_d = 1.0, float(n_bins), 1.0
    else:
        raise ConfigurationError(f"unknown IVH mode {mode!r}")
    levels, gamma, nu = ivh_curve(xd, g_min, g_max, w_d)
    return IvhData(np.asarray(xd, dtype=float), float(g_min), float(g_max), float(w_d),
                   levels, gamma, nu, mode)
