"""Local intensity, intensity statistics, intensity histogram and IVH features."""
from __future__ import annotations

import numpy as np
from scipy import ndimage

from .catalogue import undefined
from .errors import DataError
from .preprocess import DiscretisedRoi, IvhData
from .volume import ImageVolume, RoiIntensitySet, RoiMask

_trapz = getattr(np, "trapezoid", None) or np.trapz

PEAK_RADIUS_MM = 10.0 * (3.0 / (4.0 * np.pi)) ** (1.0 / 3.0)   # 1 cm^3 sphere


def sphere_kernel(spacing, radius=PEAK_RADIUS_MM):
    """Binary (z, y, x) kernel of voxels whose centers lie within ``radius`` mm."""
    sx, sy, sz = spacing
    hx, hy, hz = (int(np.floor(radius / s + 1e-9)) for s in (sx, sy, sz))
    z, y, x = np.mgrid[-hz:hz + 1, -hy:hy + 1, -hx:hx + 1]
    d2 = (x * sx) ** 2 + (y * sy) ** 2 + (z * sz) ** 2
    return (d2 <= radius ** 2 * (1 + 1e-12)).astype(np.float64)


def spherical_mean_map(img: ImageVolume, radius=PEAK_RADIUS_MM):
    """Mean intensity in a sphere around every voxel; neighbours outside the image are ignored."""
    k = sphere_kernel(img.geometry.spacing, radius)
    total = ndimage.correlate(img.data, k, mode="constant", cval=0.0)
    count = ndimage.correlate(np.ones(img.data.shape), k, mode="constant", cval=0.0)
    return total / count


def _roi(img: ImageVolume, m: RoiMask):
    if not img.geometry.same_as(m.geometry):
        raise DataError("image and mask geometry differ")
    return m.labels.astype(bool)


def local_intensity_peak(img: ImageVolume, m: RoiMask, radius=PEAK_RADIUS_MM) -> float:
    sel = _roi(img, m)
    vals = img.data[sel]
    peak_map = spherical_mean_map(img, radius)[sel]
    return float(peak_map[vals == vals.max()].max())


def global_intensity_peak(img: ImageVolume, m: RoiMask, radius=PEAK_RADIUS_MM) -> float:
    sel = _roi(img, m)
    return float(spherical_mean_map(img, radius)[sel].max())


def local_intensity_features(img, m, radius=PEAK_RADIUS_MM):
    sel = _roi(img, m)
    vals = img.data[sel]
    pm = spherical_mean_map(img, radius)[sel]
    return {"loc.peak.local": float(pm[vals == vals.max()].max()),
            "loc.peak.global": float(pm.max())}


# ---------------------------------------------------------------- statistics

def percentile(x, q):
    """Linear interpolation between closest ranks (numpy's default method)."""
    return float(np.percentile(x, q, method="linear"))


def _moments(x):
    mu = x.mean()
    d = x - mu
    var = np.mean(d ** 2)
    if var == 0:
        return mu, 0.0, 0.0, 0.0
    z = d / np.sqrt(var)    # standardise first so tiny variances do not underflow
    skew = np.mean(z ** 3)
    kurt = np.mean(z ** 4) - 3.0
    return mu, var, skew, kurt


def _distribution_features(x, prefix):
    x = np.asarray(x, dtype=float)
    mu, var, skew, kurt = _moments(x)
    p10, p25, p75, p90 = (percentile(x, q) for q in (10, 25, 75, 90))
    med = float(np.median(x))
    inner = x[(x >= p10) & (x <= p90)]
    sd = np.sqrt(var)
    f = {
        "mean": mu, "var": var, "skew": skew, "kurt": kurt, "median": med,
        "min": x.min(), "p10": p10, "p90": p90, "max": x.max(),
        "iqr": p75 - p25, "range": np.ptp(x),
        "mad": np.mean(np.abs(x - mu)),
        "rmad": (np.mean(np.abs(inner - inner.mean())) if len(inner)
                 else undefined("no values between P10 and P90")),
        "medad": np.mean(np.abs(x - med)),
    }
    if sd == 0:
        f["cov"] = 0.0
    elif mu == 0:
        f["cov"] = undefined("mean is zero")
    else:
        f["cov"] = sd / mu
    if p75 - p25 == 0:
        f["qcod"] = 0.0
    elif p75 + p25 == 0:
        f["qcod"] = undefined("P75 + P25 is zero")
    else:
        f["qcod"] = (p75 - p25) / (p75 + p25)
    return {f"{prefix}.{k}": (v if hasattr(v, "reason") else float(v)) for k, v in f.items()}


def statistical_features(s) -> dict:
    x = s.values if isinstance(s, RoiIntensitySet) else np.asarray(s, dtype=float)
    f = _distribution_features(x, "stat")
    f["stat.energy"] = float(np.sum(x ** 2))
    f["stat.rms"] = float(np.sqrt(np.mean(x ** 2)))
    order = ["mean", "var", "skew", "kurt", "median", "min", "p10", "p90", "max", "iqr", "range",
             "mad", "rmad", "medad", "cov", "qcod", "energy", "rms"]
    return {f"stat.{k}": f[f"stat.{k}"] for k in order}


# ----------------------------------------------------------------- histogram

def histogram(levels, n_g):
    """Dense counts for grey levels 1..n_g."""
    return np.bincount(np.asarray(levels, dtype=np.int64) - 1, minlength=n_g)[:n_g].astype(float)


def histogram_gradient(h):
    h = np.asarray(h, dtype=float)
    if len(h) == 1:
        return np.zeros(1)
    g = np.empty_like(h)
    g[0] = h[1] - h[0]
    g[-1] = h[-1] - h[-2]
    g[1:-1] = (h[2:] - h[:-2]) / 2.0
    return g


def histogram_mode(h, mean):
    lv = np.arange(1, len(h) + 1)
    cand = lv[h == h.max()]
    dist = np.abs(cand - mean)
    best = cand[dist == dist.min()]
    return float(best.min())   # left of the mean on an exact tie


def histogram_features(d, n_g=None) -> dict:
    """Intensity histogram features of discretised levels (DiscretisedRoi or an int array)."""
    if isinstance(d, DiscretisedRoi):
        x, n_g = d.levels, d.n_g
    else:
        x = np.asarray(d, dtype=np.int64)
        n_g = int(n_g or x.max())
    base = _distribution_features(x, "ih")
    h = histogram(x, n_g)
    p = h / h.sum()
    nz = p[p > 0]
    grad = histogram_gradient(h)
    f = {}
    for k in ("mean", "var", "skew", "kurt", "median", "min", "p10", "p90", "max"):
        f[f"ih.{k}"] = base[f"ih.{k}"]
    f["ih.mode"] = histogram_mode(h, base["ih.mean"])
    for k in ("iqr", "range", "mad", "rmad", "medad", "cov", "qcod"):
        f[f"ih.{k}"] = base[f"ih.{k}"]
    f["ih.entropy"] = float(-np.sum(nz * np.log2(nz)))
    f["ih.uniformity"] = float(np.sum(p ** 2))
    f["ih.max.grad"] = float(grad.max())
    f["ih.max.grad.gl"] = float(np.argmax(grad) + 1)
    f["ih.min.grad"] = float(grad.min())
    f["ih.min.grad.gl"] = float(np.argmin(grad) + 1)
    return f


# ----------------------------------------------------------------------- IVH

def volume_at_intensity_fraction(v: IvhData, x):
    """nu at the smallest evaluated gamma >= x (fraction in [0, 1])."""
    ok = v.gamma >= x - 1e-12
    if not ok.any():
        return 0.0
    return float(v.nu[np.argmax(ok)])


def intensity_at_volume_fraction(v: IvhData, x):
    """Smallest evaluated level whose fractional volume is at most x; G_max if none."""
    ok = v.nu <= x + 1e-12
    if not ok.any():
        return float(v.levels[-1])
    return float(v.levels[np.argmax(ok)])


def ivh_auc(v: IvhData):
    if len(v.levels) < 2 or np.ptp(v.values) == 0:
        return 0.0
    return float(_trapz(v.nu, v.gamma))


def ivh_features(v: IvhData) -> dict:
    v10, v90 = volume_at_intensity_fraction(v, 0.10), volume_at_intensity_fraction(v, 0.90)
    i10, i90 = intensity_at_volume_fraction(v, 0.10), intensity_at_volume_fraction(v, 0.90)
    return {
        "ivh.V10": v10, "ivh.V90": v90, "ivh.I10": i10, "ivh.I90": i90,
        "ivh.V10minusV90": v10 - v90, "ivh.I10minusI90": i10 - i90,
        "ivh.auc": ivh_auc(v),
    }
