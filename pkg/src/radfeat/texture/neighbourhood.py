"""Neighbourhood grey tone difference and neighbouring grey level dependence matrices."""
import numpy as np

from ..catalogue import undefined
from ..errors import ConfigurationError
from .common import DEFAULT_SPEC, Ngldm, Ngtdm, level_volume, neighbourhood_offsets
from .sized import sized_features

COARSENESS_CAP = 1e6


def _neighbour_views(v, spec, mode):
    """Yield the padded-volume view of each neighbour offset, aligned with v."""
    offs = neighbourhood_offsets(spec, mode)
    r = int(np.abs(offs).max())
    P = np.pad(v, r)
    for dx, dy, dz in offs:
        yield P[r + dz:r + dz + v.shape[0], r + dy:r + dy + v.shape[1], r + dx:r + dx + v.shape[2]]


def _complete(v, spec, mode):
    """Voxels whose whole neighbourhood lies inside the ROI (and the image)."""
    ok = v > 0
    for nb in _neighbour_views(v, spec, mode):
        ok &= nb > 0
    return ok


def _check_mode_arg(variant):
    if variant not in ("ibsi", "legacy"):
        raise ConfigurationError(f"unknown neighbourhood variant {variant!r}")


def ngtdm_build(vol, spec=DEFAULT_SPEC, mode="3D", n_g=None, variant="ibsi"):
    """'ibsi': any in-ROI neighbour makes a neighbourhood valid, the mean uses in-ROI neighbours only.
    'legacy': only voxels with a complete in-ROI neighbourhood contribute."""
    _check_mode_arg(variant)
    v = level_volume(vol)
    n_g = int(n_g or v.max())
    total = np.zeros(v.shape)
    count = np.zeros(v.shape)
    for nb in _neighbour_views(v, spec, mode):
        total += nb
        count += nb > 0
    inside = v > 0
    valid = inside & (count > 0)
    if variant == "legacy":
        valid &= _complete(v, spec, mode)
    diff = np.zeros(v.shape)
    diff[valid] = np.abs(v[valid] - total[valid] / count[valid])
    return _per_slice(v, mode, lambda sel: Ngtdm(
        np.bincount(v[sel & valid] - 1, minlength=n_g)[:n_g].astype(float),
        np.bincount(v[sel & valid] - 1, weights=diff[sel & valid], minlength=n_g)[:n_g],
        float((sel & inside).sum()), mode))


def ngldm_build(vol, spec=DEFAULT_SPEC, mode="3D", n_g=None, variant="ibsi"):
    """Dependence j counts the center and every in-ROI neighbour with |level difference| <= alpha.
    'legacy' keeps only centers with a complete in-ROI neighbourhood."""
    _check_mode_arg(variant)
    v = level_volume(vol)
    n_g = int(n_g or v.max())
    inside = v > 0
    dep = inside.astype(np.int64)
    for nb in _neighbour_views(v, spec, mode):
        dep += (nb > 0) & (np.abs(nb - v) <= spec.alpha) & inside
    keep = inside if variant == "ibsi" else _complete(v, spec, mode)
    width = int(dep[keep].max()) if keep.any() else 1

    def build(sel):
        s = sel & keep
        c = np.zeros((n_g, width))
        np.add.at(c, (v[s] - 1, dep[s] - 1), 1)
        return Ngldm(c, float((sel & inside).sum()), mode)

    return _per_slice(v, mode, build)


def _per_slice(v, mode, make):
    if mode == "3D":
        m = make(np.ones(v.shape, dtype=bool))
        m.slice = None
        return [m]
    out = []
    for k in range(v.shape[0]):
        if not (v[k] > 0).any():
            continue
        sel = np.zeros(v.shape, dtype=bool)
        sel[k] = True
        m = make(sel)
        m.slice = k
        out.append(m)
    return out


def ngtdm_features(m: Ngtdm) -> dict:
    if m.empty:
        return {k: undefined("no voxel has a valid neighbourhood") for k in NGTDM_KEYS}
    n_vc = m.n_vc
    p = m.p
    s = m.s
    lv = np.arange(1, m.n_g + 1, dtype=float)
    pres = p > 0
    ngp = int(pres.sum())
    ps = float(np.sum(p * s))
    f = {"ngt.coarseness": COARSENESS_CAP if ps == 0 else min(1.0 / ps, COARSENESS_CAP)}

    i1, i2 = np.meshgrid(lv[pres], lv[pres], indexing="ij")
    p1, p2 = np.meshgrid(p[pres], p[pres], indexing="ij")
    s1, s2 = np.meshgrid(s[pres], s[pres], indexing="ij")
    if ngp <= 1:
        f["ngt.contrast"] = 0.0
        f["ngt.busyness"] = 0.0
    else:
        f["ngt.contrast"] = float(np.sum(p1 * p2 * (i1 - i2) ** 2) / (ngp * (ngp - 1)) * s.sum() / n_vc)
        den = float(np.sum(np.abs(i1 * p1 - i2 * p2)))
        f["ngt.busyness"] = ps / den if den > 0 else undefined("busyness denominator is zero")
    f["ngt.complexity"] = float(np.sum(np.abs(i1 - i2) * (p1 * s1 + p2 * s2) / (p1 + p2)) / n_vc)
    f["ngt.strength"] = 0.0 if s.sum() == 0 else float(np.sum((p1 + p2) * (i1 - i2) ** 2) / s.sum())
    return {k: f[k] for k in NGTDM_KEYS}


def ngldm_features(m: Ngldm) -> dict:
    return sized_features(m)


NGTDM_KEYS = ["ngt.coarseness", "ngt.contrast", "ngt.busyness", "ngt.complexity", "ngt.strength"]
