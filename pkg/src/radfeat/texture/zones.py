"""Grey level size zone and distance zone matrices."""
import numpy as np
from scipy import ndimage

from ..errors import DataError
from ..volume import RoiMask
from .common import DEFAULT_SPEC, Dzm, Szm, _check_mode, level_volume
from .sized import sized_features


def _structure(norm, mode):
    """Unit-distance connectivity: full box for chebyshev, face neighbours otherwise."""
    if mode == "3D":
        return ndimage.generate_binary_structure(3, 3 if norm == "chebyshev" else 1)
    s = np.zeros((3, 3, 3), dtype=bool)
    s[1] = ndimage.generate_binary_structure(2, 2 if norm == "chebyshev" else 1)
    return s


def zone_labels(v, norm, mode):
    """Label map of equal-grey-level linked voxels; labels are unique across grey levels."""
    st = _structure(norm, mode)
    labels = np.zeros(v.shape, dtype=np.int64)
    n = 0
    for g in np.unique(v[v > 0]):
        lab, k = ndimage.label(v == g, structure=st)
        labels[lab > 0] = lab[lab > 0] + n
        n += k
    return labels, n


def _zone_table(v, labels, n):
    """Per zone (label 1..n): grey level, size and slice index."""
    flat = labels.ravel()
    sel = flat > 0
    lab = flat[sel]
    size = np.bincount(lab, minlength=n + 1)[1:]
    level = np.zeros(n + 1, dtype=np.int64)
    level[lab] = v.ravel()[sel]
    zsl = np.zeros(n + 1, dtype=np.int64)
    zsl[lab] = np.nonzero(sel)[0] // (v.shape[1] * v.shape[2])
    return level[1:], size, zsl[1:]


def _assemble(cls, v, level, j, zsl, n_g, mode):
    width = int(j.max()) if len(j) else 1
    if mode == "3D":
        c = np.zeros((n_g, width))
        np.add.at(c, (level - 1, j - 1), 1)
        return [cls(c, float((v > 0).sum()), "3D")]
    out = []
    for k in range(v.shape[0]):
        n_v = float((v[k] > 0).sum())
        if n_v == 0:
            continue
        sel = zsl == k
        c = np.zeros((n_g, width))
        np.add.at(c, (level[sel] - 1, j[sel] - 1), 1)
        out.append(cls(c, n_v, "2D", k))
    return out


def glszm_build(vol, spec=DEFAULT_SPEC, mode="3D", n_g=None):
    _check_mode(mode)
    v = level_volume(vol)
    n_g = int(n_g or v.max())
    labels, n = zone_labels(v, spec.linkage, mode)
    level, size, zsl = _zone_table(v, labels, n)
    return _assemble(Szm, v, level, size, zsl, n_g, mode)


def gldzm_distance_map(morph, mode="3D", norm="manhattan"):
    """Distance to the ROI edge by iterative erosion; edge voxels have distance 1, outside is 0."""
    _check_mode(mode)
    m = morph.bool if isinstance(morph, RoiMask) else np.asarray(morph, dtype=bool)
    if m.ndim == 2:
        m = m[None]
    st = _structure(norm, mode)
    dist = m.astype(np.int64)
    cur = m
    while cur.any():
        cur = ndimage.binary_erosion(cur, structure=st, border_value=0)
        dist += cur
    return dist


def gldzm_build(vol, morph=None, spec=DEFAULT_SPEC, mode="3D", n_g=None):
    """Zones from the intensity ROI; zone distance is the minimum edge distance of its voxels,
    measured in the morphological mask (defaults to the intensity ROI itself)."""
    _check_mode(mode)
    v = level_volume(vol)
    n_g = int(n_g or v.max())
    if morph is None:
        morph = v > 0
    dist = gldzm_distance_map(morph, mode, spec.edge_norm)
    if dist.shape != v.shape:
        raise DataError("morphological mask and grey level volume differ in shape")
    if np.any((v > 0) & (dist == 0)):
        raise DataError("intensity ROI voxels lie outside the morphological mask")
    labels, n = zone_labels(v, spec.linkage, mode)
    level, _, zsl = _zone_table(v, labels, n)
    zd = ndimage.minimum(dist, labels, index=np.arange(1, n + 1)) if n else np.zeros(0)
    return _assemble(Dzm, v, level, np.asarray(zd, dtype=np.int64), zsl, n_g, mode)


def glszm_features(m):
    return sized_features(m)


def gldzm_features(m):
    return sized_features(m)
