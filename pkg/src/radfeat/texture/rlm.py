"""Grey level run length matrices."""
import numpy as np

from .common import DEFAULT_SPEC, Rlm, directions, level_volume
from .sized import sized_features


def _runs(v, m):
    """(slice, level, length) of every maximal run along direction m = (dx, dy, dz)."""
    off = np.array([m[2], m[1], m[0]])
    r = int(np.abs(off).max())
    P = np.pad(v, r)
    core = tuple(slice(r, r + n) for n in v.shape)
    prev = tuple(slice(r - o, r - o + n) for o, n in zip(off, v.shape))
    start = (P[core] > 0) & (P[prev] != P[core])
    pos = np.argwhere(start) + r
    level = P[tuple(pos.T)]
    z0 = pos[:, 0] - r
    length = np.ones(len(pos), dtype=np.int64)
    idx = np.arange(len(pos))
    cur = pos.copy()
    while len(idx):
        nxt = cur + off
        alive = P[tuple(nxt.T)] == level[idx]
        idx, cur = idx[alive], nxt[alive]
        length[idx] += 1
    return z0, level, length


def glrlm_build(vol, spec=DEFAULT_SPEC, mode="3D", n_g=None):
    v = level_volume(vol)
    n_g = int(n_g or v.max())
    out = []
    for m in directions(spec, mode):
        z, lv, ln = _runs(v, m)
        width = int(ln.max()) if len(ln) else 1
        if mode == "3D":
            c = np.zeros((n_g, width))
            np.add.at(c, (lv - 1, ln - 1), 1)
            out.append(Rlm(c, float((v > 0).sum()), "3D", None, m))
            continue
        for k in range(v.shape[0]):
            n_v = float((v[k] > 0).sum())
            if n_v == 0:
                continue
            sel = z == k
            c = np.zeros((n_g, width))
            np.add.at(c, (lv[sel] - 1, ln[sel] - 1), 1)
            out.append(Rlm(c, n_v, "2D", k, m))
    return out


def glrlm_features(m: Rlm) -> dict:
    return sized_features(m)
