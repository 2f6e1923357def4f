"""Bundled 4x4 worked example: grey levels, the expected texture matrices and a checker."""
from __future__ import annotations

import numpy as np

from ..texture import (NeighbourhoodSpec, gldzm_build, gldzm_distance_map, glcm_build, glrlm_build,
                       glszm_build, ngldm_build, ngtdm_build)

# rows as printed, top row first; the bottom row is y = 0
IMAGE = np.array([[1, 2, 2, 3],
                  [1, 2, 3, 3],
                  [4, 2, 4, 1],
                  [4, 1, 2, 3]])

GLCM = {  # symmetric matrices keyed by (dx, dy, dz)
    (1, 0, 0): [[0, 3, 0, 2], [3, 2, 3, 2], [0, 3, 2, 0], [2, 2, 0, 0]],
    (1, 1, 0): [[0, 2, 0, 1], [2, 2, 1, 2], [0, 1, 2, 1], [1, 2, 1, 0]],
    (0, 1, 0): [[2, 1, 2, 1], [1, 4, 1, 1], [2, 1, 2, 1], [1, 1, 1, 2]],
    (-1, 1, 0): [[0, 2, 1, 1], [2, 2, 2, 1], [1, 2, 0, 1], [1, 1, 1, 0]],
}

GLRLM = {
    (1, 0, 0): [[4, 0, 0, 0], [3, 1, 0, 0], [2, 1, 0, 0], [3, 0, 0, 0]],
    (1, 1, 0): [[4, 0, 0, 0], [3, 1, 0, 0], [2, 1, 0, 0], [3, 0, 0, 0]],
    (0, 1, 0): [[2, 1, 0, 0], [2, 0, 1, 0], [2, 1, 0, 0], [1, 1, 0, 0]],
    (-1, 1, 0): [[4, 0, 0, 0], [3, 1, 0, 0], [4, 0, 0, 0], [3, 0, 0, 0]],
}
GLSZM = [[2, 1, 0, 0, 0], [0, 0, 0, 0, 1], [1, 0, 1, 0, 0], [1, 1, 0, 0, 0]]
GLDZM_DISTANCE = [[1, 1, 1, 1], [1, 2, 2, 1], [1, 2, 2, 1], [1, 1, 1, 1]]
GLDZM = [[3, 0], [2, 0], [2, 0], [1, 1]]
NGTDM_N = [0, 2, 1, 1]
NGTDM_P = [0.0, 0.5, 0.25, 0.25]
NGTDM_S_TABLE = [0.0, 1.0, 0.625, 1.825]   # as printed
NGTDM_S = [0.0, 1.0, 0.625, 1.875]         # recomputed: |4 - 17/8| for the single level-4 pixel
NGLDM = [[0, 0, 0, 0], [0, 0, 1, 1], [0, 0, 1, 0], [1, 0, 0, 0]]  # columns: dependence k = 0..3


def volume():
    """The example as a (z, y, x) grey level volume."""
    return IMAGE[::-1][None].copy()


def _eq(got, want):
    """Exact equality after zero-padding trailing columns the builder trims."""
    if got is None:
        return False
    want = np.asarray(want)
    got = np.asarray(got)
    if got.shape[0] != want.shape[0] or got.shape[1] > want.shape[1]:
        return False
    padded = np.zeros(want.shape, dtype=got.dtype)
    padded[:, :got.shape[1]] = got
    return np.array_equal(padded, want)


def golden_checks():
    """List of (name, passed, note). The printed NGTDM s_4 is checked as is and is expected to fail."""
    v = volume()
    out = []
    cm = {m.direction: m.counts for m in glcm_build(v, mode="2D")}
    for d, want in GLCM.items():
        out.append((f"GLCM {d[:2]}", _eq(cm.get(d), want), ""))
    rl = {m.direction: m.counts for m in glrlm_build(v, mode="2D")}
    for d, want in GLRLM.items():
        out.append((f"GLRLM {d[:2]}", _eq(rl.get(d), want), ""))
    out.append(("GLSZM", _eq(glszm_build(v, mode="2D")[0].counts, GLSZM), ""))
    dist = gldzm_distance_map(v > 0, "2D")[0][::-1]
    out.append(("GLDZM distance map", _eq(dist, GLDZM_DISTANCE), ""))
    dz = gldzm_build(v, spec=NeighbourhoodSpec(linkage="manhattan"), mode="2D")[0]
    out.append(("GLDZM (4-connected zones)", _eq(dz.counts, GLDZM), ""))
    t = ngtdm_build(v, mode="2D", variant="legacy")[0]
    out.append(("NGTDM n", np.array_equal(t.n, NGTDM_N), ""))
    out.append(("NGTDM p", np.allclose(t.p, NGTDM_P, atol=1e-12), ""))
    out.append(("NGTDM s (recomputed)", np.allclose(t.s, NGTDM_S, atol=1e-12), ""))
    out.append(("NGTDM s (as printed)", np.allclose(t.s, NGTDM_S_TABLE, atol=1e-12),
                "printed s_4 = 1.825 but |4 - 17/8| = 1.875"))
    out.append(("NGLDM", _eq(ngldm_build(v, mode="2D", variant="legacy")[0].counts, NGLDM), ""))
    return out
