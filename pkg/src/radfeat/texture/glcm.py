"""Grey level co-occurrence matrices and their 25 features."""
from __future__ import annotations

import numpy as np

from ..catalogue import undefined
from .common import DEFAULT_SPEC, Glcm, directions, entropy, level_volume, shifted_pair


def glcm_build(vol, spec=DEFAULT_SPEC, mode="3D", n_g=None):
    """Symmetric co-occurrence matrices per direction (3D) or per direction and slice (2D)."""
    v = level_volume(vol)
    n_g = int(n_g or v.max())
    nz = v.shape[0]
    out = []
    for m in directions(spec, mode):
        src, dst = shifted_pair(v.shape, (m[2], m[1], m[0]))
        a, b = v[src], v[dst]
        ok = (a > 0) & (b > 0)
        z = np.broadcast_to(np.arange(nz)[src[0]][:, None, None], a.shape)[ok]
        code = (a[ok] - 1) * n_g + (b[ok] - 1)
        if mode == "3D":
            plus = np.bincount(code, minlength=n_g * n_g).reshape(n_g, n_g).astype(float)
            out.append(Glcm(plus + plus.T, float((v > 0).sum()), "3D", None, m))
            continue
        per = np.bincount(z * n_g * n_g + code, minlength=nz * n_g * n_g).reshape(nz, n_g, n_g)
        for k in range(nz):
            n_v = float((v[k] > 0).sum())
            if n_v == 0:
                continue
            plus = per[k].astype(float)
            out.append(Glcm(plus + plus.T, n_v, "2D", k, m))
    return out


def glcm_features(m: Glcm) -> dict:
    if m.empty:
        return {k: undefined("no co-occurring voxel pairs") for k in GLCM_KEYS}
    P = m.p
    n = m.n_g
    lv = np.arange(1, n + 1, dtype=float)
    I, J = np.meshgrid(lv, lv, indexing="ij")
    pi = P.sum(axis=1)
    pd = m.p_diff
    ps = m.p_sum
    kd = np.arange(n, dtype=float)
    ks = np.arange(2, 2 * n + 1, dtype=float)

    mu = float(np.sum(I * P))
    mu_d = float(np.sum(kd * pd))
    mu_s = float(np.sum(ks * ps))
    var_i = float(np.sum((lv - mu) ** 2 * pi))
    hxy = entropy(P)
    hx = entropy(pi)
    # HXY2 - HXY and HXY1 - HXY both equal the mutual information; summing it directly
    # avoids the cancellation of two nearly equal entropies
    q = np.outer(pi, pi)
    nzp = P > 0
    mi = max(0.0, float(np.sum(P[nzp] * np.log1p((P[nzp] - q[nzp]) / q[nzp]))) / np.log(2))
    f = {
        "cm.joint.max": float(P.max()),
        "cm.joint.avg": mu,
        "cm.joint.var": float(np.sum((I - mu) ** 2 * P)),
        "cm.joint.entr": hxy,
        "cm.diff.avg": mu_d,
        "cm.diff.var": float(np.sum((kd - mu_d) ** 2 * pd)),
        "cm.diff.entr": entropy(pd),
        "cm.sum.avg": mu_s,
        "cm.sum.var": float(np.sum((ks - mu_s) ** 2 * ps)),
        "cm.sum.entr": entropy(ps),
        "cm.energy": float(np.sum(P ** 2)),
        "cm.contrast": float(np.sum((I - J) ** 2 * P)),
        "cm.dissimilarity": float(np.sum(np.abs(I - J) * P)),
        "cm.inv.diff": float(np.sum(pd / (1 + kd))),
        "cm.inv.diff.norm": float(np.sum(pd / (1 + kd / n))),
        "cm.inv.diff.mom": float(np.sum(pd / (1 + kd ** 2))),
        "cm.inv.diff.mom.norm": float(np.sum(pd / (1 + (kd / n) ** 2))),
        "cm.inv.var": float(np.sum(pd[1:] / kd[1:] ** 2)),
        "cm.auto.corr": float(np.sum(I * J * P)),
        "cm.clust.tend": float(np.sum((I + J - 2 * mu) ** 2 * P)),
        "cm.clust.shade": float(np.sum((I + J - 2 * mu) ** 3 * P)),
        "cm.clust.prom": float(np.sum((I + J - 2 * mu) ** 4 * P)),
    }
    if var_i > 0:
        f["cm.corr"] = float(np.sum((I - mu) * (J - mu) * P) / var_i)
    else:
        f["cm.corr"] = undefined("single grey level: marginal variance is zero")
    if hx > 0:
        f["cm.info.corr.1"] = -mi / hx
        f["cm.info.corr.2"] = float(np.sqrt(-np.expm1(-2 * mi)))
    else:
        f["cm.info.corr.1"] = undefined("single grey level: marginal entropy is zero")
        f["cm.info.corr.2"] = undefined("single grey level: marginal entropy is zero")
    return {k: f[k] for k in GLCM_KEYS}


GLCM_KEYS = [
    "cm.joint.max", "cm.joint.avg", "cm.joint.var", "cm.joint.entr", "cm.diff.avg", "cm.diff.var",
    "cm.diff.entr", "cm.sum.avg", "cm.sum.var", "cm.sum.entr", "cm.energy", "cm.contrast",
    "cm.dissimilarity", "cm.inv.diff", "cm.inv.diff.norm", "cm.inv.diff.mom", "cm.inv.diff.mom.norm",
    "cm.inv.var", "cm.corr", "cm.auto.corr", "cm.clust.tend", "cm.clust.shade", "cm.clust.prom",
    "cm.info.corr.1", "cm.info.corr.2",
]
