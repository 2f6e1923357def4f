"""Shared test utilities: random texture volumes and oracle comparisons."""
import math

import numpy as np

import oracles
from radfeat.texture import (METHODS, compute_texture, gldzm_build, glcm_build, glcm_features,
                             glrlm_build, glszm_build, ngldm_build, ngtdm_build, ngtdm_features,
                             sized_features)


def random_volume(rng, max_side=6, max_levels=6):
    """Random (z, y, x) grey level volume with a random ROI (0 outside); never empty."""
    shape = tuple(int(s) for s in rng.integers(1, max_side + 1, size=3))
    n_g = int(rng.integers(1, max_levels + 1))
    v = rng.integers(1, n_g + 1, size=shape)
    keep = rng.random(shape) < rng.uniform(0.4, 1.0)
    if not keep.any():
        keep.flat[rng.integers(keep.size)] = True
    v = np.where(keep, v, 0)
    return v, n_g


def pad_equal(a, b):
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if a.shape[0] != b.shape[0]:
        return False
    w = max(a.shape[1], b.shape[1])
    pa = np.zeros((a.shape[0], w))
    pb = np.zeros((a.shape[0], w))
    pa[:, :a.shape[1]] = a
    pb[:, :b.shape[1]] = b
    return np.array_equal(pa, pb)


def close(a, b, rtol=1e-10, atol=1e-12):
    if math.isnan(a) or math.isnan(b):
        return math.isnan(a) and math.isnan(b)
    return abs(a - b) <= atol + rtol * abs(b)


def matrix_mismatches(v, n_g):
    """Names of every (family, mode, unit) whose matrix differs from the enumeration oracle."""
    bad = []
    for mode in ("2D", "3D"):
        got = {(m.slice, m.direction): m for m in glcm_build(v, mode=mode, n_g=n_g)}
        want = oracles.glcm(v, mode, n_g)
        if set(got) != set(want):
            bad.append(("cm", mode, "keys"))
        for k, (M, nv) in want.items():
            if k in got and not (pad_equal(got[k].counts, M) and got[k].n_v == nv):
                bad.append(("cm", mode, k))
        got = {(m.slice, m.direction): m for m in glrlm_build(v, mode=mode, n_g=n_g)}
        want = oracles.glrlm(v, mode, n_g)
        if set(got) != set(want):
            bad.append(("rlm", mode, "keys"))
        for k, (M, nv) in want.items():
            if k in got and not (pad_equal(got[k].counts, M) and got[k].n_v == nv):
                bad.append(("rlm", mode, k))
        for fam, build, ref in (("szm", glszm_build, oracles.glszm), ("dzm", gldzm_build, oracles.gldzm),
                                ("ngl", ngldm_build, oracles.ngldm)):
            got = {m.slice: m for m in build(v, mode=mode, n_g=n_g)}
            want = ref(v, mode, n_g)
            if set(got) != set(want):
                bad.append((fam, mode, "keys"))
            for k, (M, nv) in want.items():
                if k in got and not (pad_equal(got[k].counts, M) and got[k].n_v == nv):
                    bad.append((fam, mode, k))
        got = {m.slice: m for m in ngtdm_build(v, mode=mode, n_g=n_g)}
        want = oracles.ngtdm(v, mode, n_g)
        if set(got) != set(want):
            bad.append(("ngt", mode, "keys"))
        for k, (n, s, nv) in want.items():
            # n and n_v are counts (exact); s is a sum of real differences (1e-12)
            if k in got and not (np.array_equal(got[k].n, n) and got[k].n_v == nv
                                 and np.allclose(got[k].s, s, rtol=1e-12, atol=1e-12)):
                bad.append(("ngt", mode, k))
    return bad


def feature_mismatches(v, n_g, rtol=1e-10):
    """(family, unit, key, got, want) for per-matrix features that differ from direct formulas."""
    bad = []
    for mode in ("2D", "3D"):
        for m in glcm_build(v, mode=mode, n_g=n_g):
            if m.empty:
                continue
            got = glcm_features(m)
            want = oracles.glcm_features(m.counts)
            bad += [("cm", (m.slice, m.direction), k, got[k], want[k]) for k in want
                    if not close(got[k], want[k], rtol)]
        for fam, build in (("rlm", glrlm_build), ("szm", glszm_build), ("dzm", gldzm_build),
                           ("ngl", ngldm_build)):
            for m in build(v, mode=mode, n_g=n_g):
                if m.empty:
                    continue
                got = sized_features(m)
                want = oracles.sized_features(fam, m.counts, m.n_v)
                bad += [(fam, m.slice, k, got[k], want[k]) for k in want if not close(got[k], want[k], rtol)]
        for m in ngtdm_build(v, mode=mode, n_g=n_g):
            if m.empty:
                continue
            got = ngtdm_features(m)
            want = oracles.ngtdm_features(m.n, m.s)
            bad += [("ngt", m.slice, k, got[k], want[k]) for k in want if not close(got[k], want[k], rtol)]
    return bad


def aggregate_mismatches(v, n_g, rtol=1e-10):
    """Aggregated values from compute_texture against oracle matrices and oracle aggregation."""
    res = compute_texture(v, n_g, "3D")
    bad = []
    mats = {}
    for mode in ("2D", "3D"):
        mats[("cm", mode)] = oracles.glcm(v, mode, n_g)
        mats[("rlm", mode)] = oracles.glrlm(v, mode, n_g)
        mats[("szm", mode)] = oracles.glszm(v, mode, n_g)
        mats[("dzm", mode)] = oracles.gldzm(v, mode, n_g)
        mats[("ngl", mode)] = oracles.ngldm(v, mode, n_g)
        mats[("ngt", mode)] = oracles.ngtdm(v, mode, n_g)
    for fam, by_code in res.items():
        for code, got in by_code.items():
            a = METHODS[code]
            m = mats[(fam, a.mode)]
            if fam in ("cm", "rlm"):
                want = oracles.aggregate_directional(fam, m, a.kind)
            else:
                want = oracles.aggregate_zone(fam, m, a.kind)
            bad += [(fam, code, k, got[k], want[k]) for k in want if not close(got[k], want[k], rtol)]
    return bad
