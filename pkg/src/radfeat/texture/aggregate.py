"""Aggregation of directional / per-slice texture matrices into single feature values."""
from collections import namedtuple

import numpy as np

from ..catalogue import undefined
from ..errors import ConfigurationError
from .glcm import GLCM_KEYS, glcm_build, glcm_features
from .neighbourhood import NGTDM_KEYS, ngldm_build, ngldm_features, ngtdm_build, ngtdm_features
from .rlm import glrlm_build, glrlm_features
from .sized import keys as sized_keys
from .zones import gldzm_build, gldzm_features, glszm_build, glszm_features

AggregationMethod = namedtuple("AggregationMethod", "code label mode kind")

METHODS = {a.code: a for a in [
    AggregationMethod("BTW3", "2D:avg", "2D", "avg"),
    AggregationMethod("SUJT", "2D:mrg", "2D", "slice_merge"),
    AggregationMethod("ZW7Z", "2D:vmrg", "2D", "merge"),
    AggregationMethod("ITBB", "3D:avg", "3D", "avg"),
    AggregationMethod("IAZD", "3D:mrg", "3D", "merge"),
    AggregationMethod("8QNN", "2D", "2D", "avg"),
    AggregationMethod("62GR", "2D:mrg", "2D", "merge"),
    AggregationMethod("KOBO", "3D", "3D", "merge"),
]}

DIRECTIONAL = ("BTW3", "SUJT", "ZW7Z", "ITBB", "IAZD")
NON_DIRECTIONAL = ("8QNN", "62GR", "KOBO")
ALLOWED = {"cm": DIRECTIONAL, "rlm": DIRECTIONAL,
           "szm": NON_DIRECTIONAL, "dzm": NON_DIRECTIONAL, "ngt": NON_DIRECTIONAL, "ngl": NON_DIRECTIONAL}

FEATURE_FN = {"cm": glcm_features, "rlm": glrlm_features, "szm": glszm_features,
              "dzm": gldzm_features, "ngt": ngtdm_features, "ngl": ngldm_features}
BUILDERS = {"cm": glcm_build, "rlm": glrlm_build, "szm": glszm_build,
            "dzm": gldzm_build, "ngt": ngtdm_build, "ngl": ngldm_build}
FEATURE_KEYS = {"cm": GLCM_KEYS, "ngt": NGTDM_KEYS,
                **{f: sized_keys(f) for f in ("rlm", "szm", "dzm", "ngl")}}


class TextureFeatureSet(dict):
    """Feature values of one family under one aggregation method."""

    def __init__(self, values, method, skipped=0):
        super().__init__(values)
        self.method = method
        self.skipped = skipped


def method(code):
    try:
        return METHODS[code]
    except KeyError:
        raise ConfigurationError(f"unknown aggregation method {code!r}") from None


def _mean(dicts, keys):
    out = {}
    for k in keys:
        vals = [d[k] for d in dicts]
        ok = [v for v in vals if not np.isnan(v)]
        if ok:
            out[k] = float(np.mean(ok))
        else:
            out[k] = undefined(getattr(vals[0], "reason", "undefined for every matrix"))
    return out


def aggregate(matrices, code):
    """Feature values from a set of matrices of one family under one aggregation method.

    Empty matrices (no pairs, runs or zones) are skipped; averages ignore undefined values.
    """
    matrices = list(matrices)
    if not matrices:
        raise ConfigurationError("no matrices to aggregate")
    fams = {m.family for m in matrices}
    if len(fams) != 1:
        raise TypeError(f"cannot aggregate matrices of different families: {sorted(fams)}")
    fam = fams.pop()
    a = method(code)
    if code not in ALLOWED[fam]:
        raise ConfigurationError(f"aggregation {code} is not defined for {fam}")
    modes = {m.mode for m in matrices}
    if modes != {a.mode}:
        raise ConfigurationError(f"aggregation {code} needs {a.mode} matrices, got {sorted(modes)}")
    keys = FEATURE_KEYS[fam]
    fn = FEATURE_FN[fam]
    cls = type(matrices[0])
    full = [m for m in matrices if not m.empty]
    skipped = len(matrices) - len(full)
    if not full:
        vals = {k: undefined("all matrices are empty") for k in keys}
    elif a.kind == "avg":
        vals = _mean([fn(m) for m in full], keys)
    elif a.kind == "slice_merge":
        slices = sorted({m.slice for m in full})
        vals = _mean([fn(cls.merge([m for m in full if m.slice == s])) for s in slices], keys)
    else:
        vals = fn(cls.merge(full))
    return TextureFeatureSet(vals, a, skipped)


def methods_for(family, approach):
    """Aggregation methods that are valid for a family under a 2D or 3D approach."""
    ok = ALLOWED[family]
    if approach == "2D":
        return [c for c in ok if METHODS[c].mode == "2D"]
    return list(ok)


def compute_texture(vol, n_g, approach="3D", spec=None, morph=None, families=None, variant="ibsi"):
    """All valid (feature, aggregation) values for the requested families.

    Returns {family: {code: {key: value}}}.
    """
    from .common import DEFAULT_SPEC
    spec = spec or DEFAULT_SPEC
    if approach not in ("2D", "3D"):
        raise ConfigurationError(f"approach must be 2D or 3D, got {approach!r}")
    families = families or list(ALLOWED)
    out = {}
    for fam in families:
        res = {}
        for mode in ("2D", "3D"):
            codes = [c for c in methods_for(fam, approach) if METHODS[c].mode == mode]
            if not codes:
                continue
            kw = dict(spec=spec, mode=mode, n_g=n_g)
            if fam == "dzm":
                kw["morph"] = morph
            if fam in ("ngt", "ngl"):
                kw["variant"] = variant
            mats = BUILDERS[fam](vol, **kw)
            for c in codes:
                res[c] = aggregate(mats, c)
        out[fam] = res
    return out
