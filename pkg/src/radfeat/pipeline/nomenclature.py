"""Feature names with the standard subscript: family, aggregation, modality, interpolation,
re-segmentation, discretisation and feature-specific parameters."""
from __future__ import annotations

import math
from typing import Optional

from ..catalogue import CATALOGUE, FAMILIES
from ..texture import METHODS, NeighbourhoodSpec

_INTERP = {"nearest": "NNB", "linear": "LIN", "cubic_convolution": "CCI", "cubic_spline": "CSI"}
_NORM = {"chebyshev": "δ", "euclidean": "δ-2", "manhattan": "δ-1"}
_EDGE = {"chebyshev": "l-∞", "euclidean": "l-2", "manhattan": "l-1"}
_DISCRETISED = ("ih", "cm", "rlm", "szm", "dzm", "ngt", "ngl")


def num(x) -> str:
    x = float(x)
    if math.isinf(x):
        return "∞" if x > 0 else "-∞"
    if x == int(x):
        return str(int(x))
    return repr(x)


def interpolation_tag(spec) -> Optional[str]:
    if spec is None or spec.mode == "none":
        return None
    code = _INTERP[spec.image_method]
    sp = spec.spacing[:2] if spec.mode == "2d" else spec.spacing
    sp = num(sp[0]) if len(set(sp)) == 1 else "x".join(num(s) for s in sp)
    return f"{code}:{spec.mode.upper()}:{sp}mm"


def resegmentation_tag(spec) -> Optional[str]:
    if spec is None or not spec.active:
        return None
    parts = []
    if spec.range is not None:
        a, b = spec.range
        parts.append(f"[{num(a)},∞)" if math.isinf(b) else f"[{num(a)},{num(b)}]")
    if spec.sigma is not None:
        s = f"{num(spec.sigma)}σ"
        if spec.order == "outlier_first":
            parts.insert(0, s)
        else:
            parts.append(s)
    return "RS:" + "+".join(parts)


def discretisation_tag(spec) -> Optional[str]:
    if spec is None or spec.algorithm == "none":
        return None
    if spec.algorithm == "fbn":
        return f"FBN:{int(spec.n_bins)}"
    return f"FBS:{num(spec.bin_width)}"


def ivh_tag(cfg) -> Optional[str]:
    if cfg.ivh_mode == "continuous":
        return f"FBS:{num(cfg.ivh_bin_width)}"
    if cfg.ivh_mode == "arbitrary":
        return f"FBN:{int(cfg.ivh_n_bins)}"
    return None


def parameter_tags(family, n: NeighbourhoodSpec, explicit=False):
    d = NeighbourhoodSpec()
    out = []
    dist = f"{_NORM[n.norm]}:{num(n.distance)}"
    if family in ("cm", "ngt", "ngl") and (explicit or (n.norm, n.distance) != (d.norm, d.distance)):
        out.append(dist)
    if family == "ngl" and (explicit or n.alpha != d.alpha):
        out.append(f"α:{int(n.alpha)}")
    if family in ("szm", "dzm") and (explicit or n.linkage != d.linkage):
        out.append(f"{_NORM[n.linkage]}:1")
    if family == "dzm" and (explicit or n.edge_norm != d.edge_norm):
        out.append(_EDGE[n.edge_norm])
    return out


def nomenclature(key, cfg=None, aggregation=None, explicit=False) -> str:
    """Name plus subscript, e.g. ``joint maximum_{CM,2D:avg}``.

    Optional parts are only added when they differ from the defaults, unless ``explicit``.
    """
    feat = CATALOGUE[key]
    fam = feat.family
    parts = [FAMILIES[fam][0]]
    if aggregation:
        parts.append(METHODS[aggregation].label if aggregation in METHODS else aggregation)
    if cfg is not None:
        if cfg.modality:
            parts.append(cfg.modality)
        t = interpolation_tag(cfg.interpolation)
        if t or explicit:
            parts.append(t or "INT:--")
        t = resegmentation_tag(cfg.resegmentation)
        if t or explicit:
            parts.append(t or "RS:--")
        if fam in _DISCRETISED:
            t = discretisation_tag(cfg.discretisation)
            if t or explicit:
                parts.append(t or "DIS:--")
        elif fam == "ivh":
            t = ivh_tag(cfg)
            if t:
                parts.append(t)
        parts.extend(parameter_tags(fam, cfg.neighbourhood, explicit))
    return f"{feat.name}_{{{','.join(parts)}}}"
