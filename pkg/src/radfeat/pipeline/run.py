"""End-to-end orchestration: segmentation, interpolation, re-segmentation, extraction,
discretisation and feature calculation."""
from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor

import numpy as np

from ..catalogue import CATALOGUE, keys_for, undefined
from ..errors import DimensionMismatchError, EmptyRoiError
from ..intensity import (histogram, histogram_features, ivh_features, local_intensity_features,
                         statistical_features)
from ..morphology import SubsamplePolicy, compute_morphology
from ..preprocess import discretise, discretised_volume, interpolate, prepare_ivh, resegment
from ..texture import METHODS, aggregate
from ..texture.aggregate import BUILDERS, FEATURE_KEYS
from ..volume import (ContourSet, ImageVolume, RoiMask, RoiMaskPair, extract_intensity_set,
                      rasterize_contours)
from .config import ProcessingConfig
from .diagnostics import DiagnosticSet, image_diagnostics, roi_diagnostics
from .nomenclature import nomenclature
from .report import FeatureRecord, FeatureReport

TEXTURE = ("cm", "rlm", "szm", "dzm", "ngt", "ngl")
THREADS_ENV = "RADFEAT_THREADS"


def default_threads():
    v = os.environ.get(THREADS_ENV)
    if v:
        try:
            return max(1, int(v))
        except ValueError:
            pass
    return os.cpu_count() or 1


def segment(img: ImageVolume, roi) -> RoiMaskPair:
    if isinstance(roi, ContourSet):
        pair = RoiMaskPair.from_mask(rasterize_contours(roi, img.geometry))
    elif isinstance(roi, RoiMask):
        pair = RoiMaskPair.from_mask(roi)
    elif isinstance(roi, RoiMaskPair):
        pair = roi
    else:
        raise TypeError(f"unsupported ROI source {type(roi).__name__}")
    if not pair.geometry.same_as(img.geometry):
        raise DimensionMismatchError(
            f"ROI grid {pair.geometry.dims} does not match image grid {img.geometry.dims}")
    return pair


def _require(pair: RoiMaskPair, stage):
    if pair.intensity.count == 0 or pair.morphological.count == 0:
        raise EmptyRoiError(f"ROI is empty after {stage}", stage=stage)


def _texture_box(mask):
    idx = np.nonzero(mask)
    return tuple(slice(int(i.min()), int(i.max()) + 1) for i in idx)


def run_pipeline(img: ImageVolume, roi, cfg: ProcessingConfig, threads=None):
    """Process one image and ROI under ``cfg``; returns (FeatureReport, DiagnosticSet)."""
    cfg.validate()
    diag = DiagnosticSet()
    if np.isnan(img.data).any():
        img = ImageVolume(img.geometry, np.nan_to_num(img.data, nan=0.0))

    pair = segment(img, roi)
    _require(pair, "segmentation")
    image_diagnostics(diag, "initial", img)
    roi_diagnostics(diag, "initial", img, pair)

    img, pair = interpolate(img, pair, cfg.interpolation)
    _require(pair, "interpolation")
    image_diagnostics(diag, "interpolated", img)
    roi_diagnostics(diag, "interpolated", img, pair)

    pair = resegment(pair, img, cfg.resegmentation)
    _require(pair, "re-segmentation")
    roi_diagnostics(diag, "re-segmented", img, pair)

    s = extract_intensity_set(img, pair.intensity)
    if s.count == 0:
        raise EmptyRoiError("no voxels to extract", stage="extraction")
    fams = set(cfg.families)
    d = None
    if fams & {"ih", *TEXTURE}:
        d = discretise(s, cfg.discretisation, cfg.resegmentation)

    units = []       # (family, aggregation code or None, thunk) in report order
    artifacts = {}
    if "morph" in fams:
        policy = SubsamplePolicy(seed=cfg.seed)
        units.append(("morph", None, lambda: compute_morphology(pair, img, policy=policy)))
    if "loc" in fams:
        units.append(("loc", None, lambda: local_intensity_features(img, pair.intensity)))
    if "stat" in fams:
        units.append(("stat", None, lambda: statistical_features(s)))
    if "ih" in fams:
        artifacts["histogram"] = histogram(d.levels, d.n_g)
        units.append(("ih", None, lambda: histogram_features(d)))
    if "ivh" in fams:
        ivh = prepare_ivh(s, cfg.ivh_mode, cfg.resegmentation, cfg.ivh_bin_width, cfg.ivh_n_bins)
        artifacts["ivh"] = ivh
        units.append(("ivh", None, lambda: ivh_features(ivh)))

    tex = [f for f in TEXTURE if f in fams]
    if tex:
        box = _texture_box(pair.morphological.labels)
        vol = discretised_volume(d, pair.intensity)[box]
        morph = pair.morphological.bool[box]
        for fam in tex:
            for mode in ("2D", "3D"):
                codes = [c for c in cfg.aggregations_for(fam) if METHODS[c].mode == mode]
                if codes:
                    units.append((fam, tuple(codes), _texture_unit(fam, mode, codes, vol, morph, d.n_g, cfg)))

    n = threads if threads is not None else default_threads()
    if n > 1 and len(units) > 1:
        with ThreadPoolExecutor(max_workers=n) as ex:
            results = list(ex.map(lambda u: u[2](), units))
    else:
        results = [u[2]() for u in units]

    records = []
    skipped = {}
    for (fam, codes, _), res in zip(units, results):
        if codes is None:
            records.extend(_records(fam, None, res, cfg))
        else:
            for c in codes:
                records.extend(_records(fam, c, res[c], cfg))
                skipped[(fam, c)] = res[c].skipped
    artifacts["skipped_matrices"] = skipped
    report = FeatureReport(records, cfg.fingerprint(), cfg.to_text(), artifacts)
    return report, diag


def _texture_unit(fam, mode, codes, vol, morph, n_g, cfg):
    def run():
        kw = dict(spec=cfg.neighbourhood, mode=mode, n_g=n_g)
        if fam == "dzm":
            kw["morph"] = morph
        mats = BUILDERS[fam](vol, **kw)
        return {c: aggregate(mats, c) for c in codes}
    return run


def _records(fam, code, values, cfg):
    keys = FEATURE_KEYS[fam] if fam in FEATURE_KEYS else keys_for(fam)
    label = METHODS[code].label if code else ""
    out = []
    for k in keys:
        v = values.get(k, undefined("not computed"))
        f = CATALOGUE[k]
        out.append(FeatureRecord(f.id, fam, f.name, k, label, nomenclature(k, cfg, code), v))
    return out
