"""Per-stage descriptors of how the image and ROI masks change during processing."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..volume import ImageVolume, RoiMaskPair

IMAGE_STAGES = ("initial", "interpolated")
ROI_STAGES = ("initial", "interpolated", "re-segmented")


@dataclass(frozen=True)
class DiagnosticRecord:
    stage: str
    name: str
    value: object      # int, float or an (x, y, z) tuple


@dataclass
class DiagnosticSet:
    records: list = field(default_factory=list)

    def add(self, stage, name, value):
        self.records.append(DiagnosticRecord(stage, name, value))

    def get(self, stage, name):
        for r in self.records:
            if r.stage == stage and r.name == name:
                return r.value
        raise KeyError((stage, name))

    def stage(self, stage):
        return {r.name: r.value for r in self.records if r.stage == stage}

    def to_rows(self):
        return [{"stage": r.stage, "name": r.name,
                 "value": list(r.value) if isinstance(r.value, tuple) else r.value}
                for r in self.records]


def image_diagnostics(ds: DiagnosticSet, stage, img: ImageVolume):
    g = img.geometry
    ds.add(stage, "img.dim", tuple(int(d) for d in g.dims))
    ds.add(stage, "img.vox.dim", tuple(float(s) for s in g.spacing))
    ds.add(stage, "img.mean", float(np.mean(img.data)))
    ds.add(stage, "img.min", float(np.min(img.data)))
    ds.add(stage, "img.max", float(np.max(img.data)))


def roi_diagnostics(ds: DiagnosticSet, stage, img: ImageVolume, pair: RoiMaskPair):
    im, mm = pair.intensity, pair.morphological
    ds.add(stage, "roi.int.mask.dim", tuple(int(d) for d in im.geometry.dims))
    ds.add(stage, "roi.int.mask.bb.dim", tuple(im.bounding_box()))
    ds.add(stage, "roi.morph.mask.bb.dim", tuple(mm.bounding_box()))
    ds.add(stage, "roi.int.mask.vox", int(im.count))
    ds.add(stage, "roi.morph.mask.vox", int(mm.count))
    vals = img.data[im.labels.astype(bool)]
    if len(vals):
        ds.add(stage, "roi.int.mask.mean", float(vals.mean()))
        ds.add(stage, "roi.int.mask.min", float(vals.min()))
        ds.add(stage, "roi.int.mask.max", float(vals.max()))
    else:
        for k in ("mean", "min", "max"):
            ds.add(stage, f"roi.int.mask.{k}", float("nan"))
