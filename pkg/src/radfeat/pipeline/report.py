"""Feature reports: ordered records, CSV / JSON serialisation and figures."""
from __future__ import annotations

import csv
import hashlib
import io
import json
import math
import os
from dataclasses import dataclass, field

import numpy as np

from ..errors import DataError

CSV_COLUMNS = ("ibsi_id", "family", "feature", "aggregation", "nomenclature", "value")


@dataclass(frozen=True)
class FeatureRecord:
    ibsi_id: str
    family: str
    feature: str
    key: str
    aggregation: str      # aggregation label (e.g. "3D:mrg") or "" when not applicable
    nomenclature: str
    value: float

    @property
    def defined(self):
        return not math.isnan(self.value)

    @property
    def reason(self):
        return getattr(self.value, "reason", "undefined") if not self.defined else ""


@dataclass
class FeatureReport:
    records: list = field(default_factory=list)
    fingerprint: str = ""
    config_text: str = ""
    artifacts: dict = field(default_factory=dict, compare=False, repr=False)

    def __len__(self):
        return len(self.records)

    def __iter__(self):
        return iter(self.records)

    def find(self, key, aggregation=None):
        """Records for a feature key, optionally restricted to one aggregation label."""
        return [r for r in self.records if r.key == key
                and (aggregation is None or r.aggregation == aggregation)]

    def value(self, key, aggregation=None):
        hits = self.find(key, aggregation)
        if len(hits) != 1:
            raise KeyError(f"{key} {aggregation or ''}: {len(hits)} matching records")
        return hits[0].value

    def aggregations(self):
        return sorted({r.aggregation for r in self.records if r.aggregation})

    def digest(self) -> str:
        return hashlib.sha256(to_csv(self).encode()).hexdigest()


def format_value(v) -> str:
    if math.isnan(v):
        return "NaN:" + getattr(v, "reason", "undefined")
    return format(float(v), ".17g")


def _quoted(s):
    return '"' + s.replace('"', '""') + '"'


def to_csv(report: FeatureReport) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_COLUMNS)
    for r in report.records:
        line = io.StringIO()
        csv.writer(line, lineterminator="").writerow(
            [r.ibsi_id, r.family, r.feature, r.aggregation, r.nomenclature])
        tok = format_value(r.value)
        buf.write(line.getvalue() + "," + (_quoted(tok) if tok.startswith("NaN") else tok) + "\n")
    return buf.getvalue()


def parse_csv_value(tok: str) -> float:
    return float("nan") if tok.startswith("NaN") else float(tok)


def to_json(report: FeatureReport, diag=None) -> str:
    recs = []
    for r in report.records:
        d = {"ibsi_id": r.ibsi_id, "family": r.family, "feature": r.feature, "key": r.key,
             "aggregation": r.aggregation, "nomenclature": r.nomenclature}
        if r.defined:
            d["value"] = float(r.value)
        else:
            d["value"] = None
            d["undefined"] = r.reason
        recs.append(d)
    doc = {"fingerprint": report.fingerprint, "config": report.config_text, "records": recs}
    if diag is not None:
        doc["diagnostics"] = [_json_safe(row) for row in diag.to_rows()]
    return json.dumps(doc, indent=1, ensure_ascii=False, allow_nan=False) + "\n"


def _json_safe(row):
    v = row["value"]
    if isinstance(v, float) and math.isnan(v):
        row = dict(row, value=None)
    return row


def _write_text(path, text):
    try:
        with open(path, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
    except OSError as exc:
        raise DataError(f"cannot write {path}: {exc.strerror}") from None


def write_report(report: FeatureReport, diag, fmt: str, path):
    if fmt == "csv":
        _write_text(path, to_csv(report))
    elif fmt == "json":
        _write_text(path, to_json(report, diag))
    else:
        raise ValueError(f"unknown report format {fmt!r}")


def diagnostics_csv(diag) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(("stage", "name", "value"))
    for r in diag.records:
        v = r.value
        if isinstance(v, tuple):
            v = " ".join(format(x, ".17g") if isinstance(x, float) else str(x) for x in v)
        elif isinstance(v, float):
            v = format(v, ".17g")
        w.writerow((r.stage, r.name, v))
    return buf.getvalue()


# -------------------------------------------------------------------- figures

def write_figures(report: FeatureReport, prefix) -> list:
    """Render the IVH curve and intensity histogram next to the report; returns written paths."""
    import matplotlib
    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    out = []
    meta = {"Software": None}
    ivh = report.artifacts.get("ivh")
    if ivh is not None:
        fig, ax = plt.subplots(figsize=(5, 3.5))
        ax.step(ivh.levels, ivh.nu, where="post", color="C0")
        ax.set_xlabel("intensity")
        ax.set_ylabel("fractional volume")
        ax.set_ylim(0, 1.02)
        ax.set_title(f"intensity-volume histogram ({ivh.mode})")
        fig.tight_layout()
        p = f"{prefix}_ivh.png"
        _savefig(fig, p, meta)
        plt.close(fig)
        out.append(p)
    hist = report.artifacts.get("histogram")
    if hist is not None:
        h = np.asarray(hist)
        fig, ax = plt.subplots(figsize=(5, 3.5))
        ax.bar(np.arange(1, len(h) + 1), h, width=1.0, color="C1", edgecolor="none")
        ax.set_xlabel("grey level")
        ax.set_ylabel("voxels")
        ax.set_title("intensity histogram")
        fig.tight_layout()
        p = f"{prefix}_histogram.png"
        _savefig(fig, p, meta)
        plt.close(fig)
        out.append(p)
    return out


def _savefig(fig, path, meta):
    try:
        fig.savefig(path, dpi=100, metadata=meta)
    except OSError as exc:
        raise DataError(f"cannot write {path}: {exc.strerror}") from None


def report_paths(out, fmt) -> tuple:
    """Report path plus the prefix used for figures and side files."""
    root, ext = os.path.splitext(str(out))
    if not ext:
        out = f"{out}.{fmt}"
    return str(out), root
