import csv
import gzip
import io
import json
import math
import struct
from dataclasses import replace

import numpy as np
import pytest

from radfeat.catalogue import CATALOGUE, undefined
from radfeat.errors import (ConfigurationError, DataError, DimensionMismatchError, EmptyRoiError,
                            TruncatedFileError, UnsupportedFormatError)
from radfeat.pipeline import cli
from radfeat.pipeline.config import ProcessingConfig, dump_config, load_config, parse_config, preset
from radfeat.pipeline.io import (detect_format, load_mask, load_volume, read_nifti, read_raw,
                                 save_volume, write_nifti, write_raw)
from radfeat.pipeline.nomenclature import nomenclature
from radfeat.pipeline.report import (CSV_COLUMNS, FeatureRecord, FeatureReport, parse_csv_value,
                                     to_csv, to_json, write_figures, write_report)
from radfeat.pipeline.run import run_pipeline
from radfeat.pipeline.synthetic import synthetic_ct
from radfeat.preprocess import DiscretisationSpec, InterpolationSpec, ResegmentationSpec
from radfeat.volume import ContourSet, ImageVolume, RoiMask, RoiMaskPair

STAT_IH = ("mean", "var", "skew", "kurt", "median", "min", "p10", "p90", "max", "iqr", "range",
           "mad", "rmad", "medad", "cov", "qcod")


@pytest.fixture(scope="module")
def small_ct():
    return synthetic_ct(32, seed=3)


# ------------------------------------------------------------------ config

def test_presets_match_table():
    a, c, d, e = preset("A"), preset("C"), preset("d"), preset("E")
    assert a.approach == "2D" and a.interpolation.mode == "none"
    assert a.resegmentation.range == (-500, 400)
    assert (a.discretisation.algorithm, a.discretisation.bin_width) == ("fbs", 25)
    assert c.approach == "3D" and c.interpolation.spacing == (2, 2, 2)
    assert c.interpolation.image_method == "linear" and c.resegmentation.range == (-1000, 400)
    assert c.ivh_mode == "continuous" and c.ivh_bin_width == 2.5
    assert d.resegmentation.range is None and d.resegmentation.sigma == 3
    assert e.interpolation.image_method == "cubic_spline" and e.interpolation.mask_method == "linear"
    assert e.resegmentation.range == (-500, 400) and e.resegmentation.sigma == 3
    assert e.discretisation.n_bins == 32 and e.ivh_mode == "arbitrary" and e.ivh_n_bins == 1000
    with pytest.raises(ConfigurationError):
        preset("F")


def test_config_validation():
    with pytest.raises(ConfigurationError):
        ProcessingConfig(approach="4D")
    with pytest.raises(ConfigurationError):
        ProcessingConfig(approach="2D", interpolation=InterpolationSpec("3d", 1))
    with pytest.raises(ConfigurationError):
        ProcessingConfig(families=("cm", "wavelet"))
    with pytest.raises(ConfigurationError):
        ProcessingConfig(discretisation=DiscretisationSpec("fbs", bin_width=10))
    ProcessingConfig(discretisation=DiscretisationSpec("fbs", bin_width=10), allow_unbounded_fbs=True)
    with pytest.raises(ConfigurationError):
        ProcessingConfig(ivh_mode="continuous", ivh_bin_width=1)
    with pytest.raises(ConfigurationError):
        ProcessingConfig(approach="2D", aggregations=("ITBB",))
    with pytest.raises(ConfigurationError):
        ProcessingConfig(aggregations=("XXXX",))


def test_aggregations_for_2d_excludes_volumetric():
    a = preset("A")
    assert a.aggregations_for("cm") == ["BTW3", "SUJT", "ZW7Z"]
    assert a.aggregations_for("szm") == ["8QNN", "62GR"]
    assert "ITBB" in preset("C").aggregations_for("cm")


@pytest.mark.parametrize("name", "ABCDE")
def test_config_text_round_trip(name):
    cfg = preset(name)
    back = parse_config(dump_config(cfg))
    assert back == cfg
    assert back.fingerprint() == cfg.fingerprint()


def test_config_file_overrides(tmp_path):
    p = tmp_path / "c.ini"
    p.write_text("[general]\nbase = C\nseed = 7\n\n[discretisation]\nbin_width = 10  # HU\n")
    cfg = load_config(p)
    assert cfg.seed == 7 and cfg.discretisation.bin_width == 10
    assert cfg.interpolation == preset("C").interpolation
    assert cfg.fingerprint() != preset("C").fingerprint()
    assert "bin_width = 10.0" in cfg.to_text()


@pytest.mark.parametrize("text", ["[bogus]\nx = 1\n", "[general]\ncolour = red\n",
                                  "[discretisation]\nn_bins = many\n", "no section\n",
                                  "[general]\nbase = Q\n"])
def test_config_file_errors(text):
    with pytest.raises(ConfigurationError):
        parse_config(text)


def test_config_missing_file(tmp_path):
    with pytest.raises(ConfigurationError):
        load_config(tmp_path / "absent.ini")


# ------------------------------------------------------------ nomenclature

def test_nomenclature_examples():
    assert nomenclature("cm.joint.max", None, "BTW3") == "joint maximum_{CM,2D:avg}"
    assert nomenclature("cm.joint.max", None, "SUJT") == "joint maximum_{CM,2D:mrg}"
    cfg = ProcessingConfig(modality="PET:SUV", resegmentation=ResegmentationSpec((0, math.inf)),
                           discretisation=DiscretisationSpec("fbs", bin_width=0.2))
    assert nomenclature("ih.mean", cfg) == "mean_{IH,PET:SUV,RS:[0,∞),FBS:0.2}"
    assert nomenclature("stat.mean", ProcessingConfig()) == "mean_{IS}"
    assert nomenclature("morph.vol") == "volume_{MORPH}"


def test_nomenclature_preset_c():
    c = preset("C")
    assert nomenclature("cm.joint.max", c, "IAZD") == \
        "joint maximum_{CM,3D:mrg,LIN:3D:2mm,RS:[-1000,400],FBS:25}"
    assert nomenclature("ivh.auc", c) == "area under the IVH curve_{IVH,LIN:3D:2mm,RS:[-1000,400],FBS:2.5}"
    assert "RS:[-500,400]+3σ" in nomenclature("stat.mean", preset("E"))


def test_nomenclature_parameters():
    cfg = replace(ProcessingConfig(), neighbourhood=replace(ProcessingConfig().neighbourhood, alpha=1))
    assert nomenclature("ngl.lde", cfg, "KOBO").endswith(",α:1}")
    assert "δ:1" in nomenclature("cm.joint.max", ProcessingConfig(), "ITBB", explicit=True)


def test_catalogue_ids_are_four_characters():
    assert len(CATALOGUE) > 150
    for key, f in CATALOGUE.items():
        assert len(f.id) == 4 and f.id.isalnum() and f.id.upper() == f.id, key


# ---------------------------------------------------------------------- I/O

def _random_volume(rng, shape=(3, 4, 5)):
    return ImageVolume.from_array(rng.normal(size=shape).astype(np.float32),
                                  spacing=(0.5, 0.75, 2.0), origin=(-10, 5, 2.5))


@pytest.mark.parametrize("name", ["v.nii", "v.nii.gz", "v.rhdr"])
def test_volume_round_trip(tmp_path, name):
    vol = _random_volume(np.random.default_rng(30))
    p = tmp_path / name
    save_volume(p, vol)
    back = load_volume(p)
    assert back.geometry.same_as(vol.geometry)
    assert np.array_equal(back.data, vol.data)


def test_int16_nifti_loads_integral(tmp_path):
    a = np.random.default_rng(31).integers(-1024, 3000, size=(2, 3, 4))
    vol = ImageVolume.from_array(a)
    write_nifti(tmp_path / "ct.nii", vol, dtype="int16")
    back = read_nifti(tmp_path / "ct.nii")
    assert back.data.dtype == np.float64
    assert np.array_equal(back.data, a)


def test_nifti_scaling_and_rounding(tmp_path):
    p = tmp_path / "s.nii"
    write_nifti(p, ImageVolume.from_array(np.arange(6).reshape(1, 2, 3)), dtype="int16")
    raw = bytearray(p.read_bytes())
    struct.pack_into("<2f", raw, 112, 2.0, -1024.0)
    p.write_bytes(bytes(raw))
    assert read_nifti(p).data.ravel().tolist() == [2 * v - 1024 for v in range(6)]


def test_nifti_qform_flip(tmp_path):
    p = tmp_path / "q.nii"
    a = np.arange(6.0).reshape(1, 2, 3)
    write_nifti(p, ImageVolume.from_array(a, spacing=(2, 3, 4)))
    raw = bytearray(p.read_bytes())
    struct.pack_into("<2h", raw, 252, 1, 0)                        # qform only
    struct.pack_into("<6f", raw, 256, 0, 0, 1, 10, 20, 30)         # 180 degrees about z
    p.write_bytes(bytes(raw))
    v = read_nifti(p)
    # x and y run backwards from the stored origin: first stored voxel sits at (10, 20)
    assert v.geometry.spacing == (2, 3, 4)
    assert v.geometry.origin == (10 - 2 * 2, 20 - 3 * 1, 30)
    assert v.data[0, -1, -1] == a[0, 0, 0]
    assert v.data[0, 0, 0] == a[0, -1, -1]


def test_nifti_oblique_rejected(tmp_path):
    p = tmp_path / "o.nii"
    write_nifti(p, ImageVolume.from_array(np.zeros((2, 2, 2))))
    raw = bytearray(p.read_bytes())
    struct.pack_into("<f", raw, 284, 0.3)       # srow_x[1]
    p.write_bytes(bytes(raw))
    with pytest.raises(UnsupportedFormatError):
        read_nifti(p)


def test_nifti_errors(tmp_path):
    p = tmp_path / "t.nii"
    write_nifti(p, ImageVolume.from_array(np.zeros((4, 4, 4))))
    raw = p.read_bytes()
    p.write_bytes(raw[:-10])
    with pytest.raises(TruncatedFileError):
        read_nifti(p)
    p.write_bytes(raw[:100])
    with pytest.raises(TruncatedFileError):
        read_nifti(p)
    bad = bytearray(raw)
    struct.pack_into("<h", bad, 70, 64)          # float64 is outside the supported subset
    p.write_bytes(bytes(bad))
    with pytest.raises(UnsupportedFormatError):
        read_nifti(p)
    be = bytearray(raw)
    struct.pack_into(">i", be, 0, 348)
    p.write_bytes(bytes(be))
    with pytest.raises(UnsupportedFormatError):
        read_nifti(p)
    p.write_bytes(gzip.compress(raw)[:40])
    with pytest.raises(TruncatedFileError):
        read_nifti(p)
    with pytest.raises(UnsupportedFormatError):
        write_nifti(tmp_path / "x.nii", ImageVolume.from_array(np.zeros((1, 1, 1))), dtype="float64")


def test_raw_errors(tmp_path):
    vol = _random_volume(np.random.default_rng(32))
    p = tmp_path / "r.rhdr"
    write_raw(p, vol)
    data = tmp_path / "r.raw"
    payload = data.read_bytes()
    data.write_bytes(payload[:-4])
    with pytest.raises(TruncatedFileError):
        read_raw(p)
    data.write_bytes(payload + b"\0\0\0\0")
    with pytest.raises(DimensionMismatchError):
        read_raw(p)
    p.write_text("dims = 2 2 2\n")
    with pytest.raises(UnsupportedFormatError):
        read_raw(p)
    with pytest.raises(UnsupportedFormatError):
        detect_format("scan.dcm")
    with pytest.raises(DataError):
        load_volume(tmp_path / "missing.nii")


def test_mask_loading(tmp_path):
    img = _random_volume(np.random.default_rng(33))
    m = RoiMask(img.geometry, img.data > 0)
    write_nifti(tmp_path / "m.nii", m, dtype="uint8")
    back = load_mask(tmp_path / "m.nii", img.geometry)
    assert np.array_equal(back.labels, m.labels)
    other = ImageVolume.from_array(np.ones((3, 4, 6)))
    write_nifti(tmp_path / "bad.nii", other, dtype="uint8")
    with pytest.raises(DimensionMismatchError):
        load_mask(tmp_path / "bad.nii", img.geometry)
    shifted = ImageVolume.from_array(np.ones((3, 4, 5)))
    write_nifti(tmp_path / "shift.nii", shifted, dtype="uint8")
    with pytest.raises(DimensionMismatchError):
        load_mask(tmp_path / "shift.nii", img.geometry)


# ------------------------------------------------------------------ report

def _report():
    recs = [FeatureRecord("Q4LE", "stat", "mean", "stat.mean", "", "mean_{IS}", 1.0 / 3.0),
            FeatureRecord("7TET", "stat", "coefficient of variation", "stat.cov", "",
                          "coefficient of variation_{IS}", undefined("mean is zero, \"x\"")),
            FeatureRecord("8ZQL", "cm", "joint maximum", "cm.joint.max", "3D:avg",
                          "joint maximum_{CM,3D:avg}", 0.125)]
    return FeatureReport(recs, "abc", "[general]\n")


def test_csv_format():
    text = to_csv(_report())
    rows = list(csv.reader(io.StringIO(text)))
    assert tuple(rows[0]) == CSV_COLUMNS
    assert rows[1][-1] == "0.33333333333333331"     # 17 significant digits
    assert rows[2][-1] == 'NaN:mean is zero, "x"'
    assert '"NaN:mean is zero, ""x"""' in text
    assert math.isnan(parse_csv_value(rows[2][-1]))


def test_header_only_csv():
    assert to_csv(FeatureReport()) == ",".join(CSV_COLUMNS) + "\n"


def test_json_csv_agree(tmp_path):
    r = _report()
    write_report(r, None, "json", tmp_path / "r.json")
    write_report(r, None, "csv", tmp_path / "r.csv")
    doc = json.loads((tmp_path / "r.json").read_text())
    rows = list(csv.DictReader(io.StringIO((tmp_path / "r.csv").read_text())))
    assert doc["fingerprint"] == "abc"
    for rec, row in zip(doc["records"], rows):
        v = parse_csv_value(row["value"])
        if rec["value"] is None:
            assert math.isnan(v) and row["value"] == "NaN:" + rec["undefined"]
        else:
            assert rec["value"] == v
    with pytest.raises(DataError):
        write_report(r, None, "csv", tmp_path / "no" / "dir.csv")


def test_report_lookup():
    r = _report()
    assert r.value("cm.joint.max", "3D:avg") == 0.125
    assert r.aggregations() == ["3D:avg"]
    with pytest.raises(KeyError):
        r.value("cm.joint.max", "2D:avg")


# ---------------------------------------------------------------- pipeline

def test_pipeline_preset_a_has_no_volumetric_texture(small_ct):
    img, roi = small_ct
    report, diag = run_pipeline(img, roi, preset("A"), threads=2)
    aggs = {r.aggregation for r in report if r.family in ("cm", "rlm", "szm", "dzm", "ngt", "ngl")}
    assert aggs and all(a.startswith("2D") for a in aggs)
    assert {r.family for r in report} == {"morph", "loc", "stat", "ih", "ivh", "cm", "rlm", "szm",
                                          "dzm", "ngt", "ngl"}


def test_pipeline_deterministic_and_thread_independent(small_ct):
    img, roi = small_ct
    cfg = preset("C")
    r1, _ = run_pipeline(img, roi, cfg, threads=1)
    r2, _ = run_pipeline(img, roi, cfg, threads=4)
    assert to_csv(r1) == to_csv(r2)
    assert r1.fingerprint == cfg.fingerprint()


def test_pipeline_diagnostics(small_ct):
    img, roi = small_ct
    _, diag = run_pipeline(img, roi, preset("C"), threads=1)
    assert diag.get("initial", "img.dim") == (32, 32, 32)
    assert diag.get("interpolated", "img.vox.dim") == (2.0, 2.0, 2.0)
    assert diag.get("initial", "roi.int.mask.vox") == roi.count
    assert diag.get("re-segmented", "roi.int.mask.vox") <= diag.get("interpolated", "roi.int.mask.vox")
    assert diag.get("re-segmented", "roi.int.mask.max") <= 400
    # initial diagnostics do not depend on the configuration
    _, other = run_pipeline(img, roi, replace(preset("E"), families=()), threads=1)
    assert other.stage("initial") == diag.stage("initial")


def test_pipeline_statistics_equal_histogram_without_discretisation():
    rng = np.random.default_rng(34)
    img = ImageVolume.from_array(rng.integers(1, 9, size=(6, 7, 8)).astype(float))
    roi = RoiMask.from_array(rng.random((6, 7, 8)) < 0.6)
    cfg = ProcessingConfig(discretisation=DiscretisationSpec("none"), families=("stat", "ih"))
    report, _ = run_pipeline(img, roi, cfg, threads=1)
    for k in STAT_IH:
        a, b = report.value(f"stat.{k}"), report.value(f"ih.{k}")
        assert math.isclose(a, b, rel_tol=1e-12, abs_tol=1e-12), k


def test_pipeline_contours():
    img = ImageVolume.from_array(np.arange(4 * 10 * 10, dtype=float).reshape(4, 10, 10))
    square = [(1.5, 1.5, 1.0), (6.5, 1.5, 1.0), (6.5, 6.5, 1.0), (1.5, 6.5, 1.0)]
    cfg = ProcessingConfig(families=("stat",))
    report, diag = run_pipeline(img, ContourSet((square,)), cfg, threads=1)
    assert diag.get("initial", "roi.int.mask.vox") == 25
    assert report.value("stat.mean") == float(np.mean(img.data[1, 2:7, 2:7]))


def test_pipeline_empty_roi_stages():
    img = ImageVolume.from_array(np.full((3, 3, 3), 5.0))
    with pytest.raises(EmptyRoiError) as e:
        run_pipeline(img, RoiMask.from_array(np.zeros((3, 3, 3))), ProcessingConfig(), threads=1)
    assert e.value.stage == "segmentation"
    cfg = ProcessingConfig(resegmentation=ResegmentationSpec((100, 200)))
    with pytest.raises(EmptyRoiError) as e:
        run_pipeline(img, RoiMask.from_array(np.ones((3, 3, 3))), cfg, threads=1)
    assert e.value.stage == "re-segmentation"
    with pytest.raises(DimensionMismatchError):
        run_pipeline(img, RoiMask.from_array(np.ones((3, 3, 4))), cfg, threads=1)


def test_pipeline_separate_masks():
    rng = np.random.default_rng(35)
    img = ImageVolume.from_array(rng.normal(size=(5, 5, 5)))
    morph = RoiMask.from_array(np.ones((5, 5, 5)))
    inten = RoiMask(morph.geometry, img.data > 0)
    cfg = ProcessingConfig(families=("morph", "stat"), discretisation=DiscretisationSpec("none"))
    report, _ = run_pipeline(img, RoiMaskPair(morph, inten), cfg, threads=1)
    assert report.value("morph.approx.vol") == 125
    assert report.value("stat.min") > 0


def test_figures_written(tmp_path, small_ct):
    img, roi = small_ct
    report, _ = run_pipeline(img, roi, replace(preset("C"), families=("ih", "ivh")), threads=1)
    paths = write_figures(report, str(tmp_path / "out"))
    assert sorted(p.rsplit("_", 1)[-1] for p in map(str, paths)) == ["histogram.png", "ivh.png"]
    for p in paths:
        assert open(p, "rb").read(8) == b"\x89PNG\r\n\x1a\n"


# --------------------------------------------------------------------- CLI

def test_cli_extract_csv_and_json(tmp_path, capsys):
    out = tmp_path / "r.csv"
    assert cli.main(["extract", "--synthetic", "24", "--config", "C", "--out", str(out),
                     "--threads", "2"]) == 0
    rows = list(csv.DictReader(out.open()))
    assert rows and set(rows[0]) == set(CSV_COLUMNS)
    assert (tmp_path / "r_ivh.png").exists() and (tmp_path / "r_histogram.png").exists()
    js = tmp_path / "r.json"
    assert cli.main(["extract", "--synthetic", "24", "--config", "C", "--out", str(js),
                     "--format", "json", "--no-figures"]) == 0
    doc = json.loads(js.read_text())
    assert len(doc["records"]) == len(rows)
    assert doc["diagnostics"]


def test_cli_image_and_mask(tmp_path):
    img, roi = synthetic_ct(20, seed=2)
    write_nifti(tmp_path / "img.nii.gz", img, dtype="int16")
    write_nifti(tmp_path / "roi.nii.gz", roi, dtype="uint8")
    out = tmp_path / "f.csv"
    assert cli.main(["extract", "--image", str(tmp_path / "img.nii.gz"), "--mask",
                     str(tmp_path / "roi.nii.gz"), "--config", "D", "--out", str(out),
                     "--no-figures"]) == 0
    assert out.read_text().startswith(",".join(CSV_COLUMNS))


def test_cli_config_file_fingerprint(tmp_path):
    cfgp = tmp_path / "c.ini"
    cfgp.write_text("[general]\nseed = 5\n[discretisation]\nbin_width = 20\n")
    out = tmp_path / "r.json"
    assert cli.main(["extract", "--synthetic", "16", "--config", "C", "--config-file", str(cfgp),
                     "--out", str(out), "--format", "json", "--no-figures"]) == 0
    doc = json.loads(out.read_text())
    want = load_config(cfgp, preset("C"))
    assert doc["fingerprint"] == want.fingerprint() != preset("C").fingerprint()
    assert "bin_width = 20.0" in doc["config"]


def test_cli_exit_codes(tmp_path, capsys):
    assert cli.main(["extract", "--synthetic", "16", "--config", "Z", "--out", "x.csv"]) == 1
    assert cli.main(["extract", "--config", "C", "--out", "x.csv"]) == 1
    assert cli.main(["bogus"]) == 1
    assert cli.main(["extract", "--image", str(tmp_path / "none.nii"), "--mask",
                     str(tmp_path / "none.nii"), "--config", "C", "--out", "x.csv"]) == 2
    bad = tmp_path / "bad.ini"
    bad.write_text("[nope]\n")
    assert cli.main(["extract", "--synthetic", "16", "--config-file", str(bad), "--out", "x.csv"]) == 1


def test_cli_diagnostics(tmp_path, capsys):
    assert cli.main(["diagnostics", "--synthetic", "16", "--config", "B"]) == 0
    out = capsys.readouterr().out
    assert out.startswith("stage,name,value")
    assert "re-segmented" in out


def test_cli_phantom(capsys):
    assert cli.main(["phantom"]) == 0
    out = capsys.readouterr().out
    assert "FAIL  NGTDM s (as printed)" in out
    assert out.count("PASS") == 15


def test_cli_nomenclature(capsys):
    assert cli.main(["nomenclature", "--family", "ivh"]) == 0
    lines = capsys.readouterr().out.strip().splitlines()
    assert len(lines) == 7 and lines[0].startswith("BC2M\tivh.V10")
