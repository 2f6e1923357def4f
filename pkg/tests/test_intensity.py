import math

import numpy as np
import pytest

import oracles
from radfeat.errors import DataError
from radfeat.intensity import (PEAK_RADIUS_MM, global_intensity_peak, histogram, histogram_features,
                               histogram_gradient, histogram_mode, intensity_at_volume_fraction,
                               ivh_features, local_intensity_features, local_intensity_peak,
                               sphere_kernel, spherical_mean_map, statistical_features,
                               volume_at_intensity_fraction)
from radfeat.preprocess import ResegmentationSpec, discretise_fbn, prepare_ivh
from radfeat.volume import ImageVolume, RoiIntensitySet, RoiMask

STAT_KEYS = ("mean", "var", "skew", "kurt", "median", "min", "p10", "p90", "max", "iqr", "range",
             "mad", "rmad", "medad", "cov", "qcod")


def _set(values):
    v = np.asarray(values, dtype=float)
    return RoiIntensitySet(v, np.zeros((len(v), 3)))


def test_peak_radius_is_one_cc():
    assert math.isclose(4 / 3 * math.pi * PEAK_RADIUS_MM ** 3, 1000.0, rel_tol=1e-12)


def _ball_count(spacing, r):
    h = [int(r // s) + 1 for s in spacing]
    return sum(1 for i in range(-h[0], h[0] + 1) for j in range(-h[1], h[1] + 1)
               for k in range(-h[2], h[2] + 1)
               if (i * spacing[0]) ** 2 + (j * spacing[1]) ** 2 + (k * spacing[2]) ** 2 <= r * r)


@pytest.mark.parametrize("spacing,count", [((2, 2, 2), 123), ((3, 3, 3), 33), ((1, 1.5, 4), None)])
def test_sphere_kernel_counts(spacing, count):
    n = sphere_kernel(spacing).sum()
    assert n == _ball_count(spacing, PEAK_RADIUS_MM)
    if count is not None:
        assert n == count


@pytest.mark.parametrize("s", [2.0, 3.0])
def test_hot_voxel_peak(s):
    a = np.zeros((9, 9, 9))
    a[4, 4, 4] = 100
    img = ImageVolume.from_array(a, spacing=s)
    m = RoiMask.from_array(a > 0, spacing=s)
    n = _ball_count((s, s, s), PEAK_RADIUS_MM)
    assert math.isclose(local_intensity_peak(img, m), 100 / n, rel_tol=1e-12)


def test_peak_geometry_mismatch():
    img = ImageVolume.from_array(np.ones((3, 3, 3)), spacing=2)
    with pytest.raises(DataError):
        local_intensity_peak(img, RoiMask.from_array(np.ones((3, 3, 3))))


def test_constant_image_peaks():
    img = ImageVolume.from_array(np.full((5, 6, 7), 3.5), spacing=(1.5, 1.5, 3))
    m = RoiMask.from_array(np.ones((5, 6, 7)), spacing=(1.5, 1.5, 3))
    f = local_intensity_features(img, m)
    assert math.isclose(f["loc.peak.local"], 3.5) and math.isclose(f["loc.peak.global"], 3.5)


def test_spherical_mean_matches_direct_sum():
    rng = np.random.default_rng(20)
    a = rng.normal(size=(5, 8, 7))
    sp = (1.7, 2.2, 3.1)
    mm = spherical_mean_map(ImageVolume.from_array(a, spacing=sp))
    for z, y, x in [(0, 0, 0), (2, 4, 3), (4, 7, 6), (1, 5, 2)]:
        assert math.isclose(mm[z, y, x], oracles.sphere_mean_at(a, sp, (z, y, x), PEAK_RADIUS_MM),
                            rel_tol=1e-9)


def test_tied_maxima_take_highest_mean():
    a = np.zeros((1, 1, 21))
    a[0, 0, 3] = 10
    a[0, 0, 15] = 10
    a[0, 0, 16] = 8
    img = ImageVolume.from_array(a)
    m = RoiMask.from_array(np.ones_like(a))
    want = max(oracles.sphere_mean_at(a, (1, 1, 1), (0, 0, k), PEAK_RADIUS_MM) for k in (3, 15))
    assert math.isclose(local_intensity_peak(img, m), want, rel_tol=1e-12)
    # the image edge truncates both neighbourhoods: 10 voxels around x = 3, 12 around x = 15
    assert math.isclose(want, 18 / 12, rel_tol=1e-12)


def test_global_peak_bounds_local_peak():
    rng = np.random.default_rng(21)
    for _ in range(5):
        a = rng.normal(size=(6, 6, 6))
        img = ImageVolume.from_array(a, spacing=(2, 2, 3))
        m = RoiMask.from_array(rng.random((6, 6, 6)) < 0.5, spacing=(2, 2, 3))
        g, loc = global_intensity_peak(img, m), local_intensity_peak(img, m)
        assert g >= loc
        assert math.isclose(global_intensity_peak(img + 5.0, m), g + 5.0, rel_tol=1e-12)


def test_statistics_example():
    f = statistical_features(_set([1, 2, 3, 4]))
    assert len(f) == 18
    assert f["stat.mean"] == 2.5 and f["stat.var"] == 1.25
    assert f["stat.skew"] == 0.0
    assert math.isclose(f["stat.kurt"], -1.36, rel_tol=1e-12)
    assert f["stat.energy"] == 30.0
    assert math.isclose(f["stat.rms"], math.sqrt(7.5))
    assert f["stat.median"] == 2.5 and f["stat.range"] == 3.0
    assert f["stat.mad"] == 1.0


def test_statistics_zero_variance():
    f = statistical_features(_set([5, 5, 5]))
    for k in ("var", "skew", "kurt", "cov", "qcod", "iqr", "range", "mad", "medad"):
        assert f[f"stat.{k}"] == 0.0


def test_statistics_undefined_ratios():
    f = statistical_features(_set([-1, 1]))
    assert math.isnan(f["stat.cov"]) and "zero" in f["stat.cov"].reason
    assert math.isnan(f["stat.qcod"])
    # P10 = -0.8 and P90 = 0.8 leave no values for the robust deviation
    assert math.isnan(f["stat.rmad"]) and f["stat.rmad"].reason


def test_robust_mad_restriction():
    x = np.arange(1, 11, dtype=float)
    f = statistical_features(_set(x))
    p10, p90 = np.percentile(x, 10), np.percentile(x, 90)
    inner = [v for v in x if p10 <= v <= p90]
    mu = sum(inner) / len(inner)
    assert math.isclose(f["stat.rmad"], sum(abs(v - mu) for v in inner) / len(inner), rel_tol=1e-12)
    assert f["stat.p10"] == 1.9 and f["stat.p90"] == 9.1


def test_statistics_shift_invariance():
    rng = np.random.default_rng(22)
    x = rng.normal(size=200)
    a, b = statistical_features(_set(x)), statistical_features(_set(x + 100))
    for k in ("var", "mad", "iqr", "range", "medad", "rmad", "skew", "kurt"):
        assert math.isclose(a[f"stat.{k}"], b[f"stat.{k}"], rel_tol=1e-9, abs_tol=1e-9)
    assert math.isclose(b["stat.energy"], np.sum((x + 100) ** 2), rel_tol=1e-12)


def test_histogram_gradient_example():
    assert histogram_gradient([1, 3, 2]).tolist() == [2, 0.5, -1]
    x = np.array([1, 2, 2, 2, 3, 3])
    f = histogram_features(x, 3)
    assert f["ih.max.grad"] == 2 and f["ih.max.grad.gl"] == 1
    assert f["ih.min.grad"] == -1 and f["ih.min.grad.gl"] == 3
    assert f["ih.mode"] == 2


def test_histogram_single_bin():
    f = histogram_features(np.array([1, 1, 1]), 1)
    assert f["ih.entropy"] == 0 and f["ih.uniformity"] == 1
    assert f["ih.max.grad"] == 0 and f["ih.max.grad.gl"] == 1
    assert f["ih.min.grad"] == 0 and f["ih.min.grad.gl"] == 1


def test_histogram_uniform_entropy():
    x = np.repeat(np.arange(1, 9), 5)
    f = histogram_features(x, 8)
    assert math.isclose(f["ih.entropy"], 3.0) and math.isclose(f["ih.uniformity"], 1 / 8)


def test_histogram_mode_ties():
    # tie between 1 and 4; mean 2.4 is closer to 1
    assert histogram_mode(np.array([2, 0, 1, 2]), 2.4) == 1.0
    # equidistant tie resolves left of the mean
    assert histogram_mode(np.array([2, 0, 2]), 2.0) == 1.0


def test_histogram_dense_counts():
    h = histogram([1, 3, 3, 5], 6)
    assert h.tolist() == [1, 0, 2, 0, 1, 0]


def test_histogram_moments_match_statistics():
    rng = np.random.default_rng(23)
    x = rng.integers(1, 12, size=300)
    h = histogram_features(x, 11)
    s = statistical_features(_set(x))
    for k in STAT_KEYS:
        assert math.isclose(h[f"ih.{k}"], s[f"stat.{k}"], rel_tol=1e-12, abs_tol=1e-12)


def test_histogram_fbn_extremes():
    rng = np.random.default_rng(24)
    d = discretise_fbn(_set(rng.normal(size=100)), 16)
    f = histogram_features(d)
    assert f["ih.max"] == 16 and f["ih.min"] == 1
    assert 0 <= f["ih.entropy"] <= 4 and 1 / 16 <= f["ih.uniformity"] <= 1


def test_ivh_single_level():
    v = prepare_ivh(_set([3, 3, 3]))
    f = ivh_features(v)
    assert f["ivh.auc"] == 0.0


def test_ivh_two_levels_half_each():
    v = prepare_ivh(_set([1, 1, 2, 2]))
    f = ivh_features(v)
    assert f["ivh.I10"] == 2.0 and f["ivh.I90"] == 2.0
    assert f["ivh.V10"] == 0.5 and f["ivh.V90"] == 0.5
    assert math.isclose(f["ivh.auc"], 0.75)


def test_ivh_four_voxels():
    v = prepare_ivh(_set([1, 1, 2, 3]))
    assert v.nu.tolist() == [1.0, 0.5, 0.25] and v.gamma.tolist() == [0.0, 0.5, 1.0]
    f = ivh_features(v)
    assert f["ivh.V10"] == 0.5 and f["ivh.V90"] == 0.25
    assert f["ivh.I10"] == 3.0 and f["ivh.I90"] == 2.0
    assert f["ivh.V10minusV90"] == 0.25 and f["ivh.I10minusI90"] == 1.0
    assert f["ivh.auc"] == (1.0 + 0.5) / 2 * 0.5 + (0.5 + 0.25) / 2 * 0.5


def test_ivh_monotone_in_fraction():
    rng = np.random.default_rng(25)
    v = prepare_ivh(_set(rng.integers(-20, 40, size=400)), reseg=ResegmentationSpec(range=(-50, 60)))
    xs = np.linspace(0, 1, 41)
    vx = [volume_at_intensity_fraction(v, x) for x in xs]
    ix = [intensity_at_volume_fraction(v, x) for x in xs]
    assert np.all(np.diff(vx) <= 0) and np.all(np.diff(ix) <= 0)
    assert v.nu[0] == 1.0
