"""Seeded CT-like test volumes: a soft-tissue body with a lobulated lesion."""
from __future__ import annotations

import numpy as np
from scipy import ndimage

from ..volume import ImageVolume, RoiMask


def synthetic_ct(n=64, seed=1, spacing=(1.0, 1.0, 1.0)):
    """Image in HU (integers) and the lesion mask on an n^3 grid."""
    rng = np.random.default_rng(seed)
    z, y, x = np.mgrid[0:n, 0:n, 0:n].astype(float)
    c = (n - 1) / 2.0
    img = np.full((n, n, n), -1000.0)
    body = ((x - c) / (0.45 * n)) ** 2 + ((y - c) / (0.40 * n)) ** 2 <= 1.0
    img[body] = 40.0
    lung = (((x - c + 0.2 * n) / (0.13 * n)) ** 2 + ((y - c) / (0.22 * n)) ** 2 <= 1.0) | \
           (((x - c - 0.2 * n) / (0.13 * n)) ** 2 + ((y - c) / (0.22 * n)) ** 2 <= 1.0)
    img[lung] = -850.0

    # lesion: a sphere with random surface lobes, partly into the lung
    lc = np.array([c, c, c + 0.12 * n])          # (z, y, x)
    r0 = 0.16 * n
    dz, dy, dx = z - lc[0], y - lc[1], x - lc[2]
    r = np.sqrt(dz ** 2 + dy ** 2 + dx ** 2)
    theta = np.arccos(np.clip(dz / np.maximum(r, 1e-9), -1, 1))
    phi = np.arctan2(dy, dx)
    bump = np.zeros_like(r)
    for _ in range(4):
        a, l, m, p = rng.uniform(0.04, 0.12), rng.integers(2, 5), rng.integers(1, 4), rng.uniform(0, 2 * np.pi)
        bump += a * np.cos(l * theta) * np.cos(m * phi + p)
    lesion = r <= r0 * (1.0 + bump)
    core = r <= 0.45 * r0
    img[lesion] = (30.0 + 15.0 * np.cos(dx / 3.0) * np.cos(dy / 4.0))[lesion]
    img[core] = -20.0

    img += rng.normal(0.0, 12.0, img.shape)
    img = ndimage.gaussian_filter(img, 0.7)
    img = np.clip(np.round(img), -1024, 3071)
    return (ImageVolume.from_array(img, spacing=spacing),
            RoiMask.from_array(lesion, spacing=spacing))
