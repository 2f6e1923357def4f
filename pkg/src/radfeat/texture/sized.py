"""Feature set shared by the run length, size zone, distance zone and dependence matrices.

All four matrices index grey level i on rows and a size-like quantity j (run length, zone size,
zone distance, dependence count) on columns, and their features share one set of formulas.
"""
import numpy as np

from ..catalogue import undefined
from .common import TextureMatrix, entropy

_ORDER = ["short", "long", "low", "high", "short_low", "short_high", "long_low", "long_high",
          "glnu", "glnu_norm", "jnu", "jnu_norm", "perc", "gl_var", "j_var", "entr", "energy"]

NAMES = {
    "rlm": ["sre", "lre", "lgre", "hgre", "srlge", "srhge", "lrlge", "lrhge", "glnu", "glnu.norm",
            "rlnu", "rlnu.norm", "r.perc", "gl.var", "rl.var", "rl.entr"],
    "szm": ["sze", "lze", "lgze", "hgze", "szlge", "szhge", "lzlge", "lzhge", "glnu", "glnu.norm",
            "zsnu", "zsnu.norm", "z.perc", "gl.var", "zs.var", "zs.entr"],
    "dzm": ["sde", "lde", "lgze", "hgze", "sdlge", "sdhge", "ldlge", "ldhge", "glnu", "glnu.norm",
            "zdnu", "zdnu.norm", "z.perc", "gl.var", "zd.var", "zd.entr"],
    "ngl": ["lde", "hde", "lgce", "hgce", "ldlge", "ldhge", "hdlge", "hdhge", "glnu", "glnu.norm",
            "dcnu", "dcnu.norm", "dc.perc", "gl.var", "dc.var", "dc.entr", "dc.energy"],
}


def keys(family):
    return [f"{family}.{n}" for n in NAMES[family]]


def sized_features(m: TextureMatrix) -> dict:
    fam = m.family
    names = keys(fam)
    if m.empty:
        return {k: undefined(f"empty {fam} matrix") for k in names}
    c = m.counts.astype(float)
    n_s = c.sum()
    i = np.arange(1, c.shape[0] + 1, dtype=float)[:, None]
    j = np.arange(1, c.shape[1] + 1, dtype=float)[None, :]
    ri = c.sum(axis=1)
    rj = c.sum(axis=0)
    p = c / n_s
    mu_i = np.sum(i * p)
    mu_j = np.sum(j * p)
    v = {
        "short": np.sum(rj / j[0] ** 2) / n_s,
        "long": np.sum(j[0] ** 2 * rj) / n_s,
        "low": np.sum(ri / i[:, 0] ** 2) / n_s,
        "high": np.sum(i[:, 0] ** 2 * ri) / n_s,
        "short_low": np.sum(c / (i ** 2 * j ** 2)) / n_s,
        "short_high": np.sum(i ** 2 * c / j ** 2) / n_s,
        "long_low": np.sum(j ** 2 * c / i ** 2) / n_s,
        "long_high": np.sum(i ** 2 * j ** 2 * c) / n_s,
        "glnu": np.sum(ri ** 2) / n_s,
        "glnu_norm": np.sum(ri ** 2) / n_s ** 2,
        "jnu": np.sum(rj ** 2) / n_s,
        "jnu_norm": np.sum(rj ** 2) / n_s ** 2,
        "perc": n_s / m.n_v,
        "gl_var": np.sum((i - mu_i) ** 2 * p),
        "j_var": np.sum((j - mu_j) ** 2 * p),
        "entr": entropy(p),
        "energy": np.sum(p ** 2),
    }
    return {k: float(v[o]) for k, o in zip(names, _ORDER)}
