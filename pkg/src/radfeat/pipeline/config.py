"""Processing configurations: presets A-E, a sectioned key = value file format and fingerprints."""
from __future__ import annotations

import configparser
import hashlib
import math
from dataclasses import dataclass, field, replace
from typing import Optional

from ..errors import ConfigurationError
from ..preprocess import DiscretisationSpec, InterpolationSpec, ResegmentationSpec
from ..texture import ALLOWED, METHODS, NeighbourhoodSpec

FAMILIES = ("morph", "loc", "stat", "ih", "ivh", "cm", "rlm", "szm", "dzm", "ngt", "ngl")
IVH_MODES = ("discrete", "continuous", "arbitrary")


@dataclass(frozen=True)
class ProcessingConfig:
    name: str = "custom"
    approach: str = "3D"
    interpolation: InterpolationSpec = field(default_factory=InterpolationSpec)
    resegmentation: ResegmentationSpec = field(default_factory=ResegmentationSpec)
    discretisation: DiscretisationSpec = field(default_factory=lambda: DiscretisationSpec("fbn", n_bins=32))
    ivh_mode: str = "discrete"
    ivh_bin_width: Optional[float] = None
    ivh_n_bins: int = 1000
    neighbourhood: NeighbourhoodSpec = field(default_factory=NeighbourhoodSpec)
    families: tuple = FAMILIES
    aggregations: Optional[tuple] = None     # None: every method valid for the approach
    modality: Optional[str] = None           # e.g. "CT", "PET:SUV"; nomenclature only
    seed: int = 1
    allow_unbounded_fbs: bool = False

    def __post_init__(self):
        self.validate()

    def validate(self):
        if self.approach not in ("2D", "3D"):
            raise ConfigurationError(f"approach must be 2D or 3D, got {self.approach!r}")
        if self.approach == "2D" and self.interpolation.mode == "3d":
            raise ConfigurationError("the 2D approach cannot be combined with volumetric interpolation")
        unknown = set(self.families) - set(FAMILIES)
        if unknown:
            raise ConfigurationError(f"unknown feature families {sorted(unknown)}")
        if self.ivh_mode not in IVH_MODES:
            raise ConfigurationError(f"unknown IVH mode {self.ivh_mode!r}")
        if self.ivh_mode == "continuous":
            if not self.ivh_bin_width or self.ivh_bin_width <= 0:
                raise ConfigurationError("continuous IVH needs a positive bin width")
            if self.resegmentation.lower is None:
                raise ConfigurationError("continuous IVH needs a re-segmentation lower bound")
        if self.ivh_mode == "arbitrary" and int(self.ivh_n_bins) < 1:
            raise ConfigurationError("arbitrary-unit IVH needs ivh_n_bins >= 1")
        d = self.discretisation
        if (d.algorithm == "fbs" and d.minimum is None and self.resegmentation.lower is None
                and not self.allow_unbounded_fbs):
            raise ConfigurationError(
                "fixed bin size without a re-segmentation lower bound or explicit minimum is not "
                "recommended; set discretisation.minimum or allow_unbounded_fbs = true")
        if self.aggregations is not None:
            for code in self.aggregations:
                if code not in METHODS:
                    raise ConfigurationError(f"unknown aggregation method {code!r}")
                if self.approach == "2D" and METHODS[code].mode == "3D":
                    raise ConfigurationError(f"aggregation {code} is volumetric but the approach is 2D")

    def aggregations_for(self, family):
        ok = [c for c in ALLOWED[family] if not (self.approach == "2D" and METHODS[c].mode == "3D")]
        if self.aggregations is not None:
            ok = [c for c in ok if c in self.aggregations]
        return ok

    def to_text(self) -> str:
        return dump_config(self)

    def fingerprint(self) -> str:
        return hashlib.sha256(self.to_text().encode()).hexdigest()[:16]


def _preset_table():
    interp2 = InterpolationSpec("2d", (2.0, 2.0, 2.0), "linear", "linear", 0.5, "nearest")
    interp3 = InterpolationSpec("3d", (2.0, 2.0, 2.0), "linear", "linear", 0.5, "nearest")
    fbn32 = DiscretisationSpec("fbn", n_bins=32)
    fbs25 = DiscretisationSpec("fbs", bin_width=25.0)
    return {
        "A": ProcessingConfig("A", "2D", InterpolationSpec(), ResegmentationSpec((-500, 400)), fbs25,
                              "discrete"),
        "B": ProcessingConfig("B", "2D", interp2, ResegmentationSpec((-500, 400)), fbn32, "discrete"),
        "C": ProcessingConfig("C", "3D", interp3, ResegmentationSpec((-1000, 400)), fbs25,
                              "continuous", ivh_bin_width=2.5),
        "D": ProcessingConfig("D", "3D", interp3, ResegmentationSpec(sigma=3.0), fbn32, "discrete"),
        "E": ProcessingConfig("E", "3D", replace(interp3, image_method="cubic_spline"),
                              ResegmentationSpec((-500, 400), sigma=3.0), fbn32, "arbitrary",
                              ivh_n_bins=1000),
    }


def preset(name) -> ProcessingConfig:
    table = _preset_table()
    key = str(name).upper()
    if key not in table:
        raise ConfigurationError(f"unknown preset {name!r}; choose one of {', '.join(table)}")
    return table[key]


# --------------------------------------------------------------- text format

def _fmt(v):
    if v is None:
        return "none"
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, float):
        if math.isinf(v):
            return "inf" if v > 0 else "-inf"
        return repr(v)
    if isinstance(v, (tuple, list)):
        return ", ".join(_fmt(x) for x in v)
    return str(v)


def dump_config(cfg: ProcessingConfig) -> str:
    i, r, d, n = cfg.interpolation, cfg.resegmentation, cfg.discretisation, cfg.neighbourhood
    sections = [
        ("general", [("name", cfg.name), ("approach", cfg.approach), ("modality", cfg.modality),
                     ("seed", cfg.seed), ("families", cfg.families),
                     ("aggregations", cfg.aggregations if cfg.aggregations is not None else "all")]),
        ("interpolation", [("mode", i.mode), ("spacing", i.spacing), ("image_method", i.image_method),
                           ("mask_method", i.mask_method), ("threshold", float(i.threshold)),
                           ("rounding", i.rounding)]),
        ("resegmentation", [("range", r.range), ("sigma", None if r.sigma is None else float(r.sigma)),
                            ("order", r.order)]),
        ("discretisation", [("algorithm", d.algorithm), ("n_bins", d.n_bins),
                            ("bin_width", None if d.bin_width is None else float(d.bin_width)),
                            ("minimum", None if d.minimum is None else float(d.minimum)),
                            ("allow_unbounded_fbs", cfg.allow_unbounded_fbs)]),
        ("ivh", [("mode", cfg.ivh_mode),
                 ("bin_width", None if cfg.ivh_bin_width is None else float(cfg.ivh_bin_width)),
                 ("n_bins", int(cfg.ivh_n_bins))]),
        ("texture", [("distance", float(n.distance)), ("norm", n.norm), ("alpha", int(n.alpha)),
                     ("linkage", n.linkage), ("edge_norm", n.edge_norm)]),
    ]
    out = []
    for name, items in sections:
        out.append(f"[{name}]")
        out.extend(f"{k} = {_fmt(v)}" for k, v in items)
        out.append("")
    return "\n".join(out)


def _none(s):
    return s is None or s.strip().lower() in ("none", "", "--")


def _float(s):
    return None if _none(s) else float(s)


def _floats(s):
    return None if _none(s) else tuple(float(t) for t in s.replace(",", " ").split())


def _bool(s):
    v = s.strip().lower()
    if v in ("true", "yes", "1", "on"):
        return True
    if v in ("false", "no", "0", "off"):
        return False
    raise ConfigurationError(f"expected a boolean, got {s!r}")


_KNOWN = {
    "general": {"name", "base", "approach", "modality", "seed", "families", "aggregations"},
    "interpolation": {"mode", "spacing", "image_method", "mask_method", "threshold", "rounding"},
    "resegmentation": {"range", "sigma", "order"},
    "discretisation": {"algorithm", "n_bins", "bin_width", "minimum", "allow_unbounded_fbs"},
    "ivh": {"mode", "bin_width", "n_bins"},
    "texture": {"distance", "norm", "alpha", "linkage", "edge_norm"},
}


def parse_config(text, base: Optional[ProcessingConfig] = None) -> ProcessingConfig:
    """Parse the sectioned key = value format; keys not given keep the base (or preset) values."""
    cp = configparser.ConfigParser(interpolation=None, inline_comment_prefixes=("#", ";"))
    try:
        cp.read_string(text)
    except configparser.Error as exc:
        raise ConfigurationError(f"cannot parse configuration: {exc}") from None
    for sec in cp.sections():
        if sec not in _KNOWN:
            raise ConfigurationError(f"unknown configuration section [{sec}]")
        extra = set(cp[sec]) - _KNOWN[sec]
        if extra:
            raise ConfigurationError(f"unknown keys in [{sec}]: {sorted(extra)}")

    def get(sec, key):
        return cp[sec][key] if cp.has_section(sec) and key in cp[sec] else None

    b = get("general", "base")
    cfg = preset(b) if b and not _none(b) else (base or ProcessingConfig())
    try:
        kw = {}
        g = {k: get("general", k) for k in _KNOWN["general"]}
        if g["name"] is not None:
            kw["name"] = g["name"].strip()
        elif b:
            kw["name"] = f"{cfg.name}+file"
        if g["approach"] is not None:
            kw["approach"] = g["approach"].strip().upper()
        if g["modality"] is not None:
            kw["modality"] = None if _none(g["modality"]) else g["modality"].strip()
        if g["seed"] is not None:
            kw["seed"] = int(g["seed"])
        if g["families"] is not None:
            kw["families"] = tuple(t.strip() for t in g["families"].split(",") if t.strip())
        if g["aggregations"] is not None:
            a = g["aggregations"].strip()
            kw["aggregations"] = None if a.lower() == "all" else tuple(t.strip() for t in a.split(","))

        i = cfg.interpolation
        ik = {}
        for k in ("mode", "image_method", "mask_method", "rounding"):
            if get("interpolation", k) is not None:
                ik[k] = get("interpolation", k).strip()
        if get("interpolation", "spacing") is not None:
            ik["spacing"] = _floats(get("interpolation", "spacing"))
        if get("interpolation", "threshold") is not None:
            ik["threshold"] = float(get("interpolation", "threshold"))
        if ik:
            kw["interpolation"] = replace(i, **ik)

        r = cfg.resegmentation
        rk = {}
        if get("resegmentation", "range") is not None:
            rk["range"] = _floats(get("resegmentation", "range"))
        if get("resegmentation", "sigma") is not None:
            rk["sigma"] = _float(get("resegmentation", "sigma"))
        if get("resegmentation", "order") is not None:
            rk["order"] = get("resegmentation", "order").strip()
        if rk:
            kw["resegmentation"] = replace(r, **rk)

        d = cfg.discretisation
        dk = {}
        if get("discretisation", "algorithm") is not None:
            dk["algorithm"] = get("discretisation", "algorithm").strip().lower()
        if get("discretisation", "n_bins") is not None:
            v = get("discretisation", "n_bins")
            dk["n_bins"] = None if _none(v) else int(v)
        for k in ("bin_width", "minimum"):
            if get("discretisation", k) is not None:
                dk[k] = _float(get("discretisation", k))
        if dk:
            kw["discretisation"] = replace(d, **dk)
        if get("discretisation", "allow_unbounded_fbs") is not None:
            kw["allow_unbounded_fbs"] = _bool(get("discretisation", "allow_unbounded_fbs"))

        if get("ivh", "mode") is not None:
            kw["ivh_mode"] = get("ivh", "mode").strip().lower()
        if get("ivh", "bin_width") is not None:
            kw["ivh_bin_width"] = _float(get("ivh", "bin_width"))
        if get("ivh", "n_bins") is not None:
            kw["ivh_n_bins"] = int(get("ivh", "n_bins"))

        n = cfg.neighbourhood
        nk = {}
        if get("texture", "distance") is not None:
            nk["distance"] = float(get("texture", "distance"))
        if get("texture", "alpha") is not None:
            nk["alpha"] = int(get("texture", "alpha"))
        for k in ("norm", "linkage", "edge_norm"):
            if get("texture", k) is not None:
                nk[k] = get("texture", k).strip().lower()
        if nk:
            kw["neighbourhood"] = replace(n, **nk)
    except ValueError as exc:
        if isinstance(exc, ConfigurationError):
            raise
        raise ConfigurationError(f"bad configuration value: {exc}") from None
    return replace(cfg, **kw)


def load_config(path, base: Optional[ProcessingConfig] = None) -> ProcessingConfig:
    try:
        with open(path) as fh:
            text = fh.read()
    except OSError as exc:
        raise ConfigurationError(f"cannot read configuration file {path}: {exc.strerror}") from None
    return parse_config(text, base)
