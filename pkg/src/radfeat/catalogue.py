"""Closed catalogue of features: key, permanent 4-character id, readable name."""
from collections import namedtuple

Feature = namedtuple("Feature", "key id name family")


class UndefinedValue(float):
    """A NaN that carries the reason a feature could not be evaluated."""

    def __new__(cls, reason=""):
        obj = super().__new__(cls, float("nan"))
        obj.reason = reason
        return obj

    def __repr__(self):
        return f"NaN({self.reason})"

    def __reduce__(self):
        return (UndefinedValue, (self.reason,))


def undefined(reason):
    return UndefinedValue(reason)


FAMILIES = {
    "morph": ("MORPH", "morphology"),
    "loc": ("LI", "local intensity"),
    "stat": ("IS", "intensity-based statistics"),
    "ih": ("IH", "intensity histogram"),
    "ivh": ("IVH", "intensity-volume histogram"),
    "cm": ("CM", "grey level co-occurrence matrix"),
    "rlm": ("RLM", "grey level run length matrix"),
    "szm": ("SZM", "grey level size zone matrix"),
    "dzm": ("DZM", "grey level distance zone matrix"),
    "ngt": ("NGTDM", "neighbourhood grey tone difference matrix"),
    "ngl": ("NGLDM", "neighbouring grey level dependence matrix"),
}

_RAW = """
morph.vol RNU0 volume
morph.approx.vol YEKZ approximate volume
morph.area C0JK surface area
morph.av 2PR5 surface to volume ratio
morph.comp.1 SKGS compactness 1
morph.comp.2 BQWJ compactness 2
morph.sph.dispr KRCK spherical disproportion
morph.sphericity QCFX sphericity
morph.asphericity 25C7 asphericity
morph.com KLMA centre of mass shift
morph.diam L0JK maximum 3D diameter
morph.pca.major TDIC major axis length
morph.pca.minor P9VJ minor axis length
morph.pca.least 7J51 least axis length
morph.pca.elongation Q3CK elongation
morph.pca.flatness N17B flatness
morph.v.dens.aabb PBX1 volume density - axis-aligned bounding box
morph.a.dens.aabb R59B area density - axis-aligned bounding box
morph.v.dens.ombb ZH1A volume density - oriented minimum bounding box
morph.a.dens.ombb IQYR area density - oriented minimum bounding box
morph.v.dens.aee 6BDE volume density - approximate enclosing ellipsoid
morph.a.dens.aee RDD2 area density - approximate enclosing ellipsoid
morph.v.dens.mvee SWZ1 volume density - minimum volume enclosing ellipsoid
morph.a.dens.mvee BRI8 area density - minimum volume enclosing ellipsoid
morph.v.dens.conv.hull R3ER volume density - convex hull
morph.a.dens.conv.hull 7T7F area density - convex hull
morph.integ.int 99N0 integrated intensity
morph.moran.i N365 Moran's I index
morph.geary.c NPT7 Geary's C measure
loc.peak.local VJGA local intensity peak
loc.peak.global 0F91 global intensity peak
stat.mean Q4LE mean
stat.var ECT3 variance
stat.skew KE2A skewness
stat.kurt IPH6 kurtosis
stat.median Y12H median
stat.min 1GSF minimum grey level
stat.p10 QG58 10th percentile
stat.p90 8DWT 90th percentile
stat.max 84IY maximum grey level
stat.iqr SALO interquartile range
stat.range 2OJQ range
stat.mad 4FUA mean absolute deviation
stat.rmad 1128 robust mean absolute deviation
stat.medad N72L median absolute deviation
stat.cov 7TET coefficient of variation
stat.qcod 9S40 quartile coefficient of dispersion
stat.energy N8CA energy
stat.rms 5ZWQ root mean square
ih.mean X6K6 mean
ih.var CH89 variance
ih.skew 88K1 skewness
ih.kurt C3I7 kurtosis
ih.median WIFQ median
ih.min 1PR8 minimum grey level
ih.p10 GPMT 10th percentile
ih.p90 OZ0C 90th percentile
ih.max 3NCY maximum grey level
ih.mode AMMC mode
ih.iqr WR0O interquartile range
ih.range 5Z3W range
ih.mad D2ZX mean absolute deviation
ih.rmad WRZB robust mean absolute deviation
ih.medad 4RNL median absolute deviation
ih.cov CWYJ coefficient of variation
ih.qcod SLWD quartile coefficient of dispersion
ih.entropy TLU2 entropy
ih.uniformity BJ5W uniformity
ih.max.grad 12CE maximum histogram gradient
ih.max.grad.gl 8E6O maximum histogram gradient grey level
ih.min.grad VQB3 minimum histogram gradient
ih.min.grad.gl RHQZ minimum histogram gradient grey level
ivh.V10 BC2M volume at intensity fraction 10%
ivh.V90 BC2M volume at intensity fraction 90%
ivh.I10 GBPN intensity at volume fraction 10%
ivh.I90 GBPN intensity at volume fraction 90%
ivh.V10minusV90 DDTU volume fraction difference between intensity fractions
ivh.I10minusI90 CNV2 intensity fraction difference between volume fractions
ivh.auc 9CMM area under the IVH curve
cm.joint.max GYBY joint maximum
cm.joint.avg 60VM joint average
cm.joint.var UR99 joint variance
cm.joint.entr TU9B joint entropy
cm.diff.avg TF7R difference average
cm.diff.var D3YU difference variance
cm.diff.entr NTRS difference entropy
cm.sum.avg ZGXS sum average
cm.sum.var OEEB sum variance
cm.sum.entr P6QZ sum entropy
cm.energy 8ZQL angular second moment
cm.contrast ACUI contrast
cm.dissimilarity 8S9J dissimilarity
cm.inv.diff IB1Z inverse difference
cm.inv.diff.norm NDRX normalised inverse difference
cm.inv.diff.mom WF0Z inverse difference moment
cm.inv.diff.mom.norm 1QCO normalised inverse difference moment
cm.inv.var E8JP inverse variance
cm.corr NI2N correlation
cm.auto.corr QWB0 autocorrelation
cm.clust.tend DG8W cluster tendency
cm.clust.shade 7NFM cluster shade
cm.clust.prom AE86 cluster prominence
cm.info.corr.1 R8DG first measure of information correlation
cm.info.corr.2 JN9H second measure of information correlation
rlm.sre 22OV short runs emphasis
rlm.lre W4KF long runs emphasis
rlm.lgre V3SW low grey level run emphasis
rlm.hgre G3QZ high grey level run emphasis
rlm.srlge HTZT short run low grey level emphasis
rlm.srhge GD3A short run high grey level emphasis
rlm.lrlge IVPO long run low grey level emphasis
rlm.lrhge 3KUM long run high grey level emphasis
rlm.glnu R5YN grey level non-uniformity
rlm.glnu.norm OVBL normalised grey level non-uniformity
rlm.rlnu W92Y run length non-uniformity
rlm.rlnu.norm IC23 normalised run length non-uniformity
rlm.r.perc 9ZK5 run percentage
rlm.gl.var 8CE5 grey level variance
rlm.rl.var SXLW run length variance
rlm.rl.entr HJ9O run entropy
szm.sze 5QRC small zone emphasis
szm.lze 48P8 large zone emphasis
szm.lgze XMSY low grey level zone emphasis
szm.hgze 5GN9 high grey level zone emphasis
szm.szlge 5RAI small zone low grey level emphasis
szm.szhge HW1V small zone high grey level emphasis
szm.lzlge YH51 large zone low grey level emphasis
szm.lzhge J17V large zone high grey level emphasis
szm.glnu JNSA grey level non-uniformity
szm.glnu.norm Y1RO normalised grey level non-uniformity
szm.zsnu 4JP3 zone size non-uniformity
szm.zsnu.norm VB3A normalised zone size non-uniformity
szm.z.perc P30P zone percentage
szm.gl.var BYLV grey level variance
szm.zs.var 3NSA zone size variance
szm.zs.entr GU8N zone size entropy
dzm.sde 0GBI small distance emphasis
dzm.lde MB4I large distance emphasis
dzm.lgze S1RA low grey level zone emphasis
dzm.hgze K26C high grey level zone emphasis
dzm.sdlge RUVG small distance low grey level emphasis
dzm.sdhge DKNJ small distance high grey level emphasis
dzm.ldlge A7WM large distance low grey level emphasis
dzm.ldhge KLTH large distance high grey level emphasis
dzm.glnu VFT7 grey level non-uniformity
dzm.glnu.norm 7HP3 normalised grey level non-uniformity
dzm.zdnu V294 zone distance non-uniformity
dzm.zdnu.norm IATH zone distance non-uniformity normalised
dzm.z.perc VIWW zone percentage
dzm.gl.var QK93 grey level variance
dzm.zd.var 7WT1 zone distance variance
dzm.zd.entr GBDU zone distance entropy
ngt.coarseness QCDE coarseness
ngt.contrast 65HE contrast
ngt.busyness NQ30 busyness
ngt.complexity HDEZ complexity
ngt.strength 1X9X strength
ngl.lde SODN low dependence emphasis
ngl.hde IMOQ high dependence emphasis
ngl.lgce TL9H low grey level count emphasis
ngl.hgce OAE7 high grey level count emphasis
ngl.ldlge EQ3F low dependence low grey level emphasis
ngl.ldhge JA6D low dependence high grey level emphasis
ngl.hdlge NBZI high dependence low grey level emphasis
ngl.hdhge 9QMG high dependence high grey level emphasis
ngl.glnu FP8K grey level non-uniformity
ngl.glnu.norm 5SPA normalised grey level non-uniformity
ngl.dcnu Z87G dependence count non-uniformity
ngl.dcnu.norm OKJI dependence count non-uniformity normalised
ngl.dc.perc 6XV8 dependence count percentage
ngl.gl.var 1PFV grey level variance
ngl.dc.var DNX2 dependence count variance
ngl.dc.entr FCBV dependence count entropy
ngl.dc.energy CAS9 dependence count energy
"""

CATALOGUE = {}
for _line in _RAW.strip().splitlines():
    _key, _id, _name = _line.split(" ", 2)
    CATALOGUE[_key] = Feature(_key, _id, _name, _key.split(".")[0])

IDS = frozenset(f.id for f in CATALOGUE.values())


def keys_for(family):
    return [k for k, f in CATALOGUE.items() if f.family == family]


def lookup(key):
    return CATALOGUE[key]
