"""Mesh- and point-set-based morphological features."""
from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np
from scipy.spatial import ConvexHull as _QHull
from scipy.spatial.distance import pdist
from scipy.special import eval_legendre
from numpy.polynomial import legendre as npleg
from skimage import measure

from .catalogue import undefined
from .errors import DegenerateGeometryError, EmptyRoiError, ManifoldError
from .volume import ImageVolume, RoiMask, RoiMaskPair, RoiIntensitySet, extract_intensity_set, voxel_centers

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class TriangleMesh:
    vertices: np.ndarray   # (n, 3) world x, y, z
    faces: np.ndarray      # (m, 3) vertex indices, outward by right-hand rule

    @property
    def n_vertices(self):
        return len(self.vertices)

    @property
    def n_faces(self):
        return len(self.faces)

    def translated(self, t):
        return TriangleMesh(self.vertices + np.asarray(t, dtype=float), self.faces)


def edge_check(faces) -> bool:
    """True when every directed edge occurs exactly once and its reverse exactly once."""
    f = np.asarray(faces)
    if not len(f):
        return False
    e = np.concatenate([f[:, [0, 1]], f[:, [1, 2]], f[:, [2, 0]]])
    n = int(e.max()) + 1
    code = e[:, 0].astype(np.int64) * n + e[:, 1]
    uniq, counts = np.unique(code, return_counts=True)
    if np.any(counts != 1):
        return False
    rev = e[:, 1].astype(np.int64) * n + e[:, 0]
    return bool(np.all(np.isin(rev, uniq)))


def _drop_coincident_faces(faces):
    # marching cubes can emit zero-thickness sheets: the same triangle twice
    # with opposite winding.  They enclose no volume and are removed.
    key = np.sort(faces, axis=1)
    _, inv, cnt = np.unique(key, axis=0, return_inverse=True, return_counts=True)
    return faces[cnt[inv.ravel()] == 1]


def _orient_consistently(faces):
    """Flip faces so that neighbours traverse shared edges in opposite directions."""
    faces = faces.copy()
    n = len(faces)
    edge_faces = {}
    for fi, (a, b, c) in enumerate(faces):
        for u, v in ((a, b), (b, c), (c, a)):
            edge_faces.setdefault((min(u, v), max(u, v)), []).append(fi)
    seen = np.zeros(n, dtype=bool)
    for start in range(n):
        if seen[start]:
            continue
        seen[start] = True
        stack = [start]
        while stack:
            fi = stack.pop()
            a, b, c = faces[fi]
            for u, v in ((a, b), (b, c), (c, a)):
                for fj in edge_faces[(min(u, v), max(u, v))]:
                    if seen[fj]:
                        continue
                    x, y, z = faces[fj]
                    same = (x, y) == (u, v) or (y, z) == (u, v) or (z, x) == (u, v)
                    if same:
                        faces[fj] = faces[fj][::-1]
                    seen[fj] = True
                    stack.append(fj)
    return faces


def signed_volume(vertices, faces):
    a, b, c = (vertices[faces[:, i]] for i in range(3))
    return float(np.einsum("ij,ij->i", a, np.cross(b, c)).sum() / 6.0)


def build_mesh(morph: RoiMask) -> TriangleMesh:
    """Marching cubes at 0.5 on the zero-padded binary mask, in world mm."""
    if morph.count == 0:
        raise EmptyRoiError(stage="mesh")
    g = morph.geometry
    field_ = np.pad(morph.labels.astype(np.float64), 1)
    # mesh in grid units, where float32 vertices are exact half-integers, then scale in float64
    verts, faces, _, _ = measure.marching_cubes(field_, level=0.5, allow_degenerate=False)
    # (z, y, x) -> (x, y, z); origin shifted back by the padding layer
    verts = (verts[:, ::-1].astype(np.float64) - 1.0) * np.asarray(g.spacing) + np.asarray(g.origin)
    faces = _drop_coincident_faces(faces.astype(np.int64))
    # the axis swap is a reflection, so reverse the winding
    faces = faces[:, ::-1]
    if not edge_check(faces):
        faces = _orient_consistently(faces)
        if not edge_check(faces):
            raise ManifoldError("marching cubes output is not a closed oriented surface")
    if signed_volume(verts, faces) < 0:
        faces = faces[:, ::-1]
    return TriangleMesh(np.ascontiguousarray(verts), np.ascontiguousarray(faces))


def mesh_volume(m: TriangleMesh, check=True) -> float:
    if check and not edge_check(m.faces):
        raise ManifoldError("mesh is open or inconsistently wound")
    return abs(signed_volume(m.vertices, m.faces))


def mesh_area(m: TriangleMesh) -> float:
    v, f = m.vertices, m.faces
    a = v[f[:, 0]]
    cr = np.cross(v[f[:, 1]] - a, v[f[:, 2]] - a)
    return float(np.linalg.norm(cr, axis=1).sum() / 2.0)


# ------------------------------------------------------------------ hull, PCA

@dataclass(frozen=True)
class ConvexHull:
    points: np.ndarray      # hull vertices
    faces: np.ndarray       # triangles indexing ``points``
    normals: np.ndarray     # outward unit normals per face
    volume: float
    area: float


def convex_hull(points) -> ConvexHull:
    pts = np.asarray(points, dtype=float)
    # sort lexicographically so qhull sees a deterministic input order
    pts = np.unique(pts, axis=0)
    try:
        h = _QHull(pts)
    except Exception as exc:  # qhull raises its own error type
        raise DegenerateGeometryError(f"convex hull failed: {exc}") from None
    idx = np.unique(h.vertices)
    remap = -np.ones(len(pts), dtype=np.int64)
    remap[idx] = np.arange(len(idx))
    return ConvexHull(pts[idx], remap[h.simplices], h.equations[:, :3].copy(),
                      float(h.volume), float(h.area))


@dataclass(frozen=True)
class PrincipalAxes:
    eigenvalues: np.ndarray    # descending
    eigenvectors: np.ndarray   # columns
    center: np.ndarray

    @property
    def semi_axes(self):
        return 2.0 * np.sqrt(np.clip(self.eigenvalues, 0, None))


def principal_axes(points, ddof=0) -> PrincipalAxes:
    """PCA of a point set; ``ddof=0`` divides the covariance by N."""
    p = np.asarray(points, dtype=float).reshape(-1, 3)
    c = p.mean(axis=0)
    if len(p) - ddof <= 0:
        return PrincipalAxes(np.zeros(3), np.eye(3), c)
    d = p - c
    cov = d.T @ d / (len(p) - ddof)
    w, v = np.linalg.eigh(cov)
    order = np.argsort(w)[::-1]
    w = np.clip(w[order], 0, None)
    return PrincipalAxes(w, v[:, order], c)


@dataclass(frozen=True)
class Ellipsoid:
    center: np.ndarray
    semi_axes: np.ndarray      # descending
    rotation: np.ndarray       # columns are axis directions

    @property
    def volume(self):
        a, b, c = self.semi_axes
        return 4.0 * np.pi * a * b * c / 3.0

    def contains(self, points, tol=0.0):
        d = (np.asarray(points) - self.center) @ self.rotation
        return np.sum((d / self.semi_axes) ** 2, axis=1) <= 1.0 + tol


def mvee(points, tol=0.001, max_iter=100000) -> Ellipsoid:
    """Minimum volume enclosing ellipsoid by Khachiyan's coordinate descent.

    Iterates until the change in the barycentric weights drops below ``tol``,
    then scales the ellipsoid so that every point lies inside it.
    """
    P = np.asarray(points, dtype=float)
    n, d = P.shape
    if n < d + 1 or np.linalg.matrix_rank(P - P.mean(axis=0), tol=1e-9 * max(1.0, np.ptp(P))) < d:
        raise DegenerateGeometryError("points are not affinely independent in 3D; report NaN")
    Q = np.vstack([P.T, np.ones(n)])
    u = np.full(n, 1.0 / n)
    for _ in range(max_iter):
        X = (Q * u) @ Q.T
        M = np.einsum("ij,ji->i", Q.T, np.linalg.solve(X, Q))
        j = int(np.argmax(M))
        step = (M[j] - d - 1.0) / ((d + 1.0) * (M[j] - 1.0))
        new_u = (1.0 - step) * u
        new_u[j] += step
        err = np.linalg.norm(new_u - u)
        u = new_u
        if err < tol:
            break
    c = P.T @ u
    A = np.linalg.inv((P.T * u) @ P - np.outer(c, c)) / d
    # enlarge to enclose every input point exactly
    dist = np.einsum("ij,jk,ik->i", P - c, A, P - c)
    A = A / max(dist.max(), 1.0)
    w, v = np.linalg.eigh(A)
    axes = 1.0 / np.sqrt(w)
    order = np.argsort(axes)[::-1]
    return Ellipsoid(c, axes[order], v[:, order])


def _legendre_term(alpha, beta, nu):
    """(alpha*beta)^nu * P_nu((alpha^2 + beta^2) / (2 alpha beta)), stable as alpha*beta -> 0."""
    ab = alpha * beta
    s = (alpha ** 2 + beta ** 2) / 2.0
    if ab > 1e-3 * s:
        return ab ** nu * eval_legendre(nu, s / ab)
    coef = npleg.leg2poly(np.eye(nu + 1)[nu])
    return float(sum(ck * ab ** (nu - k) * s ** k for k, ck in enumerate(coef) if ck != 0))


def ellipsoid_area(a, b, c, n_terms=20) -> float:
    """Surface area of an ellipsoid with semi-axes a >= b >= c via a Legendre series."""
    a, b, c = sorted((float(a), float(b), float(c)), reverse=True)
    if c <= 0:
        raise DegenerateGeometryError("ellipsoid semi-axes must be positive")
    # eccentricities relative to the shortest axis; this form reduces to the
    # closed-form spheroid areas and converges to the exact surface integral
    alpha = np.sqrt(max(0.0, 1.0 - c ** 2 / a ** 2))
    beta = np.sqrt(max(0.0, 1.0 - c ** 2 / b ** 2))
    total = 0.0
    for nu in range(n_terms + 1):
        if nu == 0:
            term = 1.0
        elif alpha == 0 and beta == 0:
            break
        else:
            term = _legendre_term(alpha, beta, nu)
        total += term / (1.0 - 4.0 * nu * nu)
    return float(4.0 * np.pi * a * b * total)


# ------------------------------------------------------------- bounding boxes

def aabb(points):
    ext = np.ptp(np.asarray(points), axis=0)
    return float(np.prod(ext)), float(2 * (ext[0] * ext[1] + ext[0] * ext[2] + ext[1] * ext[2]))


def _min_rect(xy):
    """Minimum-area enclosing rectangle of 2D points; returns (area, w, h)."""
    try:
        hv = _QHull(xy).vertices
        pts = xy[hv]
    except Exception:
        pts = xy
    e = np.roll(pts, -1, axis=0) - pts
    ang = np.unique(np.mod(np.arctan2(e[:, 1], e[:, 0]), np.pi / 2))
    if not len(ang):
        ang = np.zeros(1)
    cs, sn = np.cos(ang), np.sin(ang)
    u = np.outer(cs, pts[:, 0]) + np.outer(sn, pts[:, 1])
    v = np.outer(-sn, pts[:, 0]) + np.outer(cs, pts[:, 1])
    w = u.max(axis=1) - u.min(axis=1)
    h = v.max(axis=1) - v.min(axis=1)
    k = int(np.argmin(w * h))
    return w[k] * h[k], w[k], h[k]


def _frame_box(points, R):
    q = points @ R
    ext = np.ptp(q, axis=0)
    return float(np.prod(ext)), ext


def ombb(hull: ConvexHull, extra_frames=()):
    """Approximate oriented minimum bounding box (volume, area).

    Candidate orientations: one box face flush with each hull face (best
    in-plane rotation found by rotating the projected hull), plus the supplied
    frames (e.g. PCA axes, the world axes).
    """
    P = hull.points
    best_v, best_ext = np.inf, None
    for R in extra_frames:
        v, ext = _frame_box(P, np.asarray(R))
        if v < best_v:
            best_v, best_ext = v, ext
    nrm = np.round(hull.normals, 9)
    nrm = nrm * np.where(nrm[:, [0]] < 0, -1, 1)
    nrm = np.unique(nrm, axis=0)
    for n in nrm:
        n = n / np.linalg.norm(n)
        t = np.array([1.0, 0, 0]) if abs(n[0]) < 0.9 else np.array([0, 1.0, 0])
        u = np.cross(n, t)
        u /= np.linalg.norm(u)
        w = np.cross(n, u)
        h = np.ptp(P @ n)
        area2, e1, e2 = _min_rect(np.column_stack([P @ u, P @ w]))
        v = area2 * h
        if v < best_v:
            best_v, best_ext = v, np.array([e1, e2, h])
    a, b, c = best_ext
    return float(best_v), float(2 * (a * b + a * c + b * c))


# --------------------------------------------------------- spatial statistics

@dataclass(frozen=True)
class SubsamplePolicy:
    threshold: int = 5000
    size: int = 1000
    repeats: int = 100
    seed: int = 1


def _moran_geary_exact(x, pts, chunk=2048):
    n = len(x)
    dx = x - x.mean()
    denom = np.sum(dx ** 2)
    w_sum = moran_num = geary_num = 0.0
    for s in range(0, n, chunk):
        p = pts[s:s + chunk]
        d = np.sqrt(((p[:, None, :] - pts[None, :, :]) ** 2).sum(axis=-1))
        with np.errstate(divide="ignore"):
            w = np.where(d > 0, 1.0 / d, 0.0)
        w_sum += w.sum()
        moran_num += (w * np.outer(dx[s:s + chunk], dx)).sum()
        geary_num += (w * (x[s:s + chunk, None] - x[None, :]) ** 2).sum()
    moran = n / w_sum * moran_num / denom
    geary = (n - 1) / (2.0 * w_sum) * geary_num / denom
    return moran, geary


def moran_geary(s: RoiIntensitySet, policy: SubsamplePolicy = SubsamplePolicy(), force_subsample=False):
    """Moran's I and Geary's C with inverse-distance weights.

    Returns (moran_i, geary_c, method) where method is ``exact`` or
    ``subsample``.
    """
    x, pts = s.values, s.centers
    if len(x) < 2:
        r = "needs at least two voxels"
        return undefined(r), undefined(r), "exact"
    if np.ptp(x) == 0:
        r = "zero intensity variance"
        return undefined(r), undefined(r), "exact"
    if len(x) <= policy.threshold and not force_subsample:
        m, g = _moran_geary_exact(x, pts)
        return float(m), float(g), "exact"
    rng = np.random.default_rng(policy.seed)
    size = min(policy.size, len(x))
    ms, gs = [], []
    for _ in range(policy.repeats):
        idx = rng.choice(len(x), size=size, replace=False)
        xs = x[idx]
        if np.ptp(xs) == 0:
            continue
        m, g = _moran_geary_exact(xs, pts[idx])
        ms.append(m), gs.append(g)
    if not ms:
        r = "all subsamples had zero variance"
        return undefined(r), undefined(r), "subsample"
    return float(np.mean(ms)), float(np.mean(gs)), "subsample"


# ------------------------------------------------------------------ features

def _ratio(num, den, reason):
    if den == 0 or not np.isfinite(den):
        return undefined(reason)
    return float(num / den)


def sphericity_family(V, A):
    comp2 = 36 * np.pi * V ** 2 / A ** 3
    return {
        "morph.comp.1": V / (np.sqrt(np.pi) * A ** 1.5),
        "morph.comp.2": comp2,
        "morph.sph.dispr": A / (36 * np.pi * V ** 2) ** (1 / 3),
        "morph.sphericity": (36 * np.pi * V ** 2) ** (1 / 3) / A,
        "morph.asphericity": (A ** 3 / (36 * np.pi * V ** 2)) ** (1 / 3) - 1,
    }


@dataclass
class MorphologyContext:
    """Intermediate geometry kept for reporting and plotting."""
    mesh: TriangleMesh = None
    hull: ConvexHull = None
    pca: PrincipalAxes = None
    mvee: Ellipsoid = None
    moran_method: str = ""
    notes: dict = field(default_factory=dict)


def compute_morphology(pair: RoiMaskPair, img: ImageVolume, mesh: TriangleMesh = None,
                       hull: ConvexHull = None, policy: SubsamplePolicy = SubsamplePolicy(),
                       ddof=0, mvee_tol=0.001, context: MorphologyContext = None):
    """All 29 morphological features as an ordered dict keyed by feature key."""
    ctx = context if context is not None else MorphologyContext()
    morph = pair.morphological
    if mesh is None:
        mesh = build_mesh(morph)
    if hull is None:
        hull = convex_hull(mesh.vertices)
    ctx.mesh, ctx.hull = mesh, hull
    V = mesh_volume(mesh)
    A = mesh_area(mesh)
    f = {}
    f["morph.vol"] = V
    f["morph.approx.vol"] = morph.count * morph.geometry.voxel_volume
    f["morph.area"] = A
    f["morph.av"] = A / V
    f.update(sphericity_family(V, A))

    xc = voxel_centers(morph)
    gl = extract_intensity_set(img, pair.intensity)
    w = gl.values
    if np.sum(w) == 0:
        f["morph.com"] = undefined("intensities sum to zero")
    else:
        com_gl = (gl.centers * w[:, None]).sum(axis=0) / w.sum()
        f["morph.com"] = float(np.linalg.norm(xc.mean(axis=0) - com_gl))

    f["morph.diam"] = float(pdist(hull.points).max()) if len(hull.points) > 1 else 0.0

    pca = principal_axes(xc, ddof=ddof)
    ctx.pca = pca
    lmaj, lmin, llst = pca.eigenvalues
    f["morph.pca.major"] = 4 * np.sqrt(lmaj)
    f["morph.pca.minor"] = 4 * np.sqrt(lmin)
    f["morph.pca.least"] = 4 * np.sqrt(llst)
    f["morph.pca.elongation"] = _ratio(np.sqrt(lmin), np.sqrt(lmaj), "major eigenvalue is zero")
    f["morph.pca.flatness"] = _ratio(np.sqrt(llst), np.sqrt(lmaj), "major eigenvalue is zero")

    v_aabb, a_aabb = aabb(mesh.vertices)
    f["morph.v.dens.aabb"] = V / v_aabb
    f["morph.a.dens.aabb"] = A / a_aabb
    v_ombb, a_ombb = ombb(hull, extra_frames=(np.eye(3), pca.eigenvectors))
    f["morph.v.dens.ombb"] = V / v_ombb
    f["morph.a.dens.ombb"] = A / a_ombb

    a, b, c = pca.semi_axes
    if c > 0:
        f["morph.v.dens.aee"] = 3 * V / (4 * np.pi * a * b * c)
        f["morph.a.dens.aee"] = A / ellipsoid_area(a, b, c)
    else:
        r = "PCA ellipsoid has a zero semi-axis"
        f["morph.v.dens.aee"] = undefined(r)
        f["morph.a.dens.aee"] = undefined(r)

    try:
        ell = mvee(hull.points, tol=mvee_tol)
        ctx.mvee = ell
        f["morph.v.dens.mvee"] = V / ell.volume
        f["morph.a.dens.mvee"] = A / ellipsoid_area(*ell.semi_axes)
    except DegenerateGeometryError as exc:
        f["morph.v.dens.mvee"] = undefined(str(exc))
        f["morph.a.dens.mvee"] = undefined(str(exc))

    f["morph.v.dens.conv.hull"] = V / hull.volume
    f["morph.a.dens.conv.hull"] = A / hull.area
    f["morph.integ.int"] = V * float(np.mean(w))
    mi, gc, method = moran_geary(gl, policy)
    ctx.moran_method = method
    f["morph.moran.i"] = mi
    f["morph.geary.c"] = gc
    return {k: (v if isinstance(v, float) and hasattr(v, "reason") else float(v)) for k, v in f.items()}
