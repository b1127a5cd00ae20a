"""Primitive fitting: planes (RANSAC), containing cylinders, minimal
enclosing spheres, statistical outlier removal, and body/face frames.

Sign conventions: fitted plane normals and anterior directions face the
camera (dot with the negated centroid is positive); principal directions get
a deterministic sign (largest-magnitude component positive).
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np
from scipy.spatial import cKDTree

from .errors import CleanDegradedWarning, DegenerateCloud, MissingLandmarks
from .unproject import FACE_REQUIRED, Landmark3D, PointCloud, SKELETON_REQUIRED

RANSAC_THRESHOLD = 0.01   # relative to median cloud depth
RANSAC_ITERS = 500
SPHERE_MAX_POINTS = 50_000


@dataclass(frozen=True, eq=False)
class Plane:
    """Oriented plane {p : normal.p + d = 0} with an in-plane frame.

    ``extent`` holds half-sizes along (primary_dir, normal x primary_dir).
    """

    normal: np.ndarray
    d: float
    centroid: np.ndarray
    primary_dir: np.ndarray
    extent: tuple[float, float]

    @property
    def secondary_dir(self) -> np.ndarray:
        return np.cross(self.normal, self.primary_dir)

    def signed_distance(self, pts: np.ndarray) -> np.ndarray:
        return np.asarray(pts) @ self.normal + self.d


@dataclass(frozen=True, eq=False)
class Cylinder:
    axis_point: np.ndarray
    axis_dir: np.ndarray
    radius: float
    half_height: float


@dataclass(frozen=True, eq=False)
class Sphere:
    center: np.ndarray
    radius: float


@dataclass(frozen=True, eq=False)
class Skeleton3D:
    landmarks: dict[str, Landmark3D]
    cranial: np.ndarray
    anterior: np.ndarray
    lateral: np.ndarray
    frontal: Plane
    median: Plane


@dataclass(frozen=True, eq=False)
class Face3D:
    landmarks: dict[str, Landmark3D]
    cranial: np.ndarray
    anterior: np.ndarray
    lateral: np.ndarray
    frontal: Plane
    median: Plane


def _unit(v: np.ndarray) -> np.ndarray:
    n = np.linalg.norm(v)
    if n == 0:
        raise ValueError("zero-length direction")
    return v / n


def _dominant_sign(v: np.ndarray) -> np.ndarray:
    """Flip so the largest-magnitude component is positive (reproducible)."""
    i = int(np.argmax(np.abs(v)))
    return -v if v[i] < 0 else v


def _orthobasis(normal: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Deterministic in-plane basis (b1, b2) with b2 = normal x b1."""
    axis = np.zeros(3)
    axis[int(np.argmin(np.abs(normal)))] = 1.0
    b1 = _unit(axis - (axis @ normal) * normal)
    return b1, np.cross(normal, b1)


def clean_pointcloud(pc: PointCloud, k: int = 8,
                     sigma_mult: float = 2.0) -> PointCloud:
    """Statistical outlier removal: keep points whose mean distance to the
    k nearest neighbors is within sigma_mult standard deviations of the
    global mean.  Never empties the cloud (warns and returns it unchanged)."""
    if len(pc) == 0:
        raise ValueError("empty cloud")
    if k < 1:
        raise ValueError(f"k must be >= 1, got {k}")
    n = len(pc)
    if n <= 1:
        return pc
    k = min(k, n - 1)
    dists, _ = cKDTree(pc.points).query(pc.points, k=k + 1)
    mean_d = dists[:, 1:].mean(axis=1)
    keep = mean_d <= mean_d.mean() + sigma_mult * mean_d.std()
    if not keep.any():
        warnings.warn("outlier filter would remove every point; cloud returned "
                      "unchanged", CleanDegradedWarning)
        return pc
    src = None if pc.source_pixels is None else pc.source_pixels[keep]
    return PointCloud(points=pc.points[keep], source_pixels=src)


def ransac_candidate_indices(n: int, iters: int, seed: int) -> np.ndarray:
    """The deterministic (iters, 3) sample-index sequence used by
    fit_plane_ransac; exposed so tests can replay candidate evaluation."""
    rng = np.random.default_rng(seed)
    return np.stack([rng.choice(n, size=3, replace=False) for _ in range(iters)])


def _ls_plane(pts: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Least-squares plane through the centroid; returns (normal, centroid)."""
    c = pts.mean(axis=0)
    _, _, vt = np.linalg.svd(pts - c, full_matrices=False)
    return vt[-1], c


def fit_plane_ransac(pc: PointCloud, threshold: float = RANSAC_THRESHOLD,
                     iters: int = RANSAC_ITERS, seed: int = 0) -> Plane:
    """RANSAC plane fit with a depth-relative inlier threshold and a
    least-squares refit over the best candidate's inliers."""
    pts = pc.points
    n = pts.shape[0]
    if n < 3:
        raise DegenerateCloud(f"plane fit needs >= 3 points, got {n}")
    centered = pts - pts.mean(axis=0)
    if np.linalg.matrix_rank(centered, tol=1e-12) < 2:
        raise DegenerateCloud("collinear cloud")

    tau = threshold * float(np.median(pts[:, 2]))
    triples = ransac_candidate_indices(n, iters, seed)
    p0, p1, p2 = pts[triples[:, 0]], pts[triples[:, 1]], pts[triples[:, 2]]
    normals = np.cross(p1 - p0, p2 - p0)
    norms = np.linalg.norm(normals, axis=1)
    ok = norms > 1e-12
    if not ok.any():
        raise DegenerateCloud("no non-collinear RANSAC sample")
    normals[ok] /= norms[ok, None]
    # (iters, n) residuals in one shot
    dist = np.abs(pts @ normals.T - np.einsum("ij,ij->i", normals, p0))
    counts = np.where(ok, (dist.T <= tau).sum(axis=1), -1)
    best = int(np.argmax(counts))
    inliers0 = dist[:, best] <= tau

    normal, c0 = _ls_plane(pts[inliers0])
    facing = normal @ (-c0)
    if facing < 0:
        normal = -normal
    elif facing == 0:
        normal = _dominant_sign(normal)
    d = -float(normal @ c0)

    resid = np.abs(pts @ normal + d)
    final = resid <= tau
    if not final.any():
        final = inliers0
    fin = pts[final]
    centroid = fin.mean(axis=0)
    centroid = centroid - (normal @ centroid + d) * normal  # project onto plane

    b1, b2 = _orthobasis(normal)
    q = np.column_stack(((fin - centroid) @ b1, (fin - centroid) @ b2))
    cov = np.cov(q.T) if len(fin) > 1 else np.eye(2)
    _, vecs = np.linalg.eigh(np.atleast_2d(cov))
    v2 = vecs[:, -1]
    primary = _dominant_sign(_unit(v2[0] * b1 + v2[1] * b2))
    sec = np.cross(normal, primary)
    extent = (float(np.abs((fin - centroid) @ primary).max()),
              float(np.abs((fin - centroid) @ sec).max()))
    return Plane(normal=normal, d=d, centroid=centroid,
                 primary_dir=primary, extent=extent)


def fit_cylinder(pc: PointCloud,
                 direction: np.ndarray | None = None) -> Cylinder:
    """Containing cylinder: axis from the given direction or the first
    principal component, radius = max point-to-axis distance."""
    pts = pc.points
    n = pts.shape[0]
    if n == 0:
        raise DegenerateCloud("empty cloud")
    if direction is not None:
        axis = _unit(np.asarray(direction, dtype=np.float64))
    else:
        if n == 1:
            raise DegenerateCloud("single point and no axis direction")
        c = pts.mean(axis=0)
        cov = (pts - c).T @ (pts - c)
        _, vecs = np.linalg.eigh(cov)
        axis = _dominant_sign(vecs[:, -1])
    c = pts.mean(axis=0)
    t = (pts - c) @ axis
    tmin, tmax = float(t.min()), float(t.max())
    axis_point = c + ((tmin + tmax) / 2.0) * axis
    perp = (pts - c) - np.outer(t, axis)
    radius = float(np.linalg.norm(perp, axis=1).max())
    return Cylinder(axis_point=axis_point, axis_dir=axis, radius=radius,
                    half_height=(tmax - tmin) / 2.0)


# --- minimal enclosing sphere -------------------------------------------

def _ball_2(a: np.ndarray, b: np.ndarray) -> tuple[np.ndarray, float]:
    c = (a + b) / 2.0
    return c, float(np.linalg.norm(a - c))


def _circumsphere_3(a: np.ndarray, b: np.ndarray,
                    c: np.ndarray) -> tuple[np.ndarray, float] | None:
    """Smallest sphere with a, b, c on the boundary (center in their plane)."""
    ab, ac = b - a, c - a
    cr = np.cross(ab, ac)
    den = 2.0 * float(cr @ cr)
    if den < 1e-300:
        return None
    o = (float(ab @ ab) * np.cross(cr, ac) + float(ac @ ac) * np.cross(ab, cr)) / den
    center = a + o
    return center, float(np.linalg.norm(o))


def _circumsphere_4(a, b, c, d) -> tuple[np.ndarray, float] | None:
    m = np.array([b - a, c - a, d - a])
    rhs = 0.5 * np.array([float(b @ b - a @ a), float(c @ c - a @ a),
                          float(d @ d - a @ a)]) - (m @ a)
    det = np.linalg.det(m)
    if abs(det) < 1e-300:
        return None
    center = a + np.linalg.solve(m, rhs)
    return center, float(np.linalg.norm(a - center))


def _inside(ball: tuple[np.ndarray, float] | None, p: np.ndarray) -> bool:
    if ball is None:
        return False
    c, r = ball
    return float(np.linalg.norm(p - c)) <= r * (1 + 1e-12) + 1e-30


def fit_sphere(pc: PointCloud, seed: int = 0) -> Sphere:
    """Exact minimal enclosing sphere (incremental Welzl-family construction
    over a seeded random order).  Clouds above 50k points are first
    downsampled uniformly at random (seeded)."""
    pts = pc.points.astype(np.float64)
    if pts.shape[0] == 0:
        raise ValueError("empty cloud")
    rng = np.random.default_rng(seed)
    if pts.shape[0] > SPHERE_MAX_POINTS:
        pts = pts[rng.choice(pts.shape[0], SPHERE_MAX_POINTS, replace=False)]
    pts = pts[rng.permutation(pts.shape[0])]

    ball: tuple[np.ndarray, float] = (pts[0].copy(), 0.0)
    for i in range(1, len(pts)):
        if not _inside(ball, pts[i]):
            ball = _mb_with_1(pts[:i], pts[i])
    return Sphere(center=ball[0], radius=ball[1])


def _mb_with_1(pts, p) -> tuple[np.ndarray, float]:
    ball: tuple[np.ndarray, float] = (p.copy(), 0.0)
    for j in range(len(pts)):
        if not _inside(ball, pts[j]):
            ball = _mb_with_2(pts[:j], p, pts[j])
    return ball


def _mb_with_2(pts, p, q) -> tuple[np.ndarray, float]:
    ball = _ball_2(p, q)
    for k in range(len(pts)):
        if not _inside(ball, pts[k]):
            ball = _mb_with_3(pts[:k], p, q, pts[k])
    return ball


def _mb_with_3(pts, p, q, r) -> tuple[np.ndarray, float]:
    ball = _circumsphere_3(p, q, r)
    if ball is None:  # collinear support: widest pair wins
        ball = max((_ball_2(p, q), _ball_2(p, r), _ball_2(q, r)),
                   key=lambda b: b[1])
    for m in range(len(pts)):
        if not _inside(ball, pts[m]):
            b4 = _circumsphere_4(p, q, r, pts[m])
            if b4 is not None:
                ball = b4
    return ball


# --- derived geometry ----------------------------------------------------

def derive_extruded_plane(plane: Plane) -> Plane:
    """The perpendicular extrusion: passes through the same centroid,
    contains the source normal and primary direction; camera-facing."""
    n2 = _unit(np.cross(plane.normal, plane.primary_dir))
    if n2 @ (-plane.centroid) < 0:
        n2 = -n2
    return Plane(normal=n2, d=-float(n2 @ plane.centroid),
                 centroid=plane.centroid, primary_dir=plane.primary_dir,
                 extent=plane.extent)


def _body_plane(normal: np.ndarray, primary: np.ndarray, up: np.ndarray,
                centroid: np.ndarray, positions: np.ndarray) -> Plane:
    # keep the plane's t-axis (normal x primary) pointing cranially
    if np.cross(normal, primary) @ up < 0:
        primary = -primary
    sec = np.cross(normal, primary)
    rel = positions - centroid
    sp = float(np.abs(rel @ primary).max())
    ss = float(np.abs(rel @ sec).max())
    extent = (max(sp, 0.5 * ss, 1e-3), max(ss, 1e-3))
    return Plane(normal=normal, d=-float(normal @ centroid), centroid=centroid,
                 primary_dir=primary, extent=extent)


def derive_body_frames(lms: list[Landmark3D], kind: str) -> Skeleton3D | Face3D:
    """Build the orthonormal (cranial, anterior, lateral) frame plus frontal
    and median planes from named landmarks.

    Skeleton needs both shoulders and hips; face needs both eyes and the
    nose tip (the chin refines "up" when present).
    """
    by_name = {lm.name: lm for lm in lms}
    if kind == "skeleton":
        missing = [n for n in SKELETON_REQUIRED if n not in by_name]
        if missing:
            raise MissingLandmarks(f"skeleton landmarks missing: {', '.join(missing)}")
        ls = by_name["left_shoulder"].position
        rs = by_name["right_shoulder"].position
        lh = by_name["left_hip"].position
        rh = by_name["right_hip"].position
        axis_raw = (ls + rs) / 2 - (lh + rh) / 2
        if np.linalg.norm(axis_raw) < 1e-12:
            raise MissingLandmarks("shoulder and hip midpoints coincide")
        cranial = _unit(axis_raw)
        lat_raw = ls - rs
        lat_raw = lat_raw - (lat_raw @ cranial) * cranial
        if np.linalg.norm(lat_raw) < 1e-12:
            raise MissingLandmarks("shoulder axis parallel to spine")
        lateral = _unit(lat_raw)
    elif kind == "face":
        missing = [n for n in FACE_REQUIRED if n not in by_name]
        if missing:
            raise MissingLandmarks(f"face landmarks missing: {', '.join(missing)}")
        le = by_name["left_eye"].position
        re = by_name["right_eye"].position
        eye_mid = (le + re) / 2
        low = by_name["chin"].position if "chin" in by_name \
            else by_name["nose_tip"].position
        lat_raw = le - re
        if np.linalg.norm(lat_raw) < 1e-12:
            raise MissingLandmarks("coincident eyes")
        lateral = _unit(lat_raw)
        up_raw = eye_mid - low
        up_raw = up_raw - (up_raw @ lateral) * lateral
        if np.linalg.norm(up_raw) < 1e-12:
            raise MissingLandmarks("degenerate face-up direction")
        cranial = _unit(up_raw)
    else:
        raise ValueError(f"kind must be 'skeleton' or 'face', got {kind!r}")

    positions = np.array([lm.position for lm in lms])
    centroid = positions.mean(axis=0)
    anterior = _unit(np.cross(lateral, cranial))
    if anterior @ (-centroid) < 0:
        anterior = -anterior

    frontal = _body_plane(anterior, lateral, cranial, centroid, positions)
    median = _body_plane(lateral, anterior, cranial, centroid, positions)
    cls = Skeleton3D if kind == "skeleton" else Face3D
    return cls(landmarks=by_name, cranial=cranial, anterior=anterior,
               lateral=lateral, frontal=frontal, median=median)
