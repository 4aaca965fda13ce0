"""Polygon and triangle helpers: ear clipping, prism extrusion, ray/triangle tests."""

from typing import List, Sequence, Tuple

import numpy as np

Vec2 = Tuple[float, float]

MIN_TRIANGLE_AREA = 1e-9
_MT_EPS = 1e-12


# =========================
# POLYGONS
# =========================

def polygon_signed_area(verts: Sequence[Vec2]) -> float:
    """Shoelace formula; positive = CCW."""
    n = len(verts)
    area = 0.0
    for i in range(n):
        j = (i + 1) % n
        area += verts[i][0] * verts[j][1] - verts[j][0] * verts[i][1]
    return area * 0.5


def ensure_ccw(verts: Sequence[Vec2]) -> List[Vec2]:
    if polygon_signed_area(verts) < 0:
        return list(reversed(verts))
    return list(verts)


def drop_closing_vertex(verts: Sequence[Vec2], tol: float = 1e-9) -> List[Vec2]:
    verts = list(verts)
    if len(verts) > 1 and abs(verts[0][0] - verts[-1][0]) < tol and abs(verts[0][1] - verts[-1][1]) < tol:
        return verts[:-1]
    return verts


def _point_in_triangle_2d(p: Vec2, a: Vec2, b: Vec2, c: Vec2) -> bool:
    def sign3(p1, p2, p3):
        return (p1[0] - p3[0]) * (p2[1] - p3[1]) - (p2[0] - p3[0]) * (p1[1] - p3[1])

    d1 = sign3(p, a, b)
    d2 = sign3(p, b, c)
    d3 = sign3(p, c, a)
    has_neg = d1 < 0 or d2 < 0 or d3 < 0
    has_pos = d1 > 0 or d2 > 0 or d3 > 0
    return not (has_neg and has_pos)


def ear_clip(verts: Sequence[Vec2]) -> List[Tuple[int, int, int]]:
    """Triangulate a simple CCW polygon; returns index triples into ``verts``.

    Always yields ``len(verts) - 2`` triangles for a simple polygon.
    """
    n = len(verts)
    if n < 3:
        return []
    active = list(range(n))
    tris: List[Tuple[int, int, int]] = []

    while len(active) > 3:
        m = len(active)
        for i in range(m):
            ia, ib, ic = active[(i - 1) % m], active[i], active[(i + 1) % m]
            (ax, ay), (bx, by), (cx, cy) = verts[ia], verts[ib], verts[ic]
            if (bx - ax) * (cy - ay) - (by - ay) * (cx - ax) <= 1e-12:
                continue  # reflex or collinear
            if any(
                _point_in_triangle_2d(verts[active[j]], verts[ia], verts[ib], verts[ic])
                for j in range(m)
                if active[j] not in (ia, ib, ic)
            ):
                continue
            tris.append((ia, ib, ic))
            active.pop(i)
            break
        else:
            raise ValueError("polygon could not be triangulated (not simple?)")

    tris.append((active[0], active[1], active[2]))
    return tris


def extrude_prism(polygon: Sequence[Vec2], height: float) -> np.ndarray:
    """Walls + flat roof of a footprint standing on z=0; shape (2n + n - 2, 3, 3).

    The floor is left open: the ground plane closes the solid.
    """
    poly = ensure_ccw(polygon)
    n = len(poly)
    tris = []
    for i in range(n):
        j = (i + 1) % n
        bl = (poly[i][0], poly[i][1], 0.0)
        br = (poly[j][0], poly[j][1], 0.0)
        tl = (poly[i][0], poly[i][1], height)
        tr = (poly[j][0], poly[j][1], height)
        tris.append((bl, br, tr))
        tris.append((bl, tr, tl))
    for a, b, c in ear_clip(poly):
        tris.append(
            (
                (poly[a][0], poly[a][1], height),
                (poly[b][0], poly[b][1], height),
                (poly[c][0], poly[c][1], height),
            )
        )
    return np.asarray(tris, dtype=np.float64)


# =========================
# TRIANGLES
# =========================

def triangle_areas(tris: np.ndarray) -> np.ndarray:
    if len(tris) == 0:
        return np.zeros(0)
    cross = np.cross(tris[:, 1] - tris[:, 0], tris[:, 2] - tris[:, 0])
    return 0.5 * np.linalg.norm(cross, axis=1)


def triangle_normals(tris: np.ndarray) -> np.ndarray:
    if len(tris) == 0:
        return np.zeros((0, 3))
    cross = np.cross(tris[:, 1] - tris[:, 0], tris[:, 2] - tris[:, 0])
    return cross / np.linalg.norm(cross, axis=1)[:, None]


def intersect_triangles(
    origin: np.ndarray,
    direction: np.ndarray,
    v0: np.ndarray,
    e1: np.ndarray,
    e2: np.ndarray,
    t_min: float,
    t_max: float,
) -> np.ndarray:
    """Moller-Trumbore against many triangles; ray parameter per triangle, inf on miss."""
    pvec = np.cross(direction, e2)
    det = np.einsum("ij,ij->i", e1, pvec)
    ok = np.abs(det) > _MT_EPS
    inv_det = np.where(ok, 1.0 / np.where(ok, det, 1.0), 0.0)
    tvec = origin - v0
    u = np.einsum("ij,ij->i", tvec, pvec) * inv_det
    qvec = np.cross(tvec, e1)
    v = (qvec @ direction) * inv_det
    t = np.einsum("ij,ij->i", e2, qvec) * inv_det
    hit = ok & (u >= -_MT_EPS) & (v >= -_MT_EPS) & (u + v <= 1.0 + _MT_EPS) & (t > t_min) & (t < t_max)
    return np.where(hit, t, np.inf)


def point_in_triangle_3d(p: np.ndarray, v0: np.ndarray, e1: np.ndarray, e2: np.ndarray, tol: float = 1e-9) -> np.ndarray:
    """Barycentric containment of points ``p`` (k,3) lying on the planes of (k,) triangles."""
    w = p - v0
    d00 = np.einsum("ij,ij->i", e1, e1)
    d01 = np.einsum("ij,ij->i", e1, e2)
    d11 = np.einsum("ij,ij->i", e2, e2)
    d20 = np.einsum("ij,ij->i", w, e1)
    d21 = np.einsum("ij,ij->i", w, e2)
    denom = d00 * d11 - d01 * d01
    b1 = (d11 * d20 - d01 * d21) / denom
    b2 = (d00 * d21 - d01 * d20) / denom
    return (b1 >= -tol) & (b2 >= -tol) & (b1 + b2 <= 1.0 + tol)


def mirror_points(p: np.ndarray, v0: np.ndarray, normals: np.ndarray) -> np.ndarray:
    """Mirror points (k,3) across the planes through ``v0`` with unit ``normals``."""
    dist = np.einsum("ij,ij->i", p - v0, normals)
    return p - 2.0 * dist[:, None] * normals


def mesh_feature_edges(tris: np.ndarray, angle_deg: float = 20.0, ground_tol: float = 1e-6) -> List[Tuple[np.ndarray, np.ndarray]]:
    """Edges shared by two faces whose normals differ by more than ``angle_deg``.

    Edges lying on the ground are skipped.
    """
    normals = triangle_normals(tris)
    owners = {}
    for t, tri in enumerate(tris):
        for a, b in ((0, 1), (1, 2), (2, 0)):
            key = tuple(sorted((tuple(np.round(tri[a], 9)), tuple(np.round(tri[b], 9)))))
            owners.setdefault(key, []).append(t)
    cos_lim = np.cos(np.radians(angle_deg))
    edges = []
    for (pa, pb), faces in sorted(owners.items()):
        if len(faces) != 2:
            continue
        if abs(pa[2]) < ground_tol and abs(pb[2]) < ground_tol:
            continue
        if float(normals[faces[0]] @ normals[faces[1]]) < cos_lim:
            edges.append((np.asarray(pa), np.asarray(pb)))
    return edges


def segments_blocked(
    starts: np.ndarray,
    ends: np.ndarray,
    v0: np.ndarray,
    e1: np.ndarray,
    e2: np.ndarray,
    eps: float,
    max_pairs: int = 262144,
) -> np.ndarray:
    """Mask of segments (k,) whose open interior crosses any triangle.

    Same Moller-Trumbore test as ``intersect_triangles``, broadcast over segments
    and triangles in blocks of at most ``max_pairs`` pairs.
    """
    starts, ends = np.broadcast_arrays(
        np.asarray(starts, dtype=float).reshape(-1, 3), np.asarray(ends, dtype=float).reshape(-1, 3)
    )
    k = len(starts)
    blocked = np.zeros(k, dtype=bool)
    if k == 0 or len(v0) == 0:
        return blocked
    d = ends - starts
    length = np.linalg.norm(d, axis=1)
    live = length > 2 * eps
    unit = d / np.where(live, length, 1.0)[:, None]
    tri_lo = np.minimum(v0, np.minimum(v0 + e1, v0 + e2))
    tri_hi = np.maximum(v0, np.maximum(v0 + e1, v0 + e2))

    step = max(1, max_pairs // len(v0))
    for s in range(0, k, step):
        rows = np.arange(s, min(k, s + step))
        rows = rows[live[rows]]
        if len(rows) == 0:
            continue
        a, b = starts[rows], ends[rows]
        lo = np.minimum(a, b).min(axis=0)
        hi = np.maximum(a, b).max(axis=0)
        near = np.flatnonzero(np.all((tri_hi >= lo - eps) & (tri_lo <= hi + eps), axis=1))
        if len(near) == 0:
            continue
        u = unit[rows]
        pvec = np.cross(u[:, None, :], e2[near][None, :, :])
        det = np.einsum("kmj,mj->km", pvec, e1[near])
        ok = np.abs(det) > _MT_EPS
        inv_det = np.where(ok, 1.0 / np.where(ok, det, 1.0), 0.0)
        tvec = a[:, None, :] - v0[near][None, :, :]
        bu = np.einsum("kmj,kmj->km", tvec, pvec) * inv_det
        qvec = np.cross(tvec, e1[near][None, :, :])
        bv = np.einsum("kmj,kj->km", qvec, u) * inv_det
        t = np.einsum("mj,kmj->km", e2[near], qvec) * inv_det
        hit = (
            ok & (bu >= -_MT_EPS) & (bv >= -_MT_EPS) & (bu + bv <= 1.0 + _MT_EPS)
            & (t > eps) & (t < length[rows][:, None] - eps)
        )
        blocked[rows] = hit.any(axis=1)
    return blocked
