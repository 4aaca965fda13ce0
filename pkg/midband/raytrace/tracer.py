"""Deterministic path finder: LOS, image-method reflections, knife-edge diffraction, diffuse scattering."""

import itertools
import logging
import math
from typing import Iterator, List, Optional, Sequence, Tuple

import numpy as np

from midband.core.errors import DomainError
from midband.raytrace.propagation import (
    fresnel_kirchhoff_nu,
    free_space_path_loss_db,
    knife_edge_loss_db,
)
from midband.raytrace.schemas import (
    GROUND_ID,
    Bounce,
    KnifeEdge,
    PathComponent,
    PathKind,
    ScatterPatch,
    TraceConfig,
)
from midband.scene.geometry import point_in_triangle_3d
from midband.scene.store import Scene

logger = logging.getLogger(__name__)

_PARAM_EPS = 1e-9
_PLANE_EPS = 1e-12
_MIN_LEG_M = 1e-6
_SEQUENCE_BLOCK = 32768
_EDGE_BATCH = 64
_DOUBLE_EDGE_SHORTLIST = 16


def los_visible(scene: Scene, a, b) -> bool:
    return scene.segment_clear(a, b)


def _unit(v: np.ndarray) -> Tuple[float, float, float]:
    n = float(np.linalg.norm(v))
    return tuple((v / n).tolist())


def _component(kind: PathKind, vertices: Sequence[np.ndarray], **extra) -> PathComponent:
    pts = [np.asarray(v, dtype=float) for v in vertices]
    length = float(sum(np.linalg.norm(pts[k + 1] - pts[k]) for k in range(len(pts) - 1)))
    return PathComponent(
        kind=kind,
        vertices=tuple(tuple(p.tolist()) for p in pts),
        length=length,
        departure_dir=_unit(pts[1] - pts[0]),
        arrival_dir=_unit(pts[-2] - pts[-1]),
        **extra,
    )


# =========================
# Reflection candidates
# =========================

class _Surfaces:
    """Reflecting planes considered for one link: triangles plus the optional ground."""

    def __init__(self, scene: Scene, tx: np.ndarray, rx: np.ndarray, radius: Optional[float]):
        ids = np.arange(scene.n_triangles)
        if radius is not None and len(ids):
            lo = scene.triangles.min(axis=1)
            hi = scene.triangles.max(axis=1)
            near = np.zeros(len(ids), dtype=bool)
            for p in (tx, rx):
                gap = np.maximum(np.maximum(lo - p, p - hi), 0.0)
                near |= np.linalg.norm(gap, axis=1) <= radius
            ids = ids[near]
        v0 = scene.v0[ids]
        e1 = scene.e1[ids]
        e2 = scene.e2[ids]
        normals = scene.normals[ids]
        if scene.ground is not None:
            ids = np.append(ids, GROUND_ID)
            v0 = np.vstack([v0, [0.0, 0.0, 0.0]])
            e1 = np.vstack([e1, [1.0, 0.0, 0.0]])
            e2 = np.vstack([e2, [0.0, 1.0, 0.0]])
            normals = np.vstack([normals, [0.0, 0.0, 1.0]])
        self.ids = ids
        self.v0 = v0.reshape(-1, 3)
        self.e1 = e1.reshape(-1, 3)
        self.e2 = e2.reshape(-1, 3)
        self.normals = normals.reshape(-1, 3)
        self.is_ground = ids == GROUND_ID

    def __len__(self) -> int:
        return len(self.ids)


def _mirror(p: np.ndarray, v0: np.ndarray, n: np.ndarray) -> np.ndarray:
    dist = np.einsum("...j,...j->...", p - v0, n)
    return p - 2.0 * dist[..., None] * n


def _sequences(n: int, order: int, block: int = _SEQUENCE_BLOCK) -> Iterator[np.ndarray]:
    """Surface index sequences with no immediate repeat, in lexicographic order, ``block`` rows at a time."""
    if order == 1:
        yield np.arange(n)[:, None]
        return
    first = np.repeat(np.arange(n), n)
    second = np.tile(np.arange(n), n)
    for head in itertools.product(range(n), repeat=order - 2):
        if any(head[r] == head[r + 1] for r in range(len(head) - 1)):
            continue
        keep = first != second
        if head:
            keep &= first != head[-1]
        tail = np.column_stack([first[keep], second[keep]])
        rows = np.column_stack([np.tile(np.asarray(head, dtype=int), (len(tail), 1)), tail])
        for s in range(0, len(rows), block):
            yield rows[s:s + block]


def _backtrack(surf: _Surfaces, seqs: np.ndarray, tx: np.ndarray, rx: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    """Reflection points for each row of ``seqs`` (k, m).

    Returns (valid mask, points of shape (k, m, 3)) with points ordered from tx.
    """
    k, m = seqs.shape
    images = []
    img = np.broadcast_to(tx, (k, 3))
    for r in range(m):
        idx = seqs[:, r]
        img = _mirror(img, surf.v0[idx], surf.normals[idx])
        images.append(img)

    valid = np.ones(k, dtype=bool)
    points = np.zeros((k, m, 3))
    q = np.broadcast_to(rx, (k, 3))
    for r in range(m - 1, -1, -1):
        idx = seqs[:, r]
        n = surf.normals[idx]
        d = images[r] - q
        denom = np.einsum("ij,ij->i", n, d)
        ok = np.abs(denom) > _PLANE_EPS
        t = np.einsum("ij,ij->i", n, surf.v0[idx] - q) / np.where(ok, denom, 1.0)
        ok &= (t > _PARAM_EPS) & (t < 1.0 - _PARAM_EPS)
        p = q + t[:, None] * d
        inside = point_in_triangle_3d(p, surf.v0[idx], surf.e1[idx], surf.e2[idx])
        valid &= ok & (inside | surf.is_ground[idx])
        points[:, r] = p
        q = p
    return valid, points


def _reflections(scene: Scene, tx: np.ndarray, rx: np.ndarray, cfg: TraceConfig) -> List[PathComponent]:
    surf = _Surfaces(scene, tx, rx, cfg.max_candidate_distance_m)
    out: List[PathComponent] = []
    if len(surf) == 0:
        return out
    for order in range(1, cfg.max_reflection_order + 1):
        for seqs in _sequences(len(surf), order):
            valid, points = _backtrack(surf, seqs, tx, rx)
            rows = np.flatnonzero(valid)
            if len(rows) == 0:
                continue
            # every leg of every geometric candidate in one occlusion query
            chains = np.concatenate(
                [np.broadcast_to(tx, (len(rows), 1, 3)), points[rows], np.broadcast_to(rx, (len(rows), 1, 3))], axis=1
            )
            clear = scene.segments_clear(chains[:, :-1].reshape(-1, 3), chains[:, 1:].reshape(-1, 3))
            clear = clear.reshape(len(rows), order + 1).all(axis=1)
            for chain, row in zip(chains[clear], rows[clear]):
                bounces = []
                for r, s in enumerate(seqs[row]):
                    d_in = chain[r + 1] - chain[r]
                    cos_i = abs(float(d_in @ surf.normals[s])) / float(np.linalg.norm(d_in))
                    surface = int(surf.ids[s])
                    material = scene.material_of(surface)
                    bounces.append(Bounce(surface, material.name, math.acos(min(1.0, cos_i))))
                out.append(_component(PathKind.REFLECTION, list(chain), bounces=tuple(bounces), order=order))
    return out


# =========================
# Diffraction
# =========================

def _edge_points(scene: Scene, tx: np.ndarray, rx: np.ndarray) -> np.ndarray:
    """Point on each edge minimising |tx - p| + |p - rx|."""
    a, b = scene.edge_a, scene.edge_b
    u = b - a
    length = np.linalg.norm(u, axis=1)
    length = np.where(length > 0, length, 1.0)
    u_hat = u / length[:, None]

    def project(x):
        w = x - a
        t = np.einsum("ij,ij->i", w, u_hat)
        r = np.linalg.norm(w - t[:, None] * u_hat, axis=1)
        return t, r

    t1, r1 = project(tx)
    t2, r2 = project(rx)
    rs = r1 + r2
    t_star = np.where(rs > 0, t1 + (t2 - t1) * r1 / np.where(rs > 0, rs, 1.0), 0.5 * (t1 + t2))
    t_star = np.clip(t_star, 0.0, length)
    return a + t_star[:, None] * u_hat


def _clearance(p: np.ndarray, a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Distance of points ``p`` from the lines a-b."""
    line = b - a
    return np.linalg.norm(np.cross(p - a, line), axis=-1) / np.linalg.norm(line, axis=-1)


def _edge_loss_db(height, d1, d2, frequency: float, model) -> np.ndarray:
    return np.array(
        [knife_edge_loss_db(fresnel_kirchhoff_nu(h, a, b, frequency), model) for h, a, b in zip(height, d1, d2)]
    )


def _diffractions(scene: Scene, tx: np.ndarray, rx: np.ndarray, cfg: TraceConfig) -> List[PathComponent]:
    """The ``max_diffraction_edges`` lowest-loss single edges whose legs are both clear.

    Candidates are checked in loss order, a batch at a time. When no single edge
    works and ``double_diffraction`` is on, pairs of edges are tried instead.
    """
    if len(scene.edge_a) == 0 or cfg.max_diffraction_edges == 0:
        return []
    p = _edge_points(scene, tx, rx)
    d1 = np.linalg.norm(p - tx, axis=1)
    d2 = np.linalg.norm(rx - p, axis=1)
    height = _clearance(p, tx, rx)
    usable = (d1 > _MIN_LEG_M) & (d2 > _MIN_LEG_M)
    if cfg.max_candidate_distance_m is not None:
        usable &= np.minimum(d1, d2) <= cfg.max_candidate_distance_m
    cand = np.flatnonzero(usable)
    if len(cand) == 0:
        return []

    f_ref = cfg.reference_frequency_hz
    loss = np.array([free_space_path_loss_db(d1[i] + d2[i], f_ref) for i in cand])
    loss += _edge_loss_db(height[cand], d1[cand], d2[cand], f_ref, cfg.diffraction_model)
    ranked = cand[np.lexsort((cand, loss))]
    k_max = cfg.max_diffraction_edges

    tx_clear = np.zeros(len(p), dtype=bool)
    rx_clear = np.zeros(len(p), dtype=bool)
    out: List[PathComponent] = []
    for s in range(0, len(ranked), _EDGE_BATCH):
        batch = ranked[s:s + _EDGE_BATCH]
        tx_clear[batch] = scene.segments_clear(tx, p[batch])
        rx_clear[batch] = scene.segments_clear(p[batch], rx)
        for i in batch[tx_clear[batch] & rx_clear[batch]]:
            edge = KnifeEdge(height_m=float(height[i]), d1_m=float(d1[i]), d2_m=float(d2[i]))
            out.append(_component(PathKind.DIFFRACTION, [tx, p[i], rx], edge=edge))
            if len(out) == k_max:
                return out
    if out or not cfg.double_diffraction:
        return out
    return _double_diffractions(scene, tx, rx, cfg, p, ranked[tx_clear[ranked]], ranked[rx_clear[ranked]])


def _double_diffractions(
    scene: Scene,
    tx: np.ndarray,
    rx: np.ndarray,
    cfg: TraceConfig,
    p: np.ndarray,
    seen_from_tx: np.ndarray,
    seen_from_rx: np.ndarray,
) -> List[PathComponent]:
    """tx -> edge -> edge -> rx, each edge judged against the line joining its neighbours."""
    first = seen_from_tx[:_DOUBLE_EDGE_SHORTLIST]
    second = seen_from_rx[:_DOUBLE_EDGE_SHORTLIST]
    if len(first) == 0 or len(second) == 0:
        return []
    i = np.repeat(first, len(second))
    j = np.tile(second, len(first))
    a, b = p[i], p[j]
    l1 = np.linalg.norm(a - tx, axis=1)
    l2 = np.linalg.norm(b - a, axis=1)
    l3 = np.linalg.norm(rx - b, axis=1)
    keep = (i != j) & (l2 > _MIN_LEG_M)
    if not keep.any():
        return []
    i, j, a, b, l1, l2, l3 = (v[keep] for v in (i, j, a, b, l1, l2, l3))
    h1 = _clearance(a, np.broadcast_to(tx, a.shape), b)
    h2 = _clearance(b, a, np.broadcast_to(rx, b.shape))

    f_ref = cfg.reference_frequency_hz
    loss = np.array([free_space_path_loss_db(t, f_ref) for t in l1 + l2 + l3])
    loss += _edge_loss_db(h1, l1, l2, f_ref, cfg.diffraction_model)
    loss += _edge_loss_db(h2, l2, l3, f_ref, cfg.diffraction_model)
    ranked = np.lexsort((j, i, loss))
    clear = scene.segments_clear(a[ranked], b[ranked])

    out: List[PathComponent] = []
    for r in ranked[clear][: cfg.max_diffraction_edges]:
        out.append(
            _component(
                PathKind.DIFFRACTION,
                [tx, a[r], b[r], rx],
                edge=KnifeEdge(height_m=float(h1[r]), d1_m=float(l1[r]), d2_m=float(l2[r])),
                second_edge=KnifeEdge(height_m=float(h2[r]), d1_m=float(l2[r]), d2_m=float(l3[r])),
            )
        )
    return out


# =========================
# Scattering
# =========================

def _scattering(scene: Scene, tx: np.ndarray, rx: np.ndarray, cfg: TraceConfig) -> List[PathComponent]:
    if scene.n_triangles == 0:
        return []
    centroids = scene.v0 + (scene.e1 + scene.e2) / 3.0
    s_tx = np.einsum("ij,ij->i", tx - centroids, scene.normals)
    s_rx = np.einsum("ij,ij->i", rx - centroids, scene.normals)
    d1 = np.linalg.norm(tx - centroids, axis=1)
    d2 = np.linalg.norm(rx - centroids, axis=1)
    lit = (s_tx * s_rx > 0) & (d1 > _MIN_LEG_M) & (d2 > _MIN_LEG_M)
    if cfg.max_candidate_distance_m is not None:
        lit &= np.minimum(d1, d2) <= cfg.max_candidate_distance_m
    cand = np.flatnonzero(lit)
    if len(cand) == 0:
        return []
    seen = scene.segments_clear(tx, centroids[cand]) & scene.segments_clear(centroids[cand], rx)
    out: List[PathComponent] = []
    for i in cand[seen]:
        c = centroids[i]
        patch = ScatterPatch(
            surface=int(i),
            area_m2=float(scene.areas[i]),
            cos_incident=abs(float(s_tx[i])) / float(d1[i]),
            cos_scattered=abs(float(s_rx[i])) / float(d2[i]),
            d1_m=float(d1[i]),
            d2_m=float(d2[i]),
        )
        out.append(_component(PathKind.SCATTERING, [tx, c, rx], patch=patch))
    return out


# =========================
# Entry point
# =========================

def trace_paths(scene: Scene, tx, rx, cfg: Optional[TraceConfig] = None) -> List[PathComponent]:
    """All multipath components between ``tx`` and ``rx``, LOS first, no duplicate chains."""
    cfg = cfg or TraceConfig()
    tx = np.asarray(tx, dtype=float)
    rx = np.asarray(rx, dtype=float)
    if float(np.linalg.norm(rx - tx)) < _MIN_LEG_M:
        raise DomainError("tx and rx coincide")
    for name, p in (("tx", tx), ("rx", rx)):
        if not scene.contains(p):
            raise DomainError(f"{name} {tuple(p.tolist())} outside scene bounds")

    paths: List[PathComponent] = []
    visible = los_visible(scene, tx, rx)
    if visible:
        paths.append(_component(PathKind.LOS, [tx, rx]))
    if cfg.max_reflection_order > 0:
        paths.extend(_reflections(scene, tx, rx, cfg))
    if cfg.enable_diffraction and not visible:
        paths.extend(_diffractions(scene, tx, rx, cfg))
    if cfg.enable_scattering:
        paths.extend(_scattering(scene, tx, rx, cfg))

    seen = set()
    unique: List[PathComponent] = []
    for pc in paths:
        key = pc.chain_key()
        if key in seen:
            continue
        seen.add(key)
        unique.append(pc)
    logger.debug("Traced %d components (%d before dedup)", len(unique), len(paths))
    return unique
