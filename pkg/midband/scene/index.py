"""Flattened bounding-volume hierarchy over scene triangles."""

import logging
import math
from dataclasses import dataclass
from typing import List, Optional, Tuple

import numpy as np

from midband.scene.geometry import intersect_triangles

logger = logging.getLogger(__name__)

LEAF_SIZE = 4
_PAD = 1e-7


@dataclass(frozen=True)
class TriangleBVH:
    # node arrays; leaves have left == -1 and cover order[start:start+count]
    box_min: Tuple[Tuple[float, float, float], ...]
    box_max: Tuple[Tuple[float, float, float], ...]
    left: Tuple[int, ...]
    right: Tuple[int, ...]
    start: Tuple[int, ...]
    count: Tuple[int, ...]
    order: np.ndarray

    @property
    def n_nodes(self) -> int:
        return len(self.left)

    @classmethod
    def build(cls, tris: np.ndarray) -> "TriangleBVH":
        n = len(tris)
        order = np.arange(n)
        if n == 0:
            return cls((), (), (), (), (), (), order)
        lo = tris.min(axis=1) - _PAD
        hi = tris.max(axis=1) + _PAD
        centroids = tris.mean(axis=1)

        box_min: List[tuple] = []
        box_max: List[tuple] = []
        left: List[int] = []
        right: List[int] = []
        start: List[int] = []
        count: List[int] = []

        def new_node(s: int, e: int) -> int:
            idx = order[s:e]
            box_min.append(tuple(lo[idx].min(axis=0).tolist()))
            box_max.append(tuple(hi[idx].max(axis=0).tolist()))
            left.append(-1)
            right.append(-1)
            start.append(s)
            count.append(e - s)
            return len(left) - 1

        stack = [(new_node(0, n), 0, n)]
        while stack:
            node, s, e = stack.pop()
            if e - s <= LEAF_SIZE:
                continue
            idx = order[s:e]
            c = centroids[idx]
            axis = int(np.argmax(c.max(axis=0) - c.min(axis=0)))
            # stable sort keeps the build deterministic for ties
            perm = np.argsort(c[:, axis], kind="stable")
            order[s:e] = idx[perm]
            mid = (s + e) // 2
            l_node = new_node(s, mid)
            r_node = new_node(mid, e)
            left[node], right[node] = l_node, r_node
            count[node] = 0
            stack.append((r_node, mid, e))
            stack.append((l_node, s, mid))

        bvh = cls(tuple(box_min), tuple(box_max), tuple(left), tuple(right), tuple(start), tuple(count), order)
        logger.debug("BVH built: %d triangles, %d nodes", n, bvh.n_nodes)
        return bvh

    def _slab(self, node: int, o, inv, t_max: float) -> float:
        """Entry distance into the node box, or inf when the ray misses it."""
        bmin = self.box_min[node]
        bmax = self.box_max[node]
        t0, t1 = 0.0, t_max
        for k in range(3):
            if inv[k] is None:
                if o[k] < bmin[k] or o[k] > bmax[k]:
                    return math.inf
                continue
            a = (bmin[k] - o[k]) * inv[k]
            b = (bmax[k] - o[k]) * inv[k]
            if a > b:
                a, b = b, a
            if a > t0:
                t0 = a
            if b < t1:
                t1 = b
            if t0 > t1:
                return math.inf
        return t0

    def nearest(
        self,
        v0: np.ndarray,
        e1: np.ndarray,
        e2: np.ndarray,
        origin: np.ndarray,
        direction: np.ndarray,
        t_min: float,
        t_max: float,
        first_hit: bool = False,
    ) -> Tuple[float, int]:
        """Nearest triangle hit in (t_min, t_max); ``(inf, -1)`` when none."""
        if not self.left:
            return math.inf, -1
        o = origin.tolist()
        inv = [None if d == 0.0 else 1.0 / d for d in direction.tolist()]
        best_t, best_id = math.inf, -1
        stack = [0]
        while stack:
            node = stack.pop()
            if self._slab(node, o, inv, min(best_t, t_max)) == math.inf:
                continue
            if self.left[node] < 0:
                idx = self.order[self.start[node]: self.start[node] + self.count[node]]
                t = intersect_triangles(origin, direction, v0[idx], e1[idx], e2[idx], t_min, min(best_t, t_max))
                k = int(np.argmin(t))
                if t[k] < best_t:
                    best_t, best_id = float(t[k]), int(idx[k])
                    if first_hit:
                        return best_t, best_id
                continue
            stack.append(self.right[node])
            stack.append(self.left[node])
        return best_t, best_id
