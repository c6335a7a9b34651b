"""Planar Delaunay triangulation (Bowyer-Watson).

Points are inserted one at a time into a large enclosing triangle; every
triangle whose circumcircle strictly contains the new point is removed and
the cavity re-fanned from the point. Removing the enclosing triangle can
leave notches along nearly straight stretches of the convex hull, so a
finishing pass fills those and runs Lawson edge flips until every edge is
locally Delaunay. Cocircular quadrilaterals take the diagonal that touches
the lowest original point index.
"""

from __future__ import annotations

import logging

import numpy as np

from mpft.errors import DegenerateInputError

logger = logging.getLogger(__name__)

# Tolerances in normalized coordinates (points scaled into [-1, 1]^2).
MERGE_TOL = 1e-12
ORIENT_TOL = 1e-12
INCIRCLE_TOL = 1e-10


def _orient(a, b, c) -> float:
    return (b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0])


def _incircle(a, b, c, d) -> float:
    """Positive when d lies inside the circumcircle of the ccw triangle abc."""
    rows = []
    for p in (a, b, c):
        dx, dy = p[0] - d[0], p[1] - d[1]
        rows.append((dx, dy, dx * dx + dy * dy))
    (a0, a1, a2), (b0, b1, b2), (c0, c1, c2) = rows
    return (
        a0 * (b1 * c2 - b2 * c1)
        - a1 * (b0 * c2 - b2 * c0)
        + a2 * (b0 * c1 - b1 * c0)
    )


def _circumcircles(pts: np.ndarray, tris: np.ndarray):
    a, b, c = pts[tris[:, 0]], pts[tris[:, 1]], pts[tris[:, 2]]
    d = 2.0 * (a[:, 0] * (b[:, 1] - c[:, 1]) + b[:, 0] * (c[:, 1] - a[:, 1]) + c[:, 0] * (a[:, 1] - b[:, 1]))
    a2, b2, c2 = (a**2).sum(1), (b**2).sum(1), (c**2).sum(1)
    ux = (a2 * (b[:, 1] - c[:, 1]) + b2 * (c[:, 1] - a[:, 1]) + c2 * (a[:, 1] - b[:, 1])) / d
    uy = (a2 * (c[:, 0] - b[:, 0]) + b2 * (a[:, 0] - c[:, 0]) + c2 * (b[:, 0] - a[:, 0])) / d
    centers = np.stack([ux, uy], axis=1)
    r2 = ((a - centers) ** 2).sum(1)
    return centers, r2


def _merge_duplicates(points: np.ndarray):
    """Unique points (first occurrence kept) and their original indices."""
    keep: list[int] = []
    for i, p in enumerate(points):
        if keep and np.any(np.all(np.abs(points[keep] - p) <= MERGE_TOL, axis=1)):
            continue
        keep.append(i)
    if len(keep) < len(points):
        logger.warning("merged %d duplicate point(s) before triangulation", len(points) - len(keep))
    return points[keep], np.array(keep)


def _normalize(points: np.ndarray) -> np.ndarray:
    lo, hi = points.min(axis=0), points.max(axis=0)
    scale = float(np.max(hi - lo))
    if scale == 0.0:
        raise DegenerateInputError("all points coincide")
    return (points - (lo + hi) / 2.0) * (2.0 / scale)


def _check_not_collinear(pts: np.ndarray) -> None:
    a = pts[0]
    far = pts[int(np.argmax(((pts - a) ** 2).sum(1)))]
    cross = (far[0] - a[0]) * (pts[:, 1] - a[1]) - (far[1] - a[1]) * (pts[:, 0] - a[0])
    if np.max(np.abs(cross)) <= ORIENT_TOL:
        raise DegenerateInputError("points are collinear; no triangle exists")


def _bowyer_watson(pts: np.ndarray, size: float) -> np.ndarray:
    n = pts.shape[0]
    super_pts = np.array([[-size, -size], [size, -size], [0.0, size]])
    allp = np.vstack([pts, super_pts])
    tris = np.array([[n, n + 1, n + 2]])
    centers, r2 = _circumcircles(allp, tris)
    for i in range(n):
        p = allp[i]
        dist2 = ((centers - p) ** 2).sum(1)
        bad = dist2 < r2 * (1.0 - 1e-12)
        if not np.any(bad):
            # Float round-off on the circumcircle test; take the containing triangle.
            bad = dist2 <= r2 * (1.0 + 1e-9)
        edges: dict[tuple[int, int], tuple[int, int]] = {}
        for t in tris[bad]:
            for u, v in ((t[0], t[1]), (t[1], t[2]), (t[2], t[0])):
                key = (min(u, v), max(u, v))
                if key in edges:
                    del edges[key]
                else:
                    edges[key] = (u, v)
        new = []
        for u, v in edges.values():
            o = _orient(allp[u], allp[v], p)
            if o > 0:
                new.append((u, v, i))
            elif o < 0:
                new.append((v, u, i))
        new = np.array(new, dtype=int).reshape(-1, 3)
        nc, nr = _circumcircles(allp, new)
        tris = np.vstack([tris[~bad], new])
        centers = np.vstack([centers[~bad], nc])
        r2 = np.concatenate([r2[~bad], nr])
    return tris[np.all(tris < n, axis=1)]


class _Mesh:
    """Triangle soup with an edge index, used for the finishing pass."""

    def __init__(self, pts: np.ndarray, tris):
        self.pts = pts
        self.tris: dict[int, tuple[int, int, int]] = {}
        self.edge: dict[tuple[int, int], int] = {}
        self._next = 0
        for t in tris:
            self.add(tuple(int(x) for x in t))

    def add(self, t):
        a, b, c = t
        if _orient(self.pts[a], self.pts[b], self.pts[c]) < 0:
            t = (a, c, b)
        k = self._next
        self._next += 1
        self.tris[k] = t
        for u, v in ((t[0], t[1]), (t[1], t[2]), (t[2], t[0])):
            self.edge[(u, v)] = k
        return k

    def remove(self, k):
        t = self.tris.pop(k)
        for u, v in ((t[0], t[1]), (t[1], t[2]), (t[2], t[0])):
            del self.edge[(u, v)]

    def boundary_cycle(self) -> list[int]:
        nxt = {u: v for (u, v) in self.edge if (v, u) not in self.edge}
        if not nxt:
            return []
        start = min(nxt)
        cycle = [start]
        cur = nxt[start]
        while cur != start and len(cycle) <= len(nxt):
            cycle.append(cur)
            cur = nxt.get(cur, start)
        return cycle

    def fill_notches(self) -> None:
        """Add triangles over reflex boundary vertices until the boundary is convex."""
        changed = True
        while changed:
            changed = False
            cycle = self.boundary_cycle()
            n = len(cycle)
            for j in range(n):
                a, b, c = cycle[j - 1], cycle[j], cycle[(j + 1) % n]
                if _orient(self.pts[a], self.pts[b], self.pts[c]) < -ORIENT_TOL:
                    self.add((a, c, b))
                    changed = True
                    break

    def legalize(self) -> None:
        stack = list(self.edge.keys())
        budget = 50 * max(len(self.tris), 1) ** 2
        while stack and budget > 0:
            budget -= 1
            u, v = stack.pop()
            k1 = self.edge.get((u, v))
            k2 = self.edge.get((v, u))
            if k1 is None or k2 is None:
                continue
            r = _third(self.tris[k1], u, v)
            s = _third(self.tris[k2], v, u)
            P = self.pts
            # Triangle (u, v, r) is ccw; s is inside its circumcircle when positive.
            inc = _incircle(P[u], P[v], P[r], P[s])
            if inc > INCIRCLE_TOL:
                flip = True
            elif inc >= -INCIRCLE_TOL:
                flip = min(r, s) < min(u, v)
            else:
                flip = False
            if not flip:
                continue
            # Only convex quadrilaterals can be flipped.
            if _orient(P[r], P[s], P[u]) * _orient(P[r], P[s], P[v]) >= 0:
                continue
            self.remove(k1)
            self.remove(k2)
            self.add((r, s, v))
            self.add((s, r, u))
            stack.extend([(u, s), (s, v), (v, r), (r, u)])
            stack.extend([(s, u), (v, s), (r, v), (u, r)])


def _third(t, u, v) -> int:
    for w in t:
        if w != u and w != v:
            return w
    raise AssertionError("degenerate triangle")


def _canonical(t) -> tuple[int, int, int]:
    j = t.index(min(t))
    return (t[j], t[(j + 1) % 3], t[(j + 2) % 3])


def delaunay(points) -> list[tuple[int, int, int]]:
    """Delaunay triangles of planar points as counter-clockwise index triples.

    Duplicate points are merged (the first occurrence keeps its index).
    Raises :class:`DegenerateInputError` for fewer than three distinct points
    or for collinear input.
    """
    pts = np.asarray(points, dtype=float)
    if pts.ndim != 2 or pts.shape[1] != 2:
        raise ValueError(f"expected (n, 2) points, got shape {pts.shape}")
    if pts.shape[0] < 3:
        raise DegenerateInputError("need at least three points")
    uniq, original = _merge_duplicates(pts)
    if uniq.shape[0] < 3:
        raise DegenerateInputError("fewer than three distinct points")
    norm = _normalize(uniq)
    _check_not_collinear(norm)

    for size in (1e3, 1e5, 1e7):
        mesh = _Mesh(norm, _bowyer_watson(norm, size))
        mesh.fill_notches()
        mesh.legalize()
        used = {v for t in mesh.tris.values() for v in t}
        if len(used) == norm.shape[0]:
            break
        logger.debug("retrying triangulation with a larger enclosing triangle")
    else:
        raise DegenerateInputError("triangulation lost input points")

    out = [_canonical(tuple(int(original[v]) for v in t)) for t in mesh.tris.values()]
    return sorted(out)


def convex_hull_size(points) -> int:
    """Number of input points on the convex hull boundary (collinear ones included)."""
    pts = np.unique(np.asarray(points, dtype=float), axis=0)
    if pts.shape[0] < 3:
        return pts.shape[0]
    order = np.lexsort((pts[:, 1], pts[:, 0]))
    pts = pts[order]

    def half(seq):
        chain: list[np.ndarray] = []
        for p in seq:
            while len(chain) >= 2 and _orient(chain[-2], chain[-1], p) < 0:
                chain.pop()
            chain.append(p)
        return chain

    lower = half(pts)
    upper = half(pts[::-1])
    return len(lower) + len(upper) - 2
