"""Top-K sparse region detection on a tracked front.

Two objectives: sort by the first objective and rank the gaps between
neighbours. Three objectives: project onto the best-fit plane, triangulate,
and rank triangles by their projected area. Each region's upper boundary
``j_max`` is the element-wise max of its boundary points.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np

from mpft.delaunay import delaunay
from mpft.errors import DegenerateInputError, DimensionError

logger = logging.getLogger(__name__)

# Eigenvalue ratio below which the second principal direction is treated as absent.
RANK_TOL = 1e-12


@dataclass(frozen=True)
class SparseRegion:
    """A sparse stretch of the front.

    Attributes:
        boundary_points: Segment endpoints (two objectives) or triangle
            vertices (three objectives), in original objective space.
        size: Gap length or projected triangle area.
        j_max: Element-wise max of the boundary points.
    """

    boundary_points: tuple[np.ndarray, ...]
    size: float
    j_max: np.ndarray

    @classmethod
    def from_points(cls, points, size: float) -> SparseRegion:
        pts = tuple(np.asarray(p, dtype=float).copy() for p in points)
        return cls(boundary_points=pts, size=float(size), j_max=np.max(np.array(pts), axis=0))

    def to_dict(self) -> dict:
        return {
            "boundary_points": [p.tolist() for p in self.boundary_points],
            "size": self.size,
            "j_max": self.j_max.tolist(),
        }


def _as_front(front) -> np.ndarray:
    pts = np.asarray(front, dtype=float)
    if pts.size == 0:
        return pts.reshape(0, 0)
    if pts.ndim != 2:
        raise DimensionError(f"front must be an (n, m) array, got shape {pts.shape}")
    return pts


def sparse_regions_2d(front, K: int) -> list[SparseRegion]:
    """The K largest gaps between neighbours after sorting by objective 1.

    Ties in gap size go to the gap whose left endpoint has the lower first
    objective. Fewer than two points yields no regions.
    """
    if K < 1:
        raise ValueError("K must be >= 1")
    pts = _as_front(front)
    if pts.shape[0] < 2:
        logger.warning("need at least two points to find a gap, got %d", pts.shape[0])
        return []
    order = np.lexsort(pts.T[::-1])
    pts = pts[order]
    gaps = np.linalg.norm(np.diff(pts, axis=0), axis=1)
    ranked = _rank_descending(gaps)[: min(K, gaps.size)]
    return [
        SparseRegion.from_points((pts[i], pts[i + 1]), gaps[i]) for i in ranked if gaps[i] > 0
    ]


def pca_project(points):
    """Project 3-D points onto their best-fit plane.

    Returns:
        ``(coords, basis)``: the (n, 2) in-plane coordinates and a dict with
        ``mean`` (3,), ``axes`` (2, 3; rows are the top two eigenvectors of
        the covariance, each with its first nonzero entry positive) and
        ``eigenvalues`` (3,), descending. ``coords @ axes + mean`` maps back.
    """
    pts = np.asarray(points, dtype=float)
    if pts.ndim != 2 or pts.shape[1] != 3:
        raise DimensionError(f"expected (n, 3) points, got shape {pts.shape}")
    if pts.shape[0] < 3:
        raise DegenerateInputError("PCA projection needs at least three points")
    mean = pts.mean(axis=0)
    centered = pts - mean
    cov = centered.T @ centered / pts.shape[0]
    evals, evecs = np.linalg.eigh(cov)
    order = np.argsort(evals)[::-1]
    evals, evecs = evals[order], evecs[:, order]
    if evals[0] <= 0.0:
        raise DegenerateInputError("all points are identical")
    axes = evecs[:, :2].T.copy()
    for row in axes:
        nz = np.flatnonzero(np.abs(row) > 1e-15)
        if nz.size and row[nz[0]] < 0:
            row *= -1.0
    return centered @ axes.T, {"mean": mean, "axes": axes, "eigenvalues": np.maximum(evals, 0.0)}


def _tie_rounded(sizes: np.ndarray) -> np.ndarray:
    # Sizes equal up to round-off count as ties.
    top = float(np.max(sizes)) if sizes.size else 0.0
    return np.round(sizes / top, 12) if top > 0 else sizes


def _rank_descending(sizes: np.ndarray) -> np.ndarray:
    """Indices by decreasing size; ties keep their left-to-right order."""
    return np.argsort(-_tie_rounded(sizes), kind="stable")


def _triangle_area(a, b, c) -> float:
    return 0.5 * abs((b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0]))


def sparse_regions_3d(front, K: int) -> list[SparseRegion]:
    """The K largest Delaunay triangles of the front's planar projection.

    Areas are measured in the projection plane; ties go to the
    lexicographically smaller vertex-index triple. If the projection is
    degenerate the two-objective gap scan runs on the two coordinates with
    the largest spread instead.
    """
    if K < 1:
        raise ValueError("K must be >= 1")
    pts = _as_front(front)
    if pts.shape[0] < 3:
        logger.warning("need at least three points to triangulate, got %d", pts.shape[0])
        return []
    try:
        coords, basis = pca_project(pts)
        ev = basis["eigenvalues"]
        if ev[1] <= RANK_TOL * ev[0]:
            raise DegenerateInputError("points are collinear after projection")
        triangles = delaunay(coords)
    except DegenerateInputError as exc:
        logger.warning("falling back to the gap scan: %s", exc)
        return _fallback_gap_scan(pts, K)
    tris = [tuple(sorted(t)) for t in triangles]
    areas = np.array([_triangle_area(coords[i], coords[j], coords[k]) for i, j, k in tris])
    keys = _tie_rounded(areas)
    order = sorted(range(len(tris)), key=lambda n: (-keys[n], tris[n]))
    return [
        SparseRegion.from_points(pts[list(tris[n])], areas[n])
        for n in order[: min(K, len(order))]
        if areas[n] > 0
    ]


def _fallback_gap_scan(pts: np.ndarray, K: int) -> list[SparseRegion]:
    spread = pts.max(axis=0) - pts.min(axis=0)
    dims = sorted(np.argsort(-spread, kind="stable")[:2].tolist())
    sub = pts[:, dims]
    order = np.lexsort(sub.T[::-1])
    sub, full = sub[order], pts[order]
    gaps = np.linalg.norm(np.diff(sub, axis=0), axis=1)
    ranked = _rank_descending(gaps)[: min(K, gaps.size)]
    return [
        SparseRegion.from_points((full[i], full[i + 1]), gaps[i])
        for i in ranked
        if gaps[i] > 0
    ]


def sparse_regions(front, K: int) -> list[SparseRegion]:
    """Dispatch on the number of objectives (2 or 3)."""
    pts = _as_front(front)
    if pts.shape[0] == 0:
        return []
    m = pts.shape[1]
    if m == 2:
        return sparse_regions_2d(pts, K)
    if m == 3:
        return sparse_regions_3d(pts, K)
    raise DimensionError(f"sparse region detection supports 2 or 3 objectives, got {m}")


def region_boundaries(regions) -> list[np.ndarray]:
    return [r.j_max.copy() for r in regions]
