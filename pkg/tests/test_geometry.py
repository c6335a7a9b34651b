import logging
import math

import numpy as np
import pytest

from mpft.delaunay import convex_hull_size, delaunay
from mpft.errors import DegenerateInputError, DimensionError
from mpft.sparsity import (
    SparseRegion,
    pca_project,
    region_boundaries,
    sparse_regions,
    sparse_regions_2d,
    sparse_regions_3d,
)


def cross2(u, v):
    return u[0] * v[1] - u[1] * v[0]


def circumcircle(a, b, c):
    d = 2 * (a[0] * (b[1] - c[1]) + b[0] * (c[1] - a[1]) + c[0] * (a[1] - b[1]))
    ux = ((a @ a) * (b[1] - c[1]) + (b @ b) * (c[1] - a[1]) + (c @ c) * (a[1] - b[1])) / d
    uy = ((a @ a) * (c[0] - b[0]) + (b @ b) * (a[0] - c[0]) + (c @ c) * (b[0] - a[0])) / d
    center = np.array([ux, uy])
    return center, np.linalg.norm(a - center)


def empty_circumcircles(points, tris, rel=1e-9):
    for t in tris:
        center, r = circumcircle(*points[list(t)])
        dist = np.linalg.norm(points - center, axis=1)
        others = np.ones(len(points), bool)
        others[list(t)] = False
        if np.any(dist[others] < r * (1 - rel)):
            return False
    return True


def exhaustive_gaps(front, K):
    """All adjacent gaps after sorting by objective 1, largest first."""
    pts = sorted(map(tuple, front))
    gaps = [(math.dist(pts[i], pts[i + 1]), i) for i in range(len(pts) - 1)]
    gaps.sort(key=lambda g: (-g[0], g[1]))
    return [(pts[i], pts[i + 1]) for _, i in gaps[:K]]


def random_nondominated(rng, n):
    x = np.sort(rng.random(n))
    y = np.sort(rng.random(n))[::-1]
    return np.stack([x, y], axis=1)


class TestDelaunay:
    def test_single_triangle(self):
        assert delaunay([[0, 0], [1, 0], [0, 1]]) == [(0, 1, 2)]

    def test_square_lowest_index_diagonal(self):
        tris = delaunay([[0, 0], [1, 0], [1, 1], [0, 1]])
        assert len(tris) == 2
        assert all(0 in t for t in tris)
        assert tris == [(0, 1, 2), (0, 2, 3)]

    def test_square_relabelled(self):
        # Same square with the corner order rotated: diagonal still uses index 0.
        tris = delaunay([[1, 0], [1, 1], [0, 1], [0, 0]])
        assert all(0 in t for t in tris)

    def test_random_empty_circumcircle_and_euler(self):
        rng = np.random.default_rng(0)
        for _ in range(20):
            pts = rng.random((50, 2))
            tris = delaunay(pts)
            assert empty_circumcircles(pts, tris)
            assert len(tris) == 2 * 50 - 2 - convex_hull_size(pts)

    def test_covers_hull_area(self):
        rng = np.random.default_rng(1)
        pts = rng.random((40, 2))
        tris = delaunay(pts)
        area = sum(
            0.5 * abs(cross2(pts[b] - pts[a], pts[c] - pts[a])) for a, b, c in tris
        )
        order = np.lexsort((pts[:, 1], pts[:, 0]))
        hull = _hull(pts[order])
        hull_area = 0.5 * abs(sum(cross2(hull[i], hull[(i + 1) % len(hull)]) for i in range(len(hull))))
        assert area == pytest.approx(hull_area, rel=1e-9)

    def test_counter_clockwise(self):
        pts = np.random.default_rng(2).random((30, 2))
        for a, b, c in delaunay(pts):
            assert cross2(pts[b] - pts[a], pts[c] - pts[a]) > 0

    def test_grid_cocircular_is_valid(self):
        xs, ys = np.meshgrid(np.arange(5.0), np.arange(4.0))
        pts = np.stack([xs.ravel(), ys.ravel()], axis=1)
        tris = delaunay(pts)
        assert len(tris) == 2 * 4 * 3
        assert empty_circumcircles(pts, tris)
        assert delaunay(pts) == tris

    def test_collinear(self):
        with pytest.raises(DegenerateInputError):
            delaunay([[0, 0], [1, 1], [2, 2], [3, 3]])

    def test_duplicates_merged_with_warning(self, caplog):
        with caplog.at_level(logging.WARNING):
            tris = delaunay([[0, 0], [1, 0], [0, 1], [1, 0]])
        assert tris == [(0, 1, 2)]
        assert "duplicate" in caplog.text

    def test_too_few(self):
        with pytest.raises(DegenerateInputError):
            delaunay([[0, 0], [1, 1]])


def _hull(pts):
    def half(seq):
        chain = []
        for p in seq:
            while len(chain) >= 2 and cross2(chain[-1] - chain[-2], p - chain[-2]) <= 0:
                chain.pop()
            chain.append(p)
        return chain

    lower, upper = half(pts), half(pts[::-1])
    return lower[:-1] + upper[:-1]


class TestRegions2D:
    def test_worked_example(self):
        regions = sparse_regions_2d([[0, 10], [1, 9], [5, 2], [6, 1]], 1)
        assert len(regions) == 1
        r = regions[0]
        np.testing.assert_array_equal(r.boundary_points, [[1, 9], [5, 2]])
        assert r.size == pytest.approx(math.sqrt(65))
        np.testing.assert_array_equal(r.j_max, [5, 9])
        assert [b.tolist() for b in region_boundaries(regions)] == [[5.0, 9.0]]

    def test_two_points_many_k(self):
        assert len(sparse_regions_2d([[0, 1], [1, 0]], 3)) == 1

    def test_equal_spacing_ties_by_position(self):
        front = [[i, 10 - i] for i in range(5)]
        regions = sparse_regions_2d(front, 3)
        assert [r.boundary_points[0][0] for r in regions] == [0, 1, 2]
        assert len({round(r.size, 12) for r in regions}) == 1

    def test_fewer_than_two(self, caplog):
        with caplog.at_level(logging.WARNING):
            assert sparse_regions_2d([[1, 1]], 2) == []

    def test_matches_exhaustive_ranking(self):
        rng = np.random.default_rng(5)
        for _ in range(50):
            front = random_nondominated(rng, int(rng.integers(2, 100)))
            K = int(rng.integers(1, 6))
            got = [tuple(map(tuple, r.boundary_points)) for r in sparse_regions_2d(front, K)]
            assert got == exhaustive_gaps(front, K)

    def test_input_order_irrelevant(self):
        rng = np.random.default_rng(6)
        front = random_nondominated(rng, 30)
        a = sparse_regions_2d(front, 4)
        b = sparse_regions_2d(front[rng.permutation(30)], 4)
        assert [r.to_dict() for r in a] == [r.to_dict() for r in b]


class TestPCA:
    def test_plane_isometry(self):
        rng = np.random.default_rng(0)
        pts = np.c_[rng.random((20, 2)), np.zeros(20)]
        coords, _ = pca_project(pts)
        d3 = np.linalg.norm(pts[:, None] - pts[None], axis=2)
        d2 = np.linalg.norm(coords[:, None] - coords[None], axis=2)
        np.testing.assert_allclose(d2, d3, atol=1e-9)

    def test_collinear_rank_one(self):
        pts = np.outer(np.arange(5.0), [1.0, 2.0, 3.0])
        _, basis = pca_project(pts)
        assert basis["eigenvalues"][1] <= 1e-12 * basis["eigenvalues"][0]

    def test_sign_convention(self):
        pts = np.random.default_rng(1).random((15, 3))
        _, basis = pca_project(pts)
        for row in basis["axes"]:
            assert row[np.flatnonzero(np.abs(row) > 1e-15)[0]] > 0

    def test_best_plane_against_random_planes(self):
        rng = np.random.default_rng(2)
        pts = rng.normal(size=(40, 3)) * [3.0, 1.0, 0.2]
        coords, basis = pca_project(pts)
        back = coords @ basis["axes"] + basis["mean"]
        best = np.sum((pts - back) ** 2)
        for _ in range(200):
            q, _ = np.linalg.qr(rng.normal(size=(3, 2)))
            c = pts.mean(0)
            proj = (pts - c) @ q @ q.T + c
            assert best <= np.sum((pts - proj) ** 2) + 1e-9
        for drop in range(3):
            flat = pts.copy()
            flat[:, drop] = pts[:, drop].mean()
            assert best <= np.sum((pts - flat) ** 2) + 1e-9

    def test_identical_points(self):
        with pytest.raises(DegenerateInputError):
            pca_project(np.ones((4, 3)))


class TestRegions3D:
    def test_single_triangle(self):
        c = 0.7
        regions = sparse_regions_3d([[0, 0, c], [2, 0, c], [0, 2, c]], 1)
        assert regions[0].size == pytest.approx(2.0)
        np.testing.assert_allclose(regions[0].j_max, [2, 2, c])

    def test_grid_with_hole(self):
        xs, ys = np.meshgrid(np.arange(5.0), np.arange(5.0))
        pts = np.stack([xs.ravel(), ys.ravel(), 4 - 0.5 * xs.ravel() - 0.5 * ys.ravel()], axis=1)
        hole = 12  # the center (2, 2)
        pts = np.delete(pts, hole, axis=0)
        top = sparse_regions_3d(pts, 1)[0]
        coords, _ = pca_project(pts)
        areas = sorted(
            (0.5 * abs(cross2(coords[b] - coords[a], coords[c] - coords[a])), (a, b, c))
            for a, b, c in delaunay(coords)
        )
        assert top.size == pytest.approx(areas[-1][0])
        # Every vertex of the largest triangle neighbours the removed center.
        for p in top.boundary_points:
            assert max(abs(p[0] - 2), abs(p[1] - 2)) == 1

    def test_k_clamped(self):
        pts = [[0, 0, 1], [1, 0, 1], [0, 1, 1], [1, 1, 1.2]]
        assert len(sparse_regions_3d(pts, 10)) == 2

    def test_collinear_falls_back(self, caplog):
        pts = np.outer(np.arange(1.0, 6.0), [1.0, 0.5, 0.25]) + [0, 0, 0]
        with caplog.at_level(logging.WARNING):
            regions = sparse_regions_3d(pts, 2)
        assert "fall" in caplog.text
        assert len(regions) == 2
        assert all(len(r.boundary_points) == 2 for r in regions)

    def test_j_max_dominates_boundary(self):
        rng = np.random.default_rng(3)
        pts = rng.random((30, 3))
        pts /= np.linalg.norm(pts, axis=1, keepdims=True)
        for r in sparse_regions_3d(pts, 5):
            assert all(np.all(r.j_max >= p) for p in r.boundary_points)
            assert r.size > 0


def test_dispatch_and_errors():
    assert sparse_regions([], 1) == []
    assert len(sparse_regions([[0, 1], [1, 0]], 1)) == 1
    with pytest.raises(DimensionError):
        sparse_regions(np.ones((5, 4)), 1)
    with pytest.raises(ValueError):
        sparse_regions_2d([[0, 1], [1, 0]], 0)


def test_region_serialization():
    r = SparseRegion.from_points([[1, 9], [5, 2]], math.sqrt(65))
    assert r.to_dict() == {
        "boundary_points": [[1.0, 9.0], [5.0, 2.0]],
        "size": math.sqrt(65),
        "j_max": [5.0, 9.0],
    }
    assert region_boundaries([]) == []
