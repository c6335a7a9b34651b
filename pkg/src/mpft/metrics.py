"""Front quality metrics and interaction accounting.

Hypervolume is exact for two and three objectives. The Monte-Carlo estimate
exists only as an independent cross-check for tests.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from mpft.errors import DimensionError

__all__ = [
    "MetricsReport",
    "UndefinedMetricError",
    "env_steps",
    "hypervolume",
    "hypervolume_mc",
    "sparsity",
]


class UndefinedMetricError(ValueError):
    """The metric is not defined for the given front (e.g. SP of one point)."""


@dataclass(frozen=True)
class MetricsReport:
    hv: float
    sp: float | None
    env_steps: int
    reference_point: tuple[float, ...]

    def to_dict(self) -> dict:
        return {
            "hv": self.hv,
            "sp": self.sp,
            "env_steps": self.env_steps,
            "reference_point": list(self.reference_point),
        }


def _front_array(front, ref) -> tuple[np.ndarray, np.ndarray]:
    ref = np.asarray(ref, dtype=float)
    pts = np.asarray(front, dtype=float)
    if ref.ndim != 1:
        raise DimensionError("reference point must be a vector")
    if pts.size == 0:
        return np.empty((0, ref.size)), ref
    pts = pts.reshape(-1, pts.shape[-1]) if pts.ndim > 1 else pts.reshape(1, -1)
    if pts.shape[1] != ref.size:
        raise DimensionError(
            f"front has {pts.shape[1]} objectives but reference point has {ref.size}"
        )
    return pts, ref


def _hv2d(pts: np.ndarray, ref: np.ndarray) -> float:
    """Area dominated by 2-D points above ``ref`` (sorted sweep)."""
    pts = pts[np.all(pts > ref, axis=1)]
    if pts.size == 0:
        return 0.0
    # Descending in x; ties keep the larger y first so later duplicates add nothing.
    order = np.lexsort((-pts[:, 1], -pts[:, 0]))
    area = 0.0
    y_cover = ref[1]
    for x, y in pts[order]:
        if y > y_cover:
            area += (x - ref[0]) * (y - y_cover)
            y_cover = y
    return float(area)


def _hv3d(pts: np.ndarray, ref: np.ndarray) -> float:
    """Volume by slicing along the third objective.

    Between consecutive distinct z-levels the cross-section is the 2-D
    hypervolume of every point whose z reaches above the slab.
    """
    pts = pts[np.all(pts > ref, axis=1)]
    if pts.size == 0:
        return 0.0
    zs = np.unique(pts[:, 2])[::-1]
    volume = 0.0
    for k, z in enumerate(zs):
        z_low = zs[k + 1] if k + 1 < zs.size else ref[2]
        active = pts[pts[:, 2] >= z]
        volume += _hv2d(active[:, :2], ref[:2]) * (z - z_low)
    return float(volume)


def hypervolume(front, ref) -> float:
    """Lebesgue measure of the union of boxes ``[ref, p]`` over points dominating ``ref``.

    Args:
        front: (n, m) objective vectors, m in {2, 3}. Points that do not
            strictly exceed ``ref`` in every objective contribute nothing.
        ref: Reference point of length m.

    Returns:
        The exact hypervolume.
    """
    pts, ref = _front_array(front, ref)
    m = ref.size
    if m == 2:
        return _hv2d(pts, ref)
    if m == 3:
        return _hv3d(pts, ref)
    raise DimensionError(f"hypervolume supports 2 or 3 objectives, got {m}")


def hypervolume_mc(front, ref, samples: int = 10**6, seed: int = 0) -> tuple[float, float]:
    """Monte-Carlo hypervolume estimate and its standard error.

    Samples uniformly in the box between ``ref`` and the component-wise max
    of the front. Deterministic given ``seed``.
    """
    if samples < 10**4:
        raise ValueError("samples must be at least 1e4")
    pts, ref = _front_array(front, ref)
    pts = pts[np.all(pts > ref, axis=1)]
    if pts.size == 0:
        return 0.0, 0.0
    upper = pts.max(axis=0)
    box = float(np.prod(upper - ref))
    rng = np.random.default_rng(seed)
    if ref.size == 2:
        # Best y among points at least as far right, for a searchsorted lookup.
        xs_order = np.argsort(pts[:, 0])
        xs = pts[xs_order, 0]
        reach = np.maximum.accumulate(pts[xs_order, 1][::-1])[::-1]
    hits = 0
    chunk = 200_000
    done = 0
    while done < samples:
        n = min(chunk, samples - done)
        u = ref + rng.random((n, ref.size)) * (upper - ref)
        if ref.size == 2:
            pos = np.searchsorted(xs, u[:, 0], side="left")
            ok = pos < xs.size
            covered = np.zeros(n, dtype=bool)
            covered[ok] = u[ok, 1] <= reach[pos[ok]]
        else:
            covered = np.zeros(n, dtype=bool)
            for p in pts:
                covered |= np.all(u <= p, axis=1)
        hits += int(covered.sum())
        done += n
    frac = hits / samples
    return box * frac, box * float(np.sqrt(frac * (1.0 - frac) / samples))


def sparsity(front) -> float:
    """Mean squared gap between neighbours along each objective.

    For each objective the front's values are sorted ascending and the
    squared adjacent differences summed; the total over all objectives is
    divided by ``len(front) - 1``.
    """
    pts = np.asarray(front, dtype=float)
    if pts.ndim != 2 or pts.shape[0] < 2:
        raise UndefinedMetricError("sparsity needs at least two points")
    gaps = np.diff(np.sort(pts, axis=0), axis=0)
    return float(np.sum(gaps**2) / (pts.shape[0] - 1))


def env_steps(config) -> int:
    """Total agent-environment interactions implied by a track configuration.

    ``steps * (sum_i (xi_i + psi_i) + sum_k (xi_k + psi_k))``; only the
    first K interior budgets count.
    """
    vertex = sum(int(x) for x in config.xi_vertex) + sum(int(x) for x in config.psi_vertex)
    k = int(config.K)
    interior = sum(int(x) for x in list(config.xi_interior)[:k]) + sum(
        int(x) for x in list(config.psi_interior)[:k]
    )
    return int(config.steps) * (vertex + interior)
