"""Pareto dominance, tracked policies and the non-dominated archive.

Objectives are maximized throughout. The archive is an immutable value:
every merge goes through :func:`union_plus` and returns a new archive.
"""

from __future__ import annotations

import csv
import io
from collections.abc import Iterable, Sequence
from dataclasses import dataclass, field

import numpy as np

from mpft.errors import DimensionError, NumericError

# Per-coordinate distance below which two objective vectors count as one point.
DUPLICATE_TOL = 1e-12


def as_vector(values, name: str = "vector", min_len: int = 1) -> np.ndarray:
    """Return ``values`` as a finite 1-D float array."""
    arr = np.asarray(values, dtype=float)
    if arr.ndim != 1 or arr.size < min_len:
        raise DimensionError(f"{name} must be 1-D with length >= {min_len}, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise NumericError(f"{name} contains non-finite entries: {arr}")
    return arr


def dominates(a, b) -> bool:
    """True iff ``a`` is component-wise >= ``b`` and differs somewhere."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if a.shape != b.shape:
        raise DimensionError(f"cannot compare objective vectors of shapes {a.shape} and {b.shape}")
    return bool(np.all(a >= b) and np.any(a != b))


@dataclass(frozen=True, eq=False)
class TrackedPolicy:
    """A policy recorded during tracking.

    Attributes:
        params: Policy parameters (length d).
        objectives: Objective values of ``params`` at record time (length m).
        provenance: Origin tag, e.g. ``"vertex-1"``, ``"edge-2"``, ``"anchor-1"``,
            ``"inter-1.2"``.
        episode_index: Episode count of the producing track when recorded.
    """

    params: np.ndarray
    objectives: np.ndarray
    provenance: str = ""
    episode_index: int = 0

    def __post_init__(self):
        object.__setattr__(self, "params", as_vector(self.params, "params"))
        object.__setattr__(self, "objectives", as_vector(self.objectives, "objectives", min_len=2))
        if self.episode_index < 0:
            raise ValueError("episode_index must be nonnegative")

    @property
    def m(self) -> int:
        return self.objectives.size

    @property
    def d(self) -> int:
        return self.params.size


def _tie_key(p: TrackedPolicy):
    # Earliest discovery wins; the rest only makes the choice total.
    return (p.episode_index, p.provenance, tuple(p.objectives), tuple(p.params))


def _nondominated_mask(objs: np.ndarray) -> np.ndarray:
    n = objs.shape[0]
    keep = np.ones(n, dtype=bool)
    block = max(1, 2_000_000 // max(n * objs.shape[1], 1))
    for lo in range(0, n, block):
        part = objs[lo : lo + block]
        ge = np.all(objs[None, :, :] >= part[:, None, :], axis=2)
        gt = np.any(objs[None, :, :] > part[:, None, :], axis=2)
        keep[lo : lo + block] = ~np.any(ge & gt, axis=1)
    return keep


def _reduce(candidates: list[TrackedPolicy]) -> tuple[TrackedPolicy, ...]:
    if not candidates:
        return ()
    m, d = candidates[0].m, candidates[0].d
    for p in candidates:
        if p.m != m or p.d != d:
            raise DimensionError(
                f"policy dimensions (m={p.m}, d={p.d}) do not match (m={m}, d={d})"
            )
    candidates = sorted(candidates, key=_tie_key)
    objs = np.array([p.objectives for p in candidates])
    keep = _nondominated_mask(objs)
    kept: list[int] = []
    for j in np.flatnonzero(keep):
        if kept and np.any(np.all(np.abs(objs[kept] - objs[j]) <= DUPLICATE_TOL, axis=1)):
            continue
        kept.append(int(j))
    return tuple(candidates[j] for j in kept)


@dataclass(frozen=True)
class ParetoArchive:
    """Set of tracked policies with no dominated members and no duplicates."""

    members: tuple[TrackedPolicy, ...] = field(default=())

    def __post_init__(self):
        object.__setattr__(self, "members", _reduce(list(self.members)))

    def __len__(self) -> int:
        return len(self.members)

    def __iter__(self):
        return iter(self.members)

    def __eq__(self, other) -> bool:
        if not isinstance(other, ParetoArchive):
            return NotImplemented
        return _signature(self) == _signature(other)

    def objectives(self) -> np.ndarray:
        """Objective matrix (n, m) in :func:`front` order."""
        return np.array(front(self))

    def sorted_members(self) -> list[TrackedPolicy]:
        return sorted(self.members, key=lambda p: tuple(p.objectives))

    def to_csv(self) -> str:
        return archive_to_csv(self)

    @classmethod
    def from_csv(cls, text: str) -> ParetoArchive:
        return archive_from_csv(text)


def _signature(archive: ParetoArchive):
    return sorted(
        (tuple(p.objectives), tuple(p.params), p.provenance, p.episode_index)
        for p in archive.members
    )


def union_plus(archive: ParetoArchive, incoming: Iterable[TrackedPolicy]) -> ParetoArchive:
    """Union followed by deletion of dominated members and duplicates.

    Among members whose objective vectors agree to within ``DUPLICATE_TOL``
    per coordinate, the one with the lowest ``episode_index`` survives.
    """
    if isinstance(incoming, ParetoArchive):
        incoming = incoming.members
    return ParetoArchive(tuple(archive.members) + tuple(incoming))


def front(archive: ParetoArchive) -> list[np.ndarray]:
    """Objective vectors of the archive, ascending by objective 1 then lexicographically."""
    return [p.objectives.copy() for p in archive.sorted_members()]


def brute_force_nondominated(points: Sequence) -> list[int]:
    """Indices of points not dominated by any other point (O(n^2) reference filter)."""
    pts = [np.asarray(p, dtype=float) for p in points]
    return [
        j
        for j, p in enumerate(pts)
        if not any(dominates(q, p) for k, q in enumerate(pts) if k != j)
    ]


def _fmt(x: float) -> str:
    return format(float(x), ".17g")


def archive_to_csv(archive: ParetoArchive) -> str:
    """Serialize as ``track,episode,obj_1..obj_m,theta_1..theta_d`` rows."""
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    members = archive.sorted_members()
    if not members:
        writer.writerow(["track", "episode"])
        return buf.getvalue()
    m, d = members[0].m, members[0].d
    writer.writerow(
        ["track", "episode"]
        + [f"obj_{i + 1}" for i in range(m)]
        + [f"theta_{j + 1}" for j in range(d)]
    )
    for p in members:
        writer.writerow(
            [p.provenance, p.episode_index]
            + [_fmt(x) for x in p.objectives]
            + [_fmt(x) for x in p.params]
        )
    return buf.getvalue()


class CSVFormatError(ValueError):
    def __init__(self, message: str, row: int):
        super().__init__(f"row {row}: {message}")
        self.row = row


def archive_from_csv(text: str) -> ParetoArchive:
    """Parse an archive CSV. Malformed input raises :class:`CSVFormatError`."""
    rows = list(csv.reader(io.StringIO(text)))
    if not rows:
        raise CSVFormatError("empty file", 1)
    header = rows[0]
    if header[:2] != ["track", "episode"]:
        raise CSVFormatError("header must start with 'track,episode'", 1)
    obj_cols = [h for h in header if h.startswith("obj_")]
    theta_cols = [h for h in header if h.startswith("theta_")]
    m, d = len(obj_cols), len(theta_cols)
    if len(header) != 2 + m + d:
        raise CSVFormatError("unexpected column names", 1)
    if m < 2 or d < 1:
        raise CSVFormatError("need at least two obj_ columns and one theta_ column", 1)
    policies = []
    for r, row in enumerate(rows[1:], start=2):
        if not row:
            continue
        if len(row) != len(header):
            raise CSVFormatError(f"expected {len(header)} fields, got {len(row)}", r)
        try:
            episode = int(row[1])
            values = [float(x) for x in row[2:]]
            policies.append(
                TrackedPolicy(
                    params=values[m:],
                    objectives=values[:m],
                    provenance=row[0],
                    episode_index=episode,
                )
            )
        except ValueError as exc:
            raise CSVFormatError(str(exc), r) from exc
    return ParetoArchive(tuple(policies))
