"""The four tracking stages and the end-to-end run.

Stage 1 trains one policy per objective toward that objective's optimum.
Stage 2 walks along the front from each of those vertices: every cycle makes
``u`` updates along the Pareto-reverse direction (raising every objective but
the track's own) and ``v`` updates along the Pareto-ascent direction (pulling
the policy back onto the front). Stage 3 finds the sparsest stretches of the
merged front, steers a fresh policy into each one by re-weighting the
objectives, and tracks outward from it. Stage 4 merges everything.

Objective indices are 0-based in this API; provenance tags are 1-based.
"""

from __future__ import annotations

import copy
import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field

import numpy as np

from mpft import metrics
from mpft.direction import pareto_ascent_direction, pareto_reverse_direction
from mpft.errors import ConfigError, TrackingError
from mpft.pareto_core import ParetoArchive, TrackedPolicy, union_plus
from mpft.problems import Problem
from mpft.sparsity import SparseRegion, sparse_regions

logger = logging.getLogger(__name__)

STEP_MODES = ("clipped", "normalized", "raw")
INTERIOR_INITS = ("random", "boundary")
# Guard against division by a vanishing objective in the weight adjustment.
OBJECTIVE_FLOOR = 1e-8


def _int_tuple(values, name: str) -> tuple[int, ...]:
    try:
        out = tuple(int(x) for x in values)
    except TypeError:
        out = (int(values),)
    if any(x < 0 for x in out):
        raise ConfigError(f"{name} budgets must be nonnegative", key=name)
    return out


@dataclass(frozen=True)
class TrackConfig:
    """Budgets and knobs for one run.

    Attributes:
        xi_vertex: Stage-1 episodes per objective.
        psi_vertex: Stage-2 episodes per objective.
        xi_interior: Anchoring episodes per sparse region.
        psi_interior: Interior tracking episodes per sparse region, split
            evenly over the m objectives.
        u: Reverse-direction updates per tracking cycle.
        v: Ascent-direction updates per tracking cycle.
        K: Number of sparse regions to fill.
        steps: Environment timesteps charged per episode.
        lr: Parameter step size.
        epsilon_anchor: Anchoring stops once ``||J - j_max|| <= epsilon_anchor``;
            None means ``0.05 * ||j_max||``.
        seed: Root seed; every track derives its own stream from it.
        step_mode: ``"clipped"`` (``lr * d / max(||d||, 1)``), ``"normalized"``
            (``lr * d / ||d||``) or ``"raw"`` (``lr * d``).
        interior_init: ``"random"`` or ``"boundary"`` (warm start from the
            boundary policy nearest ``j_max``).
        stationary_eps: Squared ascent norm at or below which ascent updates
            are skipped.
        gradient_episodes: 0 for exact gradients; otherwise the number of
            Monte-Carlo rollouts per gradient (tabular problems only).
    """

    xi_vertex: tuple[int, ...]
    psi_vertex: tuple[int, ...]
    xi_interior: tuple[int, ...] = ()
    psi_interior: tuple[int, ...] = ()
    u: int = 1
    v: int = 2
    K: int = 0
    steps: int = 1
    lr: float = 0.05
    epsilon_anchor: float | None = None
    seed: int = 0
    step_mode: str = "clipped"
    interior_init: str = "random"
    stationary_eps: float = 1e-6
    gradient_episodes: int = 0

    def __post_init__(self):
        for name in ("xi_vertex", "psi_vertex", "xi_interior", "psi_interior"):
            object.__setattr__(self, name, _int_tuple(getattr(self, name), name))
        if self.u < 0 or self.v < 0:
            raise ConfigError("u and v must be nonnegative", key="u" if self.u < 0 else "v")
        if self.u + self.v < 1:
            raise ConfigError("u + v >= 1 is required", key="u")
        if self.K < 0:
            raise ConfigError("K must be nonnegative", key="K")
        if len(self.xi_vertex) != len(self.psi_vertex):
            raise ConfigError("xi_vertex and psi_vertex must have one entry per objective", key="psi_vertex")
        if len(self.xi_interior) < self.K or len(self.psi_interior) < self.K:
            raise ConfigError(f"xi_interior and psi_interior need at least K={self.K} entries", key="xi_interior")
        if self.steps < 0:
            raise ConfigError("steps must be nonnegative", key="steps")
        if not self.lr > 0:
            raise ConfigError("lr must be positive", key="lr")
        if self.epsilon_anchor is not None and not self.epsilon_anchor > 0:
            raise ConfigError("epsilon_anchor must be positive", key="epsilon_anchor")
        if self.step_mode not in STEP_MODES:
            raise ConfigError(f"step_mode must be one of {STEP_MODES}", key="step_mode")
        if self.interior_init not in INTERIOR_INITS:
            raise ConfigError(f"interior_init must be one of {INTERIOR_INITS}", key="interior_init")
        if not self.stationary_eps > 0:
            raise ConfigError("stationary_eps must be positive", key="stationary_eps")
        if self.gradient_episodes < 0:
            raise ConfigError("gradient_episodes must be nonnegative", key="gradient_episodes")

    @property
    def m(self) -> int:
        return len(self.xi_vertex)

    @property
    def cycle_length(self) -> int:
        return self.u + self.v

    def check_problem(self, problem: Problem) -> None:
        if self.m != problem.m:
            raise ConfigError(
                f"config has budgets for {self.m} objectives but the problem has {problem.m}",
                key="xi_vertex",
            )
        if self.gradient_episodes and not hasattr(problem, "sampled_gradient"):
            raise ConfigError("sampled gradients need a tabular problem", key="gradient_episodes")

    @classmethod
    def from_dict(cls, doc: dict, m: int | None = None) -> TrackConfig:
        """Build from a config mapping; scalar budgets broadcast to m or K entries."""
        doc = dict(doc)
        K = int(doc.get("K", 0))
        for name, count in (("xi_vertex", m), ("psi_vertex", m), ("xi_interior", K), ("psi_interior", K)):
            if name in doc and np.isscalar(doc[name]):
                if count is None:
                    raise ConfigError(f"{name} must be a list when m is unknown", key=name)
                doc[name] = [doc[name]] * count
        known = set(cls.__dataclass_fields__)
        unknown = set(doc) - known
        if unknown:
            raise ConfigError(f"unknown track settings: {sorted(unknown)}", key=sorted(unknown)[0])
        missing = {"xi_vertex", "psi_vertex"} - set(doc)
        if missing:
            raise ConfigError(f"missing track settings: {sorted(missing)}", key="track")
        return cls(**doc)

    def to_dict(self) -> dict:
        out = asdict(self)
        for name in ("xi_vertex", "psi_vertex", "xi_interior", "psi_interior"):
            out[name] = list(out[name])
        return out


class Track:
    """Per-track state: problem copy, RNG stream, and episode accounting."""

    def __init__(self, problem: Problem, config: TrackConfig, name: str, stream: tuple[int, ...]):
        self.problem = copy.copy(problem)
        self.problem.interactions = 0
        self.config = config
        self.name = name
        self.rng = np.random.default_rng([config.seed, *stream])
        self.episodes = 0
        self.log: list[str] = []

    @property
    def interactions(self) -> int:
        return self.episodes * self.config.steps

    def gradient(self, theta) -> np.ndarray:
        if self.config.gradient_episodes:
            seed = int(self.rng.integers(2**63 - 1))
            G = self.problem.sampled_gradient(theta, self.config.gradient_episodes, seed)
        else:
            G = self.problem.gradient(theta)
        if not np.all(np.isfinite(G)):
            raise TrackingError(f"{self.name}: non-finite gradient at episode {self.episodes + 1}")
        return G

    def evaluate(self, theta) -> np.ndarray:
        J = self.problem.evaluate(theta)
        if not np.all(np.isfinite(J)):
            raise TrackingError(f"{self.name}: non-finite objective at episode {self.episodes}")
        return J

    def update(self, theta: np.ndarray, direction: np.ndarray) -> np.ndarray:
        """One training episode along ``direction``."""
        self.episodes += 1
        return apply_step(theta, direction, self.config)

    def record(self, theta, tag: str) -> TrackedPolicy:
        return TrackedPolicy(theta.copy(), self.evaluate(theta), tag, self.episodes)


def apply_step(theta: np.ndarray, direction: np.ndarray, config: TrackConfig) -> np.ndarray:
    norm = float(np.linalg.norm(direction))
    if norm == 0.0:
        return theta
    if config.step_mode == "clipped":
        scale = config.lr / max(norm, 1.0)
    elif config.step_mode == "normalized":
        scale = config.lr / norm
    else:
        scale = config.lr
    return theta + scale * direction


def stage1_vertex(problem: Problem, objective: int, config: TrackConfig, track: Track | None = None) -> TrackedPolicy:
    """Approximate the vertex policy of one objective by single-objective ascent."""
    if not 0 <= objective < problem.m:
        raise IndexError(f"objective {objective} out of range for m={problem.m}")
    track = track or Track(problem, config, f"vertex-{objective + 1}", (1, objective))
    theta = track.problem.random_theta(track.rng)
    for _ in range(config.xi_vertex[objective]):
        G = track.gradient(theta)
        theta = track.update(theta, G[objective])
    return track.record(theta, f"vertex-{objective + 1}")


def track_cycle(problem: Problem, theta, objective: int, config: TrackConfig, track: Track | None = None) -> np.ndarray:
    """One tracking cycle: ``u`` reverse updates for ``objective``, then ``v`` ascent updates.

    Gradients are recomputed before every update. Ascent updates at a
    Pareto-stationary point are skipped but still consume their episode.
    """
    track = track or Track(problem, config, f"cycle-{objective + 1}", (9, objective))
    theta = np.asarray(theta, dtype=float)
    for _ in range(config.u):
        rev = pareto_reverse_direction(track.gradient(theta), objective)
        theta = track.update(theta, rev.direction)
    for _ in range(config.v):
        asc = pareto_ascent_direction(track.gradient(theta))
        if asc.squared_norm <= config.stationary_eps:
            track.log.append(f"episode {track.episodes + 1}: stationary, ascent skipped")
            track.episodes += 1
            continue
        theta = track.update(theta, asc.direction)
    return theta


def _tracking_loop(track: Track, start: TrackedPolicy, objective: int, cycles: int, tag: str) -> ParetoArchive:
    archive = ParetoArchive((start,))
    theta = start.params.copy()
    for _ in range(cycles):
        theta = track_cycle(track.problem, theta, objective, track.config, track)
        archive = union_plus(archive, [track.record(theta, tag)])
    return archive


def stage2_track(problem: Problem, vertex: TrackedPolicy, objective: int, config: TrackConfig, track: Track | None = None) -> ParetoArchive:
    """Track the front from a vertex policy for ``psi_vertex[objective] // (u + v)`` cycles."""
    track = track or Track(problem, config, f"edge-{objective + 1}", (2, objective))
    cycles = config.psi_vertex[objective] // config.cycle_length
    return _tracking_loop(track, vertex, objective, cycles, f"edge-{objective + 1}")


def adjustment_weights(j_max, J) -> np.ndarray:
    """Objective weights ``beta / ||beta||_1`` with ``beta = j_max / J``.

    Objectives lagging furthest behind ``j_max`` in ratio get the most weight.
    """
    j_max = np.asarray(j_max, dtype=float)
    beta = j_max / np.maximum(np.asarray(J, dtype=float), OBJECTIVE_FLOOR)
    return beta / beta.sum()


def weight_adjust_anchor(
    problem: Problem,
    j_max,
    config: TrackConfig,
    region: int = 0,
    track: Track | None = None,
    start=None,
) -> TrackedPolicy:
    """Steer a policy toward the box below ``j_max`` by objective re-weighting.

    Repeats: weights from :func:`adjustment_weights`, one ascent episode
    along ``grad J^T w``; stops when ``||J - j_max|| <= epsilon`` or after
    ``xi_interior[region]`` episodes.
    """
    j_max = np.asarray(j_max, dtype=float)
    if j_max.shape != (problem.m,):
        raise ConfigError(f"j_max must have length {problem.m}")
    if np.any(j_max <= 0):
        raise ConfigError(f"j_max must be positive in every objective, got {j_max.tolist()}")
    track = track or Track(problem, config, f"anchor-{region + 1}", (3, region))
    eps = config.epsilon_anchor if config.epsilon_anchor is not None else 0.05 * float(np.linalg.norm(j_max))
    theta = track.problem.random_theta(track.rng) if start is None else np.array(start, dtype=float)
    budget = config.xi_interior[region] if region < len(config.xi_interior) else 0
    used = 0
    while True:
        J = track.evaluate(theta)
        if np.linalg.norm(J - j_max) <= eps or used >= budget:
            break
        w = adjustment_weights(j_max, J)
        theta = track.update(theta, track.gradient(theta).T @ w)
        used += 1
    if used < budget:
        track.log.append(f"anchor reached j_max after {used} of {budget} episodes")
    return track.record(theta, f"anchor-{region + 1}")


@dataclass
class InteriorResult:
    region: SparseRegion
    anchor: TrackedPolicy
    archive: ParetoArchive
    episodes: int
    interactions: int
    log: list[str] = field(default_factory=list)


def _fill_region(problem: Problem, archive: ParetoArchive, region: SparseRegion, k: int, config: TrackConfig) -> InteriorResult:
    track = Track(problem, config, f"inter-{k + 1}", (3, k))
    start = None
    if config.interior_init == "boundary":
        nearest = min(
            archive.members,
            key=lambda p: (float(np.linalg.norm(p.objectives - region.j_max)), tuple(p.objectives)),
        )
        start = nearest.params
    anchor = weight_adjust_anchor(problem, region.j_max, config, k, track=track, start=start)
    m = problem.m
    cycles = config.psi_interior[k] // (m * config.cycle_length)
    merged = ParetoArchive((anchor,))
    for i in range(m):
        sub = _tracking_loop(track, anchor, i, cycles, f"inter-{k + 1}.{i + 1}")
        merged = union_plus(merged, sub)
    return InteriorResult(region, anchor, merged, track.episodes, track.interactions, track.log)


def stage3_fill(problem: Problem, archive: ParetoArchive, config: TrackConfig, jobs: int = 1) -> list[InteriorResult]:
    """Detect the top-K sparse regions and fill each from an anchored interior policy."""
    if config.K == 0:
        return []
    if len(archive) < problem.m + 1:
        logger.warning(
            "archive has %d members; at least %d are needed to define a sparse region",
            len(archive),
            problem.m + 1,
        )
        return []
    regions = sparse_regions(archive.objectives(), config.K)
    if len(regions) < config.K:
        logger.warning("only %d of K=%d sparse regions found", len(regions), config.K)
    return _map(
        lambda kr: _fill_region(problem, archive, kr[1], kr[0], config),
        list(enumerate(regions)),
        jobs,
    )


def _map(fn, items, jobs: int):
    if jobs <= 1 or len(items) <= 1:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=jobs) as pool:
        return list(pool.map(fn, items))


@dataclass
class StageSummary:
    name: str
    episodes: int
    policies_kept: int
    hv: float


@dataclass
class RunReport:
    """Outcome of a full run.

    ``env_steps`` is the budget formula; ``interactions`` is what the tracks
    actually charged. They agree whenever every budget is used in full.
    """

    env_steps: int
    interactions: int
    hv: float
    sp: float | None
    reference_point: list[float]
    stages: list[StageSummary]
    regions: list[SparseRegion]
    log: list[str] = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "env_steps": self.env_steps,
            "interactions": self.interactions,
            "hv": self.hv,
            "sp": self.sp,
            "reference_point": list(self.reference_point),
            "stages": [asdict(s) for s in self.stages],
            "regions": [r.to_dict() for r in self.regions],
        }

    @property
    def metrics(self) -> metrics.MetricsReport:
        return metrics.MetricsReport(self.hv, self.sp, self.env_steps, tuple(self.reference_point))


def _sp_or_none(archive: ParetoArchive) -> float | None:
    if len(archive) < 2:
        return None
    return metrics.sparsity(archive.objectives())


def _hv(archive: ParetoArchive, ref) -> float:
    if len(archive) == 0:
        return 0.0
    return metrics.hypervolume(archive.objectives(), ref)


def _edge_track(problem: Problem, config: TrackConfig, i: int):
    track = Track(problem, config, f"track-{i + 1}", (1, i))
    vertex = stage1_vertex(problem, i, config, track)
    stage1_episodes = track.episodes
    edge = stage2_track(problem, vertex, i, config, track)
    return vertex, edge, stage1_episodes, track.episodes - stage1_episodes, track


def run_mpft(problem: Problem, config: TrackConfig, ref=None, jobs: int = 1) -> tuple[ParetoArchive, RunReport]:
    """Run all four stages and return the final archive with its report.

    Args:
        problem: Objectives and gradients to track.
        config: Budgets and knobs.
        ref: Hypervolume reference point; defaults to the origin.
        jobs: Worker threads for the independent per-objective and
            per-region tracks. Results do not depend on it.
    """
    config.check_problem(problem)
    ref = np.zeros(problem.m) if ref is None else np.asarray(ref, dtype=float)
    if ref.shape != (problem.m,):
        raise ConfigError(f"reference point must have length {problem.m}", key="reference_point")

    try:
        edges = _map(lambda i: _edge_track(problem, config, i), list(range(problem.m)), jobs)
    except TrackingError as exc:
        raise TrackingError(f"stage 1/2: {exc}") from exc

    vertices = ParetoArchive(tuple(e[0] for e in edges))
    archive = ParetoArchive()
    for _, edge, *_ in edges:
        archive = union_plus(archive, edge)
    hv_vertices = _hv(vertices, ref)
    hv_edges = _hv(archive, ref)

    try:
        interior = stage3_fill(problem, archive, config, jobs)
    except TrackingError as exc:
        raise TrackingError(f"stage 3: {exc}") from exc
    for res in interior:
        archive = union_plus(archive, res.archive)

    def kept(prefixes) -> int:
        return sum(p.provenance.startswith(prefixes) for p in archive.members)

    stages = [
        StageSummary("vertex", sum(e[2] for e in edges), kept("vertex-"), hv_vertices),
        StageSummary("edge", sum(e[3] for e in edges), kept("edge-"), hv_edges),
        StageSummary("interior", sum(r.episodes for r in interior), kept(("anchor-", "inter-")), _hv(archive, ref)),
        StageSummary("complete", 0, len(archive), _hv(archive, ref)),
    ]
    log = [f"{e[4].name}: {msg}" for e in edges for msg in e[4].log]
    log += [f"inter-{k + 1}: {msg}" for k, r in enumerate(interior) for msg in r.log]
    interactions = sum(e[4].interactions for e in edges) + sum(r.interactions for r in interior)
    report = RunReport(
        env_steps=metrics.env_steps(config),
        interactions=interactions,
        hv=_hv(archive, ref),
        sp=_sp_or_none(archive),
        reference_point=ref.tolist(),
        stages=stages,
        regions=[r.region for r in interior],
        log=log,
    )
    return archive, report
