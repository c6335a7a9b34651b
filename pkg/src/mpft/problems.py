"""Multi-objective problems with exact objectives and gradients.

Two kinds are provided:

* analytic problems on R^d whose Pareto-optimal set is known in closed form
  (:class:`BiQuadratic`) or by a cheap dense scan (:class:`ConcaveGap`);
* tabular multi-objective MDPs with a softmax policy over per-state logits,
  evaluated exactly by finite-horizon dynamic programming
  (:class:`TabularMOMDP`).

All objectives are maximized.
"""

from __future__ import annotations

import json
import math
from pathlib import Path

import numpy as np

from mpft.errors import ConfigError, DimensionError, NumericError
from mpft.metrics import hypervolume

# Discount-series truncation for problems without a finite horizon.
SERIES_TOL = 1e-12


class Problem:
    """Interface shared by every problem.

    Subclasses set ``m``, ``d``, ``nonnegative`` and ``bounds`` and implement
    :meth:`evaluate` and :meth:`gradient`.
    """

    m: int
    d: int
    nonnegative: bool = False
    bounds: tuple[float, float] = (-1.0, 1.0)
    kind: str = "problem"

    def __init__(self):
        # Environment steps spent by sampled estimators; exact evaluation is free.
        self.interactions = 0

    def check_theta(self, theta) -> np.ndarray:
        theta = np.asarray(theta, dtype=float)
        if theta.shape != (self.d,):
            raise DimensionError(f"theta must have shape ({self.d},), got {theta.shape}")
        if not np.all(np.isfinite(theta)):
            raise NumericError("theta contains non-finite entries")
        return theta

    def evaluate(self, theta) -> np.ndarray:
        raise NotImplementedError

    def gradient(self, theta) -> np.ndarray:
        raise NotImplementedError

    def random_theta(self, rng: np.random.Generator) -> np.ndarray:
        """Uniform draw from the parameter box."""
        low, high = self.bounds
        return rng.uniform(low, high, size=self.d)

    def to_dict(self) -> dict:
        raise NotImplementedError


class BiQuadratic(Problem):
    """``J_i(theta) = c_i - ||theta - t_i||^2``.

    The Pareto-optimal set is the convex hull of the targets ``t_i``.
    """

    kind = "biquadratic"

    def __init__(self, targets, offsets, bounds=(0.0, 1.0), nonnegative=False):
        super().__init__()
        targets = np.asarray(targets, dtype=float)
        offsets = np.asarray(offsets, dtype=float)
        if targets.ndim != 2 or targets.shape[0] < 2:
            raise ConfigError("targets must be an (m>=2, d) array")
        if offsets.shape != (targets.shape[0],):
            raise ConfigError("offsets must have one entry per target")
        self.targets = targets
        self.offsets = offsets
        self.m, self.d = targets.shape
        self.bounds = (float(bounds[0]), float(bounds[1]))
        self.nonnegative = bool(nonnegative)

    def _bump(self, theta):
        return 0.0, np.zeros(self.d)

    def evaluate(self, theta) -> np.ndarray:
        theta = self.check_theta(theta)
        bump, _ = self._bump(theta)
        return self.offsets - np.sum((theta - self.targets) ** 2, axis=1) - bump

    def gradient(self, theta) -> np.ndarray:
        theta = self.check_theta(theta)
        _, bump_grad = self._bump(theta)
        return -2.0 * (theta - self.targets) - bump_grad

    def evaluate_many(self, thetas) -> np.ndarray:
        """Objectives for an (n, d) batch of parameters, shape (n, m)."""
        thetas = np.asarray(thetas, dtype=float)
        sq = np.sum((thetas[:, None, :] - self.targets[None, :, :]) ** 2, axis=2)
        return self.offsets - sq - self._bump_many(thetas)[:, None]

    def _bump_many(self, thetas: np.ndarray) -> np.ndarray:
        return np.zeros(thetas.shape[0])

    def to_dict(self) -> dict:
        return {
            "kind": self.kind,
            "targets": self.targets.tolist(),
            "offsets": self.offsets.tolist(),
            "bounds": list(self.bounds),
            "nonnegative": self.nonnegative,
        }

    def true_front_hv(self, ref, resolution: int = 1000) -> float:
        """Hypervolume of the true front sampled at ``resolution`` points."""
        return true_front_hv(self, ref, resolution)

    def _scan_offsets(self, resolution: int) -> np.ndarray:
        return np.zeros(1)


class ConcaveGap(BiQuadratic):
    """:class:`BiQuadratic` minus a Gaussian bump at the targets' centroid.

    ``J_i(theta) = c_i - ||theta - t_i||^2 - b * exp(-||theta - mu||^2 / sigma^2)``.
    The bump dents the middle of the front and pushes the Pareto-optimal set
    off the hull segment there.
    """

    kind = "concave_gap"

    def __init__(
        self,
        targets,
        offsets,
        bump=0.5,
        sigma=0.2,
        center=None,
        bounds=(0.0, 1.0),
        nonnegative=False,
    ):
        super().__init__(targets, offsets, bounds=bounds, nonnegative=nonnegative)
        if sigma <= 0:
            raise ConfigError("sigma must be positive")
        self.bump = float(bump)
        self.sigma = float(sigma)
        self.center = (
            self.targets.mean(axis=0) if center is None else np.asarray(center, dtype=float)
        )
        if self.center.shape != (self.d,):
            raise ConfigError("bump center must have length d")

    def _bump(self, theta):
        diff = theta - self.center
        value = self.bump * math.exp(-float(diff @ diff) / self.sigma**2)
        # d/dtheta of b*exp(-r^2/s^2) is -2 (theta - mu) / s^2 times the value.
        return value, -2.0 * value * diff / self.sigma**2

    def _bump_many(self, thetas: np.ndarray) -> np.ndarray:
        r2 = np.sum((thetas - self.center) ** 2, axis=1)
        return self.bump * np.exp(-r2 / self.sigma**2)

    def to_dict(self) -> dict:
        out = super().to_dict()
        out.update(bump=self.bump, sigma=self.sigma, center=self.center.tolist())
        return out

    def _scan_offsets(self, resolution: int) -> np.ndarray:
        return np.linspace(-3.0 * self.sigma, 3.0 * self.sigma, resolution)


def true_front_hv(problem: BiQuadratic, ref, resolution: int = 1000) -> float:
    """Ground-truth hypervolume of a two-objective analytic problem.

    The hull segment ``lam * t1 + (1 - lam) * t2`` is sampled at
    ``resolution`` points. For :class:`ConcaveGap` each segment point is also
    shifted perpendicular to the segment over a dense grid of offsets, which
    captures where the bump pushes the Pareto set off the segment. Dominated
    samples contribute nothing to the hypervolume.
    """
    if not isinstance(problem, BiQuadratic):
        raise TypeError("true_front_hv needs a BiQuadratic or ConcaveGap problem")
    if problem.m != 2:
        raise NotImplementedError("true_front_hv supports two objectives only")
    if resolution < 100:
        raise ValueError("resolution must be at least 100")
    t1, t2 = problem.targets
    lam = np.linspace(0.0, 1.0, resolution)
    seg = lam[:, None] * t1 + (1.0 - lam[:, None]) * t2
    offsets = problem._scan_offsets(resolution)
    if offsets.size > 1:
        axis = t1 - t2
        normal = _unit_normal(axis)
        pts = (seg[:, None, :] + offsets[None, :, None] * normal).reshape(-1, problem.d)
    else:
        pts = seg
    return hypervolume(problem.evaluate_many(pts), ref)


def _unit_normal(axis: np.ndarray) -> np.ndarray:
    axis = axis / np.linalg.norm(axis)
    basis = np.eye(axis.size)
    # Take the coordinate direction least aligned with the segment, then orthogonalize.
    e = basis[int(np.argmin(np.abs(axis)))]
    n = e - (e @ axis) * axis
    return n / np.linalg.norm(n)


class TabularMOMDP(Problem):
    """Finite tabular MDP with vector rewards and a softmax policy.

    Parameters are logits ``theta[s, a]`` flattened row-major (d = S * A).
    Returns are discounted sums over ``horizon`` steps; when ``T`` is None the
    horizon is the point where ``gamma ** t`` drops below 1e-12. States
    flagged in ``done`` are absorbing and pay nothing.
    """

    kind = "tabular"

    def __init__(self, P, R, gamma, T=None, start=0, done=None, bounds=(-1.0, 1.0), nonnegative=None):
        super().__init__()
        P = np.asarray(P, dtype=float)
        R = np.asarray(R, dtype=float)
        if P.ndim != 3 or P.shape[0] != P.shape[2]:
            raise ConfigError(f"P must have shape (S, A, S), got {P.shape}")
        S, A, _ = P.shape
        if R.ndim != 3 or R.shape[:2] != (S, A) or R.shape[2] < 2:
            raise ConfigError(f"R must have shape ({S}, {A}, m>=2), got {R.shape}")
        if np.any(P < 0) or np.any(np.abs(P.sum(axis=2) - 1.0) > 1e-12):
            raise ConfigError("every P[s, a, :] must be a probability distribution")
        if not np.all(np.isfinite(R)):
            raise ConfigError("R contains non-finite entries")
        if not 0.0 <= gamma < 1.0:
            raise ConfigError("gamma must lie in [0, 1)")
        if T is not None and int(T) < 1:
            raise ConfigError("T must be a positive integer or null")
        if not 0 <= int(start) < S:
            raise ConfigError(f"start state {start} out of range")
        done = np.zeros(S, dtype=bool) if done is None else np.asarray(done, dtype=bool)
        if done.shape != (S,):
            raise ConfigError("done must list one flag per state")
        self.P, self.R = P, R
        self.S, self.A, self.m = S, A, R.shape[2]
        self.d = S * A
        self.gamma = float(gamma)
        self.T = None if T is None else int(T)
        self.start = int(start)
        self.done = done
        self.bounds = (float(bounds[0]), float(bounds[1]))
        # Without explicit flag, nonnegative rewards imply nonnegative returns.
        self.nonnegative = bool(np.all(R >= 0)) if nonnegative is None else bool(nonnegative)

    @property
    def horizon(self) -> int:
        if self.T is not None:
            return self.T
        if self.gamma == 0.0:
            return 1
        return int(math.ceil(math.log(SERIES_TOL) / math.log(self.gamma)))

    @classmethod
    def from_dict(cls, doc: dict, **kwargs) -> TabularMOMDP:
        try:
            S, A, m = int(doc["S"]), int(doc["A"]), int(doc["m"])
            P = np.asarray(doc["P"], dtype=float)
            R = np.asarray(doc["R"], dtype=float)
        except KeyError as exc:
            raise ConfigError(f"tabular MOMDP is missing field {exc}") from exc
        if P.shape != (S, A, S) or R.shape != (S, A, m):
            raise ConfigError(
                f"P/R shapes {P.shape}/{R.shape} disagree with S={S}, A={A}, m={m}"
            )
        return cls(
            P,
            R,
            gamma=float(doc.get("gamma", 0.9)),
            T=doc.get("T"),
            start=int(doc.get("start", 0)),
            done=doc.get("done"),
            **kwargs,
        )

    @classmethod
    def from_json(cls, path, **kwargs) -> TabularMOMDP:
        return cls.from_dict(json.loads(Path(path).read_text(encoding="utf-8")), **kwargs)

    def to_dict(self) -> dict:
        return {
            "kind": self.kind,
            "S": self.S,
            "A": self.A,
            "m": self.m,
            "P": self.P.tolist(),
            "R": self.R.tolist(),
            "gamma": self.gamma,
            "T": self.T,
            "start": self.start,
            "done": self.done.astype(int).tolist(),
        }

    @classmethod
    def random(cls, S=4, A=2, m=2, gamma=0.9, T=20, seed=0, **kwargs) -> TabularMOMDP:
        """Random dense instance with rewards in [0, 1)."""
        rng = np.random.default_rng(seed)
        P = rng.random((S, A, S)) + 0.1
        P /= P.sum(axis=2, keepdims=True)
        R = rng.random((S, A, m))
        return cls(P, R, gamma=gamma, T=T, **kwargs)

    def policy(self, theta) -> np.ndarray:
        """Softmax action probabilities, shape (S, A)."""
        logits = self.check_theta(theta).reshape(self.S, self.A)
        z = np.exp(logits - logits.max(axis=1, keepdims=True))
        return z / z.sum(axis=1, keepdims=True)

    def _backward(self, pi: np.ndarray):
        """Time-indexed action values Q[t] (S, A, m) and state values V[t] (S, m)."""
        H = self.horizon
        live = ~self.done
        r_eff = self.R * live[:, None, None]
        Q = np.empty((H, self.S, self.A, self.m))
        V = np.zeros((H + 1, self.S, self.m))
        for t in range(H - 1, -1, -1):
            q = r_eff + self.gamma * np.einsum("sap,pi->sai", self.P, V[t + 1])
            q[self.done] = 0.0
            Q[t] = q
            V[t] = np.einsum("sa,sai->si", pi, q)
        return Q, V

    def evaluate(self, theta) -> np.ndarray:
        pi = self.policy(theta)
        _, V = self._backward(pi)
        return V[0, self.start].copy()

    def gradient(self, theta) -> np.ndarray:
        """Exact policy gradient via state occupancies and advantages.

        ``dJ_i/dtheta[s, a] = sum_t gamma^t d_t(s) pi(a|s) (Q_t(s, a, i) - V_t(s, i))``
        """
        pi = self.policy(theta)
        Q, V = self._backward(pi)
        live = (~self.done).astype(float)
        trans = np.einsum("sa,sap->sp", pi, self.P) * live[:, None]
        occ = np.zeros(self.S)
        occ[self.start] = 1.0
        grad = np.zeros((self.m, self.S, self.A))
        disc = 1.0
        for t in range(self.horizon):
            weight = disc * occ * live
            adv = Q[t] - V[t][:, None, :]
            grad += np.einsum("s,sa,sai->isa", weight, pi, adv)
            occ = occ @ trans
            disc *= self.gamma
        return grad.reshape(self.m, self.d)

    def sampled_gradient(self, theta, episodes: int, seed: int) -> np.ndarray:
        """REINFORCE estimate of the gradient with an exact per-state value baseline."""
        return self.sampled_gradient_stats(theta, episodes, seed)[0]

    def sampled_gradient_stats(self, theta, episodes: int, seed: int):
        """Monte-Carlo gradient estimate and its per-entry standard error.

        Rolls out ``episodes`` independent trajectories from the start state.
        Each contributes ``sum_t gamma^t (G_t - V_t(s_t)) grad log pi(a_t|s_t)``
        per objective, where ``G_t`` is the discounted return-to-go. The value
        baseline depends only on state and time, so the estimate is unbiased.
        The interaction counter grows by the number of environment steps taken.
        """
        if episodes < 1:
            raise ValueError("episodes must be >= 1")
        pi = self.policy(theta)
        _, V = self._backward(pi)
        rng = np.random.default_rng(seed)
        H, E = self.horizon, int(episodes)
        cum_pi = np.cumsum(pi, axis=1)
        cum_P = np.cumsum(self.P, axis=2)

        states = np.empty((H, E), dtype=int)
        actions = np.empty((H, E), dtype=int)
        rewards = np.zeros((H, E, self.m))
        alive = np.zeros((H, E), dtype=bool)
        s = np.full(E, self.start)
        running = ~self.done[s]
        for t in range(H):
            alive[t] = running
            states[t] = s
            a = _sample_rows(cum_pi[s], rng)
            actions[t] = a
            rewards[t] = self.R[s, a] * running[:, None]
            nxt = _sample_rows(cum_P[s, a], rng)
            s = np.where(running, nxt, s)
            running = running & ~self.done[s]
        self.interactions += int(alive.sum())

        returns = np.zeros((H, E, self.m))
        acc = np.zeros((E, self.m))
        for t in range(H - 1, -1, -1):
            acc = rewards[t] + self.gamma * acc
            returns[t] = acc

        per_episode = np.zeros((E, self.m, self.S, self.A))
        rows = np.arange(E)
        disc = 1.0
        for t in range(H):
            st, at = states[t], actions[t]
            coef = disc * (returns[t] - V[t][st]) * alive[t][:, None]  # (E, m)
            score = -pi[st]  # grad log softmax = onehot(a) - pi(s)
            score[rows, at] += 1.0
            np.add.at(per_episode, (rows, slice(None), st), coef[:, :, None] * score[:, None, :])
            disc *= self.gamma
        flat = per_episode.reshape(E, self.m, self.d)
        mean = flat.mean(axis=0)
        stderr = flat.std(axis=0, ddof=1) / math.sqrt(E) if E > 1 else np.zeros_like(mean)
        return mean, stderr


def _sample_rows(cdf: np.ndarray, rng: np.random.Generator) -> np.ndarray:
    u = rng.random(cdf.shape[0])
    idx = (u[:, None] > cdf).sum(axis=1)
    return np.minimum(idx, cdf.shape[1] - 1)


def problem_from_dict(spec: dict, base_dir=None) -> Problem:
    """Build a problem from its config section (``kind`` plus parameters)."""
    spec = dict(spec)
    kind = spec.pop("kind", None)
    if kind == "biquadratic":
        return BiQuadratic(
            spec["targets"],
            spec["offsets"],
            bounds=spec.get("bounds", (0.0, 1.0)),
            nonnegative=spec.get("nonnegative", False),
        )
    if kind == "concave_gap":
        return ConcaveGap(
            spec["targets"],
            spec["offsets"],
            bump=spec.get("bump", 0.5),
            sigma=spec.get("sigma", 0.2),
            center=spec.get("center"),
            bounds=spec.get("bounds", (0.0, 1.0)),
            nonnegative=spec.get("nonnegative", False),
        )
    if kind == "tabular":
        extra = {}
        if "bounds" in spec:
            extra["bounds"] = spec["bounds"]
        if "nonnegative" in spec:
            extra["nonnegative"] = spec["nonnegative"]
        if "path" in spec:
            path = Path(spec["path"])
            if base_dir is not None and not path.is_absolute():
                path = Path(base_dir) / path
            return TabularMOMDP.from_json(path, **extra)
        return TabularMOMDP.from_dict(spec, **extra)
    raise ConfigError(f"unknown problem kind {kind!r}")
