"""Min-norm convex combinations of objective gradients.

The min-norm point of the convex hull of the gradient rows gives the
Pareto-ascent direction: moving along it raises every objective by the same
first-order amount. Constraining one weight to zero gives the Pareto-reverse
direction used to step along the front.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from mpft.errors import DimensionError, NumericError

DEFAULT_TOL = 1e-10
DEFAULT_MAX_ITERS = 10_000
DEFAULT_STATIONARY_EPS = 1e-6


@dataclass(frozen=True)
class DirectionResult:
    """Solution of the min-norm problem.

    Attributes:
        alpha: Simplex weights over the gradient rows.
        direction: ``G.T @ alpha``.
        squared_norm: ``||direction||^2``.
        converged: False when the iterative solver hit its iteration cap.
        iterations: Solver iterations used (0 for closed forms).
    """

    alpha: np.ndarray
    direction: np.ndarray
    squared_norm: float
    converged: bool = True
    iterations: int = 0


def _as_gradient_matrix(G, min_rows: int = 1) -> np.ndarray:
    G = np.asarray(G, dtype=float)
    if G.ndim != 2 or G.shape[0] < min_rows or G.shape[1] < 1:
        raise DimensionError(f"gradient matrix must be (m>={min_rows}, d>=1), got {G.shape}")
    if not np.all(np.isfinite(G)):
        raise NumericError("gradient matrix contains non-finite entries")
    return G


def _result(G: np.ndarray, alpha: np.ndarray, converged=True, iterations=0) -> DirectionResult:
    direction = G.T @ alpha
    return DirectionResult(
        alpha=alpha,
        direction=direction,
        squared_norm=float(direction @ direction),
        converged=converged,
        iterations=iterations,
    )


def project_simplex(v) -> np.ndarray:
    """Euclidean projection onto ``{x : x >= 0, sum(x) = 1}``.

    Sort-based method: find the threshold ``tau`` such that
    ``max(v - tau, 0)`` sums to one.
    """
    v = np.asarray(v, dtype=float)
    if v.ndim != 1 or v.size == 0:
        raise DimensionError(f"expected a non-empty vector, got shape {v.shape}")
    if not np.all(np.isfinite(v)):
        raise NumericError(f"cannot project non-finite vector {v}")
    u = np.sort(v)[::-1]
    css = np.cumsum(u) - 1.0
    ks = np.arange(1, v.size + 1)
    rho = np.nonzero(u - css / ks > 0)[0][-1]
    tau = css[rho] / (rho + 1)
    x = np.maximum(v - tau, 0.0)
    # Rounding can leave the sum a few ulps off one.
    return x / x.sum()


def min_norm_weights_2(G) -> DirectionResult:
    """Closed-form min-norm weights for two gradients.

    ``alpha_1 = clip(((g2 - g1) . g2) / ||g2 - g1||^2, 0, 1)``. Identical
    gradients make every weight optimal; ``[0.5, 0.5]`` is returned.
    """
    G = _as_gradient_matrix(G)
    if G.shape[0] != 2:
        raise DimensionError(f"closed form needs exactly 2 gradients, got {G.shape[0]}")
    g1, g2 = G
    diff = g2 - g1
    denom = float(diff @ diff)
    if denom == 0.0:
        a1 = 0.5
    else:
        a1 = min(max(float(diff @ g2) / denom, 0.0), 1.0)
    return _result(G, np.array([a1, 1.0 - a1]))


def projected_gradient_weights(
    G, tol: float = DEFAULT_TOL, max_iters: int = DEFAULT_MAX_ITERS
) -> DirectionResult:
    """Projected gradient descent on ``||G.T @ alpha||^2`` over the simplex.

    Starts from uniform weights with step ``1 / (2 * trace(G G^T))`` (the
    trace bounds the top eigenvalue of the Gram matrix). Stops once an update
    moves ``alpha`` by less than ``tol`` in the inf-norm; on hitting
    ``max_iters`` the best iterate is returned with ``converged=False``.
    """
    G = _as_gradient_matrix(G, min_rows=2)
    if tol <= 0:
        raise ValueError("tol must be positive")
    m = G.shape[0]
    gram = G @ G.T
    lipschitz = 2.0 * float(np.trace(gram))
    alpha = np.full(m, 1.0 / m)
    if lipschitz == 0.0:
        return _result(G, alpha)
    eta = 1.0 / lipschitz

    best = alpha
    best_val = float(alpha @ gram @ alpha)
    for it in range(1, max_iters + 1):
        new = project_simplex(alpha - eta * 2.0 * (gram @ alpha))
        step = float(np.max(np.abs(new - alpha)))
        alpha = new
        val = float(alpha @ gram @ alpha)
        if val <= best_val:
            best, best_val = alpha, val
        if step < tol:
            return _result(G, best, converged=True, iterations=it)
    return _result(G, best, converged=False, iterations=max_iters)


def min_norm_weights(G, tol: float = DEFAULT_TOL, max_iters: int = DEFAULT_MAX_ITERS) -> DirectionResult:
    """Minimize ``||G.T @ alpha||^2`` over the simplex.

    Two gradients use :func:`min_norm_weights_2`; more use
    :func:`projected_gradient_weights`.
    """
    G = _as_gradient_matrix(G, min_rows=2)
    if G.shape[0] == 2:
        return min_norm_weights_2(G)
    return projected_gradient_weights(G, tol=tol, max_iters=max_iters)


def pareto_ascent_direction(G) -> DirectionResult:
    """Min-norm direction with the package defaults (tol 1e-10, 10000 iterations)."""
    return min_norm_weights(G, tol=DEFAULT_TOL, max_iters=DEFAULT_MAX_ITERS)


def pareto_reverse_direction(G, excluded: int) -> DirectionResult:
    """Min-norm direction with ``alpha[excluded] = 0`` (0-based index).

    The result raises every objective except ``excluded``. With two
    objectives it is simply the other objective's gradient.
    """
    G = _as_gradient_matrix(G)
    m = G.shape[0]
    if m < 2:
        raise DimensionError("reverse direction needs at least 2 objectives")
    if not 0 <= excluded < m:
        raise IndexError(f"objective index {excluded} out of range for m={m}")
    keep = [i for i in range(m) if i != excluded]
    if len(keep) == 1:
        alpha = np.zeros(m)
        alpha[keep[0]] = 1.0
        return _result(G, alpha)
    sub = min_norm_weights(G[keep], tol=DEFAULT_TOL, max_iters=DEFAULT_MAX_ITERS)
    alpha = np.zeros(m)
    alpha[keep] = sub.alpha
    return _result(G, alpha, converged=sub.converged, iterations=sub.iterations)


def is_pareto_stationary(G, eps: float = DEFAULT_STATIONARY_EPS) -> bool:
    if eps <= 0:
        raise ValueError("eps must be positive")
    return min_norm_weights(G).squared_norm <= eps
