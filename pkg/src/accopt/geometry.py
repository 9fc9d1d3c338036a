"""Feasible-set projections, the conjugate-gradient map of a quadratic
regularizer, and the closed-form minimizer used by the strongly convex method.

All projections are exact (sort-based threshold algorithms), not iterative.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from .core import FeasibleSet, UnsupportedCombinationError


# ---------------------------------------------------------------------------
# Projections
# ---------------------------------------------------------------------------

def _simplex_threshold(z: np.ndarray, total: float) -> np.ndarray:
    # Euclidean projection onto {x >= 0, sum(x) = total} via the sorted
    # cumulative-sum threshold; O(n log n), ties are harmless (unique output).
    u = np.sort(z)[::-1]
    css = np.cumsum(u)
    idx = np.arange(1, z.size + 1)
    positive = u - (css - total) / idx > 0
    rho = int(np.max(np.flatnonzero(positive)))
    tau = (css[rho] - total) / (rho + 1)
    return np.maximum(z - tau, 0.0)


def project_simplex(z) -> np.ndarray:
    """Euclidean projection onto the probability simplex."""
    z = np.asarray(z, dtype=float)
    if z.ndim != 1 or z.size == 0:
        raise ValueError("expected a nonempty 1-D vector")
    return _simplex_threshold(z, 1.0)


def project_l1_ball(z, radius: float) -> np.ndarray:
    """Euclidean projection onto {x : ||x||_1 <= radius}.

    Interior points are returned unchanged; otherwise the projection reduces
    to a simplex projection of |z| with the signs restored (soft threshold).
    """
    z = np.asarray(z, dtype=float)
    if z.ndim != 1 or z.size == 0:
        raise ValueError("expected a nonempty 1-D vector")
    if radius <= 0:
        raise ValueError(f"radius must be positive, got {radius}")
    if np.abs(z).sum() <= radius:
        return z.copy()
    w = _simplex_threshold(np.abs(z), float(radius))
    return np.sign(z) * w


def project(fs: FeasibleSet, x) -> np.ndarray:
    """Euclidean projection of x onto the feasible set."""
    x = np.asarray(x, dtype=float)
    if fs.kind == "all_space":
        return x.copy()
    if fs.kind == "simplex":
        return project_simplex(x)
    if fs.kind == "l1_ball":
        return project_l1_ball(x, fs.radius)
    if fs.kind == "box":
        return np.clip(x, fs.lower, fs.upper)
    raise UnsupportedCombinationError(f"no projection for set kind {fs.kind!r}")


def contains(fs: FeasibleSet, x, tol: float = 1e-9) -> bool:
    x = np.asarray(x, dtype=float)
    if fs.kind == "all_space":
        return True
    if fs.kind == "simplex":
        return bool(np.all(x >= -tol) and abs(x.sum() - 1.0) <= tol)
    if fs.kind == "l1_ball":
        return bool(np.abs(x).sum() <= fs.radius + tol)
    if fs.kind == "box":
        return bool(np.all(x >= fs.lower - tol) and np.all(x <= fs.upper + tol))
    raise UnsupportedCombinationError(f"no membership test for set kind {fs.kind!r}")


def canonical_point(fs: FeasibleSet, dim: int) -> np.ndarray:
    """A canonical feasible point: the origin where feasible, else the center."""
    if fs.kind == "simplex":
        return np.full(dim, 1.0 / dim)
    if fs.kind == "box":
        return 0.5 * (fs.lower + fs.upper)
    return np.zeros(dim)


def sample_point(fs: FeasibleSet, dim: int, rng: np.random.Generator) -> np.ndarray:
    """A random feasible point (uniform-ish; used by tests and bound checks)."""
    if fs.kind == "all_space":
        return rng.standard_normal(dim)
    if fs.kind == "simplex":
        return rng.dirichlet(np.ones(dim))
    if fs.kind == "l1_ball":
        w = rng.dirichlet(np.ones(dim)) * np.where(rng.random(dim) < 0.5, -1.0, 1.0)
        return fs.radius * rng.random() ** (1.0 / dim) * w
    if fs.kind == "box":
        return fs.lower + rng.random(dim) * (fs.upper - fs.lower)
    raise UnsupportedCombinationError(f"cannot sample from set kind {fs.kind!r}")


# ---------------------------------------------------------------------------
# Regularizers and the conjugate-gradient map
# ---------------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class Regularizer:
    """A strongly convex regularizer psi over a feasible set.

    ``strong_convexity_mu_psi`` is the modulus of psi.  The closed-form
    conjugate-gradient map (``grad_psi_star``) is available only when psi is
    the quadratic (scale/2)*||x - center||^2; other psi remain representable
    through the callables but are rejected by the closed-form map.
    """

    strong_convexity_mu_psi: float
    psi: Callable[[np.ndarray], float]
    grad_psi: Callable[[np.ndarray], np.ndarray]
    feasible_set: FeasibleSet
    quadratic_scale: float | None = None
    center: np.ndarray | None = None

    @staticmethod
    def quadratic(scale: float, feasible_set: FeasibleSet,
                  center: np.ndarray | None = None) -> "Regularizer":
        """psi(x) = (scale/2)*||x - center||^2 (center defaults to the origin)."""
        if scale <= 0:
            raise ValueError("quadratic regularizer scale must be positive")
        if center is None:
            psi = lambda x: 0.5 * scale * float(x @ x)
            grad = lambda x: scale * x
        else:
            c = np.asarray(center, dtype=float)
            psi = lambda x: 0.5 * scale * float((x - c) @ (x - c))
            grad = lambda x: scale * (x - c)
        return Regularizer(scale, psi, grad, feasible_set,
                           quadratic_scale=scale, center=center)


def grad_psi_star(reg: Regularizer, z) -> np.ndarray:
    """argmax over the feasible set of <z, x> - psi(x).

    For psi = (c/2)*||x - x0||^2 this is the Euclidean projection of
    x0 + z/c onto the set; other regularizers are rejected loudly.
    """
    z = np.asarray(z, dtype=float)
    if reg.quadratic_scale is None:
        raise UnsupportedCombinationError(
            "closed-form conjugate gradient is implemented for quadratic "
            "regularizers only")
    point = z / reg.quadratic_scale
    if reg.center is not None:
        point = point + reg.center
    return project(reg.feasible_set, point)


# ---------------------------------------------------------------------------
# Strongly convex aggregate minimizer
# ---------------------------------------------------------------------------

def argmin_m_k(sum_grad: np.ndarray, sum_x: np.ndarray, A_k: float,
               mu: float, mu0: float, x0: np.ndarray,
               fs: FeasibleSet) -> np.ndarray:
    """Minimizer over the feasible set of the strongly convex aggregate

        sum_i a_i*(<g_i, u - x_i> + (mu/2)*||u - x_i||^2) + (mu0/2)*||u - x0||^2

    given the accumulated sums sum_grad = sum a_i*g_i, sum_x = sum a_i*x_i and
    A_k = sum a_i.  The aggregate's Hessian is (mu*A_k + mu0)*I, so the
    constrained minimizer is the projection of the unconstrained one.
    """
    denom = mu * A_k + mu0
    if denom <= 0:
        raise ValueError(f"aggregate curvature must be positive, got {denom}")
    u = (mu * sum_x - sum_grad + mu0 * x0) / denom
    return project(fs, u)
