"""Shared domain types: feasible sets, problems, step-weight schedules, run records.

Conventions used throughout the package: points are 1-D float64 numpy arrays,
the norm is the Euclidean norm, and a problem's objective is L-smooth with an
optional strong-convexity constant mu >= 0 (mu = 0 means merely convex).
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np


class ConfigurationError(ValueError):
    """Raised for invalid algorithm/oracle/schedule combinations."""


class UnsupportedCombinationError(ValueError):
    """Raised when a (regularizer, feasible set) pair has no closed-form map."""


class ReferenceSolveError(RuntimeError):
    """Raised when a reference optimum cannot be certified to tolerance."""


# ---------------------------------------------------------------------------
# Feasible sets
# ---------------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class FeasibleSet:
    """A closed convex feasible set of one of the built-in kinds.

    kind is one of "all_space", "simplex", "l1_ball", "box".  For bounded
    kinds ``diameter`` holds the exact Euclidean diameter (simplex: sqrt(2),
    l1 ball of radius r: 2r, box: ||upper - lower||).
    """

    kind: str
    radius: float | None = None
    lower: np.ndarray | None = None
    upper: np.ndarray | None = None
    diameter: float | None = None

    @staticmethod
    def all_space() -> "FeasibleSet":
        return FeasibleSet("all_space")

    @staticmethod
    def simplex() -> "FeasibleSet":
        return FeasibleSet("simplex", diameter=math.sqrt(2.0))

    @staticmethod
    def l1_ball(radius: float) -> "FeasibleSet":
        if radius <= 0:
            raise ValueError(f"l1 ball radius must be positive, got {radius}")
        return FeasibleSet("l1_ball", radius=float(radius), diameter=2.0 * float(radius))

    @staticmethod
    def box(lower, upper) -> "FeasibleSet":
        lower = np.asarray(lower, dtype=float)
        upper = np.asarray(upper, dtype=float)
        if lower.shape != upper.shape:
            raise ValueError("box bounds must have matching shapes")
        if np.any(lower > upper):
            raise ValueError("box lower bound exceeds upper bound")
        return FeasibleSet("box", lower=lower, upper=upper,
                           diameter=float(np.linalg.norm(upper - lower)))

    @property
    def bounded(self) -> bool:
        return self.kind != "all_space"


# ---------------------------------------------------------------------------
# Problems
# ---------------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class QuadraticForm:
    """Dense data for f(x) = (1/2) x'Ax - b'x + c, used by the reference solver."""

    matrix: np.ndarray
    linear: np.ndarray
    constant: float = 0.0

    def value(self, x: np.ndarray) -> float:
        return float(0.5 * x @ (self.matrix @ x) - self.linear @ x + self.constant)

    def grad(self, x: np.ndarray) -> np.ndarray:
        return self.matrix @ x - self.linear


@dataclass(frozen=True, eq=False)
class Problem:
    """An L-smooth convex objective over a feasible set.

    ``objective`` and ``gradient`` map a point to a float / vector.  The
    constants are inputs, never estimated: ``smoothness_L`` is a Lipschitz
    constant of the gradient and ``strong_convexity_mu`` (possibly 0) a
    strong-convexity modulus.  ``quadratic`` and ``hessian`` are optional
    payloads for the built-in families, consumed by ``reference_optimum``.
    """

    dim: int
    objective: Callable[[np.ndarray], float]
    gradient: Callable[[np.ndarray], np.ndarray]
    smoothness_L: float
    strong_convexity_mu: float
    feasible_set: FeasibleSet
    name: str = "custom"
    quadratic: QuadraticForm | None = None
    hessian: Callable[[np.ndarray], np.ndarray] | None = None

    def __post_init__(self):
        if self.dim < 1:
            raise ValueError("problem dimension must be positive")
        if self.smoothness_L <= 0:
            raise ValueError("smoothness constant must be positive")
        if self.strong_convexity_mu < 0:
            raise ValueError("strong-convexity constant must be nonnegative")


# ---------------------------------------------------------------------------
# Step-weight schedules
# ---------------------------------------------------------------------------

class Schedule:
    """Step-weight sequence a_k (k = 1, 2, ...) with running sum A_k, A_0 = 0.

    Kinds:
      accelerated(gamma)            a_k = gamma*(k+1)/2, so A_k = gamma*k*(k+3)/4
      uniform(gamma)                a_k = gamma
      inv_sqrt(gamma)               a_k = gamma/sqrt(k)
      theoretically_optimal(gamma)  same form as accelerated, gamma precomputed
                                    from the oracle noise bound for a fixed
                                    horizon (see methods.make_schedule)
      sc_geometric(ratio)           a_1 = 1, then a_k/A_k = ratio exactly
      poly(p)                       a_k = k**p, integer p >= 1
      matched(gamma)                a_k solving a_k^2 = gamma*A_k exactly

    The first four kinds satisfy a_k^2/A_k <= gamma for all k; matched turns
    that inequality into an equality.
    """

    KINDS = ("accelerated", "uniform", "inv_sqrt", "theoretically_optimal",
             "sc_geometric", "poly", "matched")

    def __init__(self, kind: str, *, gamma: float | None = None,
                 ratio: float | None = None, p: int | None = None,
                 horizon: int | None = None):
        if kind not in self.KINDS:
            raise ConfigurationError(f"unknown schedule kind {kind!r}")
        if kind in ("accelerated", "uniform", "inv_sqrt", "theoretically_optimal", "matched"):
            if gamma is None or gamma <= 0:
                raise ConfigurationError(f"schedule kind {kind!r} needs gamma > 0")
        if kind == "sc_geometric":
            if ratio is None or not 0 < ratio < 1:
                raise ConfigurationError("sc_geometric needs a ratio in (0, 1)")
        if kind == "poly":
            if p is None or int(p) != p or p < 1:
                raise ConfigurationError("poly needs a positive integer exponent")
            p = int(p)
        if kind == "theoretically_optimal" and horizon is None:
            raise ConfigurationError("theoretically_optimal needs a fixed horizon")
        self.kind = kind
        self.gamma = gamma
        self.ratio = ratio
        self.p = p
        self.horizon = horizon
        self._a = [0.0]  # index 0 unused; weights are 1-indexed
        self._A = [0.0]  # A_0 = 0

    @staticmethod
    def accelerated(gamma: float) -> "Schedule":
        return Schedule("accelerated", gamma=gamma)

    @staticmethod
    def uniform(gamma: float) -> "Schedule":
        return Schedule("uniform", gamma=gamma)

    @staticmethod
    def inv_sqrt(gamma: float) -> "Schedule":
        return Schedule("inv_sqrt", gamma=gamma)

    @staticmethod
    def sc_geometric(ratio: float) -> "Schedule":
        return Schedule("sc_geometric", ratio=ratio)

    @staticmethod
    def poly(p: int) -> "Schedule":
        return Schedule("poly", p=p)

    @staticmethod
    def matched(gamma: float) -> "Schedule":
        return Schedule("matched", gamma=gamma)

    def _next_weight(self, k: int) -> float:
        if self.kind in ("accelerated", "theoretically_optimal"):
            return self.gamma * (k + 1) / 2.0
        if self.kind == "uniform":
            return self.gamma
        if self.kind == "inv_sqrt":
            return self.gamma / math.sqrt(k)
        if self.kind == "poly":
            return float(k) ** self.p
        if self.kind == "sc_geometric":
            if k == 1:
                return 1.0
            return self.ratio * self._A[k - 1] / (1.0 - self.ratio)
        if self.kind == "matched":
            if k == 1:
                return self.gamma
            g = self.gamma
            return 0.5 * (g + math.sqrt(g * g + 4.0 * g * self._A[k - 1]))
        raise AssertionError(self.kind)

    def _extend(self, k: int) -> None:
        if self.kind == "theoretically_optimal" and k > self.horizon:
            raise ConfigurationError(
                f"theoretically_optimal schedule queried past its horizon "
                f"({k} > {self.horizon})")
        while len(self._a) <= k:
            i = len(self._a)
            a = self._next_weight(i)
            if not a > 0:
                raise ConfigurationError(f"schedule emitted nonpositive weight at k={i}")
            self._a.append(a)
            self._A.append(self._A[-1] + a)

    def a(self, k: int) -> float:
        if k < 1:
            raise ValueError("weights are indexed from 1")
        self._extend(k)
        return self._a[k]

    def A(self, k: int) -> float:
        if k < 0:
            raise ValueError("negative index")
        if k == 0:
            return 0.0
        self._extend(k)
        return self._A[k]

    def weights(self, n: int) -> tuple[np.ndarray, np.ndarray]:
        """Return (a_1..a_n, A_1..A_n) as arrays."""
        self._extend(n)
        return np.array(self._a[1:n + 1]), np.array(self._A[1:n + 1])


# ---------------------------------------------------------------------------
# Run configuration and per-run trace
# ---------------------------------------------------------------------------

ALGORITHMS = ("gd", "agd", "axgd", "agdp", "to_agdp", "magdp")
RESTART_MODES = ("none", "rsd", "rsd2_chain")


@dataclass
class RunConfig:
    """Everything needed to reproduce one seeded run."""

    problem: str
    algorithm: str
    iterations: int
    seed: int
    problem_params: dict = field(default_factory=dict)
    schedule: str = "accelerated"
    schedule_params: dict = field(default_factory=dict)
    noise: str = "exact"
    noise_params: dict = field(default_factory=dict)
    restart: str = "none"
    thin: str = "none"
    out: str | None = None

    def validate(self) -> None:
        if self.algorithm not in ALGORITHMS:
            raise ConfigurationError(f"unknown algorithm {self.algorithm!r}")
        if self.restart not in RESTART_MODES:
            raise ConfigurationError(f"unknown restart policy {self.restart!r}")
        if self.iterations < 1:
            raise ConfigurationError("iterations must be positive")
        if self.seed < 0 or self.seed > 2**64 - 1:
            raise ConfigurationError("seed must fit in an unsigned 64-bit integer")
        if self.algorithm in ("gd", "magdp") and self.restart != "none":
            raise ConfigurationError(
                f"restart policies need the dual state; not available for {self.algorithm}")
        if self.algorithm == "to_agdp" and self.schedule not in ("theoretically_optimal", "accelerated"):
            raise ConfigurationError("to_agdp runs on the theoretically_optimal schedule")
        if self.thin not in ("none", "log"):
            raise ConfigurationError(f"unknown thinning mode {self.thin!r}")

    def to_dict(self) -> dict:
        return {
            "problem": self.problem, "problem_params": dict(self.problem_params),
            "algorithm": self.algorithm, "schedule": self.schedule,
            "schedule_params": dict(self.schedule_params), "noise": self.noise,
            "noise_params": dict(self.noise_params), "iterations": self.iterations,
            "seed": self.seed, "restart": self.restart, "thin": self.thin,
        }

    @staticmethod
    def from_dict(d: dict) -> "RunConfig":
        return RunConfig(
            problem=d["problem"], problem_params=dict(d.get("problem_params", {})),
            algorithm=d["algorithm"], schedule=d.get("schedule", "accelerated"),
            schedule_params=dict(d.get("schedule_params", {})),
            noise=d.get("noise", "exact"), noise_params=dict(d.get("noise_params", {})),
            iterations=int(d["iterations"]), seed=int(d["seed"]),
            restart=d.get("restart", "none"), thin=d.get("thin", "none"),
        )


@dataclass
class RunRecord:
    """Per-iteration trace of one seeded run.

    Columns: iteration index k, objective gap f(y_k) - f*, dual-state energy
    ||z_k||^2 (0 for methods without a dual state), and a restart flag.
    Metadata holds the config echo, the reference value f*, and wall time.
    """

    k: np.ndarray
    gap: np.ndarray
    z_energy: np.ndarray
    restart: np.ndarray
    metadata: dict = field(default_factory=dict)

    GAP_FLOOR = -1e-9  # gaps may dip below 0 only by the reference tolerance

    def check(self) -> None:
        n = len(self.k)
        if not (len(self.gap) == len(self.z_energy) == len(self.restart) == n):
            raise ValueError("trace columns have inconsistent lengths")
        if n and not np.all(np.isfinite(self.gap)):
            raise RuntimeError("non-finite objective gap in trace")
        if n and self.gap.min() < self.GAP_FLOOR:
            raise RuntimeError(
                f"objective gap {self.gap.min():.3e} below the reference tolerance")


# ---------------------------------------------------------------------------
# Bregman divergence
# ---------------------------------------------------------------------------

def bregman_divergence(psi, x, y) -> float:
    """D(x, y) = psi(x) - psi(y) - <grad psi(y), x - y>.

    ``psi`` is any regularizer object exposing ``psi`` and ``grad_psi``
    callables.  For a mu-strongly convex psi the result is at least
    (mu/2)*||x - y||^2, in particular nonnegative.
    """
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if x.shape != y.shape:
        raise ValueError(f"dimension mismatch: {x.shape} vs {y.shape}")
    return float(psi.psi(x) - psi.psi(y) - psi.grad_psi(y) @ (x - y))


# ---------------------------------------------------------------------------
# Reference optimum
# ---------------------------------------------------------------------------

def _projected_gradient_norm(problem: Problem, x: np.ndarray) -> float:
    # ||L * (x - P(x - grad/L))||: zero exactly at constrained stationary points
    from .geometry import project
    L = problem.smoothness_L
    g = problem.gradient(x)
    step = project(problem.feasible_set, x - g / L)
    return float(L * np.linalg.norm(x - step))


def _monotone_accelerated_solve(problem: Problem, x0: np.ndarray,
                                stat_tol: float, max_iters: int,
                                check_every: int = 50) -> np.ndarray:
    """Projected accelerated descent with a monotone safeguard on f."""
    from .geometry import project
    f, grad, L = problem.objective, problem.gradient, problem.smoothness_L
    fs = problem.feasible_set
    x = x0.copy()
    y = x0.copy()
    t = 1.0
    fx = f(x)
    for it in range(max_iters):
        z = project(fs, y - grad(y) / L)
        fz = f(z)
        t_next = 0.5 * (1.0 + math.sqrt(1.0 + 4.0 * t * t))
        if fz <= fx:
            x_next, fx = z, fz
        else:  # keep the best point; restart momentum at it
            x_next = x
            y = x
            t_next = 1.0
        y = x_next + ((t - 1.0) / t_next) * (x_next - x)
        x = x_next
        t = t_next
        if it % check_every == 0 and _projected_gradient_norm(problem, x) <= stat_tol:
            break
    return x


def _polish_simplex(quad: QuadraticForm, x: np.ndarray, active_tol: float = 1e-7):
    support = np.flatnonzero(x > active_tol)
    if support.size == 0:
        return None
    A, b = quad.matrix, quad.linear
    m = support.size
    kkt = np.zeros((m + 1, m + 1))
    kkt[:m, :m] = A[np.ix_(support, support)]
    kkt[:m, m] = 1.0
    kkt[m, :m] = 1.0
    rhs = np.concatenate([b[support], [1.0]])
    try:
        sol = np.linalg.solve(kkt, rhs)
    except np.linalg.LinAlgError:
        sol, *_ = np.linalg.lstsq(kkt, rhs, rcond=None)
    xs, nu = sol[:m], sol[m]
    if np.any(xs < -1e-12):
        return None
    out = np.zeros_like(x)
    out[support] = np.maximum(xs, 0.0)
    out /= out.sum()
    # stationarity: grad_i + nu >= 0 off the support, = 0 on it
    g = quad.grad(out)
    scale = 1.0 + float(np.max(np.abs(g)))
    if np.max(np.abs(g[support] + nu)) > 1e-8 * scale:
        return None
    off = np.setdiff1d(np.arange(x.size), support)
    if off.size and np.min(g[off] + nu) < -1e-8 * scale:
        return None
    return out


def _polish_l1_ball(quad: QuadraticForm, radius: float, x: np.ndarray,
                    active_tol: float = 1e-7):
    A, b = quad.matrix, quad.linear
    if np.abs(x).sum() < radius * (1.0 - 1e-9):
        # interior solution: unconstrained stationarity on the full space
        sol, *_ = np.linalg.lstsq(A, b, rcond=None)
        if np.abs(sol).sum() <= radius * (1.0 + 1e-12):
            return sol
        return None
    support = np.flatnonzero(np.abs(x) > active_tol)
    if support.size == 0:
        return None
    s = np.sign(x[support])
    m = support.size
    kkt = np.zeros((m + 1, m + 1))
    kkt[:m, :m] = A[np.ix_(support, support)]
    kkt[:m, m] = s
    kkt[m, :m] = s
    rhs = np.concatenate([b[support], [radius]])
    try:
        sol = np.linalg.solve(kkt, rhs)
    except np.linalg.LinAlgError:
        return None
    xs, nu = sol[:m], sol[m]
    if nu < -1e-12 or np.any(np.sign(xs) * s < 0):
        return None
    out = np.zeros_like(x)
    out[support] = xs
    g = quad.grad(out)
    scale = 1.0 + float(np.max(np.abs(g)))
    if np.max(np.abs(g[support] + nu * s)) > 1e-8 * scale:
        return None
    off = np.setdiff1d(np.arange(x.size), support)
    if off.size and np.max(np.abs(g[off])) > nu + 1e-8 * scale:
        return None
    return out


def _polish_box(quad: QuadraticForm, fs: FeasibleSet, x: np.ndarray,
                active_tol: float = 1e-7):
    A, b = quad.matrix, quad.linear
    lo, hi = fs.lower, fs.upper
    at_lo = x <= lo + active_tol
    at_hi = x >= hi - active_tol
    free = ~(at_lo | at_hi)
    out = np.where(at_lo, lo, np.where(at_hi, hi, x)).astype(float)
    idx = np.flatnonzero(free)
    if idx.size:
        rhs = b[idx] - A[np.ix_(idx, np.flatnonzero(~free))] @ out[~free]
        try:
            out[idx] = np.linalg.solve(A[np.ix_(idx, idx)], rhs)
        except np.linalg.LinAlgError:
            return None
    if np.any(out < lo - 1e-12) or np.any(out > hi + 1e-12):
        return None
    out = np.clip(out, lo, hi)
    g = quad.grad(out)
    scale = 1.0 + float(np.max(np.abs(g)))
    if idx.size and np.max(np.abs(g[idx])) > 1e-8 * scale:
        return None
    if np.any(g[at_lo & ~at_hi] < -1e-8 * scale) or np.any(g[at_hi & ~at_lo] > 1e-8 * scale):
        return None
    return out


def _newton_solve(problem: Problem, stat_tol: float, max_iters: int = 200) -> np.ndarray:
    f, grad, hess = problem.objective, problem.gradient, problem.hessian
    x = np.zeros(problem.dim)
    fx = f(x)
    for _ in range(max_iters):
        g = grad(x)
        if np.linalg.norm(g) <= stat_tol:
            return x
        H = hess(x)
        try:
            step = np.linalg.solve(H + 1e-12 * np.eye(problem.dim), g)
        except np.linalg.LinAlgError:
            step = g / problem.smoothness_L
        t = 1.0
        while t > 1e-12:
            x_new = x - t * step
            f_new = f(x_new)
            if f_new <= fx - 1e-4 * t * float(g @ step):
                x, fx = x_new, f_new
                break
            t *= 0.5
        else:
            raise ReferenceSolveError("Newton line search stalled")
    if np.linalg.norm(grad(x)) <= stat_tol:
        return x
    raise ReferenceSolveError(
        f"Newton did not reach gradient norm {stat_tol:.1e} in {max_iters} iterations")


def reference_optimum(problem: Problem, *, stat_tol: float = 1e-9,
                      max_iters: int = 200_000) -> tuple[np.ndarray, float]:
    """Return (x*, f*) for a built-in problem family.

    Unconstrained quadratics are solved exactly by linear least squares.
    Constrained quadratics run a monotone accelerated solve followed by an
    active-set polish whose KKT conditions are verified explicitly.  Smooth
    non-quadratic unconstrained problems (logistic) use damped Newton with a
    verified gradient norm.  Failure to certify raises ReferenceSolveError —
    an approximate f* is never returned silently.
    """
    from .geometry import project

    quad = problem.quadratic
    fs = problem.feasible_set
    if quad is not None and fs.kind == "all_space":
        x, *_ = np.linalg.lstsq(quad.matrix, quad.linear, rcond=None)
        resid = np.linalg.norm(quad.matrix @ x - quad.linear)
        if resid > 1e-8 * (1.0 + np.linalg.norm(quad.linear)):
            raise ReferenceSolveError(
                f"quadratic has no finite minimizer (residual {resid:.3e})")
        return x, quad.value(x)

    if quad is not None:
        from .geometry import canonical_point
        x = canonical_point(fs, problem.dim)
        # iterate in stages: the exact KKT polish usually certifies long
        # before first-order stationarity alone would reach tolerance
        for iters, tol in ((2000, 1e-6), (20_000, 1e-8), (max_iters, 1e-10)):
            x = _monotone_accelerated_solve(problem, x, stat_tol=tol,
                                            max_iters=iters)
            polish = {"simplex": lambda: _polish_simplex(quad, x),
                      "l1_ball": lambda: _polish_l1_ball(quad, fs.radius, x),
                      "box": lambda: _polish_box(quad, fs, x)}[fs.kind]()
            if polish is not None and problem.objective(polish) <= problem.objective(x) + 1e-12:
                return polish, problem.objective(polish)
        if _projected_gradient_norm(problem, x) <= stat_tol:
            return x, problem.objective(x)
        raise ReferenceSolveError(
            "constrained quadratic solve did not certify stationarity")

    if problem.hessian is not None and fs.kind == "all_space":
        x = _newton_solve(problem, stat_tol)
        return x, problem.objective(x)

    raise ValueError(
        f"reference solve supports built-in families only, got {problem.name!r}")
