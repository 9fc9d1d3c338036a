"""The iterative methods (gd, agd, axgd, agdp, magdp), the schedule factory,
and the restart-and-slow-down controller.

All dual-averaging variants share the same bookkeeping: a dual state z that
accumulates negatively weighted noisy gradients from z_0 = grad_psi(x_0), a
weight sum A_k, and, when a restart policy is active, a running noise-energy
budget sum_i a_i^2 * E[||eta_i||^2] against which ||z_k||^2 is compared.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

from .core import ConfigurationError, Problem, RunRecord, Schedule
from .geometry import Regularizer, argmin_m_k, canonical_point, contains, grad_psi_star, project
from .oracles import GradientOracle

STEP_ALGORITHMS = ("gd", "agd", "axgd", "agdp", "to_agdp", "magdp")


# ---------------------------------------------------------------------------
# States
# ---------------------------------------------------------------------------

@dataclass
class AgdpState:
    """Iterate bundle for the dual-averaging methods (agd, axgd, agdp).

    Within a phase, z always equals grad_psi(x0) - sum_{i<=k} a_i * g_i for
    the noisy gradients g_i seen so far, and A_prev = sum_{i<=k} a_i.
    ``phase`` names the active schedule; restarts reset the phase-local
    index k, re-anchor x0 at the current iterate, and zero the budget.
    """

    y_prev: np.ndarray
    z: np.ndarray
    A_prev: float
    k: int
    phase: str
    noise_energy_budget: float
    x0: np.ndarray
    restarts: int = 0


@dataclass
class MagdpState:
    """Iterate bundle for the strongly convex method.

    sum_grad and sum_x accumulate a_i * g_i and a_i * x_i; mu0 is the
    anchor curvature a_1 * (L - mu) fixed at seeding time.
    """

    y_prev: np.ndarray
    v_prev: np.ndarray
    sum_grad: np.ndarray
    sum_x: np.ndarray
    A_prev: float
    mu0: float
    k: int
    x0: np.ndarray


@dataclass(frozen=True)
class RestartPolicy:
    """Restart mode plus the trigger window.

    The criterion is evaluated only once k >= min_phase_iters inside a
    phase, so a freshly re-anchored z gets at least one gradient before
    being compared against the (reset) noise budget.
    """

    mode: str = "none"
    min_phase_iters: int = 2

    @property
    def max_restarts(self) -> int:
        return {"none": 0, "rsd": 1, "rsd2_chain": 2}[self.mode]


def init_dual_state(x0: np.ndarray, reg: Regularizer, phase: str) -> AgdpState:
    x0 = np.asarray(x0, dtype=float)
    return AgdpState(y_prev=x0.copy(), z=reg.grad_psi(x0), A_prev=0.0, k=0,
                     phase=phase, noise_energy_budget=0.0, x0=x0.copy())


def init_magdp_state(x0: np.ndarray, problem: Problem, schedule: Schedule) -> MagdpState:
    if problem.strong_convexity_mu <= 0:
        raise ConfigurationError(
            "the strongly convex method needs strong_convexity_mu > 0")
    x0 = np.asarray(x0, dtype=float)
    mu0 = schedule.a(1) * (problem.smoothness_L - problem.strong_convexity_mu)
    return MagdpState(y_prev=x0.copy(), v_prev=x0.copy(),
                      sum_grad=np.zeros_like(x0), sum_x=np.zeros_like(x0),
                      A_prev=0.0, mu0=mu0, k=0, x0=x0.copy())


# ---------------------------------------------------------------------------
# Steps
# ---------------------------------------------------------------------------

def gd_step(problem: Problem, oracle: GradientOracle, x: np.ndarray) -> np.ndarray:
    """Projected gradient step with the 1/L step size (one query)."""
    g = oracle.query(x)
    return project(problem.feasible_set, x - g / problem.smoothness_L)


def agd_step(state: AgdpState, oracle: GradientOracle, schedule: Schedule,
             reg: Regularizer) -> AgdpState:
    """Momentum step where y_k is a projected gradient step from x_k.

    The single noisy sample drawn at x_k feeds both the dual update and the
    gradient step (one query per iteration).
    """
    problem = oracle.problem
    k = state.k + 1
    a, A = schedule.a(k), schedule.A(k)
    x = (state.A_prev * state.y_prev + a * grad_psi_star(reg, state.z)) / A
    g = oracle.query(x)
    z = state.z - a * g
    y = project(problem.feasible_set, x - g / problem.smoothness_L)
    budget = state.noise_energy_budget + a * a * oracle.second_moment()
    return replace(state, y_prev=y, z=z, A_prev=A, k=k, noise_energy_budget=budget)


def axgd_step(state: AgdpState, oracle: GradientOracle, schedule: Schedule,
              reg: Regularizer) -> AgdpState:
    """Extra-gradient step: gradients at both x_k and y_k (two queries)."""
    k = state.k + 1
    a, A = schedule.a(k), schedule.A(k)
    base = state.A_prev * state.y_prev
    x = (base + a * grad_psi_star(reg, state.z)) / A
    gx = oracle.query(x)
    y = (base + a * grad_psi_star(reg, state.z - a * gx)) / A
    gy = oracle.query(y)
    z = state.z - a * gy
    budget = state.noise_energy_budget + a * a * oracle.second_moment()
    return replace(state, y_prev=y, z=z, A_prev=A, k=k, noise_energy_budget=budget)


def agdp_step(state: AgdpState, oracle: GradientOracle, schedule: Schedule,
              reg: Regularizer) -> AgdpState:
    """Dual-averaging step: z absorbs the new gradient before y is formed.

    One query per iteration.  At k = 1 (A_prev = 0) the update reduces to
    the seeding rule x_1 = x_0, y_1 = grad_psi_star(z_1).
    """
    k = state.k + 1
    a, A = schedule.a(k), schedule.A(k)
    base = state.A_prev * state.y_prev
    x = (base + a * grad_psi_star(reg, state.z)) / A
    g = oracle.query(x)
    z = state.z - a * g
    y = (base + a * grad_psi_star(reg, z)) / A
    budget = state.noise_energy_budget + a * a * oracle.second_moment()
    return replace(state, y_prev=y, z=z, A_prev=A, k=k, noise_energy_budget=budget)


def magdp_step(state: MagdpState, oracle: GradientOracle, schedule: Schedule,
               problem: Problem) -> MagdpState:
    """Strongly convex step: v_k minimizes the running curvature-aware
    lower-bound aggregate; x_k and y_k are convex combinations."""
    k = state.k + 1
    a, A = schedule.a(k), schedule.A(k)
    theta = a / A
    x = (state.y_prev + theta * state.v_prev) / (1.0 + theta)
    g = oracle.query(x)
    sum_grad = state.sum_grad + a * g
    sum_x = state.sum_x + a * x
    v = argmin_m_k(sum_grad, sum_x, A, problem.strong_convexity_mu,
                   state.mu0, state.x0, problem.feasible_set)
    y = (1.0 - theta) * state.y_prev + theta * v
    return MagdpState(y_prev=y, v_prev=v, sum_grad=sum_grad, sum_x=sum_x,
                      A_prev=A, mu0=state.mu0, k=k, x0=state.x0)


# ---------------------------------------------------------------------------
# Schedule factory
# ---------------------------------------------------------------------------

def make_schedule(kind: str, *, gamma: float | None = None, p: int | None = None,
                  ratio: float | None = None, mu_psi: float | None = None,
                  L: float | None = None, horizon: int | None = None,
                  second_moment: float | None = None) -> Schedule:
    """Build a schedule, resolving the horizon-dependent scaling.

    For ``theoretically_optimal`` the scaling is
    gamma = mu_psi / max(L, sqrt(sum_{i<=K} b_i^2 * E[||eta_i||^2])) with
    b_i = (i+1)/2 over the fixed horizon K; pass second_moment=None when the
    noise magnitude is unknown, which falls back to sqrt(sum b_i^2) in place
    of the noise mass.
    """
    if kind == "theoretically_optimal":
        if horizon is None:
            raise ConfigurationError("theoretically_optimal needs a fixed horizon")
        if mu_psi is None or L is None:
            raise ConfigurationError(
                "theoretically_optimal needs mu_psi and L to set its scaling")
        b = (np.arange(1, horizon + 1) + 1.0) / 2.0
        sum_b2 = float(b @ b)
        if second_moment is None:
            noise_mass = math.sqrt(sum_b2)
        else:
            noise_mass = math.sqrt(sum_b2 * second_moment)
        eff_gamma = mu_psi / max(L, noise_mass)
        return Schedule("theoretically_optimal", gamma=eff_gamma, horizon=horizon)
    if kind == "sc_geometric":
        return Schedule.sc_geometric(ratio)
    if kind == "poly":
        return Schedule.poly(p)
    return Schedule(kind, gamma=gamma)


def noise_energy_proxy(schedule: Schedule, k: int) -> float:
    """sum_{i<=k} (a_i^2 / A_i) / A_k — the schedule-only factor of the
    stochastic error term for the strongly convex method."""
    a, A = schedule.weights(k)
    return float(np.sum(a * a / A) / A[-1])


def devolder_gap_bound(schedule: Schedule, dpsi: float, delta: float,
                       k_max: int) -> np.ndarray:
    """Per-iteration bound dpsi/A_k + (sum_{i<=k} A_i / A_k) * delta for an
    oracle whose smoothness inequality carries an additive slack delta."""
    _, A = schedule.weights(k_max)
    return dpsi / A + np.cumsum(A) / A * delta


# ---------------------------------------------------------------------------
# Restart controller
# ---------------------------------------------------------------------------

def restart_check(state: AgdpState) -> bool:
    """True when the dual signal energy has fallen to the accumulated
    noise-energy budget, i.e. the signal is drowning in noise."""
    return float(state.z @ state.z) <= state.noise_energy_budget


def apply_restart(state: AgdpState, policy: RestartPolicy, reg: Regularizer,
                  slow_gamma: float) -> tuple[AgdpState, Schedule]:
    """Re-anchor at the current iterate and slow the weight sequence.

    First trigger switches to the uniform sequence a_i = slow_gamma, a
    second (rsd2_chain only) to a_i = slow_gamma/sqrt(i).  The returned
    state keeps the current y, so the objective value is continuous across
    the boundary.
    """
    if policy.mode == "none":
        raise ConfigurationError("apply_restart called with restart disabled")
    if state.restarts >= policy.max_restarts:
        raise ConfigurationError("restart policy already exhausted")
    if state.restarts == 0:
        phase, schedule = "uniform", Schedule.uniform(slow_gamma)
    else:
        phase, schedule = "inv_sqrt", Schedule.inv_sqrt(slow_gamma)
    x0 = state.y_prev.copy()
    new_state = AgdpState(y_prev=x0.copy(), z=reg.grad_psi(x0), A_prev=0.0, k=0,
                          phase=phase, noise_energy_budget=0.0, x0=x0,
                          restarts=state.restarts + 1)
    return new_state, schedule


# ---------------------------------------------------------------------------
# Run driver
# ---------------------------------------------------------------------------

_DUAL_STEPS = {"agd": agd_step, "axgd": axgd_step, "agdp": agdp_step,
               "to_agdp": agdp_step}


def run_method(problem: Problem, oracle: GradientOracle, schedule: Schedule, *,
               algorithm: str, iterations: int, fstar: float,
               x0: np.ndarray | None = None,
               regularizer: Regularizer | None = None,
               restart: str | RestartPolicy = "none") -> RunRecord:
    """Run one seeded method for a fixed number of iterations.

    Returns the per-iteration trace (gap against fstar, dual energy, restart
    flags).  The gap is always evaluated with the exact objective, never the
    noisy oracle.  Non-finite objective values abort the run.
    """
    if algorithm not in STEP_ALGORITHMS:
        raise ConfigurationError(f"unknown algorithm {algorithm!r}")
    policy = RestartPolicy(restart) if isinstance(restart, str) else restart
    if policy.mode not in ("none", "rsd", "rsd2_chain"):
        raise ConfigurationError(f"unknown restart policy {policy.mode!r}")
    if algorithm in ("gd", "magdp") and policy.mode != "none":
        raise ConfigurationError(
            f"restart policies need the dual state; not available for {algorithm}")
    if x0 is None:
        x0 = canonical_point(problem.feasible_set, problem.dim)
    x0 = np.asarray(x0, dtype=float)
    if not contains(problem.feasible_set, x0):
        raise ConfigurationError("initial point is infeasible")
    reg = regularizer or Regularizer.quadratic(problem.smoothness_L,
                                               problem.feasible_set)
    slow_gamma = reg.strong_convexity_mu_psi / problem.smoothness_L

    ks = np.arange(1, iterations + 1)
    gaps = np.empty(iterations)
    z_energy = np.zeros(iterations)
    flags = np.zeros(iterations, dtype=bool)

    if algorithm == "gd":
        x = x0.copy()
        for t in range(iterations):
            x = gd_step(problem, oracle, x)
            gaps[t] = problem.objective(x) - fstar
    elif algorithm == "magdp":
        state = init_magdp_state(x0, problem, schedule)
        for t in range(iterations):
            state = magdp_step(state, oracle, schedule, problem)
            gaps[t] = problem.objective(state.y_prev) - fstar
    else:
        step = _DUAL_STEPS[algorithm]
        state = init_dual_state(x0, reg, phase=schedule.kind)
        for t in range(iterations):
            state = step(state, oracle, schedule, reg)
            gaps[t] = problem.objective(state.y_prev) - fstar
            z_energy[t] = float(state.z @ state.z)
            if (policy.max_restarts > state.restarts
                    and state.k >= policy.min_phase_iters
                    and restart_check(state)):
                state, schedule = apply_restart(state, policy, reg, slow_gamma)
                flags[t] = True

    record = RunRecord(k=ks, gap=gaps, z_energy=z_energy, restart=flags,
                       metadata={"algorithm": algorithm, "fstar": fstar})
    record.check()
    return record
