"""Gradient oracles: exact, Gaussian, adversarial bounded, and seeded
stochastic noise models wrapping a problem's gradient.

Each oracle owns a counter-based random stream (Philox) keyed by the run
seed, so runs parallelized across seeds never share state and equal seeds
reproduce bit-identical query sequences.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .core import ConfigurationError, Problem

NOISE_KINDS = ("exact", "gaussian", "adversarial_inner_product",
               "devolder_inexact", "seeded_stochastic")


def _sphere_eta(rng: np.random.Generator, dim: int, rho: float) -> np.ndarray:
    u = rng.standard_normal(dim)
    return rho * u / np.linalg.norm(u)


def _rademacher_eta(rng: np.random.Generator, dim: int, rho: float) -> np.ndarray:
    signs = np.where(rng.random(dim) < 0.5, -1.0, 1.0)
    return (rho / math.sqrt(dim)) * signs


# zero-mean i.i.d. generators with ||eta|| = rho exactly, so the declared
# second moment rho^2 is tight
STOCHASTIC_GENERATORS = {"sphere": _sphere_eta, "rademacher": _rademacher_eta}


def _chi_mean(dim: int, sigma: float) -> float:
    # E||N(0, sigma^2 I_n)|| = sigma * sqrt(2) * Gamma((n+1)/2) / Gamma(n/2)
    return sigma * math.sqrt(2.0) * math.exp(
        math.lgamma((dim + 1) / 2.0) - math.lgamma(dim / 2.0))


@dataclass(frozen=True, eq=False)
class NoiseModel:
    """Declared noise law plus its moment bounds.

    ``second_moment_bound`` is an upper bound on E[||eta||^2] per query
    (exact for the built-in models); ``mean_norm_bound`` bounds E[||eta||]
    when available.
    """

    kind: str
    sigma_eta: float = 0.0
    delta: float = 0.0
    generator: str | None = None
    rho: float = 0.0
    second_moment_bound: float = 0.0
    mean_norm_bound: float | None = None

    @staticmethod
    def exact() -> "NoiseModel":
        return NoiseModel("exact", second_moment_bound=0.0, mean_norm_bound=0.0)

    @staticmethod
    def gaussian(sigma_eta: float, dim: int) -> "NoiseModel":
        if sigma_eta < 0:
            raise ValueError("noise standard deviation must be nonnegative")
        return NoiseModel("gaussian", sigma_eta=float(sigma_eta),
                          second_moment_bound=dim * float(sigma_eta) ** 2,
                          mean_norm_bound=_chi_mean(dim, float(sigma_eta)))

    @staticmethod
    def adversarial_inner_product(delta: float) -> "NoiseModel":
        if delta < 0:
            raise ValueError("delta must be nonnegative")
        # per-query moments are filled in by the oracle, which knows the
        # feasible set's diameter
        return NoiseModel("adversarial_inner_product", delta=float(delta))

    @staticmethod
    def devolder_inexact(delta: float) -> "NoiseModel":
        if delta < 0:
            raise ValueError("delta must be nonnegative")
        # queries pass through the exact gradient; delta enters recorded
        # error bounds only (the model describes near-smooth objectives,
        # not perturbed gradients)
        return NoiseModel("devolder_inexact", delta=float(delta),
                          second_moment_bound=0.0, mean_norm_bound=0.0)

    @staticmethod
    def seeded_stochastic(generator: str, rho: float) -> "NoiseModel":
        if generator not in STOCHASTIC_GENERATORS:
            raise ConfigurationError(
                f"unknown stochastic generator {generator!r}; "
                f"available: {sorted(STOCHASTIC_GENERATORS)}")
        if rho < 0:
            raise ValueError("rho must be nonnegative")
        return NoiseModel("seeded_stochastic", generator=generator, rho=float(rho),
                          second_moment_bound=float(rho) ** 2,
                          mean_norm_bound=float(rho))

    def draw(self, rng: np.random.Generator, dim: int) -> np.ndarray | None:
        """One noise sample, or None for models that leave queries exact."""
        if self.kind == "gaussian":
            if self.sigma_eta == 0.0:
                return None
            return rng.normal(0.0, self.sigma_eta, size=dim)
        if self.kind == "seeded_stochastic":
            if self.rho == 0.0:
                return None
            return STOCHASTIC_GENERATORS[self.generator](rng, dim, self.rho)
        return None


class GradientOracle:
    """A noise-corrupting wrapper around a problem's gradient.

    Instances are single-threaded (mutable stream and counter); build one
    per concurrent run.
    """

    def __init__(self, problem: Problem, noise: NoiseModel, seed: int):
        if noise.kind not in NOISE_KINDS:
            raise ConfigurationError(f"unknown noise kind {noise.kind!r}")
        self.problem = problem
        self.noise = noise
        self.rng = np.random.Generator(np.random.Philox(key=np.uint64(seed)))
        self.query_count = 0
        self._adversarial_eta = None
        self._second_moment = noise.second_moment_bound
        self._mean_norm = noise.mean_norm_bound
        if noise.kind == "adversarial_inner_product":
            fs = problem.feasible_set
            if not fs.bounded:
                raise ConfigurationError(
                    "the bounded adversarial model needs a bounded-diameter "
                    "feasible set")
            # fixed worst-ish direction, scaled so |<eta, y - z>| <= delta
            # for every feasible pair (y, z)
            eta = np.zeros(problem.dim)
            eta[0] = noise.delta / fs.diameter
            self._adversarial_eta = eta
            self._second_moment = float(eta @ eta)
            self._mean_norm = float(np.linalg.norm(eta))

    def query(self, x: np.ndarray) -> np.ndarray:
        """One noisy gradient sample at x; increments the query counter."""
        self.query_count += 1
        g = self.problem.gradient(x)
        if self._adversarial_eta is not None:
            return g + self._adversarial_eta
        eta = self.noise.draw(self.rng, self.problem.dim)
        if eta is None:
            return g
        return g + eta

    def second_moment(self) -> float:
        """Declared bound on E[||eta||^2] per query."""
        return self._second_moment

    def mean_norm(self) -> float | None:
        """Declared bound on E[||eta||] per query, when known."""
        return self._mean_norm

    def stream_position(self) -> tuple:
        """Monotone token locating the stream; queries consume disjoint segments."""
        st = self.rng.bit_generator.state
        counter = st["state"]["counter"]
        pos = sum(int(c) << (64 * i) for i, c in enumerate(counter))
        return (pos, int(st.get("buffer_pos", 0)), int(st.get("has_uint32", 0)))
