"""Built-in problem families: the cycle-Laplacian quadratic (unconstrained or
over the simplex), l1-constrained least squares, logistic regression, a
synthetic strongly convex quadratic, plus CSV loading and synthetic data.
"""
from __future__ import annotations

import csv
from dataclasses import dataclass, replace

import numpy as np

from .core import FeasibleSet, Problem, QuadraticForm


# ---------------------------------------------------------------------------
# Largest eigenvalue by power iteration
# ---------------------------------------------------------------------------

def power_iteration_lmax(matvec, dim: int, *, rel_tol: float = 1e-12,
                         max_iters: int = 200_000, seed: int = 0) -> float:
    """Largest eigenvalue of a symmetric PSD operator given as a matvec.

    Runs with a fixed-seed random start and stops once the Rayleigh quotient
    stabilizes to rel_tol over a few consecutive iterations.
    """
    rng = np.random.Generator(np.random.Philox(key=np.uint64(seed)))
    v = rng.standard_normal(dim)
    v /= np.linalg.norm(v)
    lam = 0.0
    stable = 0
    for _ in range(max_iters):
        w = matvec(v)
        norm = np.linalg.norm(w)
        if norm == 0.0:  # operator is zero on the current iterate
            return 0.0
        v = w / norm
        lam_new = float(v @ matvec(v))
        if abs(lam_new - lam) <= rel_tol * max(abs(lam_new), 1e-300):
            stable += 1
            if stable >= 5:
                return lam_new
        else:
            stable = 0
        lam = lam_new
    return lam


# ---------------------------------------------------------------------------
# Cycle-Laplacian quadratic
# ---------------------------------------------------------------------------

def cycle_laplacian_matvec(x: np.ndarray) -> np.ndarray:
    """y_i = 2 x_i - x_{i-1} - x_{i+1} with cyclic indexing, in O(n)."""
    return 2.0 * x - np.roll(x, 1) - np.roll(x, -1)


def cycle_laplacian_dense(n: int) -> np.ndarray:
    A = 2.0 * np.eye(n)
    idx = np.arange(n)
    A[idx, (idx + 1) % n] = -1.0
    A[idx, (idx - 1) % n] = -1.0
    return A


def make_hard_instance(n: int, constraint: str = "all_space") -> Problem:
    """f(x) = (1/2) <Ax, x> - <b, x> with A the cycle-graph Laplacian and
    b = e_1 - e_n; the classical slow instance for smooth first-order methods.

    ``constraint`` is "all_space" or "simplex".
    """
    if n < 3:
        raise ValueError(f"cycle needs at least 3 nodes, got {n}")
    b = np.zeros(n)
    b[0], b[n - 1] = 1.0, -1.0
    lmax = power_iteration_lmax(cycle_laplacian_matvec, n)
    if constraint == "all_space":
        fs = FeasibleSet.all_space()
    elif constraint == "simplex":
        fs = FeasibleSet.simplex()
    else:
        raise ValueError(f"unsupported constraint {constraint!r}")
    objective = lambda x: float(0.5 * x @ cycle_laplacian_matvec(x) - b @ x)
    gradient = lambda x: cycle_laplacian_matvec(x) - b
    return Problem(dim=n, objective=objective, gradient=gradient,
                   smoothness_L=lmax, strong_convexity_mu=0.0, feasible_set=fs,
                   name=f"hard_instance(n={n},{constraint})",
                   quadratic=QuadraticForm(cycle_laplacian_dense(n), b))


def make_sc_quadratic(n: int, mu: float, L: float) -> Problem:
    """Diagonal quadratic f(x) = (1/2) sum_i lambda_i x_i^2 with the spectrum
    spread linearly over [mu, L]; minimizer at the origin with value 0."""
    if not 0 < mu <= L:
        raise ValueError("need 0 < mu <= L")
    lam = np.linspace(mu, L, n)
    objective = lambda x: float(0.5 * np.sum(lam * x * x))
    gradient = lambda x: lam * x
    return Problem(dim=n, objective=objective, gradient=gradient,
                   smoothness_L=float(L), strong_convexity_mu=float(mu),
                   feasible_set=FeasibleSet.all_space(),
                   name=f"sc_quadratic(n={n},mu={mu},L={L})",
                   quadratic=QuadraticForm(np.diag(lam), np.zeros(n)))


# ---------------------------------------------------------------------------
# Regression data
# ---------------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class RegressionData:
    """Design matrix plus labels (continuous, or {0,1} for classification)."""

    design: np.ndarray
    labels: np.ndarray
    standardized: bool = False

    def __post_init__(self):
        if self.design.ndim != 2 or self.labels.ndim != 1:
            raise ValueError("design must be 2-D and labels 1-D")
        if self.design.shape[0] != self.labels.shape[0]:
            raise ValueError("design and labels row counts differ")
        if self.design.shape[0] == 0:
            raise ValueError("empty data")

    def standardize(self) -> "RegressionData":
        """Center each feature column to mean 0 and scale to variance 1."""
        mean = self.design.mean(axis=0)
        std = self.design.std(axis=0)
        zero = np.flatnonzero(std == 0.0)
        if zero.size:
            raise ValueError(f"constant column {zero[0]} has zero variance")
        return replace(self, design=(self.design - mean) / std, standardized=True)


def load_csv(path, label_column: int = -1, positive_class: float | None = None,
             standardize: bool = True) -> RegressionData:
    """Load a numeric CSV (optional header row) into RegressionData.

    ``label_column`` selects the label; the remaining columns are features.
    When ``positive_class`` is given, labels are binarized to {0,1} with that
    raw value mapped to 1.  Malformed rows and non-numeric fields raise with
    the offending row/column named.
    """
    rows: list[list[float]] = []
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        width = None
        for i, row in enumerate(reader):
            if not row:
                continue
            if i == 0:
                try:
                    [float(c) for c in row]
                except ValueError:
                    continue  # header row
            if width is None:
                width = len(row)
            elif len(row) != width:
                raise ValueError(
                    f"row {i}: expected {width} fields, got {len(row)}")
            parsed = []
            for j, cell in enumerate(row):
                try:
                    parsed.append(float(cell))
                except ValueError:
                    raise ValueError(f"row {i}, column {j}: non-numeric field {cell!r}")
            rows.append(parsed)
    if not rows:
        raise ValueError(f"no data rows in {path}")
    table = np.array(rows)
    label_column = label_column % table.shape[1]
    labels = table[:, label_column]
    design = np.delete(table, label_column, axis=1)
    if positive_class is not None:
        labels = (labels == positive_class).astype(float)
    data = RegressionData(design=design, labels=labels)
    return data.standardize() if standardize else data


def synth_data(m: int, d: int, seed: int, noise_level: float = 0.0,
               binary: bool = False) -> RegressionData:
    """Gaussian design with planted weights: labels = D @ w + noise.

    With ``binary`` the noisy response is thresholded at 0 into {0,1}.
    Reproducible for a fixed seed.
    """
    rng = np.random.Generator(np.random.Philox(key=np.uint64(seed)))
    design = rng.standard_normal((m, d))
    w = rng.standard_normal(d)
    response = design @ w + noise_level * rng.standard_normal(m)
    labels = (response > 0).astype(float) if binary else response
    return RegressionData(design=design, labels=labels)


# ---------------------------------------------------------------------------
# Regression objectives
# ---------------------------------------------------------------------------

def make_lasso(data: RegressionData, radius: float) -> Problem:
    """Least squares f(x) = (1/2m) ||Dx - y||^2 over the l1 ball.

    The 1/m averaging keeps the smoothness constant O(1) as rows grow.
    """
    if radius <= 0:
        raise ValueError(f"radius must be positive, got {radius}")
    D, y = data.design, data.labels
    m, d = D.shape
    lmax = power_iteration_lmax(lambda v: D.T @ (D @ v), d)
    L = lmax / m
    objective = lambda x: float(0.5 / m * np.sum((D @ x - y) ** 2))
    gradient = lambda x: D.T @ (D @ x - y) / m
    quad = QuadraticForm(D.T @ D / m, D.T @ y / m, constant=float(0.5 / m * y @ y))
    return Problem(dim=d, objective=objective, gradient=gradient,
                   smoothness_L=L, strong_convexity_mu=0.0,
                   feasible_set=FeasibleSet.l1_ball(radius),
                   name=f"lasso(m={m},d={d},r={radius})", quadratic=quad)


def make_logistic(data: RegressionData) -> Problem:
    """Unregularized logistic loss f(x) = (1/m) sum_i log(1 + exp(-s_i <d_i, x>))
    for labels in {0,1} mapped to signs s_i = 2 y_i - 1."""
    D, y = data.design, data.labels
    if not np.all(np.isin(y, (0.0, 1.0))):
        raise ValueError("logistic regression needs binary {0,1} labels")
    s = 2.0 * y - 1.0
    m, d = D.shape
    lmax = power_iteration_lmax(lambda v: D.T @ (D @ v), d)
    L = lmax / (4.0 * m)

    def _sigmoid_neg(t):
        # sigmoid(-t) without overflow for large |t|
        out = np.empty_like(t)
        pos = t >= 0
        e = np.exp(-t[pos])
        out[pos] = e / (1.0 + e)
        out[~pos] = 1.0 / (1.0 + np.exp(t[~pos]))
        return out

    def objective(x):
        t = s * (D @ x)
        return float(np.mean(np.logaddexp(0.0, -t)))

    def gradient(x):
        sig = _sigmoid_neg(s * (D @ x))
        return -(D.T @ (s * sig)) / m

    def hessian(x):
        sig = _sigmoid_neg(s * (D @ x))
        w = sig * (1.0 - sig)
        return (D.T * w) @ D / m

    return Problem(dim=d, objective=objective, gradient=gradient,
                   smoothness_L=L, strong_convexity_mu=0.0,
                   feasible_set=FeasibleSet.all_space(),
                   name=f"logistic(m={m},d={d})", hessian=hessian)
