"""
Gaussian-process regression over the normalized search domain.

Kernel: squared exponential with one length-scale per dimension group
(a categorical parameter's one-hot coordinates share a group), signal
variance and Gaussian observation noise. Hyperparameters are fitted by
maximizing the log marginal likelihood with L-BFGS-B on its analytic gradient,
in log space, from several starts.
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass

import numpy as np
from scipy.linalg import LinAlgError, cho_solve, cholesky, solve_triangular
from scipy.optimize import minimize
from scipy.spatial.distance import cdist

from knob_tuner.config.config import Config
from knob_tuner.common.exceptions import IllConditionedKernelError, InsufficientSamplesError

logger = logging.getLogger(__name__)

LENGTH_SCALE_BOUNDS = (1e-3, 1e3)
SIGNAL_VARIANCE_BOUNDS = (1e-3, 1e3)
NOISE_VARIANCE_BOUNDS = (1e-8, 1.0)
INITIAL_JITTER = 1e-8
MAX_JITTER = 1e-2
_FAILED_OBJECTIVE = 1e25


@dataclass(frozen=True)
class Hyperparameters:
    length_scales: tuple
    signal_variance: float
    noise_variance: float

    def theta(self, fixed_noise=False):
        values = [math.log(v) for v in self.length_scales] + [math.log(self.signal_variance)]
        if not fixed_noise:
            values.append(math.log(self.noise_variance))
        return np.asarray(values)

    @classmethod
    def from_theta(cls, theta, n_groups, noise_variance=None):
        theta = np.asarray(theta, dtype=float)
        scales = tuple(float(v) for v in np.exp(theta[:n_groups]))
        signal = float(np.exp(theta[n_groups]))
        noise = float(np.exp(theta[n_groups + 1])) if noise_variance is None else float(noise_variance)
        return cls(scales, signal, noise)


@dataclass(frozen=True)
class GpModel:
    """A fitted posterior; immutable and safe to share."""
    inputs: np.ndarray
    targets: np.ndarray
    hyperparameters: Hyperparameters
    groups: np.ndarray
    chol: np.ndarray
    alpha: np.ndarray
    jitter: float
    log_likelihood: float

    @property
    def dimension(self):
        return self.inputs.shape[1]

    def kernel_matrix(self, noise=True):
        """K (+ sigma_n^2 I when ``noise``) at the training inputs, without jitter."""
        signal = _signal_kernel(self.inputs, self.inputs, self.hyperparameters, self.groups)
        if noise:
            signal = signal + self.hyperparameters.noise_variance * np.eye(len(self.inputs))
        return signal


def kernel(a, b, hyperparameters, groups=None):
    """Squared-exponential cross-covariance between the rows of ``a`` and ``b``."""
    a = np.atleast_2d(np.asarray(a, dtype=float))
    b = np.atleast_2d(np.asarray(b, dtype=float))
    groups = _default_groups(a.shape[1]) if groups is None else np.asarray(groups)
    return _signal_kernel(a, b, hyperparameters, groups)


def _default_groups(dimension):
    return np.arange(dimension)


def _signal_kernel(a, b, hyperparameters, groups):
    scales = np.asarray(hyperparameters.length_scales)[groups]
    distance = cdist(a / scales, b / scales, "sqeuclidean")
    return hyperparameters.signal_variance * np.exp(-0.5 * distance)


def _factorize(matrix):
    jitter = INITIAL_JITTER
    identity = np.eye(matrix.shape[0])
    while jitter <= MAX_JITTER * (1 + 1e-9):
        try:
            return cholesky(matrix + jitter * identity, lower=True), jitter
        except LinAlgError:
            logger.debug(f"Cholesky failed at jitter {jitter:g}")
            jitter *= 10
    raise IllConditionedKernelError(f"ill-conditioned kernel: Cholesky failed at jitter {MAX_JITTER:g}")


def log_marginal_likelihood(theta, inputs, targets, groups=None, noise_variance=None, gradient=False):
    """
    Log marginal likelihood of zero-mean GP data under log-hyperparameters ``theta``.

    ``theta`` is (log l_g for each group, log sigma_f^2[, log sigma_n^2]); the
    noise entry is omitted when ``noise_variance`` is fixed.

    Returns:
        float, or (float, numpy.ndarray) when ``gradient`` is true.
    """
    inputs = np.asarray(inputs, dtype=float)
    targets = np.asarray(targets, dtype=float)
    groups = _default_groups(inputs.shape[1]) if groups is None else np.asarray(groups)
    n_groups = int(groups.max()) + 1 if groups.size else 0
    hyper = Hyperparameters.from_theta(theta, n_groups, noise_variance)

    signal = _signal_kernel(inputs, inputs, hyper, groups)
    n = len(targets)
    chol, _ = _factorize(signal + hyper.noise_variance * np.eye(n))
    alpha = cho_solve((chol, True), targets)
    value = -0.5 * targets @ alpha - np.sum(np.log(np.diag(chol))) - 0.5 * n * math.log(2 * math.pi)
    if not gradient:
        return float(value)

    weights = np.outer(alpha, alpha) - cho_solve((chol, True), np.eye(n))
    grads = []
    for g in range(n_groups):
        dims = np.flatnonzero(groups == g)
        distance = cdist(inputs[:, dims], inputs[:, dims], "sqeuclidean") / hyper.length_scales[g] ** 2
        grads.append(0.5 * np.sum(weights * signal * distance))
    grads.append(0.5 * np.sum(weights * signal))
    if noise_variance is None:
        grads.append(0.5 * hyper.noise_variance * np.trace(weights))
    return float(value), np.asarray(grads)


def _bounds(n_groups, fixed_noise, signal_bounds, noise_bounds):
    bounds = [tuple(math.log(b) for b in LENGTH_SCALE_BOUNDS)] * n_groups
    bounds.append(tuple(math.log(b) for b in signal_bounds))
    if not fixed_noise:
        bounds.append(tuple(math.log(b) for b in noise_bounds))
    return bounds


def _default_hyperparameters(targets, n_groups, signal_bounds, noise_bounds):
    signal = float(np.clip(np.var(targets) if len(targets) > 1 else 1.0, *signal_bounds))
    return Hyperparameters((0.5,) * n_groups, signal, float(np.clip(1e-2 * signal, *noise_bounds)))


def _random_theta(rng, n_groups, fixed_noise):
    theta = list(rng.uniform(math.log(0.05), math.log(5.0), size=n_groups))
    theta.append(rng.uniform(math.log(0.1), math.log(10.0)))
    if not fixed_noise:
        theta.append(rng.uniform(math.log(1e-6), math.log(0.5)))
    return np.asarray(theta)


def posterior(inputs, targets, hyperparameters, groups=None):
    """Condition a GP with given hyperparameters on data."""
    inputs = np.atleast_2d(np.asarray(inputs, dtype=float))
    targets = np.asarray(targets, dtype=float)
    groups = _default_groups(inputs.shape[1]) if groups is None else np.asarray(groups)
    matrix = _signal_kernel(inputs, inputs, hyperparameters, groups)
    matrix = matrix + hyperparameters.noise_variance * np.eye(len(targets))
    chol, jitter = _factorize(matrix)
    alpha = cho_solve((chol, True), targets)
    value = -0.5 * targets @ alpha - np.sum(np.log(np.diag(chol))) - 0.5 * len(targets) * math.log(2 * math.pi)
    return GpModel(inputs, targets, hyperparameters, groups, chol, alpha, jitter, float(value))


def fit(points, restarts=None, seed=0, hyperparameters=None, noise_variance=None, groups=None,
        initial=None, max_iterations=None, signal_variance_bounds=None,
        noise_variance_bounds=None):
    """
    Fit a GP to ``points``.

    Args:
        points (Sequence[tuple]): (normalized input vector, target) pairs; targets
            are used as given.
        restarts (int): number of hyperparameter starts, default GP_RESTARTS. The
            first start is ``initial`` (or a data-driven default), later ones are
            drawn from ``seed``.
        seed (int): seed for the random starts.
        hyperparameters (Hyperparameters): skip the search and use these.
        noise_variance (float): fix sigma_n^2 instead of fitting it.
        groups (Sequence[int]): group index of each input dimension.
        initial (Hyperparameters): warm start for the first search.
        max_iterations (int): L-BFGS-B iterations per start, default GP_MAX_ITERATIONS.
        signal_variance_bounds (tuple): search range of sigma_f^2, default
            SIGNAL_VARIANCE_BOUNDS. Callers that standardize their targets pass a
            tighter range.
        noise_variance_bounds (tuple): search range of sigma_n^2, default
            NOISE_VARIANCE_BOUNDS.

    Returns:
        GpModel: the posterior under the best-likelihood hyperparameters.

    Raises:
        InsufficientSamplesError: fewer than two points.
        IllConditionedKernelError: no start produced a factorizable kernel.
    """
    if len(points) < 2:
        raise InsufficientSamplesError(f"insufficient samples: GP fit needs at least 2 points, got {len(points)}")
    inputs = np.asarray([np.asarray(x, dtype=float) for x, _ in points])
    targets = np.asarray([float(y) for _, y in points])
    groups = _default_groups(inputs.shape[1]) if groups is None else np.asarray(groups)
    n_groups = int(groups.max()) + 1 if groups.size else 0
    if np.any(inputs < 0) or np.any(inputs > 1):
        logger.debug("GP training inputs outside [0, 1]")

    if hyperparameters is not None:
        if noise_variance is not None:
            hyperparameters = Hyperparameters(hyperparameters.length_scales, hyperparameters.signal_variance,
                                              float(noise_variance))
        return posterior(inputs, targets, hyperparameters, groups)

    config = Config.get_instance()
    restarts = config.GP_RESTARTS if restarts is None else max(1, restarts)
    max_iterations = config.GP_MAX_ITERATIONS if max_iterations is None else max_iterations
    fixed_noise = noise_variance is not None
    signal_bounds = SIGNAL_VARIANCE_BOUNDS if signal_variance_bounds is None else signal_variance_bounds
    noise_bounds = NOISE_VARIANCE_BOUNDS if noise_variance_bounds is None else noise_variance_bounds
    bounds = _bounds(n_groups, fixed_noise, signal_bounds, noise_bounds)
    lower, upper = np.array([b[0] for b in bounds]), np.array([b[1] for b in bounds])

    def objective(theta):
        try:
            value, grad = log_marginal_likelihood(theta, inputs, targets, groups, noise_variance, gradient=True)
        except IllConditionedKernelError:
            return _FAILED_OBJECTIVE, np.zeros_like(theta)
        return -value, -grad

    first = initial or _default_hyperparameters(targets, n_groups, signal_bounds, noise_bounds)
    if len(first.length_scales) != n_groups:
        first = _default_hyperparameters(targets, n_groups, signal_bounds, noise_bounds)
    rng = np.random.default_rng(seed)
    best_theta, best_value = None, -np.inf
    for start in range(restarts):
        theta0 = first.theta(fixed_noise) if start == 0 else _random_theta(rng, n_groups, fixed_noise)
        theta0 = np.clip(theta0, lower, upper)
        result = minimize(objective, theta0, jac=True, method="L-BFGS-B", bounds=bounds,
                          options={"maxiter": max_iterations})
        value = -float(result.fun)
        logger.debug(f"GP start {start}: log likelihood {value:.4f} ({result.message})")
        if value > best_value and result.fun < _FAILED_OBJECTIVE:
            best_theta, best_value = result.x, value

    if best_theta is None:
        raise IllConditionedKernelError("ill-conditioned kernel at every hyperparameter start")
    best = Hyperparameters.from_theta(best_theta, n_groups, noise_variance)
    return posterior(inputs, targets, best, groups)


def predict_many(model, points):
    """Posterior mean and latent variance (clamped at 0) for each row of ``points``."""
    points = np.atleast_2d(np.asarray(points, dtype=float))
    if points.shape[1] != model.dimension:
        raise ValueError(f"dimension mismatch: model has {model.dimension} inputs, got {points.shape[1]}")
    if np.any(points < 0) or np.any(points > 1):
        logger.debug("GP prediction outside the normalized domain (extrapolating)")
    cross = _signal_kernel(points, model.inputs, model.hyperparameters, model.groups)
    means = cross @ model.alpha
    solved = solve_triangular(model.chol, cross.T, lower=True)
    variances = model.hyperparameters.signal_variance - np.sum(solved * solved, axis=0)
    return means, np.maximum(variances, 0.0)


def predict(model, x):
    """Posterior (mean, variance) of the latent function at one normalized point."""
    x = np.asarray(x, dtype=float)
    if x.ndim != 1:
        raise ValueError("predict expects a single input vector")
    means, variances = predict_many(model, x[None, :])
    return float(means[0]), float(variances[0])
