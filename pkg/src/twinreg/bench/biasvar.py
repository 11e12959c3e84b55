"""Monte-Carlo bias / variance / covariance decomposition for a two-member ensemble."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..errors import InvalidArgumentError


@dataclass(frozen=True)
class RegressionTask:
    """Noisy 1-D (or n-D) regression problem with a known ground truth."""

    true_fn: object
    noise_std: float
    n_train: int
    test_x: np.ndarray
    low: float = -1.0
    high: float = 1.0

    def sample(self, rng, n=None):
        n = self.n_train if n is None else n
        x = rng.uniform(self.low, self.high, n)
        return x, self.true_fn(x) + self.noise_std * rng.standard_normal(n)


def polynomial_task(noise_std=0.3, n_train=30, n_test=50):
    return RegressionTask(
        true_fn=lambda x: x**3 - 0.5 * x**2 - x + 0.25,
        noise_std=noise_std,
        n_train=n_train,
        test_x=np.linspace(-0.95, 0.95, n_test),
    )


def bootstrap_polyfit(degree=3):
    """Estimator factory: least-squares polynomial on a bootstrap resample."""

    def factory(x, y, rng):
        idx = rng.integers(0, len(x), len(x))
        coef = np.polynomial.polynomial.polyfit(x[idx], y[idx], degree)
        return lambda q: np.polynomial.polynomial.polyval(q, coef)

    return factory


@dataclass
class Decomposition:
    trials: int
    mse: float
    mse_se: float
    bias2: float
    variance: float
    covariance: float
    covariance_se: float
    noise_var: float
    residual: float
    holds: bool
    degenerate: bool = False
    per_trial_mse: np.ndarray = field(default=None, repr=False)

    @property
    def decomposed(self):
        return self.bias2 + 0.5 * self.variance + 0.5 * self.covariance + self.noise_var

    def to_dict(self):
        return {
            "trials": self.trials,
            "mse": self.mse,
            "mse_se": self.mse_se,
            "bias2": self.bias2,
            "variance": self.variance,
            "covariance": self.covariance,
            "covariance_se": self.covariance_se,
            "noise_var": self.noise_var,
            "decomposed": self.decomposed,
            "residual": self.residual,
            "holds": self.holds,
            "degenerate": self.degenerate,
        }


def bias_variance_diagnostic(estimator_factory, task: RegressionTask, trials=500, seed=0,
                             independent_members=False, identical_members=False) -> Decomposition:
    """Check MSE = E_x{Bias^2 + Var/2 + Cov/2} + sigma^2 for f = (f_A + f_B)/2.

    Each trial draws a training set D, fits both members on it (member B on
    its own independent draw when ``independent_members``; B is a copy of A
    when ``identical_members``) and scores the ensemble on fresh noisy labels
    at ``task.test_x``.  Var is the mean of the two member variances, so the
    identity needs no equal-variance assumption.  It holds when the residual
    lies within three Monte-Carlo standard errors of the MSE estimate.
    """
    if trials < 30:
        raise InvalidArgumentError("bias-variance diagnostic needs at least 30 trials")
    rng = np.random.default_rng(seed)
    xq = np.asarray(task.test_x, dtype=float)
    fq = task.true_fn(xq)
    A = np.empty((trials, xq.size))
    Bm = np.empty((trials, xq.size))
    sq = np.empty(trials)
    for t in range(trials):
        x, y = task.sample(rng)
        A[t] = estimator_factory(x, y, rng)(xq)
        if identical_members:
            Bm[t] = A[t]
        else:
            if independent_members:
                x, y = task.sample(rng)
            Bm[t] = estimator_factory(x, y, rng)(xq)
        labels = fq + task.noise_std * rng.standard_normal(xq.size)
        sq[t] = np.mean((0.5 * A[t] + 0.5 * Bm[t] - labels) ** 2)

    ens = 0.5 * A + 0.5 * Bm
    bias2 = float(np.mean((ens.mean(axis=0) - fq) ** 2))
    var = float(np.mean(0.5 * (A.var(axis=0) + Bm.var(axis=0))))
    dA = A - A.mean(axis=0)
    dB = Bm - Bm.mean(axis=0)
    cov_t = np.mean(dA * dB, axis=1)
    cov = float(cov_t.mean())
    cov_se = float(cov_t.std(ddof=1) / np.sqrt(trials))
    mse = float(sq.mean())
    mse_se = float(sq.std(ddof=1) / np.sqrt(trials))
    noise = float(task.noise_std**2)
    residual = mse - (bias2 + 0.5 * var + 0.5 * cov + noise)
    degenerate = mse_se == 0.0
    if degenerate:
        holds = abs(residual) <= 1e-12 * max(1.0, abs(mse))
    else:
        holds = abs(residual) <= 3 * mse_se
    return Decomposition(trials, mse, mse_se, bias2, var, cov, cov_se, noise, residual, holds,
                         degenerate, sq)
