"""Model adapters and closed forms for the Gaussian mean model.

An adapter exposes per-datapoint log-likelihoods ``L_n(theta)`` and their
gradients, plus a log prior. Parameters ``theta`` have dimension ``D``; for
the regression models ``D = dim(x) + 1`` because each feature is augmented
with a constant 1.
"""

from dataclasses import dataclass
from typing import Optional

import numpy as np
from scipy.special import expit, gammaln

from .errors import DataError, NumericalError

LOG_2PI = np.log(2.0 * np.pi)


@dataclass
class Dataset:
    """``X`` holds features (regression) or observations (Gaussian); ``y`` labels or counts."""

    X: np.ndarray
    y: Optional[np.ndarray] = None
    columns: Optional[list] = None

    def __post_init__(self):
        self.X = np.atleast_2d(np.asarray(self.X, dtype=float))
        if self.y is not None:
            self.y = np.asarray(self.y, dtype=float).ravel()
            if self.y.shape[0] != self.X.shape[0]:
                raise DataError(f"{self.X.shape[0]} feature rows but {self.y.shape[0]} labels")

    def __len__(self):
        return self.X.shape[0]

    def subset(self, idx):
        return Dataset(self.X[idx], None if self.y is None else self.y[idx], self.columns)


def augment(x):
    """Append a constant-1 column: ``z = [x, 1]``."""
    x = np.asarray(x, dtype=float)
    return np.concatenate([x, np.ones(x.shape[:-1] + (1,))], axis=-1)


def softplus(s):
    """``log(1 + exp(s))`` without overflow."""
    return np.logaddexp(0.0, s)


def _log_softplus(s):
    # log(log(1 + e^s)); for s << 0, log1p(e^s) ~ e^s underflows, so use s - e^s / 2
    s = np.asarray(s, dtype=float)
    out = np.empty_like(s)
    small = s < -30.0
    out[small] = s[small] - 0.5 * np.exp(s[small])
    out[~small] = np.log(softplus(s[~small]))
    return out


def _sigmoid_over_softplus(s):
    # expit(s) / log(1 + e^s), which tends to 1 as s -> -inf
    s = np.asarray(s, dtype=float)
    out = np.empty_like(s)
    small = s < -30.0
    out[small] = 1.0 + 0.5 * np.exp(s[small])
    out[~small] = expit(s[~small]) / softplus(s[~small])
    return out


# -- logistic regression ------------------------------------------------------

def _check_labels(y):
    y = np.asarray(y, dtype=float)
    if not np.all((y == 1.0) | (y == -1.0)):
        raise DataError("logistic regression labels must be -1 or +1")
    return y


def logistic_loglik(theta, x, y):
    """``-log(1 + exp(-y z^T theta))`` with ``z = [x, 1]``.

    ``x`` may be a single feature vector or an ``(N, d)`` array.
    """
    y = _check_labels(y)
    s = y * (augment(x) @ np.asarray(theta, dtype=float))
    return -softplus(-s)


def logistic_grad(theta, x, y):
    y = _check_labels(y)
    z = augment(x)
    s = y * (z @ np.asarray(theta, dtype=float))
    return (y * expit(-s))[..., None] * z


# -- Poisson regression -------------------------------------------------------

def _check_counts(y):
    y = np.asarray(y, dtype=float)
    if np.any(y < 0) or np.any(y != np.round(y)):
        raise DataError("Poisson counts must be nonnegative integers")
    return y


def poisson_loglik(theta, x, y):
    """Poisson log-mass with rate ``log(1 + exp(theta^T z))``, ``z = [x, 1]``."""
    y = _check_counts(y)
    s = augment(x) @ np.asarray(theta, dtype=float)
    rate = softplus(s)
    # 0 * log(rate) is 0 even when the rate underflows
    ylog = np.where(y > 0, y * _log_softplus(s), 0.0)
    return ylog - rate - gammaln(y + 1.0)


def poisson_grad(theta, x, y):
    y = _check_counts(y)
    z = augment(x)
    s = z @ np.asarray(theta, dtype=float)
    coef = y * _sigmoid_over_softplus(s) - expit(s)
    return coef[..., None] * z


# -- adapters -------------------------------------------------------------------

class ModelAdapter:
    """Per-datapoint log-likelihoods, gradients and a log prior.

    Subclasses implement :meth:`dim`, :meth:`loglik`, :meth:`grad`,
    :meth:`log_prior` and :meth:`grad_log_prior`. :meth:`hess_log_joint` may
    return None, in which case callers fall back to finite differences.
    The ``*_many`` variants evaluate at a stack of parameters ``(S, D)``.
    """

    name = "model"

    def dim(self, data: Dataset) -> int:
        raise NotImplementedError

    def loglik(self, theta, data: Dataset) -> np.ndarray:
        raise NotImplementedError

    def grad(self, theta, data: Dataset) -> np.ndarray:
        raise NotImplementedError

    def log_prior(self, theta) -> float:
        raise NotImplementedError

    def grad_log_prior(self, theta) -> np.ndarray:
        raise NotImplementedError

    def hess_log_joint(self, theta, data: Dataset):
        return None

    def loglik_many(self, thetas, data):
        return np.stack([self.loglik(t, data) for t in thetas])

    def grad_many(self, thetas, data):
        return np.stack([self.grad(t, data) for t in thetas])

    def log_joint(self, theta, data):
        return self.log_prior(theta) + float(np.sum(self.loglik(theta, data)))

    def grad_log_joint(self, theta, data):
        return self.grad_log_prior(theta) + self.grad(theta, data).sum(axis=0)


class StandardNormalPrior:
    """Mixin for a ``N(mean, I)`` prior."""

    prior_mean: np.ndarray

    def log_prior(self, theta):
        d = np.asarray(theta, dtype=float) - self.prior_mean
        return float(-0.5 * (d @ d) - 0.5 * d.size * LOG_2PI)

    def grad_log_prior(self, theta):
        return -(np.asarray(theta, dtype=float) - self.prior_mean)


class GaussianMeanModel(StandardNormalPrior, ModelAdapter):
    """``y_n ~ N(mu, I)`` with prior ``mu ~ N(mu0, I)``; observations are ``data.X``."""

    name = "gaussian"

    def __init__(self, prior_mean):
        self.prior_mean = np.asarray(prior_mean, dtype=float)

    def dim(self, data):
        return data.X.shape[1]

    def loglik(self, theta, data):
        r = data.X - np.asarray(theta, dtype=float)
        return -0.5 * np.sum(r ** 2, axis=1) - 0.5 * r.shape[1] * LOG_2PI

    def grad(self, theta, data):
        return data.X - np.asarray(theta, dtype=float)

    def hess_log_joint(self, theta, data):
        return -(1.0 + len(data)) * np.eye(self.dim(data))

    def loglik_many(self, thetas, data):
        r = data.X[None, :, :] - np.asarray(thetas, dtype=float)[:, None, :]
        return -0.5 * np.sum(r ** 2, axis=2) - 0.5 * r.shape[2] * LOG_2PI

    def grad_many(self, thetas, data):
        return data.X[None, :, :] - np.asarray(thetas, dtype=float)[:, None, :]


class LogisticRegression(StandardNormalPrior, ModelAdapter):
    """Bernoulli labels in {-1, +1} with a logistic link; prior ``N(0, I)``."""

    name = "logistic"

    def __init__(self, dim_x):
        self.prior_mean = np.zeros(dim_x + 1)

    def dim(self, data):
        return data.X.shape[1] + 1

    def loglik(self, theta, data):
        return logistic_loglik(theta, data.X, data.y)

    def grad(self, theta, data):
        return logistic_grad(theta, data.X, data.y)

    def hess_log_joint(self, theta, data):
        z = augment(data.X)
        s = z @ np.asarray(theta, dtype=float)
        c = expit(s) * expit(-s)
        return -(z.T * c) @ z - np.eye(z.shape[1])

    def loglik_many(self, thetas, data):
        y = _check_labels(data.y)
        s = (np.asarray(thetas, dtype=float) @ augment(data.X).T) * y
        return -softplus(-s)

    def grad_many(self, thetas, data):
        y = _check_labels(data.y)
        z = augment(data.X)
        s = (np.asarray(thetas, dtype=float) @ z.T) * y
        return (y * expit(-s))[:, :, None] * z[None, :, :]


class PoissonRegression(StandardNormalPrior, ModelAdapter):
    """Poisson counts with a softplus rate; prior ``N(0, I)``. Hessian via finite differences."""

    name = "poisson"

    def __init__(self, dim_x):
        self.prior_mean = np.zeros(dim_x + 1)

    def dim(self, data):
        return data.X.shape[1] + 1

    def loglik(self, theta, data):
        return poisson_loglik(theta, data.X, data.y)

    def grad(self, theta, data):
        return poisson_grad(theta, data.X, data.y)

    def loglik_many(self, thetas, data):
        return poisson_loglik(np.asarray(thetas, dtype=float).T, data.X, data.y[:, None]).T

    def grad_many(self, thetas, data):
        y = _check_counts(data.y)
        z = augment(data.X)
        s = np.asarray(thetas, dtype=float) @ z.T
        coef = y * _sigmoid_over_softplus(s) - expit(s)
        return coef[:, :, None] * z[None, :, :]


def make_model(name, data: Dataset, prior_mean=None) -> ModelAdapter:
    if name == "gaussian":
        d = data.X.shape[1]
        return GaussianMeanModel(np.zeros(d) if prior_mean is None else prior_mean)
    if name == "logistic":
        if data.y is None:
            raise DataError("logistic regression needs a label column")
        _check_labels(data.y)
        return LogisticRegression(data.X.shape[1])
    if name == "poisson":
        if data.y is None:
            raise DataError("Poisson regression needs a count column")
        _check_counts(data.y)
        return PoissonRegression(data.X.shape[1])
    raise ValueError(f"unknown model {name!r}")


# -- Gaussian mean model closed forms --------------------------------------------

@dataclass(frozen=True)
class GaussianPosterior:
    mean: np.ndarray
    cov: np.ndarray

    @property
    def dim(self):
        return self.mean.shape[0]


def gaussian_coreset_posterior(Y, w, prior_mean) -> GaussianPosterior:
    """Posterior of the Gaussian mean when datapoint ``n`` carries weight ``w_n``.

    Covariance ``I / (1 + sum w)``, mean ``cov (mu0 + sum_n w_n y_n)``.
    """
    Y = np.atleast_2d(np.asarray(Y, dtype=float))
    w = np.asarray(w, dtype=float)
    if w.shape != (Y.shape[0],):
        raise ValueError(f"weights have shape {w.shape}, expected ({Y.shape[0]},)")
    prec = 1.0 + w.sum()
    mean = (np.asarray(prior_mean, dtype=float) + w @ Y) / prec
    return GaussianPosterior(mean=mean, cov=np.eye(Y.shape[1]) / prec)


def gaussian_exact_posterior(Y, prior_mean) -> GaussianPosterior:
    """Exact posterior ``N(mu_pi, I / (1 + N))`` of the Gaussian mean."""
    Y = np.atleast_2d(np.asarray(Y, dtype=float))
    if Y.shape[0] == 0:
        raise DataError("empty dataset")
    return gaussian_coreset_posterior(Y, np.ones(Y.shape[0]), prior_mean)


def gaussian_kl(p: GaussianPosterior, q: GaussianPosterior) -> float:
    """KL(p || q) between two multivariate Gaussians."""
    if p.dim != q.dim:
        raise ValueError(f"dimension mismatch: {p.dim} vs {q.dim}")
    try:
        cq = np.linalg.cholesky(q.cov)
    except np.linalg.LinAlgError as exc:
        raise NumericalError("second covariance is singular or not positive definite") from exc
    cp = np.linalg.cholesky(p.cov)
    a = np.linalg.solve(cq, cp)
    b = np.linalg.solve(cq, q.mean - p.mean)
    logdet = 2.0 * (np.sum(np.log(np.diag(cq))) - np.sum(np.log(np.diag(cp))))
    kl = 0.5 * (np.sum(a ** 2) + b @ b - p.dim + logdet)
    return float(max(kl, 0.0))


def gaussian_sensitivity(Y) -> np.ndarray:
    """Uniform-norm sensitivities of the Gaussian mean model.

    ``sigma_n = (1 + |y_n - ybar|^2 / s2) / N`` where ``s2`` is the mean
    squared distance of the data from their mean.
    """
    Y = np.atleast_2d(np.asarray(Y, dtype=float))
    N = Y.shape[0]
    ybar = Y.mean(axis=0)
    dev = np.sum((Y - ybar) ** 2, axis=1)
    s2 = dev.mean()
    if not s2 > 0:
        raise DataError("sensitivity undefined: all datapoints are identical")
    return (1.0 + dev / s2) / N
