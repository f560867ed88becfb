"""Random finite-dimensional projection of log-likelihoods.

Two inner products are supported, both expectations under a weighting
distribution ``pi_hat`` over parameters:

* ``fisher``: ``E[grad L_n(theta) . grad L_m(theta)]``
* ``l2``:     ``E[L_n(theta) L_m(theta)]``

``project`` draws ``J`` parameter samples (and, for ``fisher``, one gradient
coordinate per sample) shared across all datapoints, and returns an
``(N, J)`` feature matrix whose row dot products are unbiased estimates of
the chosen inner product.
"""

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .errors import LaplaceError, ProjectionError
from .models import Dataset, GaussianPosterior, ModelAdapter, gaussian_exact_posterior

NORM_KINDS = ("fisher", "l2")


@dataclass(frozen=True)
class ProjectionConfig:
    J: int
    norm_kind: str = "fisher"
    D: Optional[int] = None
    seed: Optional[int] = None

    def __post_init__(self):
        if self.J < 1:
            raise ValueError(f"J must be >= 1, got {self.J}")
        if self.norm_kind not in NORM_KINDS:
            raise ValueError(f"norm_kind must be one of {NORM_KINDS}, got {self.norm_kind!r}")
        if self.norm_kind == "fisher" and self.D is not None and self.D < 1:
            raise ValueError(f"D must be >= 1 for the fisher norm, got {self.D}")


@dataclass(frozen=True)
class GaussianWeighting:
    """Gaussian weighting distribution ``N(mean, covariance)``."""

    mean: np.ndarray
    covariance: np.ndarray

    def __post_init__(self):
        mean = np.asarray(self.mean, dtype=float).ravel()
        cov = np.atleast_2d(np.asarray(self.covariance, dtype=float))
        if cov.shape != (mean.size, mean.size):
            raise ValueError(f"covariance shape {cov.shape} does not match mean of size {mean.size}")
        if not np.allclose(cov, cov.T, atol=1e-9, rtol=0):
            raise ValueError("covariance is not symmetric")
        try:
            chol = np.linalg.cholesky(cov)
        except np.linalg.LinAlgError as exc:
            raise ValueError("covariance is not positive definite") from exc
        object.__setattr__(self, "mean", mean)
        object.__setattr__(self, "covariance", cov)
        object.__setattr__(self, "_chol", chol)

    @property
    def dim(self):
        return self.mean.size

    def sample(self, rng, size):
        z = rng.standard_normal((size, self.dim))
        return self.mean + z @ self._chol.T

    @classmethod
    def from_posterior(cls, post: GaussianPosterior):
        return cls(post.mean, post.cov)


def prior_weighting(model: ModelAdapter, data: Dataset) -> GaussianWeighting:
    """The model's ``N(prior_mean, I)`` prior as a weighting distribution."""
    return GaussianWeighting(model.prior_mean, np.eye(model.dim(data)))


def exact_posterior_weighting(data: Dataset, prior_mean) -> GaussianWeighting:
    """Exact posterior of the Gaussian mean model."""
    return GaussianWeighting.from_posterior(gaussian_exact_posterior(data.X, prior_mean))


def _fd_hessian(model, theta, data):
    D = theta.size
    H = np.empty((D, D))
    for i in range(D):
        h = 1e-5 * (1.0 + abs(theta[i]))
        e = np.zeros(D)
        e[i] = h
        H[:, i] = (model.grad_log_joint(theta + e, data) - model.grad_log_joint(theta - e, data)) / (2 * h)
    return 0.5 * (H + H.T)


def log_joint_hessian(model, theta, data):
    H = model.hess_log_joint(theta, data)
    return _fd_hessian(model, theta, data) if H is None else np.asarray(H, dtype=float)


def laplace_weighting(model: ModelAdapter, data: Dataset, max_iter=100, tol=1e-8) -> GaussianWeighting:
    """Laplace approximation of the posterior.

    Damped Newton ascent on the log joint from ``theta = 0``: the full Newton
    step is halved until the log joint does not decrease. Stops when the
    gradient norm is below ``tol``. The covariance is the inverse negative
    Hessian at the mode.

    Raises
    ------
    LaplaceError
        If Newton does not converge in ``max_iter`` steps (the last iterate is
        attached), or the negative Hessian is not positive definite.
    """
    D = model.dim(data)
    theta = np.zeros(D)
    obj = model.log_joint(theta, data)
    for it in range(max_iter + 1):
        g = model.grad_log_joint(theta, data)
        if np.linalg.norm(g) < tol:
            break
        if it == max_iter:
            raise LaplaceError(f"Newton did not converge in {max_iter} iterations "
                               f"(gradient norm {np.linalg.norm(g):.3g})", theta)
        H = log_joint_hessian(model, theta, data)
        try:
            chol = np.linalg.cholesky(-H)
        except np.linalg.LinAlgError as exc:
            raise LaplaceError("negative Hessian of the log joint is not positive definite; "
                               "consider adding jitter to the prior precision", theta) from exc
        step = np.linalg.solve(chol.T, np.linalg.solve(chol, g))
        scale = 1.0
        for _ in range(60):
            cand = theta + scale * step
            cand_obj = model.log_joint(cand, data)
            if np.isfinite(cand_obj) and cand_obj >= obj:
                break
            scale *= 0.5
        else:
            # no ascent possible along the Newton direction at machine precision
            cand, cand_obj = theta, obj
        if np.array_equal(cand, theta) and np.linalg.norm(g) >= tol:
            raise LaplaceError(f"Newton stalled with gradient norm {np.linalg.norm(g):.3g}", theta)
        theta, obj = cand, cand_obj

    H = log_joint_hessian(model, theta, data)
    try:
        chol = np.linalg.cholesky(-H)
    except np.linalg.LinAlgError as exc:
        raise LaplaceError("negative Hessian at the mode is not positive definite; "
                           "consider adding jitter", theta) from exc
    inv = np.linalg.inv(chol)
    cov = inv.T @ inv
    return GaussianWeighting(theta, 0.5 * (cov + cov.T))


@dataclass(frozen=True)
class ProjectionDraw:
    """The shared random draw behind a projection: parameter samples and gradient coordinates."""

    points: np.ndarray          # (J, D)
    coords: Optional[np.ndarray]  # (J,) for fisher, None for l2
    norm_kind: str


def draw_projection(weighting: GaussianWeighting, cfg: ProjectionConfig, rng) -> ProjectionDraw:
    points = weighting.sample(rng, cfg.J)
    coords = None
    if cfg.norm_kind == "fisher":
        D = weighting.dim if cfg.D is None else cfg.D
        coords = rng.integers(0, D, size=cfg.J)
    return ProjectionDraw(points=points, coords=coords, norm_kind=cfg.norm_kind)


def _chunks(J, N, budget=4_000_000):
    step = max(1, budget // max(N, 1))
    for start in range(0, J, step):
        yield slice(start, min(J, start + step))


def features_from_draw(model: ModelAdapter, data: Dataset, draw: ProjectionDraw) -> np.ndarray:
    """Evaluate the feature matrix for a fixed draw."""
    N, J = len(data), draw.points.shape[0]
    F = np.empty((N, J))
    # overflow is reported below with the offending datapoint, not as a warning
    with np.errstate(over="ignore", invalid="ignore"):
        for sl in _chunks(J, N * (model.dim(data) if draw.coords is not None else 1)):
            pts = draw.points[sl]
            if draw.norm_kind == "fisher":
                G = model.grad_many(pts, data)                       # (S, N, D)
                D = G.shape[2]
                vals = G[np.arange(G.shape[0]), :, draw.coords[sl]]  # (S, N)
                F[:, sl] = np.sqrt(D / J) * vals.T
            else:
                F[:, sl] = np.sqrt(1.0 / J) * model.loglik_many(pts, data).T
    if not np.all(np.isfinite(F)):
        n, j = np.argwhere(~np.isfinite(F))[0]
        what = "gradient" if draw.norm_kind == "fisher" else "log-likelihood"
        raise ProjectionError(f"non-finite {what} for datapoint {n} at sample {j} "
                              f"(theta = {draw.points[j].tolist()})")
    return F


def project(model: ModelAdapter, data: Dataset, weighting: GaussianWeighting,
            cfg: ProjectionConfig, rng) -> np.ndarray:
    """Random-feature projection of the log-likelihoods (see module docstring).

    Row ``n`` is ``sqrt(D/J) [grad L_n(mu_j)_{d_j}]_j`` for ``fisher`` or
    ``sqrt(1/J) [L_n(mu_j)]_j`` for ``l2``.
    """
    return features_from_draw(model, data, draw_projection(weighting, cfg, rng))


def exact_gaussian_embedding(Y, posterior: GaussianPosterior) -> np.ndarray:
    """Exact finite embedding of the Gaussian-mean log-likelihoods under the
    Fisher inner product with the posterior as weighting.

    Row ``n`` is ``[sqrt(D / (1 + N)), mu_pi - y_n]``, so row dot products equal
    ``tr(Sigma_pi) + (mu_pi - y_n)^T (mu_pi - y_m)``.
    """
    Y = np.atleast_2d(np.asarray(Y, dtype=float))
    N, D = Y.shape
    head = np.full((N, 1), np.sqrt(np.trace(posterior.cov)))
    return np.hstack([head, posterior.mean - Y])


def gaussian_fisher_inner_product(Y, posterior: GaussianPosterior) -> np.ndarray:
    """Closed-form ``N x N`` matrix of Fisher inner products for the Gaussian mean model."""
    Y = np.atleast_2d(np.asarray(Y, dtype=float))
    R = posterior.mean - Y
    return np.trace(posterior.cov) + R @ R.T
