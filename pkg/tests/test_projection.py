import numpy as np
import pytest
from scipy.optimize import minimize

from hilbertcoresets.errors import LaplaceError, ProjectionError
from hilbertcoresets.experiments import projection_error_trend
from hilbertcoresets.models import Dataset, GaussianMeanModel, LogisticRegression, gaussian_exact_posterior
from hilbertcoresets.projection import (GaussianWeighting, ProjectionConfig, draw_projection,
                                        exact_gaussian_embedding, exact_posterior_weighting,
                                        features_from_draw, gaussian_fisher_inner_product, laplace_weighting,
                                        prior_weighting, project)


def gaussian_setup(rng, N=6, D=2):
    Y = rng.standard_normal((N, D)) + 1.0
    mu0 = np.zeros(D)
    return Dataset(Y), GaussianMeanModel(mu0), gaussian_exact_posterior(Y, mu0)


# -- configuration and weighting ------------------------------------------------

def test_config_validation():
    with pytest.raises(ValueError):
        ProjectionConfig(J=0)
    with pytest.raises(ValueError):
        ProjectionConfig(J=3, norm_kind="sobolev")
    with pytest.raises(ValueError):
        ProjectionConfig(J=3, D=0)


def test_weighting_validation():
    with pytest.raises(ValueError, match="symmetric"):
        GaussianWeighting(np.zeros(2), [[1.0, 0.5], [0.0, 1.0]])
    with pytest.raises(ValueError, match="positive definite"):
        GaussianWeighting(np.zeros(2), [[1.0, 0.0], [0.0, -1.0]])
    with pytest.raises(ValueError):
        GaussianWeighting(np.zeros(3), np.eye(2))
    w = GaussianWeighting([1.0, -1.0], [[2.0, 0.3], [0.3, 1.0]])
    x = w.sample(np.random.default_rng(0), 100_000)
    np.testing.assert_allclose(x.mean(axis=0), w.mean, atol=0.02)
    np.testing.assert_allclose(np.cov(x.T), w.covariance, atol=0.03)


# -- Laplace ------------------------------------------------------------------------

def test_laplace_gaussian_is_exact():
    data, model, post = gaussian_setup(np.random.default_rng(1))
    lap = laplace_weighting(model, data)
    np.testing.assert_allclose(lap.mean, post.mean, atol=1e-10)
    np.testing.assert_allclose(lap.covariance, post.cov, atol=1e-12)


def test_laplace_logistic_no_data_is_prior():
    data = Dataset(np.zeros((0, 2)), np.zeros(0))
    lap = laplace_weighting(LogisticRegression(2), data)
    np.testing.assert_allclose(lap.mean, 0.0, atol=1e-14)
    np.testing.assert_allclose(lap.covariance, np.eye(3), atol=1e-12)


def test_laplace_logistic_separable_matches_quasi_newton():
    rng = np.random.default_rng(2)
    X = rng.standard_normal((20, 2))
    y = np.where(X[:, 0] + 0.5 * X[:, 1] > 0, 1.0, -1.0)
    Z = np.hstack([X, np.ones((20, 1))])

    def neg_log_joint(t):
        return np.sum(np.logaddexp(0.0, -y * (Z @ t))) + 0.5 * t @ t

    def neg_grad(t):
        s = y * (Z @ t)
        return -(y / (1.0 + np.exp(s))) @ Z + t

    ref = minimize(neg_log_joint, np.zeros(3), jac=neg_grad, method="BFGS", options={"gtol": 1e-11})
    lap = laplace_weighting(LogisticRegression(2), Dataset(X, y))
    np.testing.assert_allclose(lap.mean, ref.x, atol=1e-4)
    # covariance = inverse Hessian of the negative log joint at the mode
    p = 1.0 / (1.0 + np.exp(-(Z @ lap.mean)))
    H = (Z * (p * (1 - p))[:, None]).T @ Z + np.eye(3)
    np.testing.assert_allclose(lap.covariance, np.linalg.inv(H), rtol=1e-8)


def test_laplace_finite_difference_hessian_path():
    # Poisson has no analytic Hessian, so this exercises the finite-difference path
    from hilbertcoresets.models import PoissonRegression
    rng = np.random.default_rng(3)
    X = rng.standard_normal((30, 2))
    y = rng.poisson(2.0, 30)
    model = PoissonRegression(2)
    data = Dataset(X, y)
    lap = laplace_weighting(model, data)
    assert np.linalg.norm(model.grad_log_joint(lap.mean, data)) < 1e-8
    assert np.all(np.linalg.eigvalsh(lap.covariance) > 0)


def test_laplace_nonconvergence_carries_iterate():
    X = np.random.default_rng(4).standard_normal((20, 2))
    y = np.where(X[:, 0] > 0, 1.0, -1.0)
    with pytest.raises(LaplaceError) as info:
        laplace_weighting(LogisticRegression(2), Dataset(X, y), max_iter=1)
    assert info.value.last_iterate.shape == (3,)


def test_laplace_non_pd_hessian_suggests_jitter():
    class Flipped(GaussianMeanModel):
        def hess_log_joint(self, theta, data):
            return np.eye(self.dim(data))

    data = Dataset(np.ones((3, 2)))
    with pytest.raises(LaplaceError, match="jitter"):
        laplace_weighting(Flipped(np.zeros(2)), data)


# -- random projection -------------------------------------------------------------

def test_l2_single_sample():
    data, model, post = gaussian_setup(np.random.default_rng(5))
    weighting = GaussianWeighting.from_posterior(post)
    draw = draw_projection(weighting, ProjectionConfig(J=1, norm_kind="l2"), np.random.default_rng(6))
    F = features_from_draw(model, data, draw)
    np.testing.assert_allclose(F[:, 0], model.loglik(draw.points[0], data))
    np.testing.assert_allclose(np.sum(F ** 2, axis=1), model.loglik(draw.points[0], data) ** 2)


def test_fisher_feature_definition():
    data, model, post = gaussian_setup(np.random.default_rng(7))
    weighting = GaussianWeighting.from_posterior(post)
    J = 9
    draw = draw_projection(weighting, ProjectionConfig(J=J), np.random.default_rng(8))
    F = features_from_draw(model, data, draw)
    for j in range(J):
        g = model.grad(draw.points[j], data)
        np.testing.assert_allclose(F[:, j], np.sqrt(2 / J) * g[:, draw.coords[j]])


def test_identical_datapoints_identical_rows():
    Y = np.array([[0.5, 1.0], [2.0, -1.0], [0.5, 1.0]])
    data = Dataset(Y)
    model = GaussianMeanModel(np.zeros(2))
    for kind in ("fisher", "l2"):
        F = project(model, data, exact_posterior_weighting(data, np.zeros(2)),
                    ProjectionConfig(J=50, norm_kind=kind), np.random.default_rng(9))
        np.testing.assert_array_equal(F[0], F[2])


def test_row_permutation_equivariance():
    rng = np.random.default_rng(10)
    X = rng.standard_normal((15, 2))
    y = rng.choice([-1.0, 1.0], 15)
    model = LogisticRegression(2)
    perm = rng.permutation(15)
    weighting = prior_weighting(model, Dataset(X, y))
    cfg = ProjectionConfig(J=40)
    A = project(model, Dataset(X, y), weighting, cfg, np.random.default_rng(11))
    B = project(model, Dataset(X[perm], y[perm]), weighting, cfg, np.random.default_rng(11))
    np.testing.assert_allclose(B, A[perm], rtol=1e-12)


def test_fisher_estimate_within_monte_carlo_error():
    data, model, post = gaussian_setup(np.random.default_rng(12))
    J = 10_000
    F = project(model, data, GaussianWeighting.from_posterior(post), ProjectionConfig(J=J),
                np.random.default_rng(13))
    K = gaussian_fisher_inner_product(data.X, post)
    for n, m in [(0, 0), (0, 1), (2, 5), (3, 3)]:
        terms = J * F[n] * F[m]  # per-sample unbiased estimates
        se = terms.std(ddof=1) / np.sqrt(J)
        assert abs(terms.mean() - K[n, m]) <= 3 * se


def test_projection_error_shrinks_like_inverse_sqrt_j():
    errors, slope = projection_error_trend(J_list=(10, 100, 1000), reps=50, N=8)
    assert errors[0] > errors[1] > errors[2]
    assert -0.65 <= slope <= -0.35


def test_nonfinite_gradient_names_datapoint():
    data = Dataset(np.array([[0.0, 0.0], [np.inf, 0.0]]))
    weighting = GaussianWeighting(np.zeros(2), np.eye(2))
    with pytest.raises(ProjectionError, match="datapoint 1"):
        project(GaussianMeanModel(np.zeros(2)), data, weighting, ProjectionConfig(J=5, norm_kind="l2"),
                np.random.default_rng(0))


# -- exact Gaussian embedding ------------------------------------------------------

def test_embedding_single_origin_point():
    post = gaussian_exact_posterior([[0.0, 0.0]], np.zeros(2))
    E = exact_gaussian_embedding([[0.0, 0.0]], post)
    assert E @ E[0] == pytest.approx([1.0])
    # E_pi |grad L_1|^2 with grad L_1(theta) = y_1 - theta and theta ~ N(0, I/2)
    theta = np.random.default_rng(14).multivariate_normal(post.mean, post.cov, size=200_000)
    est = np.sum(theta ** 2, axis=1)
    assert abs(est.mean() - 1.0) <= 4 * est.std() / np.sqrt(len(est))


def test_embedding_reproduces_closed_form():
    rng = np.random.default_rng(15)
    for D in (1, 2, 5):
        N = 30
        Y = rng.standard_normal((N, D)) * 3
        post = gaussian_exact_posterior(Y, rng.standard_normal(D))
        E = exact_gaussian_embedding(Y, post)
        assert E.shape == (N, D + 1)
        np.testing.assert_allclose(E[:, 0], np.sqrt(D / (1.0 + N)))
        K = D / (1.0 + N) + np.array([[(post.mean - Y[n]) @ (post.mean - Y[m]) for m in range(N)]
                                      for n in range(N)])
        np.testing.assert_allclose(E @ E.T, K, rtol=1e-12)


def test_embedding_point_at_posterior_mean_has_minimal_norm():
    Y = np.array([[1.0, 1.0], [-1.0, -1.0], [0.0, 0.0], [3.0, 0.0], [-3.0, 0.0]])
    post = gaussian_exact_posterior(Y, np.zeros(2))
    assert np.allclose(post.mean, Y[2])
    E = exact_gaussian_embedding(Y, post)
    np.testing.assert_allclose(E[2], [np.sqrt(2 / 6), 0.0, 0.0], atol=1e-15)
    assert np.argmin(np.linalg.norm(E, axis=1)) == 2


def test_embedding_permutation_equivariant():
    rng = np.random.default_rng(16)
    Y = rng.standard_normal((10, 2))
    perm = rng.permutation(10)
    post = gaussian_exact_posterior(Y, np.zeros(2))
    np.testing.assert_allclose(exact_gaussian_embedding(Y[perm], post),
                               exact_gaussian_embedding(Y, post)[perm])
