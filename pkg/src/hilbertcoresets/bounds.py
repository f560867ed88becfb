"""Closed-form error guarantees for the coreset constructions.

These let experiments plot achieved error against what is provably
attainable for given geometry constants (sigma, eta, eta_bar, optionally nu).
"""

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .geometry import AlignmentDiagnostics


@dataclass(frozen=True)
class BoundParams:
    sigma: float
    eta: float
    eta_bar: float
    M: int = 1
    delta: float = 0.01
    C: int = 1
    nu: Optional[float] = None
    xi2: Optional[float] = None
    J: Optional[int] = None
    N: Optional[int] = None

    def __post_init__(self):
        if not 0.0 < self.delta < 1.0:
            raise ValueError(f"delta must lie in (0, 1), got {self.delta}")
        if self.M < 1:
            raise ValueError(f"M must be >= 1, got {self.M}")
        if self.C < 1:
            raise ValueError(f"C must be >= 1, got {self.C}")

    @classmethod
    def from_diagnostics(cls, diag: AlignmentDiagnostics, **kw):
        kw.setdefault("nu", diag.nu)
        return cls(sigma=diag.sigma, eta=diag.eta, eta_bar=diag.eta_bar, **kw)


def bennett_H(y):
    """``H(y) = (1 + y) log(1 + y) - y`` for ``y >= 0``."""
    if y < 0:
        raise ValueError(f"H is defined for y >= 0, got {y}")
    return (1.0 + y) * np.log1p(y) - y


def bennett_H_inv(v):
    """Inverse of :func:`bennett_H` by bracketed bisection.

    The bracket ``[0, hi]`` starts at ``hi = 1`` and doubles until
    ``H(hi) >= v``; bisection stops once the bracket is narrower than
    ``1e-12 (1 + hi)``.
    """
    if v < 0:
        raise ValueError(f"H^-1 is defined for v >= 0, got {v}")
    if v == 0:
        return 0.0
    lo, hi = 0.0, 1.0
    while bennett_H(hi) < v:
        lo, hi = hi, 2.0 * hi
    while hi - lo > 1e-12 * (1.0 + hi):
        mid = 0.5 * (lo + hi)
        if bennett_H(mid) < v:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def _log_inv_delta(delta):
    if not 0.0 < delta < 1.0:
        raise ValueError(f"delta must lie in (0, 1), got {delta}")
    return np.log(1.0 / delta)


def eta_M(eta, eta_bar, M, delta):
    """The Bennett-refined alignment constant; never larger than ``eta_bar``."""
    if eta == 0.0:
        return 0.0
    lg = _log_inv_delta(delta)
    log_y = 2.0 * np.log(eta_bar) + np.log(lg) - np.log(2.0 * M) - 2.0 * np.log(eta)
    if log_y < 600.0:
        y = np.exp(log_y)
        bennett = eta * np.sqrt(1.0 / y) * bennett_H_inv(y)
    else:
        # y is not representable when eta is tiny; work with log H^-1(y)
        bennett = np.exp(np.log(eta) - 0.5 * log_y + _log_bennett_H_inv_large(log_y))
    return float(min(eta_bar, bennett))


def _log_bennett_H_inv_large(log_v):
    # for x > e^600, H(x) = x (log x - 1) to double precision, so solve u + log(u - 1) = log_v for u = log x
    lo, hi = 2.0, log_v
    while hi - lo > 1e-12 * hi:
        mid = 0.5 * (lo + hi)
        if mid + np.log(mid - 1.0) < log_v:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def is_bound(p: BoundParams) -> float:
    """High-probability (1 - delta) error bound for importance sampling."""
    lg = _log_inv_delta(p.delta)
    if p.eta == 0.0:
        return 0.0
    em = eta_M(p.eta, p.eta_bar, p.M, p.delta)
    return float(p.sigma / np.sqrt(p.M) * (p.eta + em * np.sqrt(2.0 * lg)))


def is_bound_simple(p: BoundParams) -> float:
    """Looser importance sampling bound using ``eta_bar`` only."""
    lg = _log_inv_delta(p.delta)
    return float(p.sigma * p.eta_bar / np.sqrt(p.M) * (1.0 + np.sqrt(2.0 * lg)))


def is_distributed_bound(p: BoundParams) -> float:
    """Bound for importance sampling run on ``C`` nodes and merged."""
    lg = _log_inv_delta(p.delta / p.C)
    return float(p.sigma * p.eta_bar / np.sqrt(p.M) * (1.0 + np.sqrt(2.0 * lg)))


def fw_bound(p: BoundParams, step_rule="line-search") -> float:
    """Deterministic error bound for Frank-Wolfe after ``M - 1`` iterations.

    With exact line search and ``nu`` supplied this is the sharp bound
    ``sigma eta eta_bar nu / sqrt(eta_bar^2 nu^(-2(M-2)) + eta^2 (M-1))``,
    which decays geometrically in M; without ``nu`` it is
    ``sigma eta_bar / sqrt(M)``. ``step_rule="fixed"`` gives
    ``2 sigma eta_bar / sqrt(3M + 1)``. The distributed bound for ``C``
    merged Frank-Wolfe runs is the same weak form.
    """
    if step_rule == "fixed":
        return float(2.0 * p.sigma * p.eta_bar / np.sqrt(3.0 * p.M + 1.0))
    if step_rule != "line-search":
        raise ValueError(f"unknown step_rule {step_rule!r}")
    weak = float(p.sigma * p.eta_bar / np.sqrt(p.M))
    if p.nu is None:
        return weak
    nu = p.nu
    if not 0.0 <= nu < 1.0:
        raise ValueError(f"nu must lie in [0, 1), got {nu}")
    if p.eta == 0.0 or p.eta_bar == 0.0:
        return 0.0
    if nu == 0.0:
        # limit nu -> 0: sigma * eta after initialization, zero afterwards
        return float(p.sigma * p.eta) if p.M == 1 else 0.0
    # divide through by nu to keep nu^(-2(M-2)) from overflowing for large M
    log_term = -2.0 * (p.M - 1) * np.log(nu)
    with np.errstate(over="ignore"):
        denom = p.eta_bar ** 2 * np.exp(log_term) + p.eta ** 2 * (p.M - 1) / nu ** 2
    return float(p.sigma * p.eta * p.eta_bar / np.sqrt(denom))


def projection_bound(p: BoundParams, projected_error_sq, l1_weight_gap_sq) -> float:
    """Upper bound on the true squared error of a coreset built on random features.

    ``projected_error_sq`` is the squared error in feature space and
    ``l1_weight_gap_sq`` is ``(sum_n |w_n - 1|)^2``. Holds with probability
    ``1 - delta`` when the per-sample feature products are sub-Gaussian with
    constant ``xi2``, which must be supplied (see :func:`estimate_xi2`).
    """
    if p.xi2 is None:
        raise ValueError("xi2 (sub-Gaussian constant) is model dependent and must be "
                         "user-estimated; see estimate_xi2 for a heuristic")
    if p.J is None or p.N is None:
        raise ValueError("projection_bound needs J and N")
    slack = np.sqrt(2.0 * p.xi2 / p.J * np.log(2.0 * p.N ** 2 / p.delta))
    return float(projected_error_sq + l1_weight_gap_sq * slack)


def l1_weight_gap(w) -> float:
    return float(np.sum(np.abs(np.asarray(w, dtype=float) - 1.0)))


def estimate_xi2(F, n_pairs=2000, seed=0) -> float:
    """Heuristic sub-Gaussian constant from a random-feature matrix.

    Takes the largest sample variance of the per-sample products
    ``J F_nj F_mj`` over the diagonal and ``n_pairs`` random pairs. A variance
    proxy only: sub-Gaussianity itself is not checked.
    """
    F = np.asarray(F, dtype=float)
    N, J = F.shape
    rng = np.random.default_rng(seed)
    a = np.concatenate([np.arange(N), rng.integers(0, N, n_pairs)])
    b = np.concatenate([np.arange(N), rng.integers(0, N, n_pairs)])
    prods = J * F[a] * F[b]
    return float(np.max(np.var(prods, axis=1, ddof=1))) if J > 1 else float("nan")


def logistic_recursion_bound(x0, alpha, n):
    """``x0 / (alpha^-n + x0 n)``: bound on iterates of ``x <- alpha x (1 - x)``."""
    _check_unit(x0, alpha)
    if n < 0:
        raise ValueError(f"n must be >= 0, got {n}")
    if n == 0:
        return float(x0)
    # x0 a / (1 + x0 n a) with a = alpha^n underflows to 0 instead of overflowing
    a = float(alpha) ** n
    return float(x0 * a / (1.0 + x0 * n * a))


def logistic_recursion_check(x0, alpha, n) -> bool:
    """Iterate ``x <- alpha x (1 - x)`` n times and confirm the bound holds."""
    _check_unit(x0, alpha)
    x = float(x0)
    for _ in range(n):
        x = alpha * x * (1.0 - x)
    bound = logistic_recursion_bound(x0, alpha, n)
    # rounding in the iterate compounds over n steps; subnormals lose relative precision
    eps = np.finfo(float).eps
    return x <= bound * (1.0 + 4 * (n + 2) * eps) + np.finfo(float).tiny


def _check_unit(x0, alpha):
    if not (0.0 <= x0 <= 1.0 and 0.0 <= alpha <= 1.0):
        raise ValueError(f"x0 and alpha must lie in [0, 1], got x0={x0}, alpha={alpha}")
