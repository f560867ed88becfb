"""Vector-space view of log-likelihoods.

A feature matrix ``F`` of shape ``(N, J)`` stands in for the log-likelihood
vectors: row ``n`` is the embedding of datapoint ``n`` and the Hilbert inner
product of two log-likelihoods is the dot product of their rows. Exact
embeddings and random projections share this representation.
"""

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .errors import DegenerateProblemError

DEFAULT_EXACT_PAIR_LIMIT = 2000
DEFAULT_SAMPLED_PAIRS = 200_000


def as_features(F) -> np.ndarray:
    """Validate and return ``F`` as a finite 2-d float array with N, J >= 1."""
    F = np.asarray(F, dtype=float)
    if F.ndim != 2:
        raise ValueError(f"feature matrix must be 2-d, got shape {F.shape}")
    if F.shape[0] < 1 or F.shape[1] < 1:
        raise ValueError(f"feature matrix must have N >= 1 and J >= 1, got shape {F.shape}")
    if not np.all(np.isfinite(F)):
        bad = np.argwhere(~np.isfinite(F))[0]
        raise ValueError(f"non-finite feature entry at row {bad[0]}, column {bad[1]}")
    return F


def _as_weights(w, N) -> np.ndarray:
    w = np.asarray(w, dtype=float)
    if w.shape != (N,):
        raise ValueError(f"weight vector has shape {w.shape}, expected ({N},)")
    return w


def row_norms(F) -> np.ndarray:
    return np.linalg.norm(F, axis=1)


@dataclass(frozen=True)
class AlignmentDiagnostics:
    """Geometry constants of a set of log-likelihood vectors.

    Attributes
    ----------
    sigma_n : per-row norms.
    sigma : sum of ``sigma_n``; the overall scale of the problem.
    eta : in [0, 1]; expected-error alignment constant (0 when all rows are parallel).
    eta_bar : in [0, 2]; largest distance between two normalized rows.
    approximate : True when ``eta_bar`` came from sampled pairs rather than all pairs.
    nu : optional convex-hull constant, only present when supplied by the caller.
    """

    sigma_n: np.ndarray
    sigma: float
    eta: float
    eta_bar: float
    approximate: bool = False
    nu: Optional[float] = None

    def as_dict(self):
        return {
            "sigma": self.sigma,
            "eta": self.eta,
            "eta_bar": self.eta_bar,
            "eta_bar_approximate": self.approximate,
            "nu": self.nu,
        }


def _max_pair_distance_sq(U, pairs=None):
    """Largest squared distance between rows of ``U`` (unit rows).

    The candidate pair is found through the Gram matrix, then its distance is
    recomputed directly so that identical rows give exactly zero.
    """
    if U.shape[0] < 2:
        return 0.0
    if pairs is None:
        G = U @ U.T
        i, j = np.unravel_index(np.argmin(G), G.shape)
    else:
        a, b = pairs
        dots = np.einsum("ij,ij->i", U[a], U[b])
        k = int(np.argmin(dots))
        i, j = a[k], b[k]
    diff = U[i] - U[j]
    return float(min(diff @ diff, 4.0))


def compute_diagnostics(F, exact_pair_limit=DEFAULT_EXACT_PAIR_LIMIT, nu=None,
                        n_sampled_pairs=DEFAULT_SAMPLED_PAIRS, seed=0) -> AlignmentDiagnostics:
    """Compute sigma_n, sigma, eta and eta_bar for the rows of ``F``.

    ``eta_bar`` is exact when the number of nonzero rows is at most
    ``exact_pair_limit``. Above that it is a lower estimate from
    ``n_sampled_pairs`` seeded random pairs plus every pair involving the row
    least aligned with the total, and the result is flagged approximate.
    Zero-norm rows are ignored for ``eta_bar``.
    """
    F = as_features(F)
    sigma_n = row_norms(F)
    sigma = float(sigma_n.sum())
    if sigma == 0.0:
        raise DegenerateProblemError()
    if nu is not None and not 0.0 <= nu < 1.0:
        raise ValueError(f"nu must lie in [0, 1), got {nu}")

    live = sigma_n > 0
    U = F[live] / sigma_n[live, None]
    p = sigma_n[live] / sigma
    # eta^2 = 1 - |L|^2 / sigma^2 written as a weighted variance of the unit rows;
    # equal in exact arithmetic but never negative and exactly 0 for parallel rows.
    u_bar = p @ U
    eta_sq = float(p @ np.sum((U - u_bar) ** 2, axis=1))
    eta = float(np.sqrt(min(max(eta_sq, 0.0), 1.0)))

    n_live = U.shape[0]
    approximate = False
    if n_live <= exact_pair_limit:
        eta_bar_sq = _max_pair_distance_sq(U)
    else:
        approximate = True
        rng = np.random.default_rng(seed)
        a = rng.integers(0, n_live, size=n_sampled_pairs)
        b = rng.integers(0, n_live, size=n_sampled_pairs)
        worst = int(np.argmin(U @ u_bar))
        a = np.concatenate([a, np.full(n_live, worst)])
        b = np.concatenate([b, np.arange(n_live)])
        eta_bar_sq = _max_pair_distance_sq(U, (a, b))
    eta_bar = float(np.sqrt(eta_bar_sq))
    return AlignmentDiagnostics(sigma_n=sigma_n, sigma=sigma, eta=eta, eta_bar=eta_bar,
                                approximate=approximate, nu=nu)


def weighted_sum(F, w) -> np.ndarray:
    """Return ``sum_n w_n F[n]``, touching only rows in the support of ``w``."""
    F = np.asarray(F, dtype=float)
    w = _as_weights(w, F.shape[0])
    support = np.flatnonzero(w)
    return w[support] @ F[support] if support.size else np.zeros(F.shape[1])


def approximation_error(F, w) -> float:
    """Euclidean norm of the gap between the weighted and the full row sums."""
    F = np.asarray(F, dtype=float)
    w = _as_weights(w, F.shape[0])
    return float(np.linalg.norm((w - 1.0) @ F))


def kernel(F, limit=5000) -> np.ndarray:
    """Gram matrix ``F F^T`` of pairwise inner products.

    Only for small N; ``limit`` guards against materializing N^2 entries.
    """
    F = as_features(F)
    N = F.shape[0]
    if N > limit:
        raise ValueError(
            f"kernel matrix for N={N} exceeds limit={limit}; use weighted_sum / "
            "approximation_error, which stream over rows instead")
    K = F @ F.T
    return 0.5 * (K + K.T)
