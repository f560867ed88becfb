"""Coreset construction algorithms.

All constructions return a length-N nonnegative weight vector. The sampling
based ones (importance sampling, uniform coresets, uniform random
subsampling) share one multinomial sampler; Frank-Wolfe additionally returns
a per-iteration trace.
"""

from dataclasses import dataclass, field
from typing import List, Sequence, Tuple

import numpy as np

from .errors import DegenerateProblemError
from .geometry import as_features, row_norms


def multinomial(rng, M, p, size=None) -> np.ndarray:
    """Multinomial counts drawn as sequential conditional binomials in index order.

    Index ``n`` receives ``Binomial(remaining, p_n / sum_{k>=n} p_k)`` trials, so a
    fixed seed yields the same counts on every platform. ``size`` draws that
    many independent count vectors at once (shape ``(size, N)``).
    """
    p = np.asarray(p, dtype=float)
    tail = np.cumsum(p[::-1])[::-1]
    shape = () if size is None else (size,)
    remaining = np.full(shape, int(M), dtype=np.int64)
    counts = np.zeros(shape + (p.size,), dtype=np.int64)
    for n in np.flatnonzero(p > 0):
        q = min(p[n] / tail[n], 1.0)
        c = rng.binomial(remaining, q)
        counts[..., n] = c
        remaining = remaining - c
        if not np.any(remaining):
            break
    return counts


def sampling_probabilities(sigma_n) -> np.ndarray:
    """Probabilities proportional to the per-point norms (or sensitivities)."""
    sigma_n = np.asarray(sigma_n, dtype=float)
    if np.any(sigma_n < 0) or not np.all(np.isfinite(sigma_n)):
        raise ValueError("sensitivities must be finite and nonnegative")
    total = sigma_n.sum()
    if total == 0:
        raise DegenerateProblemError("degenerate problem: all sensitivities are zero")
    return sigma_n / total


def expected_squared_error(F, p, M) -> float:
    """Expected squared error of i.i.d. sampling with probabilities ``p``.

    Equals ``(sum_n |F_n|^2 / p_n - |sum_n F_n|^2) / M``; minimized over the
    simplex by ``p`` proportional to the row norms.
    """
    F = np.asarray(F, dtype=float)
    p = np.asarray(p, dtype=float)
    sq = np.sum(F ** 2, axis=1)
    live = sq > 0
    if np.any(p[live] <= 0):
        return np.inf
    L = F.sum(axis=0)
    return float((np.sum(sq[live] / p[live]) - L @ L) / M)


def _reweight(counts, p, M):
    w = np.zeros(counts.shape, dtype=float)
    live = p > 0
    w[..., live] = counts[..., live] / (M * p[live])
    return w


def _check_budget(M):
    if int(M) != M or M < 1:
        raise ValueError(f"budget M must be a positive integer, got {M}")
    return int(M)


def importance_sampling(F, M, rng, size=None) -> np.ndarray:
    """Hilbert importance sampling.

    Draw ``M`` indices with probability ``sigma_n / sigma`` and weight each
    selected point by ``(sigma / sigma_n) (M_n / M)``. Every weight is unbiased
    and the expected squared error is ``sigma^2 eta^2 / M``.

    Parameters
    ----------
    F : (N, J) array of log-likelihood feature vectors.
    M : number of draws; the support has at most M points.
    rng : numpy Generator.
    size : optional number of independent replications (returns ``(size, N)``).
    """
    F = as_features(F)
    M = _check_budget(M)
    p = sampling_probabilities(row_norms(F))
    return _reweight(multinomial(rng, M, p, size), p, M)


def uniform_coreset(sensitivities, M, rng, size=None) -> np.ndarray:
    """Sensitivity-based importance sampling (the classical uniform-norm coreset)."""
    M = _check_budget(M)
    p = sampling_probabilities(sensitivities)
    return _reweight(multinomial(rng, M, p, size), p, M)


def uniform_random(N, M, rng, size=None) -> np.ndarray:
    """Uniform random subsample with weights ``N M_n / M``."""
    M = _check_budget(M)
    if N < 1:
        raise ValueError("N must be at least 1")
    p = np.full(N, 1.0 / N)
    return _reweight(multinomial(rng, M, p, size), p, M)


@dataclass
class FWStep:
    t: int
    vertex: int
    gamma: float
    objective: float  # squared error after this step


@dataclass
class FWTrace:
    """Record of a Frank-Wolfe run.

    ``init_vertex`` / ``init_objective`` describe the initialization;
    ``steps[k]`` is iteration ``k + 1``. ``converged`` is set when the run
    stopped early because the residual vanished.
    """

    init_vertex: int
    init_objective: float
    steps: List[FWStep] = field(default_factory=list)
    converged: bool = False

    @property
    def objectives(self) -> np.ndarray:
        return np.array([self.init_objective] + [s.objective for s in self.steps])

    @property
    def gammas(self) -> np.ndarray:
        return np.array([s.gamma for s in self.steps])

    def replay(self, N, sigma_n):
        """Yield ``(w_t, vertex, gamma)`` for each recorded step, ``w_t`` before the step."""
        sigma = float(np.sum(sigma_n))
        w = np.zeros(N)
        w[self.init_vertex] = sigma / sigma_n[self.init_vertex]
        for s in self.steps:
            yield w.copy(), s.vertex, s.gamma
            w *= 1.0 - s.gamma
            w[s.vertex] += s.gamma * sigma / sigma_n[s.vertex]


def frank_wolfe(F, M, step_rule="line-search", tol=1e-12) -> Tuple[np.ndarray, FWTrace]:
    """Hilbert Frank-Wolfe coreset construction.

    Minimizes ``|sum_n w_n F_n - sum_n F_n|^2`` over the polytope
    ``w >= 0, sum_n sigma_n w_n = sigma`` whose vertices are the scaled unit
    vectors ``sigma / sigma_n e_n``. Starts at the vertex most aligned with the
    full sum and runs ``M - 1`` iterations, so the support is at most ``M``.

    Each iteration costs O(NJ): it uses the running weighted sum rather than
    the N x N kernel.

    Parameters
    ----------
    F : (N, J) feature matrix.
    M : budget (initialization plus ``M - 1`` iterations).
    step_rule : ``"line-search"`` for the exact closed-form step, or
        ``"fixed"`` for ``gamma = 2 / (3t + 4)``, ``t = 0, 1, ...``.
    tol : stop early once the residual norm falls below ``tol * sigma``.

    Returns
    -------
    w : (N,) weights.
    trace : :class:`FWTrace`.
    """
    if step_rule not in ("line-search", "fixed"):
        raise ValueError(f"unknown step_rule {step_rule!r}; use 'line-search' or 'fixed'")
    F = as_features(F)
    M = _check_budget(M)
    sigma_n = row_norms(F)
    sigma = float(sigma_n.sum())
    if sigma == 0.0:
        raise DegenerateProblemError()
    live = sigma_n > 0
    inv_sigma_n = np.zeros_like(sigma_n)
    inv_sigma_n[live] = 1.0 / sigma_n[live]

    L = F.sum(axis=0)

    def select(direction):
        # argmax of <direction, F_n / sigma_n> over nonzero rows; np.argmax keeps the lowest index on ties
        scores = np.where(live, (F @ direction) * inv_sigma_n, -np.inf)
        return int(np.argmax(scores))

    f = select(L)
    w = np.zeros(F.shape[0])
    w[f] = sigma / sigma_n[f]
    Lw = w[f] * F[f]
    resid = L - Lw
    trace = FWTrace(init_vertex=f, init_objective=float(resid @ resid))

    for t in range(M - 1):
        if np.sqrt(resid @ resid) <= tol * sigma:
            trace.converged = True
            break
        f = select(resid)
        vertex = (sigma / sigma_n[f]) * F[f]
        d = vertex - Lw
        if step_rule == "line-search":
            num = d @ resid
            den = d @ d
            if den <= 0.0 or num <= 0.0:
                # the best vertex cannot reduce the error: the iterate is optimal
                trace.converged = True
                break
            gamma = float(num / den)
        else:
            gamma = 2.0 / (3.0 * t + 4.0)
        w *= 1.0 - gamma
        w[f] += gamma * sigma / sigma_n[f]
        Lw = Lw + gamma * d
        resid = L - Lw
        trace.steps.append(FWStep(t=t + 1, vertex=f, gamma=gamma, objective=float(resid @ resid)))
    return w, trace


def merge_distributed(parts: Sequence[Tuple[Sequence[int], np.ndarray]], N=None) -> np.ndarray:
    """Concatenate per-node coreset weights into one length-N vector.

    ``parts`` is a list of ``(indices, weights)`` where ``weights[k]`` belongs to
    global datapoint ``indices[k]``. The index sets must partition
    ``range(N)``. Weights are copied unchanged.
    """
    idx = [np.asarray(i, dtype=int).ravel() for i, _ in parts]
    wts = [np.asarray(w, dtype=float).ravel() for _, w in parts]
    for k, (i, w) in enumerate(zip(idx, wts)):
        if i.shape != w.shape:
            raise ValueError(f"part {k}: {i.size} indices but {w.size} weights")
    all_idx = np.concatenate(idx) if idx else np.array([], dtype=int)
    if N is None:
        N = int(all_idx.max()) + 1 if all_idx.size else 0
    if all_idx.size and (all_idx.min() < 0 or all_idx.max() >= N):
        raise ValueError(f"indices out of range for N={N}")
    hits = np.bincount(all_idx, minlength=N)
    if np.any(hits > 1):
        raise ValueError(f"overlapping partition: index {int(np.argmax(hits > 1))} appears in several parts")
    if np.any(hits == 0):
        raise ValueError(f"incomplete partition: index {int(np.argmin(hits))} is not covered")
    merged = np.zeros(N)
    for i, w in zip(idx, wts):
        merged[i] = w
    return merged
