"""Experiment orchestration shared by the CLI and the scripts.

Randomness is keyed by ``(seed, purpose, trial)`` through
``numpy.random.SeedSequence`` spawn keys, so every trial owns an independent
generator and results do not depend on execution order or worker count.
"""

import csv
import json
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import List, Optional, Tuple

import numpy as np

from . import bounds as bnd
from .constructors import frank_wolfe, importance_sampling, uniform_coreset, uniform_random
from .errors import ConfigError
from .geometry import approximation_error, compute_diagnostics
from .io import dump_weights, ingest_csv, load_weights
from .models import (Dataset, GaussianMeanModel, gaussian_coreset_posterior, gaussian_exact_posterior,
                     gaussian_kl, gaussian_sensitivity, make_model)
from .projection import (ProjectionConfig, exact_gaussian_embedding, exact_posterior_weighting,
                         laplace_weighting, prior_weighting, project)

ALGORITHMS = ("fw", "is", "unif", "rand")
NORMS = ("fisher", "l2", "exact-gaussian")
WEIGHTINGS = ("laplace", "prior", "exact-posterior")
MODELS = ("gaussian", "logistic", "poisson")

SYNTH_COLUMNS = ("trial", "algorithm", "M", "J", "KL", "error", "sigma", "eta", "eta_bar")

_PROJECTION_KEY = 0
_TRIAL_KEY = 1
_DATA_KEY = 2


def rng_for(seed, *key):
    return np.random.default_rng(np.random.SeedSequence(seed, spawn_key=tuple(key)))


@dataclass
class ExperimentConfig:
    algorithm: str = "fw"
    norm: str = "fisher"
    weighting: str = "laplace"
    M: List[int] = field(default_factory=lambda: [10])
    J: int = 500
    seed: int = 0
    trials: int = 1
    model: str = "gaussian"
    input: Optional[str] = None
    label_col: Optional[str] = None
    output: Optional[str] = None
    delta: float = 0.01
    # synthetic Gaussian study
    N: int = 1000
    D: int = 2
    algorithms: Tuple[str, ...] = ALGORITHMS
    sanity_row: bool = False
    workers: int = 1

    def validate(self):
        if not self.M:
            raise ConfigError("M list must be nonempty")
        if any(m < 1 for m in self.M) or list(self.M) != sorted(set(self.M)):
            raise ConfigError(f"M list must be strictly ascending positive integers, got {self.M}")
        if self.trials < 1:
            raise ConfigError(f"trials must be >= 1, got {self.trials}")
        if self.J < 1:
            raise ConfigError(f"J must be >= 1, got {self.J}")
        if not 0.0 < self.delta < 1.0:
            raise ConfigError(f"delta must lie in (0, 1), got {self.delta}")
        for name, val, allowed in (("algorithm", self.algorithm, ALGORITHMS), ("norm", self.norm, NORMS),
                                   ("weighting", self.weighting, WEIGHTINGS), ("model", self.model, MODELS)):
            if val not in allowed:
                raise ConfigError(f"{name} must be one of {allowed}, got {val!r}")
        for a in self.algorithms:
            if a not in ALGORITHMS:
                raise ConfigError(f"algorithm must be one of {ALGORITHMS}, got {a!r}")
        problems = []
        if self.model != "gaussian":
            if self.norm == "exact-gaussian":
                problems.append("norm=exact-gaussian requires model=gaussian")
            if self.weighting == "exact-posterior":
                problems.append("weighting=exact-posterior requires model=gaussian")
            if self.algorithm == "unif":
                problems.append("algorithm=unif (closed-form sensitivities) requires model=gaussian")
        if self.norm == "exact-gaussian" and self.weighting != "exact-posterior":
            problems.append("norm=exact-gaussian is only defined with weighting=exact-posterior")
        if problems:
            raise ConfigError("unsupported combination: " + "; ".join(problems) + ". " + VALID_COMBINATIONS)
        return self


VALID_COMBINATIONS = (
    "Valid combinations: model in {gaussian, logistic, poisson} with norm in {fisher, l2} and "
    "weighting in {laplace, prior}; model=gaussian additionally allows weighting=exact-posterior, "
    "norm=exact-gaussian (with weighting=exact-posterior) and algorithm=unif.")


# -- features ------------------------------------------------------------------

def make_weighting(cfg, model, data):
    if cfg.weighting == "laplace":
        return laplace_weighting(model, data)
    if cfg.weighting == "prior":
        return prior_weighting(model, data)
    return exact_posterior_weighting(data, model.prior_mean)


def build_features(cfg: ExperimentConfig, data: Dataset, model=None, rng=None):
    """Feature matrix for ``data`` under the configured norm.

    Returns ``(F, J)``; ``J`` is the feature dimension actually used.
    """
    model = model or make_model(cfg.model, data)
    if cfg.norm == "exact-gaussian":
        F = exact_gaussian_embedding(data.X, gaussian_exact_posterior(data.X, model.prior_mean))
        return F, F.shape[1]
    weighting = make_weighting(cfg, model, data)
    pcfg = ProjectionConfig(J=cfg.J, norm_kind=cfg.norm, D=model.dim(data), seed=cfg.seed)
    rng = rng if rng is not None else rng_for(cfg.seed, _PROJECTION_KEY)
    return project(model, data, weighting, pcfg, rng), cfg.J


def construct(algorithm, F, M, rng, data=None):
    """Run one construction on features ``F``; ``unif`` needs the Gaussian ``data``."""
    if algorithm == "fw":
        return frank_wolfe(F, M)[0]
    if algorithm == "is":
        return importance_sampling(F, M, rng)
    if algorithm == "rand":
        return uniform_random(F.shape[0], M, rng)
    if algorithm == "unif":
        if data is None:
            raise ConfigError("algorithm=unif needs Gaussian observations for its sensitivities")
        return uniform_coreset(gaussian_sensitivity(data.X), M, rng)
    raise ConfigError(f"unknown algorithm {algorithm!r}")


# -- construct ----------------------------------------------------------------

def weights_filename(algorithm, M, trial, trials):
    suffix = f"_trial{trial:03d}" if trials > 1 else ""
    return f"weights_{algorithm}_M{M}{suffix}.json"


def run_construct(cfg: ExperimentConfig):
    """Build coresets for every M (and trial) and write weights plus metadata.

    Writes one weights JSON per (M, trial) into ``cfg.output`` and a
    ``metadata.json`` listing, per file, the diagnostics, the achieved error
    in feature space, the error bounds and the wall-clock time.
    """
    cfg.validate()
    if cfg.input is None:
        raise ConfigError("construct needs --input")
    if cfg.output is None:
        raise ConfigError("construct needs --output (a directory)")
    data = ingest_csv(cfg.input, cfg.label_col)
    model = make_model(cfg.model, data)
    t0 = time.perf_counter()
    F, J = build_features(cfg, data, model)
    feature_time = time.perf_counter() - t0
    diag = compute_diagnostics(F)

    out = Path(cfg.output)
    out.mkdir(parents=True, exist_ok=True)
    records = []
    for trial in range(cfg.trials):
        for M in cfg.M:
            rng = rng_for(cfg.seed, _TRIAL_KEY, trial, M)
            t1 = time.perf_counter()
            w = construct(cfg.algorithm, F, M, rng, data)
            elapsed = time.perf_counter() - t1
            name = weights_filename(cfg.algorithm, M, trial, cfg.trials)
            dump_weights(w, out / name)
            p = bnd.BoundParams.from_diagnostics(diag, M=M, delta=cfg.delta)
            records.append({
                "file": name, "algorithm": cfg.algorithm, "M": M, "trial": trial,
                "support": int(np.count_nonzero(w)), "J": J, "N": len(data),
                "projected_error": approximation_error(F, w),
                **diag.as_dict(),
                "is_bound": bnd.is_bound(p), "fw_bound": bnd.fw_bound(p),
                "wall_clock_s": elapsed, "feature_time_s": feature_time,
            })
    meta = {"config": _config_dict(cfg), "records": records}
    (out / "metadata.json").write_text(json.dumps(meta, indent=1) + "\n")
    return records


def score_weights(cfg: ExperimentConfig, weights_path):
    """Re-derive the features for ``cfg`` and return the error of a saved weights file."""
    data = ingest_csv(cfg.input, cfg.label_col)
    F, _ = build_features(cfg, data)
    return approximation_error(F, load_weights(weights_path, len(data)))


def _config_dict(cfg):
    d = dict(cfg.__dict__)
    d["algorithms"] = list(d["algorithms"])
    return d


# -- diagnose / bounds --------------------------------------------------------

def run_diagnose(cfg: ExperimentConfig):
    cfg.validate()
    data = ingest_csv(cfg.input, cfg.label_col)
    F, J = build_features(cfg, data)
    diag = compute_diagnostics(F)
    return {"N": len(data), "J": J, **diag.as_dict()}


def bounds_table(diag, M_list, delta):
    rows = []
    for M in M_list:
        p = bnd.BoundParams.from_diagnostics(diag, M=M, delta=delta)
        rows.append({
            "M": M,
            "is_bound": bnd.is_bound(p),
            "is_bound_simple": bnd.is_bound_simple(p),
            "fw_bound": bnd.fw_bound(p),
            "fw_bound_fixed_step": bnd.fw_bound(p, step_rule="fixed"),
        })
    return rows


def run_bounds(cfg: ExperimentConfig):
    cfg.validate()
    data = ingest_csv(cfg.input, cfg.label_col)
    F, _ = build_features(cfg, data)
    return bounds_table(compute_diagnostics(F), cfg.M, cfg.delta)


# -- synthetic Gaussian study --------------------------------------------------

def generate_gaussian_data(rng, N, D, prior_mean):
    mu = prior_mean + rng.standard_normal(D)
    return Dataset(mu + rng.standard_normal((N, D)))


def gauss_synth_trial(cfg: ExperimentConfig, trial: int):
    """All constructions and budgets for one synthetic dataset; returns result rows."""
    prior_mean = np.zeros(cfg.D)
    data = generate_gaussian_data(rng_for(cfg.seed, _DATA_KEY, trial), cfg.N, cfg.D, prior_mean)
    model = GaussianMeanModel(prior_mean)
    post = gaussian_exact_posterior(data.X, prior_mean)
    F, J = build_features(cfg, data, model, rng=rng_for(cfg.seed, _PROJECTION_KEY, trial))
    diag = compute_diagnostics(F)
    base = {"trial": trial, "J": J, "sigma": diag.sigma, "eta": diag.eta, "eta_bar": diag.eta_bar}
    rows = []
    for alg in cfg.algorithms:
        for M in cfg.M:
            rng = rng_for(cfg.seed, _TRIAL_KEY, trial, ALGORITHMS.index(alg), M)
            w = construct(alg, F, M, rng, data)
            kl = gaussian_kl(post, gaussian_coreset_posterior(data.X, w, prior_mean))
            rows.append({**base, "algorithm": alg, "M": M, "KL": kl, "error": approximation_error(F, w)})
    if cfg.sanity_row:
        w = np.ones(cfg.N)
        kl = gaussian_kl(post, gaussian_coreset_posterior(data.X, w, prior_mean))
        rows.append({**base, "algorithm": "full", "M": cfg.N, "KL": kl, "error": approximation_error(F, w)})
    return [{k: r[k] for k in SYNTH_COLUMNS} for r in rows]


def run_gauss_synth(cfg: ExperimentConfig):
    """Synthetic Gaussian-mean study; returns rows (and writes CSV if ``cfg.output``).

    Each trial draws ``mu ~ N(0, I)`` and ``N`` observations ``y_n ~ N(mu, I)``,
    runs every algorithm in ``cfg.algorithms`` at every ``M`` and scores each
    coreset by the exact KL divergence from the true posterior to the coreset
    posterior.
    """
    if cfg.model != "gaussian":
        raise ConfigError("gauss-synth requires model=gaussian")
    cfg.validate()
    if cfg.workers > 1:
        with ProcessPoolExecutor(cfg.workers) as pool:
            chunks = list(pool.map(gauss_synth_trial, [cfg] * cfg.trials, range(cfg.trials)))
    else:
        chunks = [gauss_synth_trial(cfg, t) for t in range(cfg.trials)]
    rows = [r for c in chunks for r in c]
    if cfg.output:
        write_rows(rows, cfg.output, SYNTH_COLUMNS)
    return rows


def write_rows(rows, path, columns):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=list(columns))
        writer.writeheader()
        for r in rows:
            writer.writerow({k: (repr(v) if isinstance(v, float) else v) for k, v in r.items()})


def median_table(rows):
    """``{(algorithm, M): median KL}`` over trials."""
    groups = {}
    for r in rows:
        groups.setdefault((r["algorithm"], r["M"]), []).append(r["KL"])
    return {k: float(np.median(v)) for k, v in groups.items()}


def synth_defaults(**kw):
    """Config for the desk-scale Gaussian study: exact Fisher embedding, N=1000, D=2."""
    base = ExperimentConfig(model="gaussian", norm="exact-gaussian", weighting="exact-posterior",
                            M=[5, 50, 500], trials=100, N=1000, D=2)
    return replace(base, **kw)


# -- projection consistency ----------------------------------------------------

def projection_error_trend(J_list=(10, 100, 1000, 10_000), reps=200, N=20, D=2, seed=0):
    """Mean absolute error of projected Fisher inner products against the closed form.

    A single synthetic Gaussian dataset is projected ``reps`` times at each
    ``J`` with the exact posterior as weighting. Returns ``(errors, slope)``
    where ``slope`` is the least-squares slope of ``log error`` on ``log J``;
    ``1/sqrt(J)`` consistency gives a slope near ``-0.5``.
    """
    prior_mean = np.zeros(D)
    data = generate_gaussian_data(rng_for(seed, _DATA_KEY), N, D, prior_mean)
    model = GaussianMeanModel(prior_mean)
    post = gaussian_exact_posterior(data.X, prior_mean)
    weighting = exact_posterior_weighting(data, prior_mean)
    K = exact_gaussian_embedding(data.X, post)
    K = K @ K.T
    errors = []
    for i, J in enumerate(J_list):
        cfg = ProjectionConfig(J=int(J), norm_kind="fisher")
        errs = []
        for r in range(reps):
            F = project(model, data, weighting, cfg, rng_for(seed, _PROJECTION_KEY, i, r))
            errs.append(np.mean(np.abs(F @ F.T - K)))
        errors.append(float(np.mean(errs)))
    slope = float(np.polyfit(np.log(J_list), np.log(errors), 1)[0])
    return errors, slope
