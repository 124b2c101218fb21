"""Projected-gradient solvers for the tensor regression model, plus a
vectorized soft-thresholding LASSO baseline and an empirical convergence-rate
estimator for the residual trace.
"""

import json
import math
import os
import time
from dataclasses import dataclass

import numpy as np

from . import tensor as tn
from .projection import ProjectionConfig, project_sparse_hosvd, project_tucker

_DIVERGENCE_FACTOR = 1e6


class DivergenceError(RuntimeError):
    """Raised when the residual blows up or turns non-finite."""

    def __init__(self, iteration, message):
        super().__init__(message)
        self.iteration = iteration


@dataclass(frozen=True)
class SolverConfig:
    method: str = "tpgd"
    mu: float = 1.0
    max_iters: int = 500
    tol: float = 1e-8
    rank: tuple = ()
    sparsity: tuple = ()
    lam: float = 0.0
    projection: ProjectionConfig = None
    init: str = "zero"

    def __post_init__(self):
        if self.method not in ("tpgd", "pgd_tucker", "lasso"):
            raise ValueError(f"unknown method {self.method!r}")
        if self.mu <= 0 or self.tol < 0 or self.max_iters < 1:
            raise ValueError("require mu > 0, tol >= 0, max_iters >= 1")
        if self.init not in ("zero", "spectral"):
            raise ValueError(f"unknown init {self.init!r}")
        object.__setattr__(self, "rank", tuple(int(r) for r in self.rank))
        object.__setattr__(self, "sparsity", tuple(int(s) for s in self.sparsity))


@dataclass
class FitReport:
    estimate: np.ndarray
    residuals: list
    iters_run: int
    wall_time_total: float
    stop_reason: str
    factors: object = None  # TuckerFactors for structured methods

    @property
    def wall_time_per_iter(self):
        return self.wall_time_total / max(self.iters_run, 1)

    def save(self, path):
        os.makedirs(path, exist_ok=True)
        tn.write_tnsr(os.path.join(path, "estimate.tnsr"), self.estimate)
        doc = {
            "residuals": list(self.residuals),
            "iters_run": self.iters_run,
            "wall_time_total_s": self.wall_time_total,
            "wall_time_per_iter_s": self.wall_time_per_iter,
            "stop_reason": self.stop_reason,
        }
        with open(os.path.join(path, "report.json"), "w") as fh:
            json.dump(doc, fh, indent=2)
            fh.write("\n")


def _loss(linmap, y, b):
    r = y - linmap.apply(b)
    return 0.5 * float(np.dot(r, r))


def _pgd(data, cfg, project):
    """Shared gradient-step / project loop for the structured solvers."""
    linmap, y = data.map, data.y
    if cfg.init == "spectral":
        b = project(linmap.adjoint(y)).compose()
    else:
        b = np.zeros(linmap.dims)
    fac = None
    t0 = time.monotonic()
    losses = [_loss(linmap, y, b)]
    stop = "max_iters"
    k = 0
    if losses[0] == 0.0:
        return FitReport(
            estimate=b, residuals=losses, iters_run=0,
            wall_time_total=time.monotonic() - t0, stop_reason="tol", factors=fac,
        )
    for k in range(1, cfg.max_iters + 1):
        grad = linmap.adjoint(linmap.apply(b) - y)
        fac = project(b - cfg.mu * grad)
        b = fac.compose()
        loss = _loss(linmap, y, b)
        if not math.isfinite(loss):
            raise DivergenceError(k, f"non-finite residual at iteration {k}")
        if losses[0] > 0 and loss > _DIVERGENCE_FACTOR * losses[0]:
            raise DivergenceError(k, f"residual exceeded {_DIVERGENCE_FACTOR:g}x initial at iteration {k}")
        prev = losses[-1]
        losses.append(loss)
        if abs(prev - loss) <= cfg.tol * max(prev, np.finfo(float).eps):
            stop = "tol"
            break
    return FitReport(
        estimate=b,
        residuals=losses,
        iters_run=k,
        wall_time_total=time.monotonic() - t0,
        stop_reason=stop,
        factors=fac,
    )


def tpgd(data, cfg):
    """Projected gradient descent with the sparse-HOSVD projection."""
    if any(r > n for r, n in zip(cfg.rank, data.map.dims)) or any(
        s > n for s, n in zip(cfg.sparsity, data.map.dims)
    ):
        raise ValueError("rank/sparsity tuples must be componentwise <= dims")
    pcfg = cfg.projection or ProjectionConfig(rank=cfg.rank, sparsity=cfg.sparsity)
    if pcfg.rank != cfg.rank or pcfg.sparsity != cfg.sparsity:
        pcfg = ProjectionConfig(
            rank=cfg.rank, sparsity=cfg.sparsity, pca_iters=pcfg.pca_iters, pca_tol=pcfg.pca_tol
        )
    return _pgd(data, cfg, lambda t: project_sparse_hosvd(t, pcfg))


def pgd_tucker(data, cfg):
    """Projected gradient descent with plain low-Tucker-rank truncation."""
    if any(r > n for r, n in zip(cfg.rank, data.map.dims)):
        raise ValueError("rank tuple must be componentwise <= dims")
    return _pgd(data, cfg, lambda t: project_tucker(t, cfg.rank))


def soft_threshold(x, t):
    return np.sign(x) * np.maximum(np.abs(x) - t, 0.0)


def operator_norm_sq(linmap, iters=20):
    """Power-method estimate of ||X||_op^2 (the gradient Lipschitz constant)."""
    rng = np.random.Generator(np.random.Philox(key=np.array([0x1A550, 0], dtype=np.uint64)))
    z = rng.standard_normal(linmap.dims)
    z /= tn.frob_norm(z)
    est = 1.0
    for _ in range(iters):
        w = linmap.adjoint(linmap.apply(z))
        est = tn.frob_norm(w)
        if est == 0:
            return 0.0
        z = w / est
    return est


def lasso_ista(data, cfg):
    """Iterative soft-thresholding on the vectorized model."""
    if cfg.lam < 0:
        raise ValueError("lasso weight must be >= 0")
    linmap, y = data.map, data.y
    lip = operator_norm_sq(linmap)
    mu = 0.9 / lip if lip > 0 else cfg.mu
    b = np.zeros(linmap.dims)
    t0 = time.monotonic()

    def objective(bb):
        return _loss(linmap, y, bb) + cfg.lam * tn.l1_norm(bb)

    losses = [objective(b)]
    stop = "max_iters"
    k = 0
    for k in range(1, cfg.max_iters + 1):
        grad = linmap.adjoint(linmap.apply(b) - y)
        b = soft_threshold(b - mu * grad, mu * cfg.lam)
        loss = objective(b)
        if not math.isfinite(loss):
            raise DivergenceError(k, f"non-finite residual at iteration {k}")
        if losses[0] > 0 and loss > _DIVERGENCE_FACTOR * losses[0]:
            raise DivergenceError(k, f"residual exceeded {_DIVERGENCE_FACTOR:g}x initial at iteration {k}")
        prev = losses[-1]
        losses.append(loss)
        if abs(prev - loss) <= cfg.tol * max(prev, np.finfo(float).eps):
            stop = "tol"
            break
    return FitReport(
        estimate=b,
        residuals=losses,
        iters_run=k,
        wall_time_total=time.monotonic() - t0,
        stop_reason=stop,
    )


def fit(data, cfg):
    return {"tpgd": tpgd, "pgd_tucker": pgd_tucker, "lasso": lasso_ista}[cfg.method](data, cfg)


def convergence_rate(report_or_trace):
    """Estimate the per-iteration geometric decay factor of the residual trace.

    Fits log residual against iteration index over the pre-floor segment
    (residuals above 10x the final floor). Returns gamma_hat, r2, and a
    `rejected` flag for non-decaying traces.
    """
    trace = np.asarray(
        report_or_trace.residuals if hasattr(report_or_trace, "residuals") else report_or_trace,
        dtype=np.float64,
    )
    if trace.size < 3:
        raise ValueError("need at least 3 residual points")
    # The floor is the level the trace settles at; long runs jitter around it,
    # so estimate it from the tail median rather than the single last sample
    # (which can land an order of magnitude below the jitter band).
    floor = max(trace[-1], float(np.median(trace[-10:])), 1e-300)
    below = np.nonzero(trace <= 10.0 * floor)[0]
    cut = int(below[0]) if below.size else trace.size
    ks = np.arange(cut)
    if ks.size < 3:
        ks = np.nonzero(trace > 10.0 * max(trace[-1], 1e-300))[0]
    if ks.size < 3:
        if trace.max() <= 1.01 * max(trace.min(), 1e-300):
            return {"gamma_hat": 1.0, "r2": 0.0, "rejected": True}
        raise ValueError("fewer than 3 residual points above the floor")
    logs = np.log(trace[ks])
    slope, intercept = np.polyfit(ks, logs, 1)
    pred = slope * ks + intercept
    ss_res = float(np.sum((logs - pred) ** 2))
    ss_tot = float(np.sum((logs - logs.mean()) ** 2))
    r2 = 1.0 - ss_res / ss_tot if ss_tot > 0 else 0.0
    gamma = float(np.exp(slope))
    return {"gamma_hat": gamma, "r2": max(0.0, min(1.0, r2)), "rejected": gamma >= 1.0}
