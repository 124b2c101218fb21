"""Experiment driver: grid sweeps over (m, sigma, method), estimation- and
classification-error metrics, and CSV emission for external plotting.
"""

import csv
import hashlib
import io
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import measurement as meas
from . import model as mdl
from . import solvers
from . import tensor as tn

CSV_HEADER = [
    "method", "m", "sigma", "trial", "seed", "normalized_error",
    "iters", "stop_reason", "wall_time_s", "per_iter_time_s",
]


@dataclass(frozen=True)
class SweepConfig:
    dims: tuple
    rank: tuple
    sparsity: tuple
    a: float = 0.5
    base_seed: int = 0
    m_grid: tuple = ()
    sigma_grid: tuple = (0.0,)
    methods: tuple = ("tpgd",)
    trials: int = 1
    solver_overrides: dict = field(default_factory=dict)
    threads: int = 1

    def __post_init__(self):
        if not self.m_grid or not self.sigma_grid or not self.methods:
            raise ValueError("m_grid, sigma_grid, and methods must be nonempty")
        if self.trials < 1 or self.threads < 1:
            raise ValueError("trials and threads must be >= 1")
        for method in self.methods:
            if method not in ("tpgd", "pgd_tucker", "lasso"):
                raise ValueError(f"unknown method {method!r}")


@dataclass(frozen=True)
class SweepRow:
    method: str
    m: int
    sigma: float
    trial: int
    seed: int
    normalized_error: float
    iters: int
    stop_reason: str
    wall_time: float
    per_iter_time: float

    def csv_values(self):
        err = "inf" if np.isinf(self.normalized_error) else repr(self.normalized_error)
        return [
            self.method, str(self.m), repr(float(self.sigma)), str(self.trial), str(self.seed),
            err, str(self.iters), self.stop_reason,
            f"{self.wall_time:.6f}", f"{self.per_iter_time:.6f}",
        ]


def trial_seed(base_seed, method, m, sigma, trial):
    """Stable 63-bit seed for one sweep cell trial (independent of hash seed)."""
    key = f"{base_seed}|{method}|{m}|{float(sigma)!r}|{trial}".encode()
    return int.from_bytes(hashlib.sha256(key).digest()[:8], "little") >> 1


def normalized_error(truth, est):
    truth = np.asarray(truth)
    est = np.asarray(est)
    if truth.shape != est.shape:
        raise ValueError(f"shape mismatch: {truth.shape} vs {est.shape}")
    nt = tn.frob_norm(truth)
    if nt == 0:
        raise ValueError("truth tensor must be nonzero")
    return tn.frob_norm(truth - est) / nt


def _solver_config(cfg, method):
    opts = {
        "method": method,
        "rank": cfg.rank,
        "sparsity": cfg.sparsity,
    }
    opts.update(cfg.solver_overrides.get(method, {}))
    return solvers.SolverConfig(**opts)


def run_trial(cfg, method, m, sigma, trial):
    """One fully seeded generate/fit/evaluate cycle; returns a SweepRow."""
    seed = trial_seed(cfg.base_seed, method, m, sigma, trial)
    truth = mdl.gen_model(cfg.dims, cfg.rank, cfg.sparsity, cfg.a, seed)
    b = truth.compose()
    linmap = meas.LinearMapSpec(m=m, dims=cfg.dims, seed=seed + 1)
    data = meas.synthesize(b, linmap, sigma, noise_seed=seed + 2)
    scfg = _solver_config(cfg, method)
    t0 = time.monotonic()
    try:
        report = solvers.fit(data, scfg)
        err = normalized_error(b, report.estimate)
        iters, stop = report.iters_run, report.stop_reason
        wall = report.wall_time_total
    except solvers.DivergenceError as exc:
        err = float("inf")
        iters, stop = exc.iteration, "diverged"
        wall = time.monotonic() - t0
    return SweepRow(
        method=method, m=m, sigma=float(sigma), trial=trial, seed=seed,
        normalized_error=err, iters=iters, stop_reason=stop,
        wall_time=wall, per_iter_time=wall / max(iters, 1),
    )


def _run_trial_args(args):
    return run_trial(*args)


def run_sweep(cfg, csv_path=None):
    """Run the full grid; rows come back in canonical sort order regardless of
    execution order, and optionally land in a CSV file."""
    jobs = [
        (cfg, method, m, sigma, trial)
        for method in cfg.methods
        for m in cfg.m_grid
        for sigma in cfg.sigma_grid
        for trial in range(cfg.trials)
    ]
    if cfg.threads > 1:
        with ProcessPoolExecutor(max_workers=cfg.threads) as pool:
            rows = list(pool.map(_run_trial_args, jobs))
    else:
        rows = [run_trial(*job) for job in jobs]
    rows.sort(key=lambda r: (r.method, r.m, r.sigma, r.trial))
    if csv_path is not None:
        with open(csv_path, "w", newline="") as fh:
            write_csv(fh, rows)
    return rows


def write_csv(fh, rows):
    w = csv.writer(fh, lineterminator="\n")
    w.writerow(CSV_HEADER)
    for row in rows:
        w.writerow(row.csv_values())


def rows_to_csv_text(rows):
    buf = io.StringIO()
    write_csv(buf, rows)
    return buf.getvalue()


def summarize(rows):
    """Per-(method, m, sigma) cell: median / p25 / p75 of normalized error,
    with linear interpolation between order statistics."""
    cells = {}
    for row in rows:
        cells.setdefault((row.method, row.m, row.sigma), []).append(row.normalized_error)
    out = {}
    for key in sorted(cells):
        vals = np.sort(np.asarray(cells[key]))
        # interpolating between an inf order statistic and anything else
        # raises a spurious invalid-value warning; the inf result is wanted
        with np.errstate(invalid="ignore"):
            stats = {
                "median": float(np.percentile(vals, 50)),
                "p25": float(np.percentile(vals, 25)),
                "p75": float(np.percentile(vals, 75)),
            }
        # interpolating between two inf order statistics yields nan; the
        # ordering contract (inf above all finite values) wants inf
        out[key] = {
            k: (np.inf if np.isnan(v) and np.isinf(vals).any() else v)
            for k, v in stats.items()
        }
    return out


def classify_metrics(predictions, labels, threshold=0.5):
    """Specificity, sensitivity, and their harmonic mean for thresholded scores."""
    predictions = np.asarray(predictions, dtype=np.float64)
    labels = np.asarray(labels)
    if predictions.shape != labels.shape:
        raise ValueError("predictions and labels must have equal length")
    if not np.all(np.isin(labels, (0, 1))):
        raise ValueError("labels must be binary")
    predicted = predictions > threshold
    neg, pos = labels == 0, labels == 1
    if not neg.any() or not pos.any():
        raise ValueError("both classes must be present")
    specificity = float(np.sum(~predicted & neg) / np.sum(neg))
    sensitivity = float(np.sum(predicted & pos) / np.sum(pos))
    total = specificity + sensitivity
    harmonic = 2.0 * specificity * sensitivity / total if total > 0 else 0.0
    return {"specificity": specificity, "sensitivity": sensitivity, "harmonic_mean": harmonic}
