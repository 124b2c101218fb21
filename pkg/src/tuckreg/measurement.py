"""Implicit seed-defined sub-Gaussian linear measurement operator.

Sensing tensors are regenerated on demand from (seed, i) counter-based
streams, so forward/adjoint application keeps peak extra memory at one
tensor regardless of the sample count m.
"""

import json
import math
import os
from dataclasses import dataclass

import numpy as np

from . import tensor as tn

DISTRIBUTIONS = ("gaussian", "rademacher", "uniform")


def _row_rng(seed, i):
    # Philox keyed on (seed, i): cheap to construct, order-independent streams.
    key = np.array([int(seed) & 0xFFFFFFFFFFFFFFFF, int(i)], dtype=np.uint64)
    return np.random.Generator(np.random.Philox(key=key))


@dataclass(frozen=True)
class LinearMapSpec:
    """m sensing tensors with i.i.d. entries of variance 1/m, defined by a seed."""
    m: int
    dims: tuple
    seed: int
    distribution: str = "gaussian"

    def __post_init__(self):
        object.__setattr__(self, "dims", tuple(int(n) for n in self.dims))
        if self.m < 1:
            raise ValueError("sample count m must be >= 1")
        if self.distribution not in DISTRIBUTIONS:
            raise ValueError(f"unknown distribution {self.distribution!r}")

    def sensing_tensor(self, i):
        """Regenerate the i-th sensing tensor (0-based)."""
        if not 0 <= i < self.m:
            raise ValueError(f"index {i} out of range [0, {self.m})")
        rng = _row_rng(self.seed, i)
        size = self.dims
        scale = 1.0 / math.sqrt(self.m)
        if self.distribution == "gaussian":
            x = rng.standard_normal(size) * scale
        elif self.distribution == "rademacher":
            x = np.where(rng.random(size) < 0.5, -scale, scale)
        else:  # uniform on [-sqrt(3/m), sqrt(3/m)], variance 1/m
            half = math.sqrt(3.0) * scale
            x = rng.uniform(-half, half, size)
        return x

    def apply(self, z):
        """y_i = <X_i, Z> for i in [0, m)."""
        z = np.asarray(z)
        if z.shape != self.dims:
            raise ValueError(f"tensor shape {z.shape} != map dims {self.dims}")
        zf = z.ravel()
        y = np.empty(self.m)
        for i in range(self.m):
            y[i] = np.dot(self.sensing_tensor(i).ravel(), zf)
        return y

    def adjoint(self, v):
        """sum_i v_i X_i, accumulated in fixed index order."""
        v = np.asarray(v, dtype=np.float64)
        if v.shape != (self.m,):
            raise ValueError(f"vector length {v.shape} != m {self.m}")
        out = np.zeros(self.dims)
        for i in range(self.m):
            out += v[i] * self.sensing_tensor(i)
        return out


@dataclass(frozen=True)
class RegressionDataset:
    y: np.ndarray
    map: LinearMapSpec
    sigma: float = 0.0
    noise_seed: int = 0
    truth: object = None

    def __post_init__(self):
        y = np.asarray(self.y, dtype=np.float64)
        if y.shape != (self.map.m,) or not np.all(np.isfinite(y)):
            raise ValueError("response vector must be finite with length m")
        object.__setattr__(self, "y", y)


def synthesize(truth_tensor, linmap, sigma, noise_seed, truth=None):
    """y = X(B) + eta with eta ~ Gaussian(0, sigma^2 I), deterministic per seeds."""
    if sigma < 0:
        raise ValueError("noise std must be >= 0")
    y = linmap.apply(truth_tensor)
    if sigma > 0:
        rng = _row_rng(noise_seed, 0xE7A)
        y = y + sigma * rng.standard_normal(linmap.m)
    return RegressionDataset(y=y, map=linmap, sigma=sigma, noise_seed=noise_seed, truth=truth)


def rip_probe(op, dims, rank, sparsity, tau, trials, seed):
    """Monte-Carlo lower estimate of the restricted isometry constant.

    Samples random structured tensors with core l1 norm tau and unit-norm
    factor columns, and records |  ||X(Z)||^2 / ||Z||_F^2 - 1 | per trial.
    """
    from . import model as mdl

    if trials < 1:
        raise ValueError("trials must be >= 1")
    samples = []
    for t in range(trials):
        f = mdl.gen_model(dims, rank, sparsity, a=0.0, seed=(int(seed) << 20) + t)
        g = mdl.normalize(f)
        core = g.core * (tau / g.tau) if g.tau > 0 else g.core
        z = tn.tucker_compose(core, g.factors)
        nz = tn.frob_norm(z)
        if nz == 0:
            continue
        ratio = float(np.sum(op.apply(z) ** 2)) / nz**2
        samples.append(abs(ratio - 1.0))
    return {"delta_hat": max(samples, default=0.0), "samples": samples}


def save_dataset(path, data, model_ref=None):
    """Write dataset: JSON manifest plus raw little-endian f64 response file."""
    os.makedirs(path, exist_ok=True)
    with open(os.path.join(path, "y.f64"), "wb") as fh:
        fh.write(data.y.astype("<f8").tobytes())
    manifest = {
        "m": data.map.m,
        "dims": list(data.map.dims),
        "seed": data.map.seed,
        "distribution": data.map.distribution,
        "sigma": data.sigma,
        "noise_seed": data.noise_seed,
        "model_ref": model_ref,
    }
    with open(os.path.join(path, "manifest.json"), "w") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True)
        fh.write("\n")


def load_dataset(path):
    with open(os.path.join(path, "manifest.json")) as fh:
        man = json.load(fh)
    linmap = LinearMapSpec(
        m=man["m"], dims=tuple(man["dims"]), seed=man["seed"], distribution=man["distribution"]
    )
    y = np.frombuffer(open(os.path.join(path, "y.f64"), "rb").read(), dtype="<f8")
    data = RegressionDataset(
        y=y.copy(), map=linmap, sigma=man["sigma"], noise_seed=man["noise_seed"]
    )
    return data, man
