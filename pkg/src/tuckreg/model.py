"""Rank- and sparsity-structured Tucker models: representation, the synthetic
generator, degrees-of-freedom accounting, and the constructive direct sum of
two structured tensors.
"""

import json
import math
import os
from dataclasses import dataclass, field

import numpy as np

from . import tensor as tn


def substream(seed, *ids):
    """Deterministic child RNG for (seed, ids): fixed stream splitting."""
    return np.random.default_rng(np.random.SeedSequence(entropy=int(seed), spawn_key=tuple(ids)))


@dataclass(frozen=True)
class TuckerFactors:
    """Core tensor plus column-sparse factor matrices.

    factors[i] is an n_i x r_i matrix with at most sparsity[i] nonzeros per
    column; composing the value always yields a rank/sparsity-certified tensor.
    """
    core: np.ndarray
    factors: list = field(default_factory=list)

    def __post_init__(self):
        core = tn.as_tensor(self.core)
        object.__setattr__(self, "core", core)
        factors = [tn.as_tensor(u) for u in self.factors]
        if len(factors) != core.ndim:
            raise ValueError(f"expected {core.ndim} factors, got {len(factors)}")
        for i, u in enumerate(factors):
            if u.ndim != 2 or u.shape[1] != core.shape[i]:
                raise ValueError(f"factor {i} shape {u.shape} inconsistent with core {core.shape}")
        object.__setattr__(self, "factors", factors)

    @property
    def dims(self):
        return tuple(u.shape[0] for u in self.factors)

    @property
    def rank(self):
        return self.core.shape

    @property
    def sparsity(self):
        """Max per-column nonzero count of each factor (structural certificate)."""
        return tuple(
            int(np.max(np.count_nonzero(u, axis=0))) if u.shape[1] else 0 for u in self.factors
        )

    def compose(self):
        return tn.tucker_compose(self.core, self.factors)


@dataclass(frozen=True)
class NormalizedTuckerFactors(TuckerFactors):
    """TuckerFactors with unit-bounded factor columns; tau bounds the core l1 norm."""
    tau: float = 0.0

    def __post_init__(self):
        super().__post_init__()
        for i, u in enumerate(self.factors):
            norms = np.linalg.norm(u, axis=0)
            if np.any(norms > 1 + 1e-12):
                raise ValueError(f"factor {i} has a column with norm > 1")
        if tn.l1_norm(self.core) > self.tau * (1 + 1e-12):
            raise ValueError("core l1 norm exceeds tau")


def normalize(f):
    """Absorb factor column norms into the core, leaving compose() unchanged.

    Returns a NormalizedTuckerFactors whose tau equals the resulting core
    l1 norm.
    """
    core = f.core.copy()
    factors = []
    for i, u in enumerate(f.factors):
        norms = np.linalg.norm(u, axis=0)
        scale = np.where(norms > 0, norms, 1.0)
        factors.append(u / scale)
        core = tn.mode_product(core, np.diag(norms), i)
    tau = tn.l1_norm(core)
    return NormalizedTuckerFactors(core=core, factors=factors, tau=tau)


def gen_model(dims, rank, sparsity, a, seed):
    """Draw a random structured model.

    Each factor column gets exactly s_i nonzero entries at distinct positions
    chosen uniformly at random; nonzero values are (-1)^u (a + |z|) with
    u ~ Bernoulli(1/2) and z standard normal. Core entries are uniform [0, 1).
    Deterministic per seed with per-column substreams.
    """
    dims = tuple(int(n) for n in dims)
    rank = tuple(int(r) for r in rank)
    sparsity = tuple(int(s) for s in sparsity)
    d = len(dims)
    if len(rank) != d or len(sparsity) != d:
        raise ValueError("dims, rank, and sparsity must have equal length")
    if any(r < 1 or r > n for r, n in zip(rank, dims)):
        raise ValueError(f"rank {rank} must satisfy 1 <= r_i <= n_i for dims {dims}")
    if any(s < 1 or s > n for s, n in zip(sparsity, dims)):
        raise ValueError(f"sparsity {sparsity} must satisfy 1 <= s_i <= n_i for dims {dims}")
    if a < 0:
        raise ValueError("magnitude floor a must be >= 0")

    factors = []
    for i, (n, r, s) in enumerate(zip(dims, rank, sparsity)):
        u = np.zeros((n, r))
        for j in range(r):
            rng = substream(seed, i, j)
            support = rng.choice(n, size=s, replace=False)
            signs = np.where(rng.random(s) < 0.5, 1.0, -1.0)
            u[support, j] = signs * (a + np.abs(rng.standard_normal(s)))
        factors.append(u)
    core = substream(seed, d, 0).random(rank)
    return TuckerFactors(core=core, factors=factors)


def degrees_of_freedom(rank, sparsity, dims):
    """Free-parameter count: prod r_i + sum_i r_i s_i ln n_i."""
    return float(np.prod(rank, dtype=np.float64)) + sum(
        r * s * math.log(n) for r, s, n in zip(rank, sparsity, dims)
    )


def direct_sum(za, zb, gamma_a, gamma_b):
    """Structured representation of gamma_a*Za + gamma_b*Zb.

    Block-diagonal core of rank 2r holding the scaled cores, factors
    concatenated columnwise; the composition equals the linear combination
    exactly and the sparsity tuple is unchanged.
    """
    if za.dims != zb.dims or za.rank != zb.rank:
        raise ValueError("operands must share dims and rank tuples")
    rank = za.rank
    core = np.zeros(tuple(2 * r for r in rank))
    core[tuple(slice(0, r) for r in rank)] = gamma_a * za.core
    core[tuple(slice(r, 2 * r) for r in rank)] = gamma_b * zb.core
    factors = [np.hstack([ua, ub]) for ua, ub in zip(za.factors, zb.factors)]
    return TuckerFactors(core=core, factors=factors)


def save_bundle(path, f, meta=None):
    """Write a model bundle: core + factor TNSR files and a JSON manifest."""
    os.makedirs(path, exist_ok=True)
    tn.write_tnsr(os.path.join(path, "core.tnsr"), f.core)
    for i, u in enumerate(f.factors):
        tn.write_tnsr(os.path.join(path, f"factor{i}.tnsr"), u)
    manifest = {
        "dims": list(f.dims),
        "rank": list(f.rank),
        "sparsity": list(f.sparsity),
    }
    manifest.update(meta or {})
    with open(os.path.join(path, "manifest.json"), "w") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True)
        fh.write("\n")


def load_bundle(path):
    with open(os.path.join(path, "manifest.json")) as fh:
        manifest = json.load(fh)
    core = tn.read_tnsr(os.path.join(path, "core.tnsr"))
    factors = [
        tn.read_tnsr(os.path.join(path, f"factor{i}.tnsr")) for i in range(len(manifest["dims"]))
    ]
    return TuckerFactors(core=core, factors=factors), manifest
