"""Closed-form calculators: covering-number log-bounds for the structured
tensor set and the resulting sample-complexity expression.

All logs are natural. K1 and K2 are unspecified theory constants; callers
supply them (default 1) and no empirical calibration is attempted.
"""

import math
from dataclasses import dataclass


@dataclass(frozen=True)
class BoundInputs:
    dims: tuple
    rank: tuple
    sparsity: tuple
    tau: float = 1.0
    epsilon_cover: float = 0.5
    delta: float = 0.5
    failure_prob: float = 0.1
    k1: float = 1.0
    k2: float = 1.0

    def __post_init__(self):
        object.__setattr__(self, "dims", tuple(int(n) for n in self.dims))
        object.__setattr__(self, "rank", tuple(int(r) for r in self.rank))
        object.__setattr__(self, "sparsity", tuple(int(s) for s in self.sparsity))
        if self.tau <= 0:
            raise ValueError("tau must be > 0")
        if not 0 < self.epsilon_cover < 1:
            raise ValueError("epsilon_cover must lie in (0, 1)")
        if not 0 < self.delta < 1:
            raise ValueError("delta must lie in (0, 1)")
        if not 0 < self.failure_prob < 1:
            raise ValueError("failure_prob must lie in (0, 1)")
        if self.k1 <= 0 or self.k2 <= 0:
            raise ValueError("K1 and K2 must be > 0")

    @property
    def n_bar(self):
        return max(self.dims)

    @property
    def d(self):
        return len(self.dims)


def log_cover_core(rank, tau, eps):
    """Log covering number of the l1 ball of core tensors: prod(r) * ln(3 tau / eps)."""
    if not 0 < eps < 1:
        raise ValueError("eps must lie in (0, 1)")
    if tau <= 0:
        raise ValueError("tau must be > 0")
    return math.prod(rank) * math.log(3.0 * tau / eps)


def log_cover_factor(n, r, s, eps):
    """Log covering number of the column-sparse factor ball: s * r * ln(3 n / eps)."""
    if not 0 < eps < 1:
        raise ValueError("eps must lie in (0, 1)")
    if not 0 <= s <= n:
        raise ValueError("require 0 <= s <= n")
    return s * r * math.log(3.0 * n / eps)


def log_cover_structured_set(inputs):
    """Log covering number of the full structured set in Frobenius metric.

    Combines the core and per-mode factor bounds through the tau*(d+1)
    Lipschitz constant of the composition map:
    prod(r) ln(3 tau (d+1)/eps) + sum_i s_i r_i ln(3 n_bar tau (d+1)/eps).
    """
    lip = inputs.tau * (inputs.d + 1)
    eps = inputs.epsilon_cover
    core = math.prod(inputs.rank) * math.log(3.0 * lip / eps)
    fac = sum(
        s * r * math.log(3.0 * inputs.n_bar * lip / eps)
        for s, r in zip(inputs.sparsity, inputs.rank)
    )
    return core + fac


def sample_complexity(inputs):
    """Sample count sufficient for isometry constant <= delta:
    delta^-2 * max{K1 tau^2 (prod r + sum s_i r_i) ln(3 n_bar d)^2, K2 ln(1/eps)}."""
    param = math.prod(inputs.rank) + sum(
        s * r for s, r in zip(inputs.sparsity, inputs.rank)
    )
    branch1 = inputs.k1 * inputs.tau**2 * param * math.log(3.0 * inputs.n_bar * inputs.d) ** 2
    branch2 = inputs.k2 * math.log(1.0 / inputs.failure_prob)
    return max(branch1, branch2) / inputs.delta**2


def dof_comparison_table(inputs):
    """Order-level free-parameter counts under three modelling assumptions."""
    d = inputs.d
    r_bar = max(inputs.rank)
    s_bar = max(inputs.sparsity)
    n_bar = inputs.n_bar
    return {
        "structured_dof": r_bar**d + s_bar * r_bar * d,
        "tucker_dof": r_bar**d + n_bar * r_bar * d,
        "vector_sparsity_dof": d * (s_bar * r_bar) ** d * math.log(n_bar / (s_bar * r_bar)),
    }
