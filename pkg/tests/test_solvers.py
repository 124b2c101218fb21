"""Solver loop behavior, baselines, and the convergence-rate estimator."""

import numpy as np
import pytest

from tuckreg import measurement as meas, model as mdl, projection as pj, solvers as sv, tensor as tn

DIMS, RANK, SP = (6, 6, 6), (2, 2, 2), (2, 2, 2)


def make_data(seed=0, m=120, sigma=0.0):
    truth = mdl.gen_model(DIMS, RANK, SP, 0.5, seed)
    b = truth.compose()
    op = meas.LinearMapSpec(m=m, dims=DIMS, seed=seed + 50)
    return b, meas.synthesize(b, op, sigma, noise_seed=seed + 99)


def tpgd_cfg(**kw):
    base = dict(method="tpgd", mu=1.0, max_iters=200, tol=1e-10, rank=RANK, sparsity=SP)
    base.update(kw)
    return sv.SolverConfig(**base)


def test_zero_response_fixed_point():
    op = meas.LinearMapSpec(m=10, dims=DIMS, seed=1)
    data = meas.RegressionDataset(y=np.zeros(10), map=op)
    rep = sv.tpgd(data, tpgd_cfg())
    assert rep.iters_run == 0 and rep.stop_reason == "tol"
    assert tn.frob_norm(rep.estimate) == 0.0
    assert len(rep.residuals) == 1


def test_first_iteration_matches_hand_composition():
    b, data = make_data(seed=3)
    rep = sv.tpgd(data, tpgd_cfg(max_iters=1, tol=0.0, mu=0.7))
    hand = pj.project_sparse_hosvd(
        0.7 * data.map.adjoint(data.y), pj.ProjectionConfig(rank=RANK, sparsity=SP)
    ).compose()
    np.testing.assert_allclose(rep.estimate, hand, atol=1e-12)
    assert len(rep.residuals) == rep.iters_run + 1


def test_tpgd_recovers_and_is_deterministic():
    b, data = make_data(seed=4)
    r1 = sv.tpgd(data, tpgd_cfg())
    r2 = sv.tpgd(data, tpgd_cfg())
    np.testing.assert_array_equal(r1.estimate, r2.estimate)
    assert r1.residuals == r2.residuals
    assert tn.frob_norm(b - r1.estimate) / tn.frob_norm(b) <= 1e-3
    # noise-free residual floor and near-monotone decrease
    assert r1.residuals[-1] <= 1e-10 * np.sum(data.y**2)
    drops = sum(1 for p, q in zip(r1.residuals, r1.residuals[1:]) if q <= p)
    assert drops >= 0.95 * (len(r1.residuals) - 1)


def test_tpgd_structural_certificate():
    _, data = make_data(seed=5)
    rep = sv.tpgd(data, tpgd_cfg(max_iters=3, tol=0.0))
    assert rep.factors is not None
    assert rep.factors.rank == RANK
    assert all(s <= cap for s, cap in zip(rep.factors.sparsity, SP))


def test_tpgd_divergence_guard():
    _, data = make_data(seed=6)
    with pytest.raises(sv.DivergenceError) as err:
        sv.tpgd(data, tpgd_cfg(mu=200.0, tol=0.0))
    assert err.value.iteration >= 1


def test_tpgd_validation():
    _, data = make_data(seed=7)
    with pytest.raises(ValueError):
        sv.tpgd(data, tpgd_cfg(rank=(9, 2, 2)))
    with pytest.raises(ValueError):
        sv.SolverConfig(method="tpgd", mu=0.0, rank=RANK, sparsity=SP)
    with pytest.raises(ValueError):
        sv.SolverConfig(method="nope", rank=RANK, sparsity=SP)


def test_pgd_tucker_low_rank_recovery():
    # exactly low-Tucker-rank truth, m >= 5x its free parameter count
    rng = np.random.default_rng(8)
    core = rng.standard_normal(RANK)
    factors = [np.linalg.qr(rng.standard_normal((n, 2)))[0] for n in DIMS]
    b = tn.tucker_compose(core, factors)
    dof = int(np.prod(RANK)) + sum(n * r for n, r in zip(DIMS, RANK))
    op = meas.LinearMapSpec(m=5 * dof, dims=DIMS, seed=77)
    data = meas.RegressionDataset(y=op.apply(b), map=op)
    rep = sv.pgd_tucker(data, sv.SolverConfig(method="pgd_tucker", mu=1.0, max_iters=300, tol=1e-12, rank=RANK))
    assert tn.frob_norm(b - rep.estimate) / tn.frob_norm(b) <= 1e-3


def test_soft_threshold_closed_form():
    assert sv.soft_threshold(np.array(1.2), 0.5) == pytest.approx(0.7, abs=0)
    assert sv.soft_threshold(np.array(-0.3), 0.5) == 0.0
    np.testing.assert_allclose(sv.soft_threshold(np.array([-2.0, 0.1]), 0.5), [-1.5, 0.0])


def test_lasso_huge_lambda_gives_zero():
    _, data = make_data(seed=9, m=30)
    rep = sv.lasso_ista(data, sv.SolverConfig(method="lasso", max_iters=50, tol=1e-12, lam=1e6))
    assert tn.frob_norm(rep.estimate) == 0.0


def test_lasso_zero_lambda_matches_least_squares():
    dims = (3, 3)
    rng = np.random.default_rng(10)
    b = rng.standard_normal(dims)
    op = meas.LinearMapSpec(m=40, dims=dims, seed=11)
    data = meas.RegressionDataset(y=op.apply(b), map=op)
    design = np.stack([op.sensing_tensor(i).ravel() for i in range(op.m)])
    oracle = np.linalg.lstsq(design, data.y, rcond=None)[0].reshape(dims)
    rep = sv.lasso_ista(data, sv.SolverConfig(method="lasso", max_iters=5000, tol=1e-16, lam=0.0))
    assert tn.frob_norm(rep.estimate - oracle) / tn.frob_norm(oracle) <= 1e-6


def test_lasso_objective_nonincreasing():
    _, data = make_data(seed=12, m=60)
    rep = sv.lasso_ista(data, sv.SolverConfig(method="lasso", max_iters=40, tol=0.0, lam=0.05))
    assert rep.iters_run == 40


def test_fit_dispatch():
    _, data = make_data(seed=13)
    rep = sv.fit(data, tpgd_cfg(max_iters=2, tol=0.0))
    assert rep.iters_run == 2
    assert rep.wall_time_per_iter == pytest.approx(rep.wall_time_total / 2)


def test_convergence_rate_geometric_and_constant():
    out = sv.convergence_rate([0.5**k for k in range(30)])
    assert out["gamma_hat"] == pytest.approx(0.5, rel=1e-12)
    assert out["r2"] == pytest.approx(1.0, abs=1e-12)
    assert not out["rejected"]
    flat = sv.convergence_rate([2.0] * 10)
    assert flat["rejected"] and flat["gamma_hat"] == 1.0
    with pytest.raises(ValueError):
        sv.convergence_rate([1.0, 0.5])


def test_report_save(tmp_path):
    _, data = make_data(seed=14)
    rep = sv.tpgd(data, tpgd_cfg(max_iters=3, tol=0.0))
    rep.save(tmp_path / "fit")
    est = tn.read_tnsr(tmp_path / "fit" / "estimate.tnsr")
    np.testing.assert_array_equal(est, rep.estimate)
