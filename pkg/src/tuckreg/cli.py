"""Command-line surface: model/data generation, fitting, sweeps, metric
evaluation, bound calculators, and the isometry probe.

All randomness flows from explicit --seed flags; exit codes are 0 on
success, 2 on argument errors, 1 on runtime errors.
"""

import argparse
import json
import sys

import numpy as np

from . import bounds, harness, measurement as meas, model as mdl, solvers, tensor as tn

PAPER_SCALE = {
    "dims": "50,50,30",
    "rank": "3,3,3",
    "sparsity": "6,6,4",
    "a": "0.5",
    "m_grid": "500,700,900,1100,1300,1500",
    "sigma_grid": "0.1,0.4,0.7",
    "methods": "tpgd,pgd_tucker",
    "trials": "50",
}


def _ints(text):
    return tuple(int(x) for x in text.split(","))


def _floats(text):
    return tuple(float(x) for x in text.split(","))


def _read_vector(path):
    return np.loadtxt(path, ndmin=1)


def _apply_config(argv):
    """Expand --config path.json into equivalent flags (explicit flags win)."""
    if "--config" not in argv:
        return argv
    at = argv.index("--config")
    path = argv[at + 1]
    rest = argv[:at] + argv[at + 2:]
    with open(path) as fh:
        cfg = json.load(fh)
    extra = []
    for key, val in cfg.items():
        flag = "--" + key.replace("_", "-")
        if flag in rest:
            continue
        if isinstance(val, (list, tuple)):
            val = ",".join(str(x) for x in val)
        extra.extend([flag, str(val)])
    return rest[:1] + extra + rest[1:]


def cmd_gen_model(args):
    f = mdl.gen_model(_ints(args.dims), _ints(args.rank), _ints(args.sparsity), args.a, args.seed)
    mdl.save_bundle(args.out, f, meta={"a": args.a, "seed": args.seed})
    print(args.out)
    return 0


def cmd_gen_data(args):
    f, man = mdl.load_bundle(args.model)
    linmap = meas.LinearMapSpec(
        m=args.m, dims=f.dims, seed=args.seed, distribution=args.distribution
    )
    data = meas.synthesize(f.compose(), linmap, args.sigma, args.noise_seed)
    meas.save_dataset(args.out, data, model_ref=args.model)
    print(args.out)
    return 0


def cmd_fit(args):
    data, _ = meas.load_dataset(args.data)
    cfg = solvers.SolverConfig(
        method=args.method,
        mu=args.mu,
        max_iters=args.max_iters,
        tol=args.tol,
        rank=_ints(args.rank) if args.rank else (),
        sparsity=_ints(args.sparsity) if args.sparsity else (),
        lam=args.lam,
        init=args.init,
    )
    report = solvers.fit(data, cfg)
    report.save(args.out)
    print(json.dumps({
        "iters_run": report.iters_run,
        "stop_reason": report.stop_reason,
        "final_residual": report.residuals[-1],
        "wall_time_s": report.wall_time_total,
    }))
    return 0


def cmd_sweep(args):
    overrides = json.loads(args.solver_overrides) if args.solver_overrides else {}
    cfg = harness.SweepConfig(
        dims=_ints(args.dims),
        rank=_ints(args.rank),
        sparsity=_ints(args.sparsity),
        a=args.a,
        base_seed=args.seed,
        m_grid=_ints(args.m_grid),
        sigma_grid=_floats(args.sigma_grid),
        methods=tuple(args.methods.split(",")),
        trials=args.trials,
        solver_overrides=overrides,
        threads=args.threads,
    )
    rows = harness.run_sweep(cfg, csv_path=args.out)
    summary = harness.summarize(rows)
    for (method, m, sigma), stats in summary.items():
        print(f"{method} m={m} sigma={sigma}: median={stats['median']:.4g} "
              f"p25={stats['p25']:.4g} p75={stats['p75']:.4g}")
    return 0


def cmd_eval_error(args):
    truth = tn.read_tnsr(args.truth)
    est = tn.read_tnsr(args.estimate)
    print(repr(harness.normalized_error(truth, est)))
    return 0


def cmd_eval_classify(args):
    metrics = harness.classify_metrics(
        _read_vector(args.predictions), _read_vector(args.labels).astype(int), args.threshold
    )
    print(json.dumps(metrics))
    return 0


def cmd_bound(args):
    inputs = bounds.BoundInputs(
        dims=_ints(args.dims),
        rank=_ints(args.rank),
        sparsity=_ints(args.sparsity),
        tau=args.tau,
        epsilon_cover=args.eps_cover,
        delta=args.delta,
        failure_prob=args.eps,
        k1=args.k1,
        k2=args.k2,
    )
    doc = {
        "log_cover_core": bounds.log_cover_core(inputs.rank, inputs.tau, inputs.epsilon_cover),
        "log_cover_structured_set": bounds.log_cover_structured_set(inputs),
        "sample_complexity": bounds.sample_complexity(inputs),
        "dof_comparison": bounds.dof_comparison_table(inputs),
        "note": "K1/K2 are unspecified theory constants (defaults 1)",
    }
    if args.csv:
        row = [doc["log_cover_core"], doc["log_cover_structured_set"], doc["sample_complexity"]]
        print(",".join(repr(v) for v in row))
    else:
        print(json.dumps(doc, indent=2))
    return 0


def cmd_rip_probe(args):
    dims = _ints(args.dims)
    linmap = meas.LinearMapSpec(
        m=args.m, dims=dims, seed=args.seed, distribution=args.distribution
    )
    result = meas.rip_probe(
        linmap, dims, _ints(args.rank), _ints(args.sparsity),
        args.tau, args.trials, args.probe_seed,
    )
    print(json.dumps({"delta_hat": result["delta_hat"], "trials": len(result["samples"])}))
    return 0


def build_parser():
    p = argparse.ArgumentParser(prog="tuckreg")
    sub = p.add_subparsers(dest="command", required=True)

    gen = sub.add_parser("gen", help="generate models and datasets")
    gsub = gen.add_subparsers(dest="what", required=True)

    gm = gsub.add_parser("model")
    gm.add_argument("--dims", required=True)
    gm.add_argument("--rank", required=True)
    gm.add_argument("--sparsity", required=True)
    gm.add_argument("--a", type=float, default=0.5)
    gm.add_argument("--seed", type=int, required=True)
    gm.add_argument("--out", required=True)
    gm.set_defaults(func=cmd_gen_model)

    gd = gsub.add_parser("data")
    gd.add_argument("--model", required=True)
    gd.add_argument("--m", type=int, required=True)
    gd.add_argument("--seed", type=int, required=True)
    gd.add_argument("--distribution", default="gaussian", choices=meas.DISTRIBUTIONS)
    gd.add_argument("--sigma", type=float, default=0.0)
    gd.add_argument("--noise-seed", type=int, default=0)
    gd.add_argument("--out", required=True)
    gd.set_defaults(func=cmd_gen_data)

    ft = sub.add_parser("fit")
    ft.add_argument("--data", required=True)
    ft.add_argument("--method", default="tpgd", choices=("tpgd", "pgd_tucker", "lasso"))
    ft.add_argument("--rank")
    ft.add_argument("--sparsity")
    ft.add_argument("--mu", type=float, default=1.0)
    ft.add_argument("--max-iters", type=int, default=500)
    ft.add_argument("--tol", type=float, default=1e-8)
    ft.add_argument("--lam", type=float, default=0.0)
    ft.add_argument("--init", default="zero", choices=("zero", "spectral"))
    ft.add_argument("--out", required=True)
    ft.set_defaults(func=cmd_fit)

    sw = sub.add_parser("sweep")
    sw.add_argument("--paper-scale", action="store_true",
                    help="preset the full-size synthetic protocol (hours of runtime)")
    sw.add_argument("--dims")
    sw.add_argument("--rank")
    sw.add_argument("--sparsity")
    sw.add_argument("--a", type=float, default=0.5)
    sw.add_argument("--seed", type=int, default=0)
    sw.add_argument("--m-grid")
    sw.add_argument("--sigma-grid", default="0.0")
    sw.add_argument("--methods", default="tpgd")
    sw.add_argument("--trials", type=int, default=1)
    sw.add_argument("--threads", type=int, default=1)
    sw.add_argument("--solver-overrides", help="JSON: per-method SolverConfig overrides")
    sw.add_argument("--out", required=True)
    sw.set_defaults(func=cmd_sweep)

    ev = sub.add_parser("eval")
    esub = ev.add_subparsers(dest="what", required=True)
    ee = esub.add_parser("error")
    ee.add_argument("--truth", required=True)
    ee.add_argument("--estimate", required=True)
    ee.set_defaults(func=cmd_eval_error)
    ec = esub.add_parser("classify")
    ec.add_argument("--predictions", required=True)
    ec.add_argument("--labels", required=True)
    ec.add_argument("--threshold", type=float, default=0.5)
    ec.set_defaults(func=cmd_eval_classify)

    bd = sub.add_parser("bound")
    bd.add_argument("--dims", required=True)
    bd.add_argument("--rank", required=True)
    bd.add_argument("--sparsity", required=True)
    bd.add_argument("--tau", type=float, default=1.0)
    bd.add_argument("--delta", type=float, default=0.5)
    bd.add_argument("--eps", type=float, default=0.1, help="failure probability")
    bd.add_argument("--eps-cover", type=float, default=0.5)
    bd.add_argument("--k1", type=float, default=1.0)
    bd.add_argument("--k2", type=float, default=1.0)
    bd.add_argument("--csv", action="store_true")
    bd.set_defaults(func=cmd_bound)

    rp = sub.add_parser("rip-probe")
    rp.add_argument("--dims", required=True)
    rp.add_argument("--m", type=int, required=True)
    rp.add_argument("--seed", type=int, required=True)
    rp.add_argument("--distribution", default="gaussian", choices=meas.DISTRIBUTIONS)
    rp.add_argument("--rank", required=True)
    rp.add_argument("--sparsity", required=True)
    rp.add_argument("--tau", type=float, default=1.0)
    rp.add_argument("--trials", type=int, default=50)
    rp.add_argument("--probe-seed", type=int, default=0)
    rp.set_defaults(func=cmd_rip_probe)

    return p


def main(argv=None):
    argv = list(sys.argv[1:] if argv is None else argv)
    try:
        argv = _apply_config(argv)
    except (OSError, json.JSONDecodeError, IndexError) as exc:
        print(f"error: bad --config: {exc}", file=sys.stderr)
        return 2
    parser = build_parser()
    if argv and argv[0] == "sweep" and "--paper-scale" in argv:
        for key, val in PAPER_SCALE.items():
            flag = "--" + key.replace("_", "-")
            if flag not in argv:
                argv.extend([flag, val])
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (ValueError, FileNotFoundError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
