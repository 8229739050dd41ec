"""Command-line entry point emitting plot-ready CSV/JSON series.

Subcommands: kernel-eval | mc-verify | fixedpoint | norm-preserve |
gp-fit | benchmark | simplicity. Every run is deterministic given its
seed; errors exit with code 1 and a machine-readable JSON object on
stderr. Output schemas are documented in the README.
"""

from __future__ import annotations

import argparse
import csv
import json
import sys

import numpy as np

from . import data as data_mod
from . import fixed_point as fp
from . import gp as gp_mod
from .activations import from_name
from .deep import (NetworkHyper, deep_normalized_kernel, input_state,
                   iterate_state, kernel_matrices_by_depth)
from .finite_width import empirical_trajectory
from .kernels import kernel_dot_values


def _fmt(v):
    return repr(float(v)) if isinstance(v, (float, np.floating)) else v


def _write_rows(out, fmt, columns, rows):
    if fmt == "csv":
        def dump(fh):
            w = csv.writer(fh)
            w.writerow(columns)
            for r in rows:
                w.writerow([_fmt(v) for v in r])
    else:
        def dump(fh):
            json.dump({"columns": list(columns), "rows": [list(r) for r in rows]},
                      fh, default=float)
            fh.write("\n")
    if out is None or out == "-":
        dump(sys.stdout)
    else:
        with open(out, "w", newline="") as fh:
            dump(fh)


def _self_check(out, fmt, columns, n_rows):
    if out is None or out == "-":
        raise ValueError("--self-check requires --out")
    if fmt == "csv":
        with open(out, newline="") as fh:
            rows = list(csv.reader(fh))
        if rows[0] != list(columns) or len(rows) - 1 != n_rows:
            raise ValueError(f"self-check failed on {out}: schema or row count mismatch")
        for r in rows[1:]:
            if len(r) != len(columns):
                raise ValueError(f"self-check failed on {out}: ragged row")
    else:
        with open(out) as fh:
            obj = json.load(fh)
        if obj["columns"] != list(columns) or len(obj["rows"]) != n_rows:
            raise ValueError(f"self-check failed on {out}: schema or row count mismatch")
    print(json.dumps({"self_check": "ok", "rows": n_rows}))


def _activation(args):
    return from_name(args.activation, lrelu_slope=args.lrelu_slope)


def _sigma_w2(args, act, norm):
    if args.sigma_w2 is not None:
        return args.sigma_w2, np.sqrt(args.sigma_w2)
    sigma = fp.sigma_star(act, norm)
    return sigma * sigma, sigma


def cmd_kernel_eval(args):
    act = _activation(args)
    sw2, _ = _sigma_w2(args, act, args.norm)
    thetas = np.linspace(0.0, np.pi, args.theta_points)
    columns = ("theta0", "layer", "s1_sq", "s2_sq", "rho", "k", "kdot")
    rows = []
    for theta0 in thetas:
        state = input_state(theta0, args.norm, sw2, args.sigma_b2)
        for layer in range(1, args.depth + 1):
            s1, s2 = np.sqrt(state.s1_sq), np.sqrt(state.s2_sq)
            kdot = kernel_dot_values(act, s1, s2, state.rho, sw2)
            state = iterate_state(act, state, sw2, args.sigma_b2)
            k = state.rho * np.sqrt(state.s1_sq * state.s2_sq)
            rows.append((float(theta0), layer, state.s1_sq, state.s2_sq,
                         state.rho, float(k), float(kdot)))
    _write_rows(args.out, args.format, columns, rows)
    if args.self_check:
        _self_check(args.out, args.format, columns, len(rows))
    return 0


def cmd_mc_verify(args):
    act = _activation(args)
    sw2, _ = _sigma_w2(args, act, args.norm)
    thetas = np.linspace(0.0, np.pi, args.theta_points)
    columns = ("theta0", "layer", "empirical_rho", "analytic_rho", "seed")
    hyper = NetworkHyper.shared(args.depth, sw2, args.sigma_b2)
    rows = []
    for i, theta0 in enumerate(thetas):
        analytic = deep_normalized_kernel(act, float(theta0), args.norm, hyper)
        for rep in range(args.repeats):
            seed = args.seed + 1000 * rep + i
            emp = empirical_trajectory(act, float(theta0), args.norm, args.width,
                                       args.depth, sw2, args.sigma_b2, seed)
            for layer in range(1, args.depth + 1):
                rows.append((float(theta0), layer, float(emp[layer - 1]),
                             float(analytic[layer - 1]), seed))
    _write_rows(args.out, args.format, columns, rows)
    if args.self_check:
        _self_check(args.out, args.format, columns, len(rows))
    return 0


def cmd_fixedpoint(args):
    act = _activation(args)
    sw2, sigma = _sigma_w2(args, act, args.norm)
    thetas = np.pi * (np.arange(args.theta_points) + 1.0) / (args.theta_points + 1.0)
    rows = fp.lambda3_sweep_rows(act, args.norm, sigma, thetas)
    columns = ("theta", "lambda3", "activation", "norm", "sigma", "method")
    _write_rows(args.out, args.format, columns, rows)
    s_sq = sw2 * args.norm ** 2 + args.sigma_b2
    report = fp.find_fixed_point(act, sw2, args.sigma_b2,
                                 input_state(2.0, args.norm, sw2, args.sigma_b2),
                                 max_iter=512)
    print(json.dumps({
        "activation": act.kind, "norm": args.norm, "sigma_star": sigma,
        "verdict": report.verdict, "sup_lambda3": report.sup_lambda3,
        "converged": report.converged, "iterations": report.iterations,
        "final_rho": report.final_state.rho, "input_s_sq": s_sq,
    }))
    if args.self_check:
        _self_check(args.out, args.format, columns, len(rows))
    return 0


def cmd_norm_preserve(args):
    act = _activation(args)
    norms = np.geomspace(args.norm_min, args.norm_max, args.norm_points)
    columns = ("norm", "sigma_star", "activation")
    rows = [(float(n), fp.sigma_star(act, float(n)), act.kind) for n in norms]
    _write_rows(args.out, args.format, columns, rows)
    if args.self_check:
        _self_check(args.out, args.format, columns, len(rows))
    return 0


def _load_standardized(args):
    ds = data_mod.load_csv(args.dataset, _target(args.target_col))
    ds, _ = data_mod.standardize(ds)
    return ds


def _target(raw):
    try:
        return int(raw)
    except ValueError:
        return raw


def cmd_gp_fit(args):
    act = _activation(args)
    ds = _load_standardized(args)
    train, test = data_mod.split(ds, args.train_frac, args.seed)
    sw2 = args.sigma_w2 if args.sigma_w2 is not None else 2.0
    X = np.vstack([train.X, test.X])
    _, K = next(kernel_matrices_by_depth(act, X, sw2, args.sigma_b2, [args.depth]))
    n = train.n
    gp = gp_mod.fit(K[:n, :n], train.y, args.noise_var)
    mean_tr, var_tr = gp_mod.predict(gp, K[:n, :n], np.diag(K)[:n])
    mean_te, var_te = gp_mod.predict(gp, K[n:, :n], np.diag(K)[n:])
    metrics = {
        "activation": act.kind, "depth": args.depth, "sigma_w2": sw2,
        "sigma_b2": args.sigma_b2, "noise_var": args.noise_var,
        "n_train": n, "n_test": test.n,
        "train_rmse": gp_mod.rmse(mean_tr, train.y),
        "test_rmse": gp_mod.rmse(mean_te, test.y),
        "nll": gp_mod.nll(gp, train.y),
    }
    print(json.dumps(metrics, sort_keys=True))
    if args.out and args.out != "-":
        columns = ("index", "split", "y", "mean", "var")
        rows = ([(int(i), "train", float(y), float(m), float(v))
                 for i, y, m, v in zip(train.indices, train.y, mean_tr, var_tr)]
                + [(int(i), "test", float(y), float(m), float(v))
                   for i, y, m, v in zip(test.indices, test.y, mean_te, var_te)])
        _write_rows(args.out, args.format, columns, rows)
        if args.self_check:
            _self_check(args.out, args.format, columns, len(rows))
    return 0


def cmd_benchmark(args):
    act = _activation(args)
    ds = _load_standardized(args)
    depths = range(1, args.depth_max + 1)
    sigmas = np.arange(args.sw2_min, args.sw2_max + 1e-9, args.sw2_step)
    ranked, rows = gp_mod.grid_search(ds, act, depths, sigmas, args.noise_var,
                                      metric=args.metric, n_splits=args.splits,
                                      train_frac=args.train_frac, seed=args.seed,
                                      sigma_b2=args.sigma_b2)
    columns = gp_mod.GRID_CSV_COLUMNS
    out_rows = [(r.activation, r.depth, r.sigma_w2, r.sigma_b2, r.noise_var,
                 r.split_id, r.train_rmse, r.test_rmse, r.nll) for r in rows]
    _write_rows(args.out, args.format, columns, out_rows)
    print(json.dumps({"best": ranked[:5]}, default=float))
    if args.self_check:
        _self_check(args.out, args.format, columns, len(out_rows))
    return 0


def cmd_simplicity(args):
    acts = [args.activation] if args.activation else ["gelu", "relu"]
    columns = ("activation", "f", "depth", "repetition", "train_mse", "test_mse")
    rows = []
    grid = data_mod.disc_grid(args.f, 100)
    depths = list(range(1, args.depth_max + 1))
    for name in acts:
        act = from_name(name)
        sigma = fp.sigma_star(act, 1.0)
        sw2 = sigma * sigma
        for rep in range(args.repeats):
            ds = data_mod.disc_task(args.f, args.n_train, args.noise_var,
                                    seed=args.seed + rep)
            X = np.vstack([ds.X, grid.X])
            n = ds.n
            for depth, K in kernel_matrices_by_depth(act, X, sw2, 0.0, depths):
                gp = gp_mod.fit(K[:n, :n], ds.y, args.noise_var)
                mean_tr, _ = gp_mod.predict(gp, K[:n, :n], np.diag(K)[:n])
                mean_te, _ = gp_mod.predict(gp, K[n:, :n], np.diag(K)[n:])
                rows.append((name, args.f, depth, rep,
                             float(np.mean((mean_tr - ds.y) ** 2)),
                             float(np.mean((mean_te - grid.y) ** 2))))
    _write_rows(args.out, args.format, columns, rows)
    if args.self_check:
        _self_check(args.out, args.format, columns, len(rows))
    return 0


def build_parser():
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", default=None,
                        help="JSON file of flag defaults (precedence: "
                             "flags > config file > built-in defaults)")
    common.add_argument("--activation", default="gelu",
                        help="gelu | elu | selu | relu | lrelu | erf")
    common.add_argument("--lrelu-slope", type=float, default=0.2)
    common.add_argument("--depth", type=int, default=4)
    common.add_argument("--sigma-w2", type=float, default=None,
                        help="weight variance; defaults to the norm-preserving value")
    common.add_argument("--sigma-b2", type=float, default=0.0)
    common.add_argument("--noise-var", type=float, default=0.1)
    common.add_argument("--norm", type=float, default=1.0)
    common.add_argument("--dataset", default=None)
    common.add_argument("--target-col", default="-1")
    common.add_argument("--seed", type=int, default=0)
    common.add_argument("--out", default=None)
    common.add_argument("--format", choices=("csv", "json"), default="csv")
    common.add_argument("--self-check", action="store_true",
                        help="re-parse the emitted file and validate its schema")

    p = argparse.ArgumentParser(prog="nnk", description=__doc__)
    sub = p.add_subparsers(dest="command", required=True)

    sp = sub.add_parser("kernel-eval", parents=[common],
                        help="normalized-kernel trajectories plus k and kdot per layer")
    sp.add_argument("--theta-points", type=int, default=64)
    sp.set_defaults(func=cmd_kernel_eval)

    sp = sub.add_parser("mc-verify", parents=[common],
                        help="finite-width dots against analytic curves")
    sp.add_argument("--theta-points", type=int, default=32)
    sp.add_argument("--width", type=int, default=3000)
    sp.add_argument("--repeats", type=int, default=1)
    sp.set_defaults(func=cmd_mc_verify)

    sp = sub.add_parser("fixedpoint", parents=[common],
                        help="lambda_3 sweep and contraction verdict at sigma*")
    sp.add_argument("--theta-points", type=int, default=512)
    sp.set_defaults(func=cmd_fixedpoint)

    sp = sub.add_parser("norm-preserve", parents=[common],
                        help="norm-preserving sigma* over a grid of input norms")
    sp.add_argument("--norm-min", type=float, default=0.1)
    sp.add_argument("--norm-max", type=float, default=10.0)
    sp.add_argument("--norm-points", type=int, default=50)
    sp.set_defaults(func=cmd_norm_preserve)

    sp = sub.add_parser("gp-fit", parents=[common],
                        help="GP regression with a deep kernel on a CSV dataset")
    sp.add_argument("--train-frac", type=float, default=0.8)
    sp.set_defaults(func=cmd_gp_fit)

    sp = sub.add_parser("benchmark", parents=[common],
                        help="depth x weight-variance grid search, shuffled splits")
    sp.add_argument("--depth-max", type=int, default=32)
    sp.add_argument("--sw2-min", type=float, default=0.1)
    sp.add_argument("--sw2-max", type=float, default=5.0)
    sp.add_argument("--sw2-step", type=float, default=0.1)
    sp.add_argument("--splits", type=int, default=5)
    sp.add_argument("--train-frac", type=float, default=0.8)
    sp.add_argument("--metric", choices=("test_rmse", "train_rmse", "nll"),
                    default="test_rmse")
    sp.set_defaults(func=cmd_benchmark)

    sp = sub.add_parser("simplicity", parents=[common],
                        help="disc-task depth sweep: train/test MSE vs depth")
    sp.add_argument("--f", default="sin", choices=data_mod.DISC_FUNCTION_NAMES)
    sp.add_argument("--n-train", type=int, default=30)
    sp.add_argument("--depth-max", type=int, default=100)
    sp.add_argument("--repeats", type=int, default=10)
    # default runs both the overfitting and underfitting activations
    sp.set_defaults(func=cmd_simplicity, activation=None)
    return p


def _apply_config(args, argv):
    """Overlay config-file values onto unset flags (flags win)."""
    with open(args.config) as fh:
        cfg = json.load(fh)
    known = set(vars(args)) - {"func", "command", "config"}
    unknown = set(cfg) - known
    if unknown:
        raise ValueError(f"unknown config keys: {sorted(unknown)}")
    given = {tok.split("=")[0] for tok in argv if tok.startswith("--")}
    for key, value in cfg.items():
        if "--" + key.replace("_", "-") not in given:
            setattr(args, key, value)
    return args


def main(argv=None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        if getattr(args, "config", None):
            args = _apply_config(args, argv)
        return args.func(args)
    except BrokenPipeError:
        return 1
    except Exception as exc:  # noqa: BLE001 - contract: JSON error on stderr
        print(json.dumps({"error": type(exc).__name__, "message": str(exc)}),
              file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
