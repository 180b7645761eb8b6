"""Command-line driver.

Subcommands: fit, eval, contours, gc, dftest, compare-ell, counterexample.
Exit codes: 0 success, 1 usage error, 2 certification failure, 3 solver
failure. CENTEROUT_WORKERS controls the replication work pool.
"""
from __future__ import annotations

import argparse
import json
import os
import sys

import numpy as np
from scipy import stats

import centerout
from .assignment import Sample, SolverFailureError, cost_matrix, solve_hungarian
from .certificate import (
    check_cyclical_monotonicity,
    karp_min_mean_cycle,
    pairing_costs,
)
from .contours import (
    contour,
    contours_to_csv,
    sign_curves,
    sign_curves_to_csv,
    to_json_document,
)
from .grid import GridSpec, InvalidInputError, build_grid, unit_directions
from .pipeline import fit_sample, grid_for_sample
from .reference import (
    MODEL_REGISTRY,
    chi_radial_cdf,
    elliptical_F_hat,
    sample_model,
    spherical_F,
)
from .smoothing import NotInterpolableError, SmoothMap, T_eps

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_CERTIFICATION = 2
EXIT_SOLVER = 3

DEFAULT_LEVELS = (0.02, 0.20, 0.25, 0.50, 0.75, 0.90)


def _workers() -> int:
    try:
        return max(1, int(os.environ.get("CENTEROUT_WORKERS", "1")))
    except ValueError:
        return 1


def _pool_map(fn, jobs):
    """Deterministic map over jobs; parallel when CENTEROUT_WORKERS > 1."""
    w = _workers()
    if w <= 1 or len(jobs) <= 1:
        return [fn(j) for j in jobs]
    from concurrent.futures import ProcessPoolExecutor

    with ProcessPoolExecutor(max_workers=w) as ex:
        return list(ex.map(fn, jobs))


def _provenance(args: argparse.Namespace) -> dict:
    cfg = {k: v for k, v in vars(args).items() if k != "func"}
    return {"config": cfg, "version": centerout.__version__}


def _write_json(path, doc):
    with open(path, "w", newline="\n") as fh:
        json.dump(doc, fh, indent=2, sort_keys=True)
        fh.write("\n")


# ---------------------------------------------------------------- fit / eval

def cmd_fit(args) -> int:
    sample = Sample.from_csv(args.input)
    grid = None
    if args.n_r is not None and args.n_s is not None:
        grid = grid_for_sample(
            sample.n, sample.d, n_R=args.n_r, n_S=args.n_s,
            direction_method=args.direction_method, seed=args.seed,
        )
    elif args.n_r is not None or args.n_s is not None:
        print("--n-r and --n-s must be given together", file=sys.stderr)
        return EXIT_USAGE
    try:
        fit = fit_sample(
            sample,
            grid=grid,
            solver=args.solver,
            ratio=args.ratio,
            seed=args.seed,
            tie_break=args.tie_break,
        )
    except NotInterpolableError as err:
        print(f"certification failed: {err}", file=sys.stderr)
        return EXIT_CERTIFICATION
    except SolverFailureError as err:
        print(f"solver failed: {err} {err.diagnostics}", file=sys.stderr)
        return EXIT_SOLVER
    doc = {
        **_provenance(args),
        "potential": json.loads(fit.forward.potential.to_json()),
        "forward": fit.forward.to_dict(),
        "inverse": fit.inverse.to_dict(),
        "assignment": json.loads(fit.assignment.to_json()),
        "grid_spec": fit.grid.spec.to_dict(),
    }
    _write_json(args.out, doc)
    if args.table_out:
        fit.rank_table.to_csv(args.table_out)
    return EXIT_OK


def _load_map(path, which) -> SmoothMap:
    with open(path) as fh:
        doc = json.load(fh)
    if which not in doc:
        raise InvalidInputError(f"fit file has no {which!r} map")
    return SmoothMap.from_dict(doc[which])


def cmd_eval(args) -> int:
    smap = _load_map(args.fit, args.which)
    pts = Sample.from_csv(args.points).points
    out = np.atleast_2d(T_eps(pts, smap))
    with open(args.out, "w", newline="\n") as fh:
        fh.write(",".join(f"x_{k}" for k in range(out.shape[1])) + "\n")
        for row in out:
            fh.write(",".join(format(v, ".17g") for v in row) + "\n")
    return EXIT_OK


def cmd_contours(args) -> int:
    smap = _load_map(args.fit, "inverse")
    levels = args.levels if args.levels is not None else list(DEFAULT_LEVELS)
    sets = [contour(smap, q, mesh_size=args.mesh) for q in levels]
    if sets:
        contours_to_csv(sets, args.out)
    curves = []
    if args.directions > 0:
        d = smap.potential.targets.shape[1]
        if d == 1:
            dirs = np.array([[1.0], [-1.0]])[: args.directions]
        elif d == 2:
            dirs = unit_directions(args.directions, 2, "equal-angle")
        else:
            dirs = unit_directions(args.directions, d, "random-sphere", seed=0)
        curves = sign_curves(smap, dirs, mesh_size=args.mesh // 4 or 8)
        if args.signs_out:
            sign_curves_to_csv(curves, args.signs_out)
    if args.json_out:
        with open(args.json_out, "w", newline="\n") as fh:
            fh.write(to_json_document(sets, curves))
            fh.write("\n")
    return EXIT_OK


# ------------------------------------------------------------- experiments

def _gc_cell(job):
    n, seed, model = job
    sample = sample_model(model, n, seed)
    # 2*pi rings-to-directions ratio balances the radial and angular extents
    # of boundary cells, where the max error concentrates.
    grid = grid_for_sample(n, sample.d, ratio=2 * np.pi)
    assignment, table = centerout.empirical_F(sample, grid)
    F_pop = spherical_F(sample.points, chi_radial_cdf(sample.d))
    discrete = float(np.linalg.norm(table.F_value - F_pop, axis=1).max())
    sup = np.nan
    try:
        fwd = centerout.fit_smooth_F(sample, grid, assignment)
        rng = np.random.default_rng(seed + 10_000)
        fresh = rng.standard_normal((10_000, sample.d))
        smooth = T_eps(fresh, fwd)
        pop = spherical_F(fresh, chi_radial_cdf(sample.d))
        sup = float(np.linalg.norm(smooth - pop, axis=1).max())
    except NotInterpolableError:
        pass
    return {"n": n, "seed": seed, "max_err_discrete": discrete, "sup_err_smooth": sup}


def cmd_gc(args) -> int:
    if args.model != "gaussian":
        print("gc requires a model with a closed-form reference map", file=sys.stderr)
        return EXIT_USAGE
    jobs = [(n, s, args.model) for n in args.sizes for s in args.seeds]
    rows = _pool_map(_gc_cell, jobs)
    with open(args.out, "w", newline="\n") as fh:
        fh.write("n,seed,max_err_discrete,sup_err_smooth\n")
        for r in rows:
            fh.write(
                f"{r['n']},{r['seed']},{r['max_err_discrete']:.17g},"
                f"{r['sup_err_smooth']:.17g}\n"
            )
    return EXIT_OK


def _dftest_cell(job):
    model, n, n_R, n_S, reps, seed, grid_json = job
    from .grid import BallGrid

    grid = BallGrid.from_json(grid_json)
    rng = np.random.default_rng(seed)
    counts = np.zeros(n, dtype=np.int64)
    for _ in range(reps):
        sample = sample_model(model, n, int(rng.integers(0, 2**63 - 1)))
        cost = cost_matrix(sample, grid)
        assignment = solve_hungarian(cost)
        counts[assignment.perm[0]] += 1
    return counts


def cmd_dftest(args) -> int:
    n = args.n_r * args.n_s
    if args.replications / n < 5:
        print("cell expectation below 5; increase replications", file=sys.stderr)
        return EXIT_USAGE
    models = args.models
    if len(models) != 2:
        print("exactly two models required", file=sys.stderr)
        return EXIT_USAGE
    spec = GridSpec(n=n, d=2, n_R=args.n_r, n_S=args.n_s, n_0=0, seed=args.seed)
    grid = build_grid(spec)
    gj = grid.to_json()
    w = _workers()
    results = {}
    for m_i, model in enumerate(models):
        per = args.replications // w
        jobs = [
            (model, n, args.n_r, args.n_s,
             per + (args.replications - per * w if k == w - 1 else 0),
             args.seed + 7919 * (m_i * w + k), gj)
            for k in range(w)
        ]
        counts = sum(_pool_map(_dftest_cell, jobs))
        results[model] = counts
    report = {**_provenance(args), "models": {}}
    for model, counts in results.items():
        chi2, p = stats.chisquare(counts)
        report["models"][model] = {
            "counts": counts.tolist(),
            "chi2_uniformity": float(chi2),
            "p_uniformity": float(p),
        }
    contingency = np.vstack([results[m] for m in models])
    chi2_h, p_h, _, _ = stats.chi2_contingency(contingency)
    report["homogeneity"] = {"chi2": float(chi2_h), "p": float(p_h)}
    _write_json(args.out, report)
    return EXIT_OK


def cmd_compare_ell(args) -> int:
    report = {**_provenance(args), "runs": []}
    for seed in args.seeds:
        sample = sample_model("gaussian", args.n, seed)
        grid = grid_for_sample(sample.n, sample.d, ratio=2 * np.pi)
        _, table = centerout.empirical_F(sample, grid)
        mu_hat = sample.points.mean(axis=0)
        sigma_hat = np.cov(sample.points.T)
        ell = elliptical_F_hat(sample, mu_hat, sigma_hat)
        ell_values = (ell.rank / (sample.n + 1))[:, None] * ell.sign
        disc = float(np.linalg.norm(ell_values - table.F_value, axis=1).max())
        report["runs"].append({"n": args.n, "seed": seed, "max_discrepancy": disc})
    _write_json(args.out, report)
    return EXIT_OK


# counterexample instance: 3 planar pairs whose identity pairing is the only
# monotone one, broken by adding the barycentric combinations x0, y0
CX_X = np.array([[0.0, 0.0], [0.0, 1.0], [1.0, 1.0]])
CX_Y = np.array([[-5.0, -0.01], [0.5, 0.01], [1.0, 0.0]])


def _monotone_pairings(xs, ys):
    import itertools

    n = len(xs)
    out = []
    for p in itertools.permutations(range(n)):
        verdict, _, _ = check_cyclical_monotonicity(xs, ys[list(p)])
        if verdict == "monotone-unique":
            out.append(p)
    return out


def cmd_counterexample(args=None) -> int:
    x0 = 0.8 * CX_X[0] + 0.1 * CX_X[1] + 0.1 * CX_X[2]
    y0 = 0.8 * CX_Y[0] + 0.1 * CX_Y[1] + 0.1 * CX_Y[2]
    ok = True
    base = _monotone_pairings(CX_X, CX_Y)
    if base != [(0, 1, 2)]:
        print(f"FAIL: base monotone pairings {base}, expected only identity")
        ok = False
    xs_a = np.vstack([x0, CX_X])
    ys_a = np.vstack([y0, CX_Y])
    aug = _monotone_pairings(xs_a, ys_a)
    # indices into (y0, y1, y2, y3): the unique pairing sends x0->y2, x2->y0
    if aug != [(2, 1, 0, 3)]:
        print(f"FAIL: augmented monotone pairings {aug}, expected [(2, 1, 0, 3)]")
        ok = False
    eps_naive = karp_min_mean_cycle(pairing_costs(xs_a, ys_a))
    if not eps_naive < 0:
        print(f"FAIL: naive pairing min cycle mean {eps_naive}, expected < 0")
        ok = False
    print("counterexample check:", "PASS" if ok else "FAIL")
    return EXIT_OK if ok else EXIT_CERTIFICATION


# --------------------------------------------------------------------- main

def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="centerout")
    p.add_argument("--version", action="version", version=centerout.__version__)
    sub = p.add_subparsers(dest="command", required=True)

    def grid_opts(sp):
        sp.add_argument("--n-r", type=int, default=None)
        sp.add_argument("--n-s", type=int, default=None)
        sp.add_argument("--ratio", type=float, default=2.0)
        sp.add_argument("--direction-method", default=None)
        sp.add_argument("--seed", type=int, default=0)

    sp = sub.add_parser("fit", help="fit a sample from CSV")
    sp.add_argument("input")
    sp.add_argument("--out", required=True)
    sp.add_argument("--table-out", default=None)
    sp.add_argument("--solver", default="auto",
                    choices=["auto", "hungarian", "auction", "brute"])
    sp.add_argument("--tie-break", action="store_true")
    grid_opts(sp)
    sp.set_defaults(func=cmd_fit)

    sp = sub.add_parser("eval", help="map points through a fitted model")
    sp.add_argument("fit")
    sp.add_argument("points")
    sp.add_argument("--out", required=True)
    sp.add_argument("--which", default="forward", choices=["forward", "inverse"])
    sp.set_defaults(func=cmd_eval)

    sp = sub.add_parser("contours", help="quantile contours and sign curves")
    sp.add_argument("fit")
    sp.add_argument("--levels", type=float, nargs="*", default=None)
    sp.add_argument("--mesh", type=int, default=256)
    sp.add_argument("--directions", type=int, default=0)
    sp.add_argument("--out", default="contours.csv")
    sp.add_argument("--signs-out", default=None)
    sp.add_argument("--json-out", default=None)
    sp.set_defaults(func=cmd_contours)

    sp = sub.add_parser("gc", help="convergence of the empirical map")
    sp.add_argument("--model", default="gaussian")
    sp.add_argument("--sizes", type=int, nargs="+", required=True)
    sp.add_argument("--seeds", type=int, nargs="+", required=True)
    sp.add_argument("--out", required=True)
    sp.set_defaults(func=cmd_gc)

    sp = sub.add_parser("dftest", help="distribution-freeness Monte Carlo")
    sp.add_argument("--n-r", type=int, required=True)
    sp.add_argument("--n-s", type=int, required=True)
    sp.add_argument("--replications", type=int, required=True)
    sp.add_argument("--models", nargs="+", required=True)
    sp.add_argument("--seed", type=int, required=True)
    sp.add_argument("--out", required=True)
    sp.set_defaults(func=cmd_dftest)

    sp = sub.add_parser("compare-ell", help="Mahalanobis vs center-outward ranks")
    sp.add_argument("--n", type=int, required=True)
    sp.add_argument("--seeds", type=int, nargs="+", required=True)
    sp.add_argument("--out", required=True)
    sp.set_defaults(func=cmd_compare_ell)

    sp = sub.add_parser("counterexample", help="linear-interpolation regression check")
    sp.set_defaults(func=cmd_counterexample)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_USAGE if exc.code not in (0, None) else 0
    try:
        return args.func(args)
    except InvalidInputError as err:
        print(f"usage error: {err}", file=sys.stderr)
        return EXIT_USAGE
    except NotInterpolableError as err:
        print(f"certification failure: {err}", file=sys.stderr)
        return EXIT_CERTIFICATION
    except SolverFailureError as err:
        print(f"solver failure: {err} {err.diagnostics}", file=sys.stderr)
        return EXIT_SOLVER


if __name__ == "__main__":
    sys.exit(main())
