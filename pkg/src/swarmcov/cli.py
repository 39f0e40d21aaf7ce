"""``swarmcov`` command line: eval, extrema, pdf, simulate, assess.

Exit codes: 0 success, 2 input error, 3 numerical failure, 4 insufficient data.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from pathlib import Path

import numpy as np

from . import io
from .domain import QuadratureGrid, SamplingError
from .extrema import (ExtremaResult, OptimizationError, OptimizerSettings, design_sweep,
                      multistart_extrema)
from .metric import (Partition, blob_function, cumulative_error, discretization_metric,
                     error_metric, TrajectorySeries)
from .pdf_bench import (EmpiricalCDF, FitFailure, fit_erf_cdf, monte_carlo_samples,
                        normality_diagnostics, pdf_from_fit)
from .sim import ControllerParams, error_time_series, run_trajectory
from .stats import InsufficientDataError

log = logging.getLogger("swarmcov")

EXIT_INPUT, EXIT_NUMERIC, EXIT_DATA = 2, 3, 4


class CliError(Exception):
    def __init__(self, code, message):
        super().__init__(message)
        self.code = code


def _default_threads():
    try:
        return max(1, int(os.environ.get("SWARMCOV_THREADS", "1")))
    except ValueError:
        return 1


def _pair(text, sep="x"):
    try:
        a, b = text.lower().split(sep)
        return int(a), int(b)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected A{sep}B, got {text!r}") from None


def _sweep(text):
    parts = text.split(":")
    try:
        nums = [int(p) for p in parts]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected a:b[:count], got {text!r}") from None
    if len(nums) not in (2, 3) or nums[0] < 1 or nums[1] < nums[0]:
        raise argparse.ArgumentTypeError(f"expected 1 <= a <= b in a:b[:count], got {text!r}")
    count = nums[2] if len(nums) == 3 else 8
    return sorted({int(round(v)) for v in np.geomspace(nums[0], nums[1], count)})


def _scenario(args):
    if args.scenario:
        sc = io.load_scenario(args.scenario)
    else:
        sc = io.scenario_from_dict(io.ring_scenario_dict())
    if args.grid:
        sc.grid = QuadratureGrid(sc.domain, *args.grid)
    if args.seed is None:
        args.seed = sc.seed
    return sc


def _out(args) -> Path:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _emit(args, name, report):
    text = io.dump_json(report, _out(args) / name)
    if not args.quiet:
        print(text)


def _settings(args, n_starts=None):
    return OptimizerSettings(n_starts=n_starts or args.starts, max_iters=args.max_iters,
                             seed=args.seed, threads=args.threads)


# --------------------------------------------------------------------------
# commands
# --------------------------------------------------------------------------

def cmd_eval(args):
    sc = _scenario(args)
    if not args.positions:
        raise CliError(EXIT_INPUT, "eval needs --positions")
    data = io.read_positions(args.positions, sc.domain)
    if isinstance(data, TrajectorySeries):
        frames = data.frames
        res = error_metric(frames[-1], sc.density, sc.kernel, sc.grid)
        report = res.to_dict()
        report["frames"] = len(frames)
        report["cumulative_e"] = cumulative_error(data, sc.density, sc.kernel, sc.grid)
        swarm = frames[-1]
    else:
        swarm = data
        res = error_metric(swarm, sc.density, sc.kernel, sc.grid)
        report = res.to_dict()
    if args.mu:
        rows, cols = args.partition or (8, 8)
        part = Partition.regular(sc.domain, rows, cols)
        report["mu"] = discretization_metric(swarm, sc.density, part)
        report["partition"] = f"{rows}x{cols}"
    out = _out(args)
    field_ = blob_function(swarm, sc.kernel, sc.grid)
    io.write_field_csv(out / "blob_field.csv", sc.grid, field_.values, "blob")
    if args.svg:
        from .plotting import heatmap_svg
        heatmap_svg(out / "blob_field.svg", sc.grid, field_.values, swarm.positions, f"e = {res.e:.4f}")
    _emit(args, "metric.json", report)


def cmd_extrema(args):
    sc = _scenario(args)
    out = _out(args)
    settings = _settings(args)
    if args.sweep:
        rows = design_sweep(sc.density, sc.kernel, sc.grid, args.sweep, settings,
                            optimize_delta=args.optimize_delta)
        io.write_table(out / "sweep.csv", ["N", "delta", "e_min"],
                       [(r.n, r.delta, r.e_min) for r in rows])
        report = {"sweep": [{"N": r.n, "delta": r.delta, "e_min": r.e_min, "suspect": r.suspect,
                             "error": r.error} for r in rows],
                  "sweep_csv": str(out / "sweep.csv")}
        if args.svg:
            from .plotting import curves_svg
            curves_svg(out / "sweep.svg", [([r.n for r in rows], [r.e_min for r in rows], "e_min", "o-")],
                       "N", "minimum error")
        _emit(args, "sweep.json", report)
        return
    try:
        res = multistart_extrema(sc.density, sc.kernel, sc.grid, args.n, settings,
                                 progress=None if args.quiet else
                                 lambda s, i, e: log.info("%s start %d: e = %.5f", s, i, e))
    except OptimizationError as exc:
        raise CliError(EXIT_NUMERIC, str(exc))
    amin = io.write_positions(out / "argmin.csv", res.argmin)
    amax = io.write_positions(out / "argmax.csv", res.argmax)
    for tag, sw in (("min", res.argmin), ("max", res.argmax)):
        f = blob_function(sw, sc.kernel, sc.grid)
        io.write_field_csv(out / f"field_{tag}.csv", sc.grid, f.values, "blob")
        if args.svg:
            from .plotting import heatmap_svg
            heatmap_svg(out / f"field_{tag}.svg", sc.grid, f.values, sw.positions,
                        f"e = {res.e_minus if tag == 'min' else res.e_plus:.5f}")
    report = res.to_dict(str(amin), str(amax))
    report.update({"N": args.n, "delta": sc.kernel.delta, "grid": {"nx": sc.grid.nx, "ny": sc.grid.ny}})
    _emit(args, "extrema.json", report)


def _pdf_report(sc, samples, fit, diag, fit_ok):
    return {"mu": fit.mu, "sigma": fit.sigma, "residual": fit.residual, "M": samples.m,
            "N": samples.n_robots, "delta": samples.delta, "sample_mean": samples.mean,
            "sample_sd": samples.sd, "fit_converged": fit_ok, "iterations": fit.iterations,
            "diagnostics": diag.to_dict() if diag else None,
            "blob_form": "normalized" if samples.normalized_blob else "kde (denominator N)",
            "grid": {"nx": sc.grid.nx, "ny": sc.grid.ny}, "seed": samples.seed}


def cmd_pdf(args):
    sc = _scenario(args)
    out = _out(args)
    try:
        samples = monte_carlo_samples(sc.density, sc.kernel, sc.grid, args.n, args.m, args.seed,
                                      threads=args.threads)
    except SamplingError as exc:
        raise CliError(EXIT_NUMERIC, str(exc))
    io.write_samples(out / "samples.csv", samples)
    ecdf = EmpiricalCDF(samples)
    io.write_table(out / "cdf.csv", ["e", "F"], zip(ecdf.x, ecdf.levels))
    fit_ok = True
    try:
        fit = fit_erf_cdf(samples)
    except FitFailure as exc:
        fit, fit_ok = exc.fallback, False
    diag = normality_diagnostics(samples, fit) if samples.m >= 30 else None
    report = _pdf_report(sc, samples, fit, diag, fit_ok)
    if fit.sigma > 0:
        z = np.linspace(ecdf.x[0] - 3 * fit.sigma, ecdf.x[-1] + 3 * fit.sigma, 400)
        pdf = pdf_from_fit(fit)
        io.write_table(out / "fit.csv", ["e", "F_fit", "pdf"], zip(z, fit.cdf(z), pdf(z)))
        if args.svg:
            from .plotting import curves_svg
            curves_svg(out / "cdf.svg", [(ecdf.x, ecdf.levels, "empirical CDF", "-"),
                                        (z, fit.cdf(z), "erf fit", "--")], "e", "F")
            curves_svg(out / "pdf.svg", [(z, pdf(z), "PDF of fit", "-")], "e", "density")
    _emit(args, "pdf.json", report)
    if not fit_ok:
        raise CliError(EXIT_NUMERIC, "erf fit failed; fallback parameters written to pdf.json")


def _simulate(sc, args):
    params = ControllerParams(step_scale=args.step_scale, n_steps=args.steps, stride=args.stride,
                              seed=args.seed, start=args.start)
    traj = run_trajectory(sc.density, sc.domain, args.n, params)
    t, e = error_time_series(traj, sc.density, sc.kernel, sc.grid)
    return traj, t, e


def cmd_simulate(args):
    sc = _scenario(args)
    out = _out(args)
    traj, t, e = _simulate(sc, args)
    io.write_positions(out / "trajectory.csv", traj)
    io.write_series(out / "series.csv", t, e)
    if args.svg:
        from .plotting import curves_svg
        curves_svg(out / "series.svg", [(t, e, "e(t)", "-")], "t", "e")
    _emit(args, "simulate.json", {"frames": len(traj), "N": traj.n_robots,
                                  "trajectory_csv": str(out / "trajectory.csv"),
                                  "series_csv": str(out / "series.csv"),
                                  "e_first": float(e[0]), "e_last": float(e[-1])})


def _load_extrema(path) -> ExtremaResult:
    d = json.loads(Path(path).read_text())
    return ExtremaResult(d["e_minus"], d["e_plus"], None, None, [], d.get("n_starts", 0),
                         d.get("seeds", {}).get("base", 0))


def cmd_assess(args):
    from .assess import assess, reference_check
    if args.reference:
        ref = reference_check()
        _emit(args, "reference.json", ref)
        if not (ref["e_rel"]["ok"] and ref["f_stat"]["ok"]):
            raise CliError(EXIT_NUMERIC, "reference check failed")
        return
    sc = _scenario(args)
    out = _out(args)
    if args.simulate:
        traj, t, e = _simulate(sc, args)
        io.write_positions(out / "trajectory.csv", traj)
        n = traj.n_robots
    elif args.trajectory:
        traj = io.read_positions(args.trajectory, sc.domain)
        if not isinstance(traj, TrajectorySeries):
            raise CliError(EXIT_INPUT, f"{args.trajectory}: trajectory needs a t column")
        t, e = error_time_series(traj, sc.density, sc.kernel, sc.grid)
        n = traj.n_robots
    else:
        raise CliError(EXIT_INPUT, "assess needs --trajectory <csv> or --simulate (or --reference)")
    io.write_series(out / "series.csv", t, e)
    if args.extrema_json:
        ext = _load_extrema(args.extrema_json)
    else:
        try:
            ext = multistart_extrema(sc.density, sc.kernel, sc.grid, n, _settings(args))
        except OptimizationError as exc:
            raise CliError(EXIT_NUMERIC, str(exc))
    if args.samples_csv:
        samples = io.read_samples(args.samples_csv)
    else:
        samples = monte_carlo_samples(sc.density, sc.kernel, sc.grid, n, args.m, args.seed,
                                      threads=args.threads)
        io.write_samples(out / "samples.csv", samples)
    try:
        report = assess(t, e, ext, samples)
    except InsufficientDataError as exc:
        raise CliError(EXIT_DATA, f"insufficient steady-state data: {exc}")
    report["N"] = n
    report["delta"] = sc.kernel.delta
    if args.svg:
        from .plotting import curves_svg
        ef = report["exp_fit"]
        curves_svg(out / "series.svg", [(t, e, "e(t)", "-"),
                                        (t, ef["alpha"] + ef["beta"] * np.exp(-t / ef["tau"]), "fit", "--")],
                   "t", "e")
    _emit(args, "assessment.json", report)


# --------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--scenario", help="scenario JSON (default: built-in ring scenario)")
    common.add_argument("--out", default="swarmcov_out", help="output directory")
    common.add_argument("--seed", type=int, default=None)
    common.add_argument("--threads", type=int, default=_default_threads())
    common.add_argument("--grid", type=_pair, metavar="NXxNY", help="override quadrature grid")
    common.add_argument("--svg", action="store_true", help="also render SVG plots")
    common.add_argument("--quiet", action="store_true", help="do not echo the JSON report")
    common.add_argument("-v", "--verbose", action="store_true")

    opt = argparse.ArgumentParser(add_help=False)
    opt.add_argument("--starts", type=int, default=50)
    opt.add_argument("--max-iters", type=int, default=2000)

    swarm = argparse.ArgumentParser(add_help=False)
    swarm.add_argument("--n", type=int, default=200, help="number of robots")

    simp = argparse.ArgumentParser(add_help=False)
    simp.add_argument("--steps", type=int, default=ControllerParams.n_steps)
    simp.add_argument("--step-scale", type=float, default=ControllerParams.step_scale)
    simp.add_argument("--stride", type=int, default=ControllerParams.stride)
    simp.add_argument("--start", choices=("corner", "uniform", "sample"), default="corner")

    p = argparse.ArgumentParser(prog="swarmcov", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)

    e = sub.add_parser("eval", parents=[common], help="error metric of a positions file")
    e.add_argument("--positions")
    e.add_argument("--mu", action="store_true", help="also report the discretization metric")
    e.add_argument("--partition", type=_pair, metavar="RxC")
    e.set_defaults(func=cmd_eval)

    x = sub.add_parser("extrema", parents=[common, opt, swarm], help="multistart error bounds")
    x.add_argument("--sweep", type=_sweep, metavar="a:b[:count]")
    x.add_argument("--optimize-delta", action="store_true")
    x.set_defaults(func=cmd_extrema)

    d = sub.add_parser("pdf", parents=[common, swarm], help="error distribution under random sampling")
    d.add_argument("--m", type=int, default=1000, help="Monte Carlo samples")
    d.set_defaults(func=cmd_pdf)

    s = sub.add_parser("simulate", parents=[common, swarm, simp], help="run the stand-in controller")
    s.set_defaults(func=cmd_simulate)

    a = sub.add_parser("assess", parents=[common, opt, swarm, simp], help="full controller assessment")
    a.add_argument("--trajectory")
    a.add_argument("--simulate", action="store_true")
    a.add_argument("--reference", action="store_true", help="check the reference e_rel and F figures")
    a.add_argument("--extrema-json", help="reuse an extrema.json instead of optimizing")
    a.add_argument("--samples-csv", help="reuse a samples.csv instead of sampling")
    a.add_argument("--m", type=int, default=1000)
    a.set_defaults(func=cmd_assess)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        args.func(args)
    except CliError as exc:
        print(f"swarmcov: {exc}", file=sys.stderr)
        return exc.code
    except io.InputError as exc:
        print(f"swarmcov: {exc}", file=sys.stderr)
        return EXIT_INPUT
    return 0


if __name__ == "__main__":
    sys.exit(main())
