"""
Command line entry point ``nsfc``.

Subcommands: run, sweep, converge, verify, commutator, report. Exit codes:
0 all verdicts pass, 2 configuration error, 3 numerical failure, 4 verdict
failure, 5 I/O error.
"""

import argparse
import os
import sys
from dataclasses import replace

import numpy as np

from . import harness, properties
from .config import Config, dump_config, parse_config
from .exceptions import ConfigError, NSFCError, NumericalBlowup, VacuumApproach

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_NUMERICAL = 3
EXIT_VERDICT = 4
EXIT_IO = 5


def _g(x):
    return f"{x:.10g}"


def _load(args):
    cfg = parse_config(args.config) if args.config else Config()
    if args.seed is not None:
        if args.seed < 0 or args.seed >= 2 ** 64:
            raise ConfigError(f"--seed must be a u64, got {args.seed}")
        cfg = replace(cfg, experiment=replace(cfg.experiment, seed=args.seed))
    return cfg


def _threads(args):
    if args.threads is not None:
        if args.threads < 0:
            raise ConfigError(f"--threads must be nonnegative, got {args.threads}")
        if args.threads > 0:
            os.environ["NSFC_THREADS"] = str(args.threads)
        else:
            os.environ.pop("NSFC_THREADS", None)


def _workers(cfg):
    return cfg.experiment.workers if cfg.experiment.workers > 0 else None


def cmd_run(cfg, args, out):
    params, contact, grid = cfg.thermo, cfg.make_contact(), cfg.make_grid()
    ex = harness.run_experiment(
        params, contact, grid, cfg.solver, cfg.init.alpha, cfg.width(), cfg.init.mode,
        cfg.shift_config(), cfg.shift.frame_stride, cfg.experiment.static_modes)
    adm = ex.admissibility
    mon = ex.monitor
    out.write(f"steps {ex.record.steps} t {_g(ex.record.series['t'][-1])}\n")
    out.write(f"E0 {_g(ex.E0)} (decomposition {_g(ex.E0_decomp)})\n")
    out.write(f"mass_drift {adm.mass_drift:.3e} momentum_drift "
              f"{' '.join(f'{m:.3e}' for m in adm.momentum_drift)} "
              f"energy_drift {adm.energy_drift:.3e}\n")
    out.write(f"entropy_balance_min {adm.entropy_balance_min:.6e} (tol {adm.tolerance:.3e})\n")
    out.write(f"min_rho {_g(adm.min_rho)} min_theta {_g(adm.min_theta)}\n")
    out.write(f"bounds rho_l2 {_g(adm.bound_pri_mass)} rhos_l2 {_g(adm.bound_pri_ent)} "
              f"dissipation {_g(adm.bound_pri_v)}\n")
    out.write(f"monitor {mon.verdict} margin {mon.margin:.6e} C_fit {_g(mon.C_fit)}\n")
    out.write(f"static {'PASS' if ex.static.passed else 'FAIL'} worst ratio "
              f"{ex.static.worst_ratio:.6f}\n")
    if args.out:
        harness.persist(ex.record, args.out, config_text=dump_config(cfg),
                        shift_field=ex.shift, monitor=mon,
                        extra={"seed": cfg.experiment.seed, "E0": ex.E0,
                               "phi_sup": harness.phi_sup(params, contact, ex.record)})
        out.write(f"persisted {args.out}\n")
    if ex.error:
        out.write(f"error {ex.error}\n")
        return EXIT_NUMERICAL
    ok = (mon.passed and ex.static.passed and adm.conservation_ok and adm.entropy_ok)
    return EXIT_OK if ok else EXIT_VERDICT


def cmd_sweep(cfg, args, out):
    ex = cfg.experiment
    res = harness.dissipation_sweep(
        cfg.thermo, cfg.make_contact(), cfg.make_grid(), list(ex.alphas), list(ex.nu_values),
        cfg.solver, ex.kappa_ratio, cfg.width(), cfg.init.mode, cfg.shift.frame_stride,
        _workers(cfg), args.out)
    out.write("nu,kappa,alpha,E0,phi_sup,ratio\n")
    for r in res.runs:
        out.write(f"{_g(r.nu)},{_g(r.kappa)},{_g(r.alpha)},{_g(r.E0)},{_g(r.phi_sup)},"
                  f"{_g(r.ratio)}\n")
        if r.error:
            out.write(f"# error: {r.error}\n")
    ok = res.within_factor(2.0)
    out.write(f"C {_g(res.C)} within_factor_2 {ok}\n")
    if any(r.error for r in res.runs):
        return EXIT_NUMERICAL
    return EXIT_OK if ok else EXIT_VERDICT


def cmd_converge(cfg, args, out):
    ex = cfg.experiment
    rep = harness.convergence_study(
        cfg.thermo, cfg.make_contact(), cfg.make_grid(), ex.converge_alpha0, ex.converge_levels,
        nu=ex.nu_values[-1], kappa=ex.kappa_ratio * ex.nu_values[-1], base_config=cfg.solver,
        width=cfg.width(), mode=cfg.init.mode, frame_stride=cfg.shift.frame_stride,
        baseline=ex.baseline, workers=_workers(cfg))
    out.write("alpha,E0,phi_sup\n")
    for a, e, p in zip(rep.alphas, rep.E0, rep.phi_sup):
        out.write(f"{_g(a)},{_g(e)},{_g(p)}\n")
    if rep.baseline is not None:
        out.write(f"baseline alpha=0 w=4h phi_sup {_g(rep.baseline.phi_sup)} "
                  f"below {rep.baseline_below}\n")
    out.write(f"slope {rep.slope:.6f} in [{rep.slope_range[0]}, {rep.slope_range[1]}] "
              f"{rep.slope_ok}; monotone {rep.monotone}\n")
    out.write(f"converge {'PASS' if rep.passed else 'FAIL'}\n")
    return EXIT_OK if rep.passed else EXIT_VERDICT


def cmd_verify(cfg, args, out):
    checks = properties.run_suite(cfg.thermo, cfg.make_contact(), cfg.experiment.seed)
    for c in checks:
        out.write(c.line() + "\n")
    return EXIT_OK if all(c.passed for c in checks) else EXIT_VERDICT


def cmd_commutator(cfg, args, out):
    cm = cfg.commutator
    norms = harness.commutator_decay(cm.n, cm.delta, cm.epsilons)
    for e, v in zip(cm.epsilons, norms):
        out.write(f"epsilon {_g(e)} R_l2 {v:.6e}\n")
    decreasing = bool(np.all(np.diff(norms) < 0))
    ratio = norms[-1] / norms[0]
    out.write(f"strictly decreasing {decreasing}; final/initial {ratio:.6f} (limit 0.5)\n")
    C, held = harness.commutator_bound(cm.n, cm.delta, cm.epsilons, cm.train_pairs,
                                       cm.heldout_pairs, cfg.experiment.seed)
    covered = bool(np.all(held <= C))
    out.write(f"C_fit {C:.6f} heldout max {np.max(held):.6f} covered {covered}\n")
    ok = decreasing and ratio <= 0.5 and covered
    out.write(f"commutator {'PASS' if ok else 'FAIL'}\n")
    return EXIT_OK if ok else EXIT_VERDICT


def cmd_report(cfg, args, out):
    directory = args.directory
    manifest = harness.read_manifest(directory)
    csv_path = args.out if args.out else os.path.join(directory, "report.csv")
    res = harness.report(directory, csv_path)
    ok = True
    if "C" in res:
        out.write(f"C {_g(res['C'])} recorded {manifest.get('C')}\n")
        if "C" in manifest:
            ok = repr(res["C"]) == manifest["C"]
    else:
        out.write(f"E0 {_g(res['E0'])} phi_sup {_g(res['phi_sup'])}\n")
        for key in ("E0", "phi_sup"):
            if key in manifest:
                ok = ok and repr(res[key]) == manifest[key]
    out.write(f"csv {csv_path}\nreproduced {ok}\n")
    return EXIT_OK if ok else EXIT_VERDICT


COMMANDS = {
    "run": (cmd_run, "one simulation with the inequality monitor"),
    "sweep": (cmd_sweep, "dissipation sweep and the fitted constant"),
    "converge": (cmd_converge, "perturbation-size convergence study"),
    "verify": (cmd_verify, "seeded property suites of thermo and functionals"),
    "commutator": (cmd_commutator, "commutator decay and uniform bound"),
    "report": (cmd_report, "recompute plot-ready CSV from a run or sweep directory"),
}


def build_parser():
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="configuration file (defaults when omitted)")
    common.add_argument("--seed", type=int, help="u64 seed (overrides [experiment] seed)")
    common.add_argument("--out", help="output directory (report: CSV path)")
    common.add_argument("--threads", type=int,
                        help="worker threads, 0 = auto (fallback: NSFC_THREADS)")
    parser = argparse.ArgumentParser(prog="nsfc", description=__doc__.strip().splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)
    for name, (_, helptext) in COMMANDS.items():
        p = sub.add_parser(name, parents=[common], help=helptext)
        if name == "report":
            p.add_argument("directory", help="persisted run or sweep directory")
    return parser


def main(argv=None, out=None):
    out = sys.stdout if out is None else out
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_CONFIG if exc.code else EXIT_OK
    try:
        _threads(args)
        cfg = _load(args)
        return COMMANDS[args.command][0](cfg, args, out)
    except ConfigError as exc:
        sys.stderr.write(f"config error: {exc}\n")
        return EXIT_CONFIG
    except (NumericalBlowup, VacuumApproach) as exc:
        sys.stderr.write(f"numerical failure: {exc}\n")
        return EXIT_NUMERICAL
    except OSError as exc:
        sys.stderr.write(f"I/O error: {exc}\n")
        return EXIT_IO
    except NSFCError as exc:
        sys.stderr.write(f"config error: {exc}\n")
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
