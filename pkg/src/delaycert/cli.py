"""``delaycert`` command line.

Exit codes: 0 certified, 2 not certified, 3 simulation diverged, 1 error.
"""

from __future__ import annotations

import argparse
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import replace
from pathlib import Path

import numpy as np

from . import __version__
from .certificate import certify, corollary_single_delay
from .delay_model import DelaySystem, Tap
from .errors import CertificationError, DelayCertError, DivergenceError
from .history import InitialHistory
from .reduction import single_delay_delta_bound
from .report import (SWEEP_COLUMNS, SWEEP_SIM_COLUMNS, certificate_record, corollary_record,
                     dumps_record, plot_sweep, plot_trajectory, write_table,
                     write_trajectory_csv)
from .scenario import load_scenario
from .simulator import SimConfig, simulate, verify_envelope

EXIT_CERTIFIED = 0
EXIT_ERROR = 1
EXIT_NOT_CERTIFIED = 2
EXIT_DIVERGED = 3


def _err(msg):
    print(f"delaycert: {msg}", file=sys.stderr)


def _load(args):
    sc = load_scenario(args.scenario)
    if args.grid_points is not None:
        if args.grid_points < 3:
            raise DelayCertError("--grid-points must be at least 3")
        sc = replace(sc, grid_points=args.grid_points)
    return sc


def _sim_config(sc, args):
    base = sc.sim
    dt = args.dt if args.dt is not None else (base.dt if base else None)
    t_final = args.t_final if args.t_final is not None else (base.t_final if base else None)
    if dt is None or t_final is None:
        raise DelayCertError("simulation needs dt and t_final (scenario 'sim' block or flags)")
    x0 = base.x0 if base else np.ones(sc.plant.state_dim)
    u_init = base.u_init if base else None
    stride = base.record_stride if base else 1
    return SimConfig(dt, t_final, x0, u_init, stride)


def _emit(text, out):
    if out is None:
        sys.stdout.write(text)
    else:
        Path(out).write_text(text, encoding="utf-8")


def _single_tap(sc):
    if not sc.is_single_delay():
        raise DelayCertError("this command needs a single discrete delay in plant and model")
    return sc.plant.discrete_taps[0], sc.model.discrete_taps[0]


def cmd_certify(args):
    sc = _load(args)
    cert = certify(sc.plant, sc.controller, sc.weights, sc.grid_points, args.norm)
    _emit(dumps_record(certificate_record(cert, __version__)), args.out)
    return EXIT_CERTIFIED if cert.certified else EXIT_NOT_CERTIFIED


def cmd_simulate(args):
    sc = _load(args)
    cfg = _sim_config(sc, args)
    try:
        cert = certify(sc.plant, sc.controller, sc.weights, sc.grid_points, args.norm)
    except CertificationError as exc:
        _err(f"running uncertified: {exc}")
        cert = None
    try:
        traj = simulate(sc.plant, sc.controller, cfg,
                        cert=cert, n_points=sc.grid_points)
    except DivergenceError as exc:
        _err(str(exc))
        return EXIT_DIVERGED

    if args.out is None:
        write_trajectory_csv(traj, sys.stdout)
    else:
        with open(args.out, "w", encoding="utf-8", newline="") as fh:
            write_trajectory_csv(traj, fh)
        if not args.no_figures:
            plot_trajectory(traj, Path(args.out).with_suffix(".png"))

    if cert is None:
        return EXIT_NOT_CERTIFIED
    if not cert.certified:
        _err(f"not certified: |dQ|^2={cert.delta_q_norm ** 2:.6g} >= "
             f"threshold {cert.threshold_sq:.6g}")
        return EXIT_NOT_CERTIFIED
    u0 = cfg.u_init if cfg.u_init is not None else InitialHistory.zeros(sc.plant.input_dim)
    rep = verify_envelope(traj, cert, float(cfg.x0 @ cfg.x0), u0.sq_l2_norm(sc.horizon),
                          args.tolerance)
    print(f"sigma_hat={cert.sigma_hat:.17g} ratio_v={rep.ratio_v:.6g} "
          f"ratio_x={rep.ratio_x:.6g} ratio_u={rep.ratio_u:.6g} "
          f"envelope={'pass' if rep.passed else 'FAIL'}", file=sys.stderr)
    return EXIT_CERTIFIED if rep.passed else EXIT_NOT_CERTIFIED


def _sweep_row(job):
    sc, delta_hat, norm, sim_cfg, tolerance = job
    tap, mtap = _single_tap(sc)
    # explicit horizon keeps a zero model delay valid
    model = DelaySystem(sc.model.a_matrix, [Tap(mtap.gain, delta_hat)],
                        horizon=max(delta_hat, tap.delay))
    run = sc.with_model(model)
    cert = certify(run.plant, run.controller, run.weights, run.grid_points, norm)
    exact = (np.array_equal(sc.model.a_matrix, sc.plant.a_matrix)
             and np.array_equal(mtap.gain, tap.gain))
    cor = corollary_single_delay(sc.plant.a_matrix, tap.gain, sc.gain, tap.delay, delta_hat,
                                 sc.weights, norm)
    row = {
        "delta_hat": delta_hat,
        "delta_q_norm_sq": cert.delta_q_norm ** 2,
        "delta_q_norm_sq_bound": (single_delay_delta_bound(sc.plant.a_matrix, tap.gain,
                                                           tap.delay, delta_hat, norm)
                                  if exact else np.nan),
        "threshold_sq": cert.threshold_sq,
        "certified": cert.certified,
        "sigma_hat": cert.sigma_hat,
        "corollary_bound": cor.delay_bound,
        "corollary_certified": cor.certified,
    }
    if sim_cfg is not None:
        ratios = (np.nan, np.nan, np.nan)
        if cert.certified:
            try:
                traj = simulate(run.plant, run.controller, sim_cfg, cert=cert,
                                n_points=run.grid_points)
                u0 = (sim_cfg.u_init if sim_cfg.u_init is not None
                      else InitialHistory.zeros(run.plant.input_dim))
                rep = verify_envelope(traj, cert, float(sim_cfg.x0 @ sim_cfg.x0),
                                      u0.sq_l2_norm(run.horizon), tolerance)
                ratios = (rep.ratio_v, rep.ratio_x, rep.ratio_u)
            except DivergenceError:
                ratios = (np.inf, np.inf, np.inf)
        row.update(zip(SWEEP_SIM_COLUMNS, ratios))
    return row


def cmd_sweep(args):
    sc = _load(args)
    tap, _ = _single_tap(sc)
    if args.num < 0:
        raise DelayCertError("--num must be nonnegative")
    values = np.linspace(args.start, args.stop, args.num) if args.num else np.empty(0)
    if np.any(values < 0):
        raise DelayCertError("model delays must be nonnegative")
    sim_cfg = _sim_config(sc, args) if args.simulate else None
    jobs = [(sc, float(d), args.norm, sim_cfg, args.tolerance) for d in values]
    if args.jobs > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=args.jobs) as pool:
            rows = list(pool.map(_sweep_row, jobs))
    else:
        rows = [_sweep_row(j) for j in jobs]

    columns = SWEEP_COLUMNS + (SWEEP_SIM_COLUMNS if args.simulate else [])
    if args.out is None:
        write_table(columns, rows, sys.stdout)
    else:
        with open(args.out, "w", encoding="utf-8", newline="") as fh:
            write_table(columns, rows, fh)
        if rows and not args.no_figures:
            plot_sweep(rows, Path(args.out).with_suffix(".png"), delta=tap.delay)
    return EXIT_CERTIFIED


def cmd_corollary(args):
    sc = _load(args)
    tap, mtap = _single_tap(sc)
    bound = corollary_single_delay(sc.plant.a_matrix, tap.gain, sc.gain, tap.delay,
                                   mtap.delay, sc.weights, args.norm)
    _emit(dumps_record(corollary_record(bound, __version__, args.norm)), args.out)
    return EXIT_CERTIFIED if bound.certified else EXIT_NOT_CERTIFIED


def build_parser():
    p = argparse.ArgumentParser(
        prog="delaycert",
        description="Robustness certificates and simulation for predictor feedback "
                    "with distributed input delay.")
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp):
        sp.add_argument("scenario", help="scenario JSON file")
        sp.add_argument("--grid-points", type=int, default=None,
                        help="quadrature nodes on [-h, 0] (overrides the scenario)")
        sp.add_argument("--norm", choices=("spectral", "frobenius"), default="spectral")
        sp.add_argument("--out", default=None, help="output file (default: stdout)")

    def sim_flags(sp):
        sp.add_argument("--dt", type=float, default=None)
        sp.add_argument("--t-final", type=float, default=None)
        sp.add_argument("--tolerance", type=float, default=0.01,
                        help="relative slack on the envelope checks")
        sp.add_argument("--no-figures", action="store_true",
                        help="skip the PNG written next to --out")

    sp = sub.add_parser("certify", help="compute the robustness certificate")
    common(sp)
    sp.set_defaults(func=cmd_certify)

    sp = sub.add_parser("simulate", help="simulate the loop and check the envelopes")
    common(sp)
    sim_flags(sp)
    sp.set_defaults(func=cmd_simulate)

    sp = sub.add_parser("sweep-delay", help="certify across a range of model delays")
    common(sp)
    sim_flags(sp)
    sp.add_argument("--start", type=float, required=True)
    sp.add_argument("--stop", type=float, required=True)
    sp.add_argument("--num", type=int, default=11)
    sp.add_argument("--simulate", action="store_true",
                    help="also simulate certified rows and report envelope ratios")
    sp.add_argument("--jobs", type=int, default=1)
    sp.set_defaults(func=cmd_sweep)

    sp = sub.add_parser("corollary", help="single-delay delay-mismatch bound")
    common(sp)
    sp.set_defaults(func=cmd_corollary)
    return p


def main(argv=None):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        # argparse exits 2 on usage errors, which would read as "not certified"
        return EXIT_ERROR if exc.code else EXIT_CERTIFIED
    try:
        return args.func(args)
    except (DelayCertError, ValueError, ArithmeticError, OSError) as exc:
        _err(str(exc))
        return EXIT_ERROR


def main_exit():
    sys.exit(main())


if __name__ == "__main__":
    main_exit()
