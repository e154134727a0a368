"""``geomgate`` command line: run, reproduce, synth, sweep.

Exit codes: 0 success, 2 invalid input or config, 3 numerical failure.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from . import figures
from .errors import InputError, NumericalError
from .geompath import DEFAULT_SAMPLES, path_from_descriptor, phase_decomposition, synthesize_pulse
from .scenario import load_scenario, run_scenario
from .units import UNIT_TAGS, to_rad_per_ns

EXIT_OK, EXIT_INPUT, EXIT_NUMERICAL = 0, 2, 3
GATE_ALIASES = {"x": "x-rotation", "z": "z-rotation", "general": "general"}


def _cmd_run(args, expect=None) -> int:
    sc = load_scenario(args.config)
    if expect is not None and sc.kind != expect:
        raise InputError(f"kind: sweep needs kind = {expect!r}, got {sc.kind!r}")
    report = run_scenario(sc)
    print(f"{report.kind}: wrote {sc.output}")
    for key in ("tau_ns", "state_fidelity", "gate_fidelity"):
        val = getattr(report, key)
        if val is not None:
            print(f"  {key} = {val:.10g}")
    for note in report.warnings:
        print(f"warning: {note}", file=sys.stderr)
    return EXIT_OK


def _cmd_reproduce(args) -> int:
    opts = {}
    if args.figure in ("fig3a", "fig3bc") and args.epsilon_points is not None:
        opts["epsilon_points"] = args.epsilon_points
    if args.figure == "fig3bc" and args.gamma_points is not None:
        opts["gamma_points"] = args.gamma_points
    if args.figure in ("fig3a", "fig3bc") and args.workers is not None:
        opts["workers"] = args.workers
    out = Path(args.output or f"reproduce-{args.figure}")
    checks = figures.reproduce(args.figure, out, **opts)
    for c in checks:
        print(c.line())
    if args.strict and not all(c.passed for c in checks):
        return 1
    return EXIT_OK


def _cmd_synth(args) -> int:
    family = GATE_ALIASES[args.gate]
    desc = {"family": family, "gamma": args.gamma}
    if family == "z-rotation":
        desc["eta"] = args.eta
    elif family == "general":
        if args.chi0 is None:
            raise InputError("--chi0 is required for --gate general")
        desc.update(chi0=args.chi0, beta0=args.beta0)
    if family != "z-rotation" and args.eta_given:
        raise InputError("--eta only applies to --gate z")
    path = path_from_descriptor(desc)
    sched = synthesize_pulse(path, omega_max=to_rad_per_ns(args.omega_max, args.units), samples=args.samples)
    ph = phase_decomposition(path, sched)
    out = Path(args.output)
    sched.write(out, out.with_suffix(".json"))
    if args.gamma == 0:
        print("warning: gamma = 0, the pulse realizes the identity", file=sys.stderr)
    print(f"tau_ns = {sched.tau:.6f}")
    print(f"gamma_total = {ph.total:.10f}")
    print(f"gamma_dynamical = {ph.dynamical:.3e}")
    print(f"gamma_geometric = {ph.geometric:.10f}")
    return EXIT_OK


class _EtaAction(argparse.Action):
    def __call__(self, parser, namespace, values, option_string=None):
        setattr(namespace, self.dest, values)
        namespace.eta_given = True


def _origin(exc: BaseException) -> str:
    """Module of the innermost package frame that raised ``exc``."""
    name = "geomgate"
    tb = exc.__traceback__
    while tb is not None:
        mod = tb.tb_frame.f_globals.get("__name__", "")
        if mod.startswith("geomgate."):
            name = mod
        tb = tb.tb_next
    return name


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="geomgate", description="Geometric gate pulse synthesis and simulation.")
    sub = p.add_subparsers(dest="command", required=True)

    r = sub.add_parser("run", help="run a scenario file")
    r.add_argument("config")

    s = sub.add_parser("sweep", help="run a robustness-sweep scenario file")
    s.add_argument("config")

    f = sub.add_parser("reproduce", help="regenerate figure data and a headline table")
    f.add_argument("figure", choices=figures.FIGURES)
    f.add_argument("--output", "-o")
    f.add_argument("--epsilon-points", type=int)
    f.add_argument("--gamma-points", type=int)
    f.add_argument("--workers", type=int)
    f.add_argument("--strict", action="store_true", help="exit 1 if any headline check fails")

    y = sub.add_parser("synth", help="synthesize one pulse and write its CSV")
    y.add_argument("--gate", choices=sorted(GATE_ALIASES), required=True)
    y.add_argument("--gamma", type=float, required=True, help="rotation angle (rad)")
    y.add_argument("--eta", type=float, default=0.2, action=_EtaAction)
    y.add_argument("--chi0", type=float)
    y.add_argument("--beta0", type=float, default=0.0)
    y.add_argument("--omega-max", type=float, default=16.0)
    y.add_argument("--units", choices=UNIT_TAGS, default="two_pi_mhz", help="units of --omega-max")
    y.add_argument("--samples", type=int, default=DEFAULT_SAMPLES)
    y.add_argument("--output", "-o", default="pulse.csv")
    y.set_defaults(eta_given=False)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.command == "run":
            return _cmd_run(args)
        if args.command == "sweep":
            return _cmd_run(args, expect="robustness-sweep")
        if args.command == "reproduce":
            return _cmd_reproduce(args)
        return _cmd_synth(args)
    except InputError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except NumericalError as exc:
        print(f"numerical failure in {_origin(exc)}: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL


if __name__ == "__main__":
    sys.exit(main())
