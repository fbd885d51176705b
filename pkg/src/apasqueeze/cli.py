"""Command line entry point: ``apasqueeze {derive,squeeze,qfunc,validate}``.

Exit codes: 0 ok, 2 configuration error, 3 discrepancy flagged, 4 truncation
not converged.
"""
from __future__ import annotations

import argparse
import csv
import dataclasses
import datetime as _dt
import json
import math
import sys
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import __version__, analytic, fock
from .params import (
    BRANCHES,
    ConfigError,
    PhysicalConfig,
    UnstableFrequencyError,
    derive,
    load_config,
    reference_config,
    weak_coupling_check,
)
from .validation import EXIT_CONFIG, EXIT_DISCREPANCY, EXIT_OK, EXIT_TRUNCATION, run_validation

__all__ = ["RunManifest", "build_parser", "main", "rerun"]

FLOAT_FORMAT = "%.16e"
DEFAULT_TAU_STEPS = 400
DEFAULT_GRID = "-4:4:81"


@dataclass
class RunManifest:
    """Everything needed to regenerate an output file.

    ``derived`` holds the derived parameters; for ``squeeze`` it maps each
    ``omega_sw / omega_R`` value (as formatted text) to its own set.
    """

    config_path: str | None
    command: str
    argv: list
    derived: dict
    cutoffs: dict = field(default_factory=dict)
    tolerances: dict = field(default_factory=dict)
    outputs: list = field(default_factory=list)
    timestamp: str = ""
    version: str = __version__

    def write(self, path: str | Path) -> Path:
        path = Path(path)
        path.write_text(json.dumps(dataclasses.asdict(self), indent=2, sort_keys=True) + "\n")
        return path

    @classmethod
    def read(cls, path: str | Path) -> RunManifest:
        return cls(**json.loads(Path(path).read_text()))


def manifest_path(out: str | Path) -> Path:
    out = Path(out)
    return out.with_name(out.name + ".manifest.json")


def rerun(manifest: str | Path | RunManifest) -> int:
    """Re-execute the command recorded in a manifest; outputs are overwritten in place."""
    if not isinstance(manifest, RunManifest):
        manifest = RunManifest.read(manifest)
    return main(list(manifest.argv))


# -- helpers -------------------------------------------------------------------


def _float_list(text: str) -> list[float]:
    try:
        values = [float(x) for x in text.split(",") if x.strip()]
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"expected a comma separated list of numbers: {exc}") from exc
    if not values:
        raise argparse.ArgumentTypeError("empty list")
    return values


def _grid(text: str) -> analytic.GridSpec:
    try:
        return analytic.GridSpec.parse(text)
    except ValueError as exc:
        raise argparse.ArgumentTypeError(str(exc)) from exc


def _positive_int(text: str) -> int:
    value = int(text)
    if value < 1:
        raise argparse.ArgumentTypeError("must be a positive integer")
    return value


def _load(args) -> PhysicalConfig:
    if args.config is None:
        return reference_config()
    return load_config(args.config)


def _fmt(value: float) -> str:
    return FLOAT_FORMAT % value


def _si(derived: dict) -> dict:
    omega_r = derived["omega_r"]
    freq_keys = ("u0", "omega_sw", "zeta", "delta_c", "omega_c", "omega_c_prime")
    out = {f"{key}_rad_per_s": derived[key] * omega_r for key in freq_keys}
    out["omega_r_rad_per_s"] = omega_r
    out["omega_r_over_2pi_hz"] = omega_r / (2 * math.pi)
    out["kerr_rad_per_s"] = derived["kerr"] * omega_r
    return out


def _derived_dict(params) -> dict:
    out = params.as_dict()
    out["kerr"] = params.kerr
    return out


def _stamp() -> str:
    return _dt.datetime.now(_dt.timezone.utc).isoformat(timespec="seconds")


def _write_manifest(args, argv, derived, outputs, cutoffs=None, tolerances=None) -> None:
    if args.out is None:
        return
    RunManifest(
        config_path=args.config,
        command=args.command,
        argv=list(argv),
        derived=derived,
        cutoffs=cutoffs or {},
        tolerances=tolerances or {},
        outputs=[str(p) for p in outputs],
        timestamp=_stamp(),
    ).write(manifest_path(args.out))


# -- subcommands ----------------------------------------------------------------


def cmd_derive(args, argv) -> int:
    config = _load(args)
    if args.omega_sw is not None:
        config = config.with_omega_sw(args.omega_sw[0])
    params = derive(config, branch=args.branch)
    weak = weak_coupling_check(params, config.alpha_sq)
    doc = {
        "branch": params.branch,
        "omega_r_units": _derived_dict(params),
        "si": _si(_derived_dict(params)),
        "weak_coupling": {"ok": weak.ok, "ratio": weak.ratio, "bound": weak.bound},
    }
    text = json.dumps(doc, indent=2, sort_keys=True) + "\n"
    if args.out is None:
        sys.stdout.write(text)
    else:
        Path(args.out).write_text(text)
        _write_manifest(args, argv, _derived_dict(params), [args.out])
    if not weak.ok:
        print(
            f"warning: U0 |alpha|^2 = {weak.ratio:.4g} omega_R exceeds the weak-coupling bound {weak.bound:g}",
            file=sys.stderr,
        )
    return EXIT_OK


def cmd_squeeze(args, argv) -> int:
    if args.tau_steps < 2:
        raise ConfigError("--tau-steps must be at least 2")
    if not (math.isfinite(args.tau_max) and args.tau_max > 0):
        raise ConfigError("--tau-max must be a positive number")
    config = _load(args)
    omega_list = args.omega_sw if args.omega_sw is not None else [derive(config).omega_sw]
    taus = np.linspace(0.0, args.tau_max, args.tau_steps)
    rows = []
    worst = 0.0
    flagged = []
    derived = {}
    for w in omega_list:
        params = derive(config.with_omega_sw(w), branch=args.branch)
        derived[f"{w:g}"] = _derived_dict(params)
        series = analytic.squeeze_series(params, config.alpha_sq, taus)
        worst = max(worst, series.dual_route_residual)
        if series.discrepancy:
            flagged.append(w)
        rows.extend((w, t, q, p) for t, q, p in zip(taus, series.s_q, series.s_p))
    _write_csv(args.out, ["omega_sw_over_omega_r", "tau", "s_q", "s_p"], rows)
    _write_manifest(
        args,
        argv,
        derived,
        [args.out],
        tolerances={"dual_route": analytic.DUAL_ROUTE_TOL, "dual_route_worst": worst},
    )
    if flagged:
        print(f"discrepancy: closed form and moment route disagree for omega_sw in {flagged}", file=sys.stderr)
        return EXIT_DISCREPANCY
    return EXIT_OK


def cmd_qfunc(args, argv) -> int:
    config = _load(args)
    if args.omega_sw is not None:
        config = config.with_omega_sw(args.omega_sw[0])
    params = derive(config, branch=args.branch)
    grid = args.grid
    q = analytic.q_function(params, config.alpha_sq, args.tau, grid, cutoff=args.cutoff)
    gammas = grid.gammas()
    rows = [
        (gammas[i, j].real, gammas[i, j].imag, q.values[i, j])
        for i in range(grid.re_steps)
        for j in range(grid.im_steps)
    ]
    _write_csv(args.out, ["gamma_re", "gamma_im", "q"], rows)
    tolerances = {"closed_form": analytic.Q_CLOSED_FORM_TOL}
    if q.closed_form_residual is not None:
        tolerances["closed_form_residual"] = q.closed_form_residual
    _write_manifest(
        args, argv, _derived_dict(params), [args.out], cutoffs={"override": args.cutoff}, tolerances=tolerances
    )
    if q.discrepancy:
        print(
            f"discrepancy: Q closed form differs from the overlap evaluation by {q.closed_form_residual:.3e}",
            file=sys.stderr,
        )
        return EXIT_DISCREPANCY
    return EXIT_OK


def cmd_validate(args, argv) -> int:
    config = _load(args)
    omega_list = args.omega_sw if args.omega_sw is not None else [0.0, 5.0, 10.0, 15.0, 20.0]
    taus = np.linspace(0.0, args.tau_max, args.tau_steps)
    result = run_validation(
        config,
        tol=args.tol,
        branch=args.branch,
        omega_sw_list=omega_list,
        taus=taus,
        cutoff=args.cutoff,
        workers=args.workers,
    )
    doc = result.as_dict()
    text = json.dumps(doc, indent=2, sort_keys=True) + "\n"
    if args.out is None:
        sys.stdout.write(text)
    else:
        Path(args.out).write_text(text)
        _write_manifest(
            args, argv, _derived_dict(derive(config, branch=args.branch)), [args.out],
            cutoffs={"override": args.cutoff},
            tolerances={"tol": args.tol},
        )
    for report in result.failing():
        print(
            f"discrepancy: {report.quantity} analytic={report.analytic:.10g} oracle={report.oracle:.10g}"
            f" rel={report.rel_residual:.3e}",
            file=sys.stderr,
        )
    for report in result.unconverged():
        print(f"not converged: {report.quantity} delta={report.convergence_delta:.3e}", file=sys.stderr)
    for message in result.truncation_failures:
        print(f"truncation: {message}", file=sys.stderr)
    print(
        f"{len(result.reports)} reports, {len(result.failing())} failing, {len(result.unconverged())} unconverged,"
        f" {len(result.truncation_failures)} truncation failures -> exit {result.exit_code}",
        file=sys.stderr,
    )
    return result.exit_code


def _write_csv(out, header, rows) -> None:
    if out is None:
        raise ConfigError("--out is required for this command")
    with open(out, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        for row in rows:
            writer.writerow([_fmt(v) for v in row])


# -- parser ----------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="JSON configuration (default: built-in 87Rb reference set)")
    common.add_argument("--out", help="output path; a <out>.manifest.json is written next to it")
    common.add_argument("--branch", choices=BRANCHES, default="printed", help="sign convention for nu")
    common.add_argument("--omega-sw", type=_float_list, help="omega_sw / omega_R, comma separated")
    common.add_argument("--cutoff", type=_positive_int, help="override the automatic number-basis cutoff")
    common.add_argument("--seedless", action="store_true", help="accepted for compatibility; runs are always deterministic")

    parser = argparse.ArgumentParser(prog="apasqueeze", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    sub.add_parser("derive", parents=[common], help="print every derived parameter as JSON")

    p = sub.add_parser("squeeze", parents=[common], help="S_q and S_p over a time grid (CSV)")
    p.add_argument("--tau-max", type=float, default=4 * math.pi, help="end of the tau grid (default 4 pi)")
    p.add_argument("--tau-steps", type=int, default=DEFAULT_TAU_STEPS, help="number of tau points, endpoints included")

    p = sub.add_parser("qfunc", parents=[common], help="Husimi Q function on a grid (CSV)")
    p.add_argument("--tau", type=float, default=0.0, help="dimensionless time Omega'_c t")
    p.add_argument("--grid", type=_grid, default=analytic.GridSpec.parse(DEFAULT_GRID),
                   help="min:max:steps for both axes, or re,im groups separated by a comma")

    p = sub.add_parser("validate", parents=[common], help="compare closed forms with the oracle (JSON)")
    p.add_argument("--tol", type=float, default=1e-6, help="relative tolerance for every comparison")
    p.add_argument("--tau-max", type=float, default=2 * math.pi, help="end of the tau lattice (default 2 pi)")
    p.add_argument("--tau-steps", type=int, default=9, help="number of tau lattice points")
    p.add_argument("--workers", type=_positive_int, default=1, help="processes for the omega_sw sweep")
    return parser


COMMANDS = {"derive": cmd_derive, "squeeze": cmd_squeeze, "qfunc": cmd_qfunc, "validate": cmd_validate}


# options whose values may start with "-" (e.g. ``--grid -4:4:81``)
_SIGNED_VALUE_OPTIONS = ("--grid", "--omega-sw", "--tau")


def _attach_signed_values(argv: list) -> list:
    out, i = [], 0
    while i < len(argv):
        if argv[i] in _SIGNED_VALUE_OPTIONS and i + 1 < len(argv) and argv[i + 1].startswith("-"):
            out.append(f"{argv[i]}={argv[i + 1]}")
            i += 2
        else:
            out.append(argv[i])
            i += 1
    return out


def main(argv=None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    try:
        args = parser.parse_args(_attach_signed_values(argv))
    except SystemExit as exc:
        return EXIT_CONFIG if exc.code not in (0, None) else EXIT_OK
    try:
        return COMMANDS[args.command](args, argv)
    except (ConfigError, UnstableFrequencyError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except fock.TruncationError as exc:
        print(f"truncation: {exc}", file=sys.stderr)
        return EXIT_TRUNCATION


if __name__ == "__main__":
    sys.exit(main())
