"""
Command-line front end.

    reset-analysis info     --preset fore --omega-r 100 --rho 0
    reset-analysis simulate --preset integrator --omega 100 --output clegg.csv
    reset-analysis hosidf   --preset fore --omega-r 100 --omega-start 1 --omega-stop 1e4 --omega-count 30
    reset-analysis validate --preset integrator --omega 100 --K 9 --tol 1e-5
    reset-analysis decompose --preset sore --omega-r 100 --beta-r 0.1 --omega 100

Matrices are written row by row: rows separated by ';', entries by ','
(e.g. --A "0,1;-10000,-20").  Values starting with '-' followed by ';' or ','
need the --flag=value form.
"""
import argparse
import re
import shlex
import sys
from dataclasses import dataclass, field
from enum import IntEnum
from pathlib import Path
from typing import List, Optional

import numpy as np
from loguru import logger

from .config import ResetConfig
from .decomposition import decompose, element_square_wave, scaling
from .errors import (ConvergenceGateError, NotHurwitzError, ResetAnalysisError, SingularMatrixError,
                     SpecParseError, SteadyStateNotReached)
from .export import decomposition_frame, validation_frame, write_csv, write_trace_csv
from .hosidf import sweep, validate
from .lti import Sinusoid, is_hurwitz, poles
from .reset_core import (ResetElement, check_convergence, make_custom, make_fore, make_integrator, make_sore,
                         with_reset_matrix)
from .simulator import simulate, steady_state_window

SUBCOMMANDS = ("info", "simulate", "hosidf", "validate", "decompose")
PRESETS = ("integrator", "fore", "sore", "custom")


class ExitCode(IntEnum):
    OK = 0
    USAGE = 2
    CONVERGENCE_GATE = 3
    VALIDATION_FAILED = 4
    NUMERICAL = 5


def parse_matrix(text: str, flag: str) -> np.ndarray:
    """'a,b;c,d' -> [[a, b], [c, d]]"""
    text = (text or "").strip()
    if not text:
        raise SpecParseError(flag, "empty matrix")
    try:
        rows = [[float(entry) for entry in row.split(",")] for row in text.split(";")]
    except ValueError:
        raise SpecParseError(flag, f"cannot parse matrix {text!r}") from None
    if len({len(row) for row in rows}) != 1:
        raise SpecParseError(flag, f"rows of {text!r} have different lengths")
    return np.array(rows)


def parse_reset(text: str, flag: str = "--rho"):
    """Scalar gamma (meaning gamma * I) or a matrix"""
    try:
        return float(text)
    except (TypeError, ValueError):
        return parse_matrix(text, flag)


@dataclass
class ElementSpec:
    """Preset name plus parameters, or explicit matrices"""
    preset: str = "fore"
    omega_r: Optional[float] = None
    beta_r: Optional[float] = None
    m: int = 1
    A: Optional[np.ndarray] = None
    B: Optional[np.ndarray] = None
    C: Optional[np.ndarray] = None
    D: Optional[np.ndarray] = None
    rho: object = 0.0
    delta_m: Optional[float] = None

    @classmethod
    def from_args(cls, args) -> "ElementSpec":
        matrices = {name: None if getattr(args, name) is None else parse_matrix(getattr(args, name), f"--{name}")
                    for name in ("A", "B", "C", "D")}
        return cls(preset=args.preset, omega_r=args.omega_r, beta_r=args.beta_r, m=args.m,
                   rho=parse_reset(args.rho), delta_m=args.delta_m, **matrices)

    def _require(self, value, flag: str):
        if value is None:
            raise SpecParseError(flag, f"required for preset '{self.preset}'")
        return value

    def build(self) -> ResetElement:
        try:
            if self.preset == "integrator":
                return make_integrator(self.m, self.rho, self.delta_m)
            if self.preset == "fore":
                return make_fore(self._require(self.omega_r, "--omega-r"), self.rho, self.delta_m)
            if self.preset == "sore":
                return make_sore(self._require(self.omega_r, "--omega-r"), self._require(self.beta_r, "--beta-r"),
                                 self.rho, self.delta_m)
            A = self._require(self.A, "--A")
            m = A.shape[0]
            B = np.ones((m, 1)) if self.B is None else self.B
            C = self._require(self.C, "--C")
            D = np.zeros((1, 1)) if self.D is None else self.D
            return make_custom(A, B, C, D, self.rho, self.delta_m)
        except SpecParseError:
            raise
        except ValueError as exc:
            flag = "--rho" if "A_rho" in str(exc) else f"--preset {self.preset}"
            raise SpecParseError(flag, str(exc)) from exc


@dataclass
class RunConfig:
    """Frequencies and run sizes for one invocation"""
    omegas: List[float] = field(default_factory=list)
    amplitude: float = 1.0
    K: int = ResetConfig.HARMONICS_DEFAULT
    n_periods: int = ResetConfig.N_PERIODS_DEFAULT
    samples_per_period: int = ResetConfig.SAMPLES_PER_PERIOD_DEFAULT
    output: Optional[Path] = None
    jobs: int = 1
    tol: float = ResetConfig.VALIDATE_TOL_DEFAULT
    q_scale: float = 1.0

    @classmethod
    def from_args(cls, args) -> "RunConfig":
        omegas = list(args.omega or [])
        grid = (args.omega_start, args.omega_stop, args.omega_count)
        if any(v is not None for v in grid):
            if any(v is None for v in grid):
                raise SpecParseError("--omega-start", "--omega-start, --omega-stop and --omega-count go together")
            start, stop, count = grid
            if not (start > 0 and stop > 0):
                raise SpecParseError("--omega-start", "grid bounds must be > 0")
            if count < 1:
                raise SpecParseError("--omega-count", f"must be >= 1, got {count}")
            omegas.extend(np.logspace(np.log10(start), np.log10(stop), count).tolist())
        if args.hz:
            omegas = [2.0 * np.pi * w for w in omegas]
        if any(not (w > 0 and np.isfinite(w)) for w in omegas):
            raise SpecParseError("--omega", "frequencies must be finite and > 0")
        if args.K < 1:
            raise SpecParseError("--K", f"must be >= 1, got {args.K}")
        if not args.amplitude > 0:
            raise SpecParseError("--amplitude", f"must be > 0, got {args.amplitude}")
        if args.n_periods < 1:
            raise SpecParseError("--n-periods", f"must be >= 1, got {args.n_periods}")
        if args.samples_per_period < 4 or args.samples_per_period % 4:
            raise SpecParseError("--samples-per-period", f"must be a positive multiple of 4, got {args.samples_per_period}")
        return cls(omegas=omegas, amplitude=args.amplitude, K=args.K, n_periods=args.n_periods,
                   samples_per_period=args.samples_per_period,
                   output=None if args.output is None else Path(args.output),
                   jobs=args.jobs, tol=args.tol, q_scale=args.q_scale)

    def single_omega(self) -> float:
        if not self.omegas:
            raise SpecParseError("--omega", "a frequency is required")
        if len(self.omegas) > 1:
            logger.warning(f"using the first of {len(self.omegas)} frequencies")
        return self.omegas[0]


def _emit(text: str, output: Optional[Path]) -> None:
    if output is None:
        sys.stdout.write(text)
    else:
        output.write_text(text)
        logger.info(f"wrote {output}")


def _gate(el: ResetElement, args, omega: Optional[float]):
    report = check_convergence(el, delta_max=args.delta_max, n_grid=args.n_grid, omega=omega)
    if not report.passed:
        if not args.force:
            raise ConvergenceGateError(report.summary(), report)
        logger.warning(f"--force: {report.summary()}")
    return report


def _fmt(M) -> str:
    return np.array2string(np.asarray(M), precision=10, separator=", ")


def cmd_info(el: ResetElement, run: RunConfig, args) -> int:
    report = check_convergence(el, delta_max=args.delta_max, n_grid=args.n_grid,
                               omega=run.omegas[0] if run.omegas else None)
    hurwitz = is_hurwitz(el.base)
    lines = [
        f"preset: {el.name} (m = {el.state_dim})",
        f"A = {_fmt(el.base.A)}",
        f"B = {_fmt(el.base.B)}",
        f"C = {_fmt(el.base.C)}",
        f"D = {_fmt(el.base.D)}",
        f"A_rho = {_fmt(el.reset_matrix)}",
        f"delta_m = {el.delta_m:g}",
        f"eig(A) = {_fmt(poles(el.base))}",
        f"hurwitz: {hurwitz}",
        report.summary(),
    ]
    if run.omegas and (hurwitz or el.is_integrator):
        sinusoid = Sinusoid(run.amplitude, run.omegas[0])
        try:
            fit = scaling(el, sinusoid)
            sw = element_square_wave(el, sinusoid)
            lines += [f"w = {sinusoid.omega:g} rad/s: Q = {_fmt(fit.Q)} ({fit.method}, residual {fit.residual:.3e})",
                      f"q_mean = {_fmt(sw.mean)}", f"q_peak = {_fmt(sw.peak)}"]
        except ResetAnalysisError as exc:
            lines.append(f"scaling unavailable at w = {sinusoid.omega:g}: {exc}")
    print("\n".join(lines))
    return ExitCode.OK


def cmd_simulate(el: ResetElement, run: RunConfig, args) -> int:
    omega = run.single_omega()
    if args.no_reset:
        el = with_reset_matrix(el, np.eye(el.state_dim))
    report = check_convergence(el, delta_max=args.delta_max, n_grid=args.n_grid, omega=omega)
    if not report.passed:
        logger.warning(report.summary())
    trace = simulate(el, Sinusoid(run.amplitude, omega), run.n_periods, run.samples_per_period, x0=args.x0)
    window = steady_state_window(trace)
    logger.info(f"{len(trace.reset_times)} resets, steady state after {window.periods_to_converge} periods")
    _emit(write_trace_csv(trace, window), run.output)
    return ExitCode.OK


def cmd_hosidf(el: ResetElement, run: RunConfig, args) -> int:
    if not run.omegas:
        raise SpecParseError("--omega", "a frequency or a grid is required")
    _gate(el, args, min(run.omegas))
    table = sweep(el, run.omegas, run.K, jobs=run.jobs, enforce_convergence=False)
    _emit(write_csv(table.to_frame()), run.output)
    return ExitCode.OK


def cmd_validate(el: ResetElement, run: RunConfig, args) -> int:
    if not run.omegas:
        raise SpecParseError("--omega", "a frequency or a grid is required")
    _gate(el, args, min(run.omegas))
    reports = [validate(el, omega, run.K, run.amplitude, run.n_periods, run.samples_per_period,
                        q_scale=run.q_scale, enforce_convergence=False)
               for omega in run.omegas]
    _emit(write_csv(validation_frame(reports)), run.output)
    worst = max(r.max_error for r in reports)
    if worst >= run.tol:
        logger.error(f"validation FAILED: max relative error {worst:.3e} >= tol {run.tol:g}")
        return ExitCode.VALIDATION_FAILED
    logger.info(f"validation passed: max relative error {worst:.3e} < tol {run.tol:g}")
    return ExitCode.OK


def cmd_decompose(el: ResetElement, run: RunConfig, args) -> int:
    omega = run.single_omega()
    _gate(el, args, omega)
    sinusoid = Sinusoid(run.amplitude, omega)
    trace = simulate(el, sinusoid, run.n_periods, run.samples_per_period)
    window = steady_state_window(trace)
    dec = decompose(el, sinusoid, times=window.t, left_limit=window.segment_end)
    frame = decomposition_frame(dec, window.x)
    scale = float(np.max(np.abs(window.x))) or 1.0
    summary = "\n".join([
        f"Q = {_fmt(dec.Q)} ({dec.method})",
        f"q_mean = {_fmt(dec.square_wave.mean)}",
        f"q_peak = {_fmt(dec.square_wave.peak)}",
        f"residual = {dec.residual:.6e}",
        f"jump_law_residual = {dec.jump_residual:.6e}",
        f"max_err = {frame['err'].max():.6e} (relative {frame['err'].max() / scale:.6e})",
    ])
    print(summary, file=sys.stdout if run.output is not None else sys.stderr)
    _emit(write_csv(frame), run.output)
    return ExitCode.OK


COMMANDS = {
    "info": cmd_info,
    "simulate": cmd_simulate,
    "hosidf": cmd_hosidf,
    "validate": cmd_validate,
    "decompose": cmd_decompose,
}


def build_parser() -> argparse.ArgumentParser:
    element = argparse.ArgumentParser(add_help=False)
    group = element.add_argument_group("element")
    group.add_argument("--preset", choices=PRESETS, default="fore")
    group.add_argument("--omega-r", type=float, help="corner / natural frequency of the base system (rad/s)")
    group.add_argument("--beta-r", type=float, help="damping of the second order element")
    group.add_argument("--m", type=int, default=1, help="number of integrator states")
    for name in ("A", "B", "C", "D"):
        group.add_argument(f"--{name}", help=f"{name} matrix for --preset custom")
    group.add_argument("--rho", default="0", help="reset matrix, or a scalar gamma meaning gamma*I")
    group.add_argument("--delta-m", type=float, help="time regularization (s)")

    run = argparse.ArgumentParser(add_help=False)
    group = run.add_argument_group("run")
    group.add_argument("--omega", type=float, action="append", help="input frequency (rad/s), repeatable")
    group.add_argument("--omega-start", type=float)
    group.add_argument("--omega-stop", type=float)
    group.add_argument("--omega-count", type=int)
    group.add_argument("--hz", action="store_true", help="frequencies are given in Hz")
    group.add_argument("--amplitude", type=float, default=1.0)
    group.add_argument("--K", type=int, default=ResetConfig.HARMONICS_DEFAULT)
    group.add_argument("--n-periods", type=int, default=ResetConfig.N_PERIODS_DEFAULT)
    group.add_argument("--samples-per-period", type=int, default=ResetConfig.SAMPLES_PER_PERIOD_DEFAULT)
    group.add_argument("--output", help="CSV path (stdout when omitted)")
    group.add_argument("--jobs", type=int, default=1)
    group.add_argument("--force", action="store_true", help="continue when the convergence gate fails")
    group.add_argument("--tol", type=float, default=ResetConfig.VALIDATE_TOL_DEFAULT)
    group.add_argument("--q-scale", type=float, default=1.0, help=argparse.SUPPRESS)
    group.add_argument("--no-reset", action="store_true", help="simulate with A_rho = I")
    group.add_argument("--x0", choices=("zero", "periodic"), default="zero")
    group.add_argument("--delta-max", type=float)
    group.add_argument("--n-grid", type=int)

    parser = argparse.ArgumentParser(prog="reset-analysis",
                                     description="Steady-state analysis of reset control elements")
    verbosity = parser.add_mutually_exclusive_group()
    verbosity.add_argument("--verbose", "-v", action="store_true")
    verbosity.add_argument("--quiet", "-q", action="store_true")
    parser.add_argument("--spec-file", help="file holding further flags in the same grammar")
    sub = parser.add_subparsers(dest="command", required=True)
    for name in SUBCOMMANDS:
        sub.add_parser(name, parents=[element, run], help=COMMANDS[name].__name__.replace("cmd_", ""))
    return parser


def _flag_name(token: str) -> Optional[str]:
    """'--omega=5' -> '--omega'; values such as '-100' or '-1,0;0,-2' are not flags"""
    if re.match(r"^--?[A-Za-z]", token):
        return token.split("=", 1)[0]
    return None


def _drop_overridden(tokens: List[str], explicit: set) -> List[str]:
    """Remove each file flag (with its values) that the command line sets itself"""
    kept, skipping = [], False
    for token in tokens:
        name = _flag_name(token)
        if name is not None:
            skipping = name in explicit
        elif token in SUBCOMMANDS:
            skipping = False
        if not skipping:
            kept.append(token)
    return kept


def expand_spec_file(argv: List[str]) -> List[str]:
    """Splice the tokens of --spec-file right after the subcommand; flags given on the command line win"""
    argv = list(argv)
    path = None
    for i, token in enumerate(argv):
        if token == "--spec-file" and i + 1 < len(argv):
            path = argv[i + 1]
            del argv[i:i + 2]
            break
        if token.startswith("--spec-file="):
            path = token.split("=", 1)[1]
            del argv[i]
            break
    if path is None:
        return argv
    try:
        tokens = shlex.split(Path(path).read_text(), comments=True)
    except OSError as exc:
        raise SpecParseError("--spec-file", str(exc)) from exc
    tokens = _drop_overridden(tokens, {name for name in map(_flag_name, argv) if name is not None})
    position = next((i + 1 for i, token in enumerate(argv) if token in SUBCOMMANDS), None)
    if position is None:
        # the file names the subcommand itself
        return argv + tokens
    return argv[:position] + tokens + argv[position:]


def configure_logging(verbose: bool = False, quiet: bool = False) -> None:
    level = "DEBUG" if verbose else "WARNING" if quiet else "INFO"
    logger.remove()
    logger.add(sys.stderr, format="<blue>{time:HH:mm:ss}</blue> | <level>{message}</level>", level=level)


def main(argv: Optional[List[str]] = None) -> int:
    argv = sys.argv[1:] if argv is None else argv
    try:
        argv = expand_spec_file(argv)
        args = build_parser().parse_args(argv)
    except SpecParseError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return ExitCode.USAGE
    except SystemExit as exc:
        return int(exc.code or 0)

    configure_logging(args.verbose, args.quiet)
    try:
        element = ElementSpec.from_args(args).build()
        run = RunConfig.from_args(args)
        return int(COMMANDS[args.command](element, run, args))
    except ConvergenceGateError as exc:
        logger.error(f"convergence gate failed (use --force to continue): {exc}")
        return ExitCode.CONVERGENCE_GATE
    except (SingularMatrixError, NotHurwitzError, SteadyStateNotReached) as exc:
        logger.error(f"numerical failure: {exc}")
        return ExitCode.NUMERICAL
    except (SpecParseError, ValueError) as exc:
        logger.error(f"invalid arguments: {exc}")
        return ExitCode.USAGE
    except (ResetAnalysisError, ArithmeticError, np.linalg.LinAlgError) as exc:
        logger.error(f"numerical failure: {exc}")
        return ExitCode.NUMERICAL


if __name__ == "__main__":
    sys.exit(main())
