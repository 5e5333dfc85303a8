"""Command-line interface.

``orbitmart test`` runs an anytime-valid invariance test over JSON
lines on standard input, one record per observation, and emits one
output record per line:

    {"value": 0.42}                           -> scalar families
    {"value": 0.42, "label": 1}               -> perm-label
    {"value": 0.42, "covariates": [1.0, 0.3]} -> isotropy
    {"values": [0.42, -1.1]}                  -> joint mode (--joint K)

Exit codes: 0 = stream processed, never rejected; 3 = threshold
crossed; 2 = input or configuration error.  Rejection does not stop
reading (anytime validity permits continued monitoring) unless
``--stop-on-reject`` is set.
"""

from __future__ import annotations

import json
import sys

import click

from .calibrators import DEFAULT_JOINT, DEFAULT_UNIVARIATE, parse_calibrator
from .estimator import IndependenceMartingale, InvarianceMartingale
from .groups import DegenerateDesignError, GroupSpec, PayloadMismatchError
from .martingale import MartingaleState, step
from .selfcheck import run_selfcheck
from .simulate import load_scenario, run_scenario, write_report

EXIT_OK = 0
EXIT_ERROR = 2
EXIT_REJECTED = 3


def _fmt(x: float) -> str:
    return format(float(x), ".17g")


def _fmt_field(value) -> str:
    if isinstance(value, tuple):
        return "[" + ", ".join(_fmt(v) for v in value) + "]"
    return _fmt(value)


def _emit(record) -> None:
    line = (
        f'{{"n": {record.n}'
        f', "r": {_fmt_field(record.r)}'
        f', "theta": {_fmt_field(record.theta)}'
        f', "log10_wealth": {_fmt(record.log10_wealth)}'
        f', "rejected": {"true" if record.rejected else "false"}'
        f', "degenerate": {"true" if record.degenerate else "false"}}}'
    )
    # Flush per record: the stream may be monitored live.
    print(line, flush=True)


def _fail(message: str) -> None:
    click.echo(f"orbitmart: {message}", err=True)
    sys.exit(EXIT_ERROR)


@click.group()
def main():
    """Anytime-valid sequential tests of distributional invariance."""


@main.command("test")
@click.option("--group", default="perm", show_default=True,
              help="perm | perm-mod:<k> | perm-label:<K> | sphere | isotropy:<d>")
@click.option("--calibrator", default=None,
              help=f"Calibrator spec [default: {DEFAULT_UNIVARIATE}, "
                   f"or {DEFAULT_JOINT} with --joint]")
@click.option("--alpha", default=0.05, show_default=True, type=float,
              help="Anytime type-I error level.")
@click.option("--seed", default=0, show_default=True, type=int,
              envvar="ORBITMART_SEED",
              help="Seed for the randomization-draw substream "
                   "(env: ORBITMART_SEED).")
@click.option("--joint", default=None, type=int, metavar="K",
              help="Joint independence mode over K simultaneous streams.")
@click.option("--stop-on-reject", is_flag=True,
              help="Stop reading input once the threshold is crossed.")
def cmd_test(group, calibrator, alpha, seed, joint, stop_on_reject):
    """Stream records from stdin through the sequential test."""
    try:
        spec = GroupSpec.parse(group)
        if joint is not None:
            if joint < 1:
                raise ValueError(f"--joint must be >= 1, got {joint}")
            est = IndependenceMartingale(
                group=spec, n_streams=joint,
                calibrator=calibrator or DEFAULT_JOINT,
                alpha=alpha, random_state=seed, record_history=False)
        else:
            est = InvarianceMartingale(
                group=spec, calibrator=calibrator or DEFAULT_UNIVARIATE,
                alpha=alpha, random_state=seed, record_history=False)
        # Materialize the stream state now so config errors surface
        # before any input is consumed.
        est._start()
    except (ValueError, PayloadMismatchError) as exc:
        _fail(str(exc))

    for lineno, line in enumerate(sys.stdin, start=1):
        line = line.strip()
        if not line:
            continue
        try:
            raw = json.loads(line)
        except json.JSONDecodeError as exc:
            _fail(f"line {lineno}: malformed JSON ({exc.msg})")
        try:
            if joint is not None:
                values = raw["values"]
                record = est.update(values)
            else:
                value = raw["value"]
                covariates = raw.get("covariates")
                record = est.update(
                    value,
                    label=raw.get("label"),
                    covariates=None if covariates is None else covariates,
                )
        except KeyError as exc:
            _fail(f"line {lineno}: missing field {exc}")
        except (PayloadMismatchError, DegenerateDesignError, ValueError,
                TypeError) as exc:
            _fail(f"line {lineno}: {exc}")
        _emit(record)
        if stop_on_reject and record.rejected:
            break
    sys.exit(EXIT_REJECTED if est.martingale_.rejected else EXIT_OK)


@main.command("simulate")
@click.option("--scenario", "scenario_path", required=True,
              type=click.Path(), help="Scenario YAML file.")
@click.option("--out", "out_dir", required=True, type=click.Path(),
              help="Output directory for report.json and trajectories.csv.")
@click.option("--jobs", default=1, show_default=True, type=int,
              help="Parallel workers (replications are independent; the "
                   "report is identical for any worker count).")
def cmd_simulate(scenario_path, out_dir, jobs):
    """Run a simulation scenario and write its report."""
    try:
        scenario = load_scenario(scenario_path)
    except (OSError, ValueError, TypeError) as exc:
        _fail(f"cannot load scenario {scenario_path}: {exc}")
    result = run_scenario(scenario, jobs=jobs)
    write_report(result, out_dir)
    report = result["report"]
    click.echo(json.dumps(report["pooled_ranks"], sort_keys=True))
    click.echo(json.dumps(report["crossing"]["frequency"]))
    sys.exit(EXIT_OK)


@main.command("selfcheck")
def cmd_selfcheck():
    """Run the built-in verification battery and print a pass/fail table."""
    results = run_selfcheck()
    width = max(len(name) for name, _, _ in results)
    failures = 0
    for name, passed, detail in results:
        status = "PASS" if passed else "FAIL"
        failures += not passed
        click.echo(f"{name:<{width}}  {status}  {detail}")
    click.echo(f"{failures} failure(s) out of {len(results)} checks")
    sys.exit(EXIT_OK if failures == 0 else 1)


@main.command("replay")
@click.option("--calibrator", default=DEFAULT_UNIVARIATE, show_default=True,
              help="Calibrator spec used for the original run.")
@click.option("--alpha", default=0.05, show_default=True, type=float)
@click.option("--joint", default=None, type=int, metavar="K",
              help="Replay a joint-mode stream of K-vector ranks.")
def cmd_replay(calibrator, alpha, joint):
    """Recompute wealth from recorded output records on stdin.

    Reads the ``r`` field of each record and reapplies the calibrator
    and threshold; prints one log10_wealth per line, byte-identical to
    the original run's column.
    """
    try:
        cal = parse_calibrator(calibrator, dim=joint or 1)
        m = MartingaleState(alpha=alpha)
    except ValueError as exc:
        _fail(str(exc))
    for lineno, line in enumerate(sys.stdin, start=1):
        line = line.strip()
        if not line:
            continue
        try:
            raw = json.loads(line)
            step(m, cal, raw["r"])
        except (json.JSONDecodeError, KeyError, ValueError, TypeError) as exc:
            _fail(f"line {lineno}: {exc}")
        print(_fmt(m.log10_wealth), flush=True)
    sys.exit(EXIT_REJECTED if m.rejected else EXIT_OK)


if __name__ == "__main__":
    main()
