"""Command-line front end: config parsing, sweep execution, result serialization.

Subcommands
-----------
estimate      one synthetic trial at the first configured SNR point; writes the
              true and estimated parameters as JSON
bounds        Fisher matrix, CRLBs, closed-form CRLBs and LCRLBs at the
              configured scene parameters
mse-sweep     Monte-Carlo estimation-MSE sweep (figure 2/3/4 style data)
outage-sweep  selection-combining outage sweep (figure 5 style data)
selftest      runs the built-in consistency suites and reports pass/fail

Exit codes: 0 success, 1 selftest failure, 2 usage error, 3 I/O error,
4 numerical degeneracy (singular Fisher matrix).
"""

from __future__ import annotations

import argparse
import json
import sys
from dataclasses import dataclass, field

import numpy as np

from . import bounds as bounds_mod
from . import estimation
from .array_model import ArrayConfig
from .bounds import BoundInputs, SingularFisherError, compute_bounds
from .experiments import ExperimentConfig, SweepTable, run_mse_sweep, run_outage_sweep
from .signal_model import ChannelParams, generate_frame, make_pilots, sample_channel

__all__ = ["CliCommand", "parse_cli", "emit_results", "selftest", "main"]

EXIT_OK = 0
EXIT_SELFTEST_FAILED = 1
EXIT_USAGE = 2
EXIT_IO = 3
EXIT_DEGENERATE = 4

_SUBCOMMANDS = ("estimate", "bounds", "mse-sweep", "outage-sweep", "selftest")

CSV_COLUMNS = ("metric", "snr_db", "value", "bound_crlb", "bound_lcrlb", "trials", "seed")


@dataclass(frozen=True)
class CliCommand:
    """Parsed invocation: subcommand, config/output paths, key=value overrides."""

    subcommand: str
    config_path: str | None = None
    output_path: str | None = None
    overrides: tuple = ()
    output_format: str = "csv"


def _fmt17(x: float) -> str:
    """17 significant digits: enough for exact float64 round trips."""
    return format(float(x), ".17g")


def parse_cli(args: list[str]) -> CliCommand:
    """Parse argv (without the program name) into a CliCommand.

    Usage errors (unknown subcommand or flag) raise SystemExit with code 2,
    matching argparse conventions.
    """
    parser = argparse.ArgumentParser(
        prog="ambc-chanest",
        description="Backscatter-reader channel estimation experiments",
    )
    sub = parser.add_subparsers(dest="subcommand", required=True)
    for name in _SUBCOMMANDS:
        p = sub.add_parser(name)
        p.add_argument("--config", dest="config_path", default=None, help="JSON config file")
        p.add_argument("--output", dest="output_path", default=None, help="output file path")
        p.add_argument(
            "--format",
            dest="output_format",
            choices=("csv", "json"),
            default="csv",
            help="serialization format for sweep tables",
        )
        p.add_argument(
            "--set",
            dest="overrides",
            action="append",
            default=[],
            metavar="KEY=VALUE",
            help="override a config key (repeatable)",
        )
    ns = parser.parse_args(args)
    return CliCommand(
        subcommand=ns.subcommand,
        config_path=ns.config_path,
        output_path=ns.output_path,
        overrides=tuple(ns.overrides),
        output_format=ns.output_format,
    )


def load_config(command: CliCommand) -> ExperimentConfig:
    """Config file plus --set overrides; every key is validated."""
    data = {}
    if command.config_path is not None:
        with open(command.config_path, "r", encoding="utf-8") as fh:
            data = json.load(fh)
    for item in command.overrides:
        if "=" not in item:
            raise ValueError(f"override {item!r} is not of the form KEY=VALUE")
        key, _, raw = item.partition("=")
        try:
            value = json.loads(raw)
        except json.JSONDecodeError:
            value = raw  # bare strings like fading_mode=fully-fixed
        data[key.strip()] = value
    return ExperimentConfig.from_flat_dict(data)


def emit_results(table: SweepTable, output_format: str, path: str) -> None:
    """Serialize a sweep table to CSV or a JSON bundle.

    CSV columns are exactly metric, snr_db, value, bound_crlb, bound_lcrlb,
    trials, seed; metrics without bounds leave the bound cells empty.  All
    floats carry 17 significant digits so a write/parse round trip is exact.
    """
    if output_format == "csv":
        lines = [",".join(CSV_COLUMNS)]
        for row in table.rows:
            lines.append(
                ",".join(
                    (
                        row.metric,
                        _fmt17(row.snr_db),
                        _fmt17(row.value),
                        "" if row.bound_crlb is None else _fmt17(row.bound_crlb),
                        "" if row.bound_lcrlb is None else _fmt17(row.bound_lcrlb),
                        str(row.trials),
                        str(row.seed),
                    )
                )
            )
        if not table.rows:
            print("warning: emitting a header-only CSV (empty sweep table)", file=sys.stderr)
        text = "\n".join(lines) + "\n"
        with open(path, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
        return
    if output_format == "json":
        bundle = {
            "schema": "ambc-chanest/sweep-v1",
            "provenance": {
                "package": "ambc-chanest",
                "version": _package_version(),
                **(table.provenance or {}),
            },
            "config": None if table.config is None else table.config.to_flat_dict(),
            "rows": [
                {
                    "metric": row.metric,
                    "snr_db": row.snr_db,
                    "value": row.value,
                    "bound_crlb": row.bound_crlb,
                    "bound_lcrlb": row.bound_lcrlb,
                    "trials": row.trials,
                    "seed": row.seed,
                }
                for row in table.rows
            ],
        }
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(bundle, fh, indent=2)
            fh.write("\n")
        return
    raise ValueError(f"unknown output format {output_format!r}")


def _package_version() -> str:
    from . import __version__

    return __version__


@dataclass
class SelftestReport:
    """Per-suite check counts and the individual pass/fail lines."""

    lines: list = field(default_factory=list)
    suite_counts: dict = field(default_factory=dict)
    failures: int = 0

    def record(self, suite: str, name: str, ok: bool, detail: str = "") -> None:
        status = "PASS" if ok else "FAIL"
        suffix = f" ({detail})" if detail and not ok else ""
        self.lines.append(f"[{status}] {suite}: {name}{suffix}")
        passed, total = self.suite_counts.get(suite, (0, 0))
        self.suite_counts[suite] = (passed + (1 if ok else 0), total + 1)
        if not ok:
            self.failures += 1

    @property
    def ok(self) -> bool:
        return self.failures == 0


def selftest() -> SelftestReport:
    """Run the noiseless-exactness, CRLB-equivalence, and LCRLB-dominance suites."""
    report = SelftestReport()
    cfg = ArrayConfig(num_antennas=128, spacing_ratio=0.5)
    eta = 0.5

    # --- suite 1: noiseless exactness of the two-state pipeline ---
    def run_noiseless(theta0, theta1):
        params = ChannelParams(
            h0=0.8 - 0.3j, h_st=1.1 + 0.2j, h_tr=0.7 - 0.5j, eta=eta, theta0=theta0, theta1=theta1
        )
        pilots0 = make_pilots(1, 1.0, tag_state=0)
        rng = np.random.default_rng(0)
        frame0 = generate_frame(params, cfg, pilots0, 0.0, rng)
        frame1 = generate_frame(params, cfg, pilots0.with_tag_state(1), 0.0, rng)
        res = estimation.estimate_all(frame0, frame1, pilots0, cfg, eta)
        return params, res

    on0, on1 = float(np.arcsin(-32 / 64)), float(np.arcsin(16 / 64))
    params, res = run_noiseless(on0, on1)
    report.record(
        "noiseless-exactness",
        "on-grid DoAs recovered to 1e-9",
        abs(res.direct.theta_hat - on0) < 1e-9 and abs(res.backscatter.theta_hat - on1) < 1e-9,
        f"errors {abs(res.direct.theta_hat - on0):.2e}, {abs(res.backscatter.theta_hat - on1):.2e}",
    )
    report.record(
        "noiseless-exactness",
        "on-grid gain moduli recovered to 1e-9",
        abs(abs(res.direct.gain_hat) - abs(params.h0)) < 1e-9
        and abs(abs(res.backscatter_gain_over_eta) - abs(params.h1) / eta) < 1e-9,
    )
    params, res = run_noiseless(-np.pi / 4, np.pi / 5)
    report.record(
        "noiseless-exactness",
        "off-grid refinement (direct < 1e-4 rad, backscatter < 1e-3 rad)",
        abs(res.direct.theta_hat + np.pi / 4) < 1e-4
        and abs(res.backscatter.theta_hat - np.pi / 5) < 1e-3,
        f"errors {abs(res.direct.theta_hat + np.pi / 4):.2e}, {abs(res.backscatter.theta_hat - np.pi / 5):.2e}",
    )
    report.record(
        "noiseless-exactness",
        "refinement beats the coarse stage off-grid",
        abs(res.direct.theta_hat + np.pi / 4) < abs(res.direct_coarse.theta_hat + np.pi / 4)
        and abs(res.backscatter.theta_hat - np.pi / 5) < abs(res.backscatter_coarse.theta_hat - np.pi / 5),
    )

    # --- suites 2 and 3: bound consistency over random scenes ---
    rng = np.random.default_rng(1234)
    checked = mismatches = dominance_violations = degenerate = 0
    worst_rel = 0.0
    while checked < 200:
        inp = BoundInputs(
            abs_h0=float(rng.uniform(0.05, 3.0)),
            abs_h1=float(rng.uniform(0.05, 3.0)),
            omega0=float(rng.uniform(-np.pi, np.pi)),
            omega1=float(rng.uniform(-np.pi, np.pi)),
            theta0=float(rng.uniform(-1.4, 1.4)),
            theta1=float(rng.uniform(-1.4, 1.4)),
            eta=float(rng.uniform(0.1, 1.0)),
            num_antennas=int(rng.choice([16, 64, 128])),
            num_pilots=int(rng.choice([1, 2, 4])),
            pilot_power=float(rng.uniform(0.1, 100.0)),
            sigma2=float(rng.uniform(0.1, 10.0)),
        )
        try:
            numeric = bounds_mod.crlb_numeric(inp)
            closed = bounds_mod.crlb_closed_form(inp)
        except SingularFisherError:
            degenerate += 1
            continue
        checked += 1
        rel = float(np.max(np.abs(closed - numeric) / numeric))
        worst_rel = max(worst_rel, rel)
        if rel >= 1e-8:
            mismatches += 1
        if np.any(bounds_mod.lcrlb(inp) > numeric * (1 + 1e-12)):
            dominance_violations += 1
    report.record(
        "crlb-equivalence",
        f"closed form matches inversion on 200 random scenes (worst rel {worst_rel:.2e})",
        mismatches == 0,
        f"{mismatches} mismatches",
    )
    report.record(
        "lcrlb-dominance",
        "LCRLB <= CRLB elementwise on the same scenes",
        dominance_violations == 0,
        f"{dominance_violations} violations",
    )
    report.record(
        "lcrlb-dominance",
        "degenerate geometries rejected rather than bounded",
        degenerate < 100,
        f"{degenerate} rejections while collecting 200 scenes",
    )
    return report


def _cmd_estimate(command: CliCommand) -> int:
    cfg = load_config(command)
    snr_db = cfg.snr_points_db[0]
    power = cfg.sigma2 * 10.0 ** (snr_db / 10.0)
    rng = np.random.default_rng(np.random.SeedSequence(entropy=cfg.seed, spawn_key=(2, 0, 0)))
    if cfg.fading_mode == "fully-fixed":
        params = ChannelParams(h0=cfg.h0, h_st=cfg.h_st, h_tr=cfg.h_tr,
                               eta=cfg.eta, theta0=cfg.theta0, theta1=cfg.theta1)
    else:
        params = sample_channel(rng, eta=cfg.eta, theta0=cfg.theta0, theta1=cfg.theta1)
    pilots0 = make_pilots(cfg.num_pilots, power, cfg.pilot_pattern, tag_state=0)
    frame0 = generate_frame(params, cfg.array, pilots0, cfg.sigma2, rng)
    frame1 = generate_frame(params, cfg.array, pilots0.with_tag_state(1), cfg.sigma2, rng)
    res = estimation.estimate_all(frame0, frame1, pilots0, cfg.array, cfg.eta, path_split=cfg.path_split)
    payload = {
        "snr_db": snr_db,
        "truth": {
            "theta0": params.theta0,
            "theta1": params.theta1,
            "abs_h0": abs(params.h0),
            "abs_h1_over_eta": abs(params.h1) / cfg.eta,
        },
        "estimates": {
            "theta0": res.direct.theta_hat,
            "theta1": res.backscatter.theta_hat,
            "abs_h0": abs(res.direct.gain_hat),
            "abs_h1_over_eta": abs(res.backscatter_gain_over_eta),
            "direct_bin": res.direct.bin,
            "direct_delta": res.direct.delta,
            "backscatter_bin": res.backscatter.bin,
            "backscatter_delta": res.backscatter.delta,
        },
        "config": cfg.to_flat_dict(),
    }
    text = json.dumps(payload, indent=2) + "\n"
    if command.output_path:
        with open(command.output_path, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    return EXIT_OK


def _cmd_bounds(command: CliCommand) -> int:
    cfg = load_config(command)
    snr_db = cfg.snr_points_db[0]
    power = cfg.sigma2 * 10.0 ** (snr_db / 10.0)
    inp = BoundInputs(
        abs_h0=abs(cfg.h0),
        abs_h1=cfg.eta * abs(cfg.h_st * cfg.h_tr),
        omega0=float(np.angle(cfg.h0)),
        omega1=float(np.angle(cfg.eta * cfg.h_st * cfg.h_tr)),
        theta0=cfg.theta0,
        theta1=cfg.theta1,
        eta=cfg.eta,
        num_antennas=cfg.array.num_antennas,
        num_pilots=cfg.num_pilots,
        pilot_power=power,
        sigma2=cfg.sigma2,
        spacing_ratio=cfg.array.spacing_ratio,
    )
    bundle = compute_bounds(inp)
    result = {
        "snr_db": snr_db,
        "parameters": ["abs_h0", "abs_h1_over_eta", "theta0", "theta1"],
        "fisher": bundle.fisher.tolist(),
        "crlb_numeric": bundle.crlb_numeric.tolist(),
        "crlb_closed_form": bundle.crlb_closed.tolist(),
        "lcrlb": bundle.lcrlb.tolist(),
        "bounds_state0": bounds_mod.bounds_state0(inp).tolist(),
        "config": cfg.to_flat_dict(),
    }
    text = json.dumps(result, indent=2) + "\n"
    if command.output_path:
        with open(command.output_path, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    return EXIT_OK


def _cmd_sweep(command: CliCommand, runner) -> int:
    cfg = load_config(command)
    table = runner(cfg)
    if command.output_path is None:
        raise ValueError("sweep subcommands require --output PATH")
    emit_results(table, command.output_format, command.output_path)
    return EXIT_OK


def _cmd_selftest(command: CliCommand) -> int:
    report = selftest()
    for line in report.lines:
        print(line)
    for suite, (passed, total) in report.suite_counts.items():
        print(f"{suite}: {passed}/{total} checks passed")
    if not report.ok:
        print(f"selftest FAILED ({report.failures} failing checks)")
        return EXIT_SELFTEST_FAILED
    print("selftest passed")
    return EXIT_OK


def main(argv: list[str] | None = None) -> int:
    """Console entry point; returns the process exit code."""
    try:
        command = parse_cli(sys.argv[1:] if argv is None else list(argv))
    except SystemExit as exc:  # argparse signals usage errors this way
        return EXIT_USAGE if exc.code not in (0, None) else EXIT_OK
    try:
        if command.subcommand == "estimate":
            return _cmd_estimate(command)
        if command.subcommand == "bounds":
            return _cmd_bounds(command)
        if command.subcommand == "mse-sweep":
            return _cmd_sweep(command, run_mse_sweep)
        if command.subcommand == "outage-sweep":
            return _cmd_sweep(command, run_outage_sweep)
        if command.subcommand == "selftest":
            return _cmd_selftest(command)
        print(f"unknown subcommand {command.subcommand!r}", file=sys.stderr)
        return EXIT_USAGE
    except SingularFisherError as exc:
        print(f"numerical degeneracy: {exc}", file=sys.stderr)
        return EXIT_DEGENERATE
    except OSError as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return EXIT_IO
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
