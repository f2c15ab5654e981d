"""Command-line front end.

Subcommands::

    mzphoton run CONFIG [--out-dir DIR] [--workers N] [--section.key=value ...]
    mzphoton demo [--out-dir DIR] [--seed S] [--workers N]
    mzphoton threshold --n N --eta ETA [--visibility V]
    mzphoton fit CSV --n-fold N [--eta ETA]

Exit codes: 0 success, 2 invalid config or arguments, 3 I/O failure,
4 numerical failure. The default output directory is ``$MZPHOTON_OUTPUT_DIR``
or the current directory.
"""

from __future__ import annotations

import argparse
import csv
import json
import math
import os
import sys
import tempfile
from dataclasses import asdict, replace
from typing import Optional, Sequence

import numpy as np

from .analysis import FitError, FringeDataset, fit_fixed_frequency_sinusoid, hom_dip_ratio
from .config import ConfigError, OutputSpec, RunConfig, ThresholdSpec, config_to_dict, load_config
from .interferometer import analytic_fringe_model, intrinsic_efficiency
from .metrology import MetrologyDomainError, NoSensitivityError, assess, limits, visibility_threshold
from .simulator import (
    DEFAULT_SEED,
    MODE_CASES,
    ConfigurationError,
    CountRecord,
    DetectorModel,
    ScanConfig,
    SourceModel,
    simulate,
)

OUTPUT_DIR_ENV = "MZPHOTON_OUTPUT_DIR"
FRINGE_HEADER = ("setting_rad", "setting_deg", "counts", "error", "pulses")
HOM_HEADER = ("delay_fs", "counts", "error", "pulses")

EXIT_OK, EXIT_CONFIG, EXIT_IO, EXIT_NUMERIC = 0, 2, 3, 4

NUMERICAL_ERRORS = (FitError, MetrologyDomainError, NoSensitivityError, np.linalg.LinAlgError, FloatingPointError)


def default_output_dir() -> str:
    return os.environ.get(OUTPUT_DIR_ENV) or "."


def _f(x: float) -> str:
    return format(float(x), ".17g")


def atomic_write(path: str, text: str) -> None:
    """Write ``text`` to ``path`` via a temp file in the same directory and a rename."""
    directory = os.path.dirname(os.path.abspath(path))
    os.makedirs(directory, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".tmp-", suffix=os.path.basename(path))
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def records_to_csv(records: Sequence[CountRecord], hom: bool = False) -> str:
    lines = [",".join(HOM_HEADER if hom else FRINGE_HEADER)]
    for r in records:
        if hom:
            row = (_f(r.setting), str(r.counts), _f(r.error), str(r.pulses))
        else:
            deg = r.angle_deg if r.angle_deg is not None else math.degrees(r.setting)
            row = (_f(r.setting), _f(deg), str(r.counts), _f(r.error), str(r.pulses))
        lines.append(",".join(row))
    return "\n".join(lines) + "\n"


def read_csv(path: str) -> tuple[list[CountRecord], bool]:
    """Parse a CSV written by ``records_to_csv``. Returns (records, is_hom)."""
    with open(path, encoding="utf-8", newline="") as fh:
        rows = list(csv.reader(fh))
    if not rows:
        raise ConfigError("empty CSV", origin=path)
    header = tuple(rows[0])
    if header not in (FRINGE_HEADER, HOM_HEADER):
        raise ConfigError(f"unrecognised header {','.join(header)!r}", 1, path)
    hom = header == HOM_HEADER
    records = []
    for lineno, row in enumerate(rows[1:], start=2):
        if len(row) != len(header):
            raise ConfigError(f"expected {len(header)} fields, got {len(row)}", lineno, path)
        try:
            if hom:
                records.append(CountRecord(float(row[0]), int(row[1]), float(row[2]), int(row[3])))
            else:
                records.append(CountRecord(float(row[0]), int(row[2]), float(row[3]), int(row[4]), float(row[1])))
        except ValueError as exc:
            raise ConfigError(str(exc), lineno, path) from None
    return records, hom


def _dumps(obj) -> str:
    return json.dumps(obj, indent=2, allow_nan=False) + "\n"


def fringe_summary(records: Sequence[CountRecord], mode: str) -> dict:
    model = analytic_fringe_model(*MODE_CASES[mode])
    fit = fit_fixed_frequency_sinusoid(FringeDataset(records, model.n_fold))
    eta = intrinsic_efficiency(*MODE_CASES[mode])
    # The fitted visibility can exceed 1 by a statistical fluctuation; the
    # sensitivity assessment is defined on (0, 1].
    report = assess(min(fit.visibility, 1.0), model.n_fold, eta)
    return {"fit": asdict(fit), "sensitivity": asdict(report)}


def threshold_summary(spec: ThresholdSpec) -> dict:
    sql, heisenberg = limits(spec.n)
    out = {
        "n": spec.n,
        "eta_i": spec.eta_i,
        "v_threshold": visibility_threshold(spec.n, spec.eta_i),
        "sql_limit": sql,
        "heisenberg_limit": heisenberg,
    }
    out["sensitivity"] = None if spec.visibility is None else asdict(assess(spec.visibility, spec.n, spec.eta_i))
    return out


def execute(config: RunConfig, out_dir: Optional[str] = None, workers: int = 1) -> dict:
    """Run one experiment, write its artifacts and return the JSON summary.

    Raises the library's exceptions; ``main`` maps them to exit codes.
    """
    out_dir = out_dir or default_output_dir()
    # Relative output paths resolve against the output directory.
    json_path = os.path.join(out_dir, config.output.json or f"{config.experiment}.json")
    summary: dict = {"config": config_to_dict(config)}
    if config.experiment == "thresholds":
        summary["thresholds"] = threshold_summary(config.thresholds)
    else:
        csv_path = os.path.join(out_dir, config.output.csv or f"{config.experiment}.csv")
        records = simulate(config.source, config.detector, config.scan, workers)
        hom = config.experiment == "hom_delay"
        atomic_write(csv_path, records_to_csv(records, hom))
        summary["records"] = len(records)
        if hom:
            summary["hom"] = asdict(hom_dip_ratio(records, config.source.coherence_time_fs))
        else:
            summary.update(fringe_summary(records, config.experiment))
    atomic_write(json_path, _dumps(summary))
    return summary


# -- demo --------------------------------------------------------------------

DEMO_PHASES = tuple(float(p) for p in np.linspace(0.0, 2 * math.pi, 32, endpoint=False))
DEMO_DELAYS = tuple(float(d) for d in np.linspace(-3000.0, 3000.0, 25))
DEMO_ACCUMULATION = {
    "fringe_single": 1.0,
    "fringe_two": 300.0,
    "fringe_four": 300.0,
    "fringe_dist_two": 1.0,
    "fringe_dist_four": 300.0,
}
HOM_ACCUMULATION = 300.0

# Published values the report compares against.
CLAIMS = {
    "fringe_single": {"eta_i": 1.0, "n_fold": 1, "beats_sql": False},
    "fringe_two": {"eta_i": 1.0, "n_fold": 2, "v_threshold": 1 / math.sqrt(2), "beats_sql": True},
    "fringe_four": {"eta_i": 3 / 8, "n_fold": 4, "v_threshold": math.sqrt(2 / 3), "beats_sql": True},
    "fringe_dist_two": {"eta_i": 1 / 4, "n_fold": 2, "v_threshold": math.sqrt(2), "beats_sql": False},
    "fringe_dist_four": {"eta_i": 1 / 8, "n_fold": 4, "v_threshold": math.sqrt(2), "beats_sql": False},
}
HOM_CLAIMS = {"hom_delay": None, "hom_pure_22": 2 / 3, "hom_pure_1111": 4 / 3}


def demo_configs(seed: int = DEFAULT_SEED) -> dict[str, RunConfig]:
    """The demo's runs: five fringe scans and three HOM delay scans."""
    configs = {}
    for mode, acc in DEMO_ACCUMULATION.items():
        scan = ScanConfig(DEMO_PHASES, acc, seed=seed, mode=mode)
        configs[mode] = RunConfig(mode, SourceModel(), DetectorModel(), scan)
    hom_scan = ScanConfig(DEMO_DELAYS, HOM_ACCUMULATION, seed=seed, mode="hom_delay")
    configs["hom_delay"] = RunConfig("hom_delay", SourceModel(), DetectorModel(), hom_scan)
    # Without |33> emission the dip ratio isolates the |22> vs |1111> contrast.
    for name, x in (("hom_pure_22", 0.0), ("hom_pure_1111", 1.0)):
        configs[name] = RunConfig("hom_delay", SourceModel(p33=0.0, distinguishability_x=x), DetectorModel(), hom_scan)
    return configs


def reproduction_demo(out_dir: Optional[str] = None, seed: int = DEFAULT_SEED, workers: int = 1) -> dict:
    """Run every demo case, write per-case CSV/JSON and a combined ``report.json``."""
    out_dir = out_dir or default_output_dir()
    report: dict = {"seed": seed, "fringes": {}, "hom": {}}
    for name, config in demo_configs(seed).items():
        config = replace(config, output=OutputSpec(f"{name}.csv", f"{name}.json"))
        summary = execute(config, out_dir, workers)
        if name in CLAIMS:
            claim = CLAIMS[name]
            eta = summary["sensitivity"]["eta_i"]
            ideal = assess(1.0, claim["n_fold"], eta)
            report["fringes"][name] = {
                "claimed": claim,
                "intrinsic_efficiency": eta,
                "v_threshold": ideal.v_threshold,
                "ideal_beats_sql": ideal.beats_sql,
                "fitted_visibility": summary["fit"]["visibility"],
                "sigma_visibility": summary["fit"]["sigma_visibility"],
                "beats_sql": summary["sensitivity"]["beats_sql"],
            }
        else:
            report["hom"][name] = {"claimed_ratio": HOM_CLAIMS[name], **summary["hom"]}
    atomic_write(os.path.join(out_dir, "report.json"), _dumps(report))
    return report


def _print_demo(report: dict, out) -> None:
    print(f"{'case':18} {'eta_i':>7} {'V_th':>7} {'V_fit':>8} {'sigma':>7}  beats_sql", file=out)
    for name, row in report["fringes"].items():
        print(
            f"{name:18} {row['intrinsic_efficiency']:7.4f} {row['v_threshold']:7.4f} "
            f"{row['fitted_visibility']:8.4f} {row['sigma_visibility']:7.4f}  {row['beats_sql']}",
            file=out,
        )
    for name, row in report["hom"].items():
        claim = "-" if row["claimed_ratio"] is None else f"{row['claimed_ratio']:.4f}"
        print(f"{name:18} ratio {row['ratio']:.4f} +- {row['sigma_ratio']:.4f} (claim {claim})  {row['verdict']}", file=out)


# -- entry point -------------------------------------------------------------


def _parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="mzphoton", description="Multi-photon Mach-Zehnder simulator.")
    sub = p.add_subparsers(dest="command", required=True)

    r = sub.add_parser("run", help="run one experiment from a YAML config")
    r.add_argument("config")
    r.add_argument("--out-dir")
    r.add_argument("--workers", type=int, default=1)

    d = sub.add_parser("demo", help="reproduce every fringe case and the HOM dip")
    d.add_argument("--out-dir")
    d.add_argument("--seed", type=int, default=DEFAULT_SEED)
    d.add_argument("--workers", type=int, default=1)

    t = sub.add_parser("threshold", help="SQL threshold visibility for N photons")
    t.add_argument("--n", type=int, required=True)
    t.add_argument("--eta", type=float, required=True)
    t.add_argument("--visibility", type=float)

    f = sub.add_parser("fit", help="fit a fringe CSV (or compute a HOM dip ratio)")
    f.add_argument("csv")
    f.add_argument("--n-fold", type=int)
    f.add_argument("--eta", type=float, help="intrinsic efficiency for the sensitivity verdict")
    return p


def _run(args, overrides: list[str], out) -> int:
    if args.command == "run":
        config = load_config(args.config, overrides)
        summary = execute(config, args.out_dir, args.workers)
        print(_dumps({k: v for k, v in summary.items() if k != "config"}), end="", file=out)
    elif args.command == "demo":
        _print_demo(reproduction_demo(args.out_dir, args.seed, args.workers), out)
    elif args.command == "threshold":
        print(_dumps(threshold_summary(ThresholdSpec(args.n, args.eta, args.visibility))), end="", file=out)
    else:
        records, hom = read_csv(args.csv)
        if hom:
            result = {"hom": asdict(hom_dip_ratio(records))}
        else:
            if args.n_fold is None:
                raise ConfigError("--n-fold is required for fringe data", origin="<arguments>")
            fit = fit_fixed_frequency_sinusoid(FringeDataset(records, args.n_fold))
            result = {"fit": asdict(fit)}
            if args.eta is not None:
                result["sensitivity"] = asdict(assess(min(fit.visibility, 1.0), args.n_fold, args.eta))
        print(_dumps(result), end="", file=out)
    return EXIT_OK


def main(argv: Optional[Sequence[str]] = None, out=None, err=None) -> int:
    out = out or sys.stdout
    err = err or sys.stderr
    argv = list(sys.argv[1:] if argv is None else argv)
    # --section.key=value overrides are not argparse options; split them off.
    overrides = [a for a in argv if a.startswith("--") and "." in a.split("=", 1)[0]]
    rest = [a for a in argv if a not in overrides]
    parser = _parser()
    try:
        args = parser.parse_args(rest)
    except SystemExit as exc:
        return EXIT_OK if exc.code == 0 else EXIT_CONFIG
    if overrides and args.command != "run":
        print(f"error: overrides are only accepted by 'run': {' '.join(overrides)}", file=err)
        return EXIT_CONFIG
    try:
        return _run(args, overrides, out)
    except ConfigError as exc:
        print(f"config error: {exc}", file=err)
        return EXIT_CONFIG
    except (ConfigurationError, ValueError) as exc:
        if isinstance(exc, NUMERICAL_ERRORS):
            print(f"numerical error: {exc}", file=err)
            return EXIT_NUMERIC
        print(f"invalid input: {exc}", file=err)
        return EXIT_CONFIG
    except NUMERICAL_ERRORS as exc:
        print(f"numerical error: {exc}", file=err)
        return EXIT_NUMERIC
    except OSError as exc:
        print(f"I/O error: {exc}", file=err)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
