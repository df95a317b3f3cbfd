"""Command line interface: ``kvlab {validate,certify,run,sweep,mms} <config>``.

Exit codes: 0 success (including an observed blow-up), 1 a check failed,
2 bad configuration or usage, 3 the solver hit a step failure.
"""
from __future__ import annotations

import argparse
import logging
import sys
from dataclasses import replace
from pathlib import Path

from .. import __version__
from ..certificate import CertificateError, SamplingError, check_lemma_inequalities
from ..material import validate_material
from ..mms import run_mms
from ..solver import InitialDataError
from .config import ConfigError, SweepSpec, load_config
from .runner import (
    certify_text,
    deltas_from_arg,
    exit_code_for,
    run_config,
    run_sweep,
    trajectory_csv,
)

logger = logging.getLogger("kvlab")

EXIT_OK, EXIT_CHECK, EXIT_CONFIG, EXIT_STEP = 0, 1, 2, 3


def _write(out_dir, name, text):
    path = Path(out_dir) / name
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(text, encoding="utf-8", newline="\n")
    logger.info("wrote %s", path)
    return path


def cmd_validate(args) -> int:
    cfg = load_config(args.config)
    report = validate_material(cfg.material, cfg.validate_s_max, cfg.validate_samples)
    print(report.to_text())
    cfg.initial_data()  # raises on incompatible initial data
    print("initial data: ok")
    if args.out:
        _write(args.out, "validation.csv", report.to_csv())
    return EXIT_OK if report.passed else EXIT_CHECK


def cmd_certify(args) -> int:
    cfg = load_config(args.config)
    text, cert, _ = certify_text(cfg)
    print(text)
    print()
    print(cert.to_csv(), end="")
    if args.out:
        _write(args.out, "certificate.csv", cert.to_csv())
    return EXIT_OK


def cmd_run(args) -> int:
    cfg = load_config(args.config)
    report = validate_material(cfg.material, cfg.validate_s_max, cfg.validate_samples)
    if not report.passed:
        print(report.to_text())
        print("material fails its hypotheses; not running", file=sys.stderr)
        return EXIT_CHECK
    result = run_config(cfg)
    _write(args.out, "trajectory.csv", trajectory_csv(result))
    if args.lemmas:
        try:
            lemma = check_lemma_inequalities(
                result.trajectory, cfg.material, cfg.params, result.cert, tol=cfg.ineq_tol
            )
            print(lemma.to_text())
        except SamplingError as exc:
            print(f"lemma check refused: {exc}")
    if result.verdict.detail:
        print(f"detail: {result.verdict.detail}")
    print(result.verdict_line())
    return exit_code_for(result.verdict)


def cmd_sweep(args) -> int:
    cfg = load_config(args.config)
    spec = cfg.sweep or SweepSpec()
    if args.deltas is not None:
        spec = replace(spec, deltas=deltas_from_arg(args.deltas))
    if args.repetitions is not None:
        spec = replace(spec, repetitions=args.repetitions)
    text = run_sweep(cfg, spec, jobs=args.jobs)
    if args.out:
        _write(args.out, "sweep.csv", text)
    else:
        sys.stdout.write(text)
    return EXIT_OK


def cmd_mms(args) -> int:
    cfg = load_config(args.config)
    report = run_mms(
        cfg.omega_len,
        cfg.material,
        cfg.params,
        levels=args.levels,
        n0=cfg.mms_n0,
        T=cfg.mms_T,
        dt_factor=cfg.mms_dt_factor,
    )
    print(report.to_text())
    if args.out:
        _write(args.out, "mms.csv", report.to_csv())
    return EXIT_OK if report.passed else EXIT_CHECK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="kvlab", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"kvlab {__version__}")
    parser.add_argument("-v", "--verbose", action="count", default=0, help="more log output")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("validate", help="check material hypotheses and initial data")
    p.add_argument("config")
    p.add_argument("--out", help="directory for validation.csv")
    p.set_defaults(func=cmd_validate)

    p = sub.add_parser("certify", help="print the certificate constants")
    p.add_argument("config")
    p.add_argument("--out", help="directory for certificate.csv")
    p.set_defaults(func=cmd_certify)

    p = sub.add_parser("run", help="simulate and check the comparison bound")
    p.add_argument("config")
    p.add_argument("--out", default=".", help="directory for trajectory.csv (default: .)")
    p.add_argument("--lemmas", action="store_true", help="also print inequality residuals")
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("sweep", help="scan the coefficient variation delta")
    p.add_argument("config")
    p.add_argument("--deltas", help="comma separated list, or a file with one value per line")
    p.add_argument("--repetitions", type=int, help="runs per delta")
    p.add_argument("--jobs", type=int, default=1, help="worker processes")
    p.add_argument("--out", help="directory for sweep.csv (default: stdout)")
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("mms", help="manufactured-solution convergence study")
    p.add_argument("config")
    p.add_argument("--levels", type=int, default=4, help="number of refinement levels")
    p.add_argument("--out", help="directory for mms.csv")
    p.set_defaults(func=cmd_mms)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    level = logging.WARNING - 10 * min(args.verbose, 2)
    logging.basicConfig(level=level, format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except (ConfigError, CertificateError, InitialDataError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    raise SystemExit(main())
