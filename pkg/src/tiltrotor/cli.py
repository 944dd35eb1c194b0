"""Command-line runner.

    tiltrotor run --scenario square_xy --out runs/
    tiltrotor run --scenario all --parallel 4 --check-stability
    tiltrotor validate --config my.yaml

Exit codes: 0 success, 1 threshold failure, 2 configuration error,
3 simulation aborted.
"""

import argparse
import json
import os
import sys
from concurrent.futures import ProcessPoolExecutor

from .config import load_config, parse_config
from .controller import validate_gains
from .errors import ConfigError, InvalidLog, SimulationAborted
from .sim.metrics import check_thresholds, scenario_metrics
from .sim.scenarios import BUILTIN_SCENARIOS, run_scenario
from .stability import CertificationTolerances, certify_cascade

EXIT_OK = 0
EXIT_THRESHOLD = 1
EXIT_CONFIG = 2
EXIT_ABORT = 3


def _write_json(path, obj):
    with open(path, "w") as fh:
        json.dump(obj, fh, indent=2, sort_keys=True, allow_nan=False)
        fh.write("\n")


def _certificate(log, cfg, gains):
    c = cfg.certificate
    tol = CertificationTolerances(terminal=c.terminal, coupling=c.coupling, residual=c.residual,
                                  window_fraction=c.window_fraction)
    try:
        report = certify_cascade(log, gains, tol)
    except InvalidLog as exc:
        return f"Cascade convergence certificate\nresult: INVALID ({exc})\n", {
            "passed": False, "invalid": str(exc)}
    return report.render(), report.to_dict()


def run_one(cfg, name, out_dir, check_stability=False):
    """Run one scenario and write its artefacts; returns ``(exit_code, summary)``."""
    params, gains = cfg.params(), cfg.gains()
    scenario = cfg.scenario(name)
    target = os.path.join(out_dir, name)
    os.makedirs(target, exist_ok=True)
    summary = {"scenario": name}
    try:
        log = run_scenario(scenario, gains, params, cfg.controller_config(),
                           fz_min=cfg.controller.fz_min, log_every=cfg.simulation.log_every)
    except SimulationAborted as exc:
        if exc.log is not None:
            exc.log.to_csv(os.path.join(target, "log.csv"))
        summary.update(passed=False, aborted=str(exc), abort_time=exc.time)
        _write_json(os.path.join(target, "summary.json"), summary)
        return EXIT_ABORT, summary

    log.to_csv(os.path.join(target, "log.csv"))
    metrics = scenario_metrics(log, scenario, params)
    passed, records = check_thresholds(metrics, cfg.thresholds(name))
    summary.update(passed=passed, thresholds=records, metrics=metrics)
    if check_stability:
        text, record = _certificate(log, cfg, gains)
        with open(os.path.join(target, "certificate.txt"), "w") as fh:
            fh.write(text)
        _write_json(os.path.join(target, "certificate.json"), record)
        summary["certificate"] = record
    _write_json(os.path.join(target, "summary.json"), summary)
    return (EXIT_OK if passed else EXIT_THRESHOLD), summary


def _worker(tree, name, out_dir, check_stability):
    return run_one(parse_config(tree), name, out_dir, check_stability)


def _report_line(name, code, summary):
    if code == EXIT_ABORT:
        return f"{name}: ABORTED ({summary['aborted']})"
    status = "PASS" if code == EXIT_OK else "FAIL"
    parts = [f"{r['metric']}={r['value']:.4g} {r['op']} {r['limit']:g}"
             if isinstance(r["value"], (int, float)) else f"{r['metric']}=n/a"
             for r in summary["thresholds"]]
    cert = summary.get("certificate")
    if cert is not None:
        parts.append("certificate " + ("PASS" if cert.get("passed") else "FAIL"))
    return f"{name}: {status}  " + "; ".join(parts)


def cmd_run(args):
    try:
        cfg = load_config(args.config, args.override)
        report = validate_gains(cfg.gains())
        if not report.accepted:
            raise ConfigError("controller.gains: " + "; ".join(report.violations))
        names = list(BUILTIN_SCENARIOS) if "all" in args.scenario else list(args.scenario)
        for name in names:
            cfg.scenario(name)  # surfaces bad names and geometry before anything runs
    except (ConfigError, ValueError, KeyError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG

    out_dir = args.out or cfg.output_dir
    os.makedirs(out_dir, exist_ok=True)
    if args.parallel > 1 and len(names) > 1:
        tree = cfg.model_dump()
        with ProcessPoolExecutor(max_workers=args.parallel) as pool:
            futures = [pool.submit(_worker, tree, n, out_dir, args.check_stability) for n in names]
            results = [f.result() for f in futures]
    else:
        results = [run_one(cfg, n, out_dir, args.check_stability) for n in names]

    for name, (code, summary) in zip(names, results):
        print(_report_line(name, code, summary))
    codes = [code for code, _ in results]
    if EXIT_ABORT in codes:
        return EXIT_ABORT
    return EXIT_THRESHOLD if EXIT_THRESHOLD in codes else EXIT_OK


def cmd_validate(args):
    try:
        cfg = load_config(args.config, args.override)
    except ConfigError as exc:
        print(f"config error:\n{exc}", file=sys.stderr)
        return EXIT_CONFIG
    report = validate_gains(cfg.gains())
    if not report.accepted:
        print("gain check failed:", file=sys.stderr)
        for v in report.violations:
            print(f"  controller.gains: {v}", file=sys.stderr)
        return EXIT_CONFIG
    try:
        for name in BUILTIN_SCENARIOS:
            cfg.scenario(name)
    except (ConfigError, ValueError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    print("config OK: schema valid, gains satisfy K_p*K_d > K_i on every axis")
    return EXIT_OK


def build_parser():
    parser = argparse.ArgumentParser(prog="tiltrotor", description=__doc__.split("\n")[0])
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--config", default=None, help="YAML config (default: bundled)")
        p.add_argument("--override", action="append", default=[], metavar="KEY=VALUE",
                       help="override a config entry by dotted path; repeatable")

    run = sub.add_parser("run", help="simulate scenarios and write logs and summaries")
    common(run)
    run.add_argument("--scenario", action="append", required=True,
                     choices=list(BUILTIN_SCENARIOS) + ["all"], help="repeatable; 'all' runs every one")
    run.add_argument("--out", default=None, help="output directory (default: config output_dir)")
    run.add_argument("--check-stability", action="store_true",
                     help="also write the cascade convergence certificate")
    run.add_argument("--parallel", type=int, default=1, metavar="N",
                     help="run independent scenarios in N processes")
    run.set_defaults(func=cmd_run)

    val = sub.add_parser("validate", help="check a config and its gains without simulating")
    common(val)
    val.set_defaults(func=cmd_validate)
    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
