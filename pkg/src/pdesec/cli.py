"""Command-line front end.

Subcommands map one-to-one onto the library capabilities:

* ``simulate``  - nominal spectral battery run, field + boundary CSVs (fig1 pipeline)
* ``stealth``   - synthesize the stealthy start-up attack, attack CSV + report
* ``design``    - scan for a feasible detector certificate, certificate JSON
* ``detect``    - calibrated detection run for a fig3 scenario, trace + detection JSON
* ``reproduce`` - full figure pipelines (``--figure 1|2|3``)

Exit codes: 0 success, 2 configuration error, 3 numerical divergence,
4 infeasible design.
"""

from __future__ import annotations

import argparse
import json
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import replace
from pathlib import Path

from . import casestudy, detector, lmi, stealth
from .casestudy import CaseStudyConfig, ConfigError

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_DIVERGENCE = 3
EXIT_INFEASIBLE = 4


def _load_config(args) -> CaseStudyConfig:
    if args.config is None:
        cfg = CaseStudyConfig()
    else:
        cfg = casestudy.parse_config(args.config)
    if args.out is not None:
        cfg = replace(cfg, out_dir=args.out)
    return cfg


def _cmd_simulate(args) -> int:
    cfg = replace(_load_config(args), scenario="fig1")
    outputs = casestudy.run_scenario(cfg)
    print(f"simulate: wrote {outputs['field']} and {outputs['boundary']}")
    return EXIT_OK


def _cmd_stealth(args) -> int:
    cfg = replace(_load_config(args), scenario="fig2")
    outputs = casestudy.run_scenario(cfg)
    with open(outputs["report"]) as fh:
        report = json.load(fh)
    print(
        "stealth: attack written to "
        f"{outputs['attack']} (max gap after settle: {report['max_gap_after_settle']:.3e})"
    )
    return EXIT_OK


def _cmd_design(args) -> int:
    cfg = _load_config(args)
    det = cfg.detector
    space = lmi.default_search_space()
    result = lmi.scan_design(casestudy.BATTERY_ALPHA, det.beta1, det.beta2, space)
    out = Path(cfg.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    if not result.feasible:
        print(f"design: {result.message} (best margin {result.best_margin:.3e})", file=sys.stderr)
        return EXIT_INFEASIBLE
    path = out / "certificate.json"
    lmi.save_certificate(path, result.certificate)
    print(
        f"design: {result.feasible_count}/{result.total} feasible candidates, "
        f"best margin {result.best_margin:.6g}, wrote {path}"
    )
    return EXIT_OK


def _cmd_detect(args) -> int:
    cfg = _load_config(args)
    if not cfg.scenario.startswith("fig3-"):
        print(
            f"detect: scenario must be one of fig3-nominal/fig3-uncertainty/fig3-attack, "
            f"got {cfg.scenario!r}",
            file=sys.stderr,
        )
        return EXIT_CONFIG
    outputs = casestudy.run_scenario(cfg)
    when = "not detected" if not outputs["detected"] else f"detected at t = {outputs['detection_time']:g}"
    print(f"detect: {cfg.scenario}: {when} (threshold {outputs['threshold']:.3e})")
    return EXIT_OK


def _run_one(cfg: CaseStudyConfig) -> dict:
    return casestudy.run_scenario(cfg)


def _cmd_reproduce(args) -> int:
    cfg = _load_config(args)
    if args.figure == 1:
        casestudy.run_scenario(replace(cfg, scenario="fig1"))
        print("reproduce: figure 1 CSVs written to", cfg.out_dir)
        return EXIT_OK
    if args.figure == 2:
        outputs = casestudy.run_scenario(replace(cfg, scenario="fig2"))
        with open(outputs["report"]) as fh:
            report = json.load(fh)
        print(
            f"reproduce: figure 2 CSVs written to {cfg.out_dir} "
            f"(max gap after settle {report['max_gap_after_settle']:.3e})"
        )
        return EXIT_OK
    variants = ["fig3-nominal", "fig3-uncertainty", "fig3-attack"]
    configs = [replace(cfg, scenario=v) for v in variants]
    if args.jobs > 1:
        with ProcessPoolExecutor(max_workers=args.jobs) as pool:
            results = list(pool.map(_run_one, configs))
    else:
        results = [casestudy.run_scenario(c) for c in configs]
    for v, r in zip(variants, results):
        when = "no detection" if not r["detected"] else f"detection at t = {r['detection_time']:g}"
        print(f"reproduce: {v}: {when}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="pdesec",
        description="Security analysis and attack detection for 1-D parabolic PDE systems.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--config", help="JSON configuration file (defaults apply when omitted)")
        p.add_argument("--out", help="output directory (overrides the config)")

    common(sub.add_parser("simulate", help="nominal spectral battery simulation"))
    common(sub.add_parser("stealth", help="synthesize the stealthy start-up attack"))
    common(sub.add_parser("design", help="scan for a feasible detector certificate"))
    common(sub.add_parser("detect", help="run a calibrated detection scenario"))
    rep = sub.add_parser("reproduce", help="reproduce a case-study figure")
    rep.add_argument("--figure", type=int, choices=(1, 2, 3), required=True)
    rep.add_argument("--jobs", type=int, default=1, help="run independent scenarios concurrently")
    common(rep)
    return parser


_COMMANDS = {
    "simulate": _cmd_simulate,
    "stealth": _cmd_stealth,
    "design": _cmd_design,
    "detect": _cmd_detect,
    "reproduce": _cmd_reproduce,
}


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return _COMMANDS[args.command](args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except detector.DivergenceError as exc:
        print(f"numerical divergence: {exc}", file=sys.stderr)
        return EXIT_DIVERGENCE
    except lmi.InfeasibleDesignError as exc:
        print(f"infeasible design: {exc}", file=sys.stderr)
        return EXIT_INFEASIBLE


if __name__ == "__main__":
    sys.exit(main())
