"""Batch command-line interface emitting machine-readable JSON reports.

Exit status: 0 on pass, 1 on a property failure, 2 on usage or input errors.
Reports for identical (seed, config, command) triples are byte-identical
apart from the ``timestamp`` field.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
import time
from dataclasses import dataclass

import numpy as np

from . import reductions
from .entropy import (
    check_correlation_bounds,
    check_entropy_inequalities,
    mutual_information,
    relative_entropy,
)
from .protocols import (
    PROTOCOL_BUILDERS,
    ChannelProtocol,
    INPUT_CLASSICAL,
    ProtocolVerificationError,
    build_named,
    canonical_ensemble,
    load_protocol,
    protocol_digest,
    require_desk_scale,
    resource_report,
    security_deviations,
    verify_correctness,
)
from .qmath import (
    ALGEBRA_TOL,
    ENTROPY_TOL,
    DensityOp,
    SystemLayout,
    partial_trace,
    random_density,
)

REPORT_SCHEMA = 1


class UsageError(Exception):
    pass


@dataclass
class RunConfig:
    seed: int = 0
    algebra_tol: float = ALGEBRA_TOL
    entropy_tol: float = ENTROPY_TOL
    random_probes: int = 50
    samples: int = 500

    def __post_init__(self):
        if self.algebra_tol <= 0 or self.entropy_tol <= 0:
            raise UsageError("tolerances must be positive")
        if self.random_probes < 0 or self.samples < 0:
            raise UsageError("counts must be nonnegative")
        if self.seed < 0:
            raise UsageError("seed must be nonnegative")

    def to_dict(self) -> dict:
        return {"seed": self.seed, "algebra_tol": self.algebra_tol,
                "entropy_tol": self.entropy_tol,
                "random_probes": self.random_probes, "samples": self.samples}


def _config(args) -> RunConfig:
    return RunConfig(seed=args.seed, algebra_tol=args.tol_algebra,
                     entropy_tol=args.tol_entropy,
                     random_probes=args.probes, samples=args.samples)


def _load(name_or_path: str, n: int) -> ChannelProtocol:
    if name_or_path in PROTOCOL_BUILDERS:
        try:
            protocol = build_named(name_or_path, n)
        except ValueError as exc:
            raise UsageError(str(exc)) from exc
    else:
        try:
            protocol = load_protocol(name_or_path)
        except FileNotFoundError as exc:
            raise UsageError(
                f"{name_or_path!r} is neither a known protocol name nor a file; "
                f"known names: {sorted(PROTOCOL_BUILDERS)}") from exc
        except (ValueError, KeyError, json.JSONDecodeError) as exc:
            raise UsageError(f"malformed protocol file {name_or_path!r}: {exc}") from exc
    try:
        require_desk_scale(protocol)
    except ValueError as exc:
        raise UsageError(str(exc)) from exc
    return protocol


def _base_report(command: str, cfg: RunConfig) -> dict:
    return {
        "schema": REPORT_SCHEMA,
        "command": command,
        "timestamp": time.strftime("%Y-%m-%dT%H:%M:%SZ", time.gmtime()),
        "config": cfg.to_dict(),
    }


def _verification_block(protocol: ChannelProtocol, cfg: RunConfig) -> tuple[dict, bool]:
    ensemble = canonical_ensemble(protocol, cfg.random_probes, cfg.seed)
    parts = security_deviations(protocol, ensemble)
    security = max(parts.values())
    correctness = verify_correctness(protocol, ensemble)
    report = resource_report(protocol)
    passed = security <= cfg.algebra_tol and correctness <= cfg.algebra_tol
    block = {
        "protocol": {"name": protocol.name, "n": protocol.input_qubits,
                     "hash": protocol_digest(protocol)},
        "security_deviation": security,
        "security_parts": parts,
        "correctness_deviation": correctness,
        "resources": report.to_dict(),
    }
    return block, passed


def cmd_verify(args) -> tuple[dict, int]:
    cfg = _config(args)
    protocol = _load(args.protocol, args.n)
    report = _base_report("verify", cfg)
    block, passed = _verification_block(protocol, cfg)
    report.update(block)
    report["pass"] = passed
    return report, 0 if passed else 1


def cmd_audit(args) -> tuple[dict, int]:
    cfg = _config(args)
    protocol = _load(args.protocol, args.n)
    report = _base_report("audit", cfg)
    block, verified = _verification_block(protocol, cfg)
    report.update(block)
    if not verified:
        report["audits"] = []
        report["audit_log"] = ["verification failed; audit skipped"]
        report["pass"] = False
        return report, 1
    log: list[str] = []
    try:
        if protocol.input_kind == INPUT_CLASSICAL:
            audits = reductions.audit_classical_input(
                protocol, verify_tol=cfg.algebra_tol, bound_tol=cfg.entropy_tol, log=log)
        else:
            audits = reductions.audit_quantum_input(
                protocol, verify_tol=cfg.algebra_tol, bound_tol=cfg.entropy_tol,
                random_probes=cfg.random_probes, seed=cfg.seed, log=log)
    except (ProtocolVerificationError, ValueError) as exc:
        report["audits"] = []
        report["audit_log"] = log + [f"audit aborted: {exc}"]
        report["pass"] = False
        return report, 1
    report["audits"] = [a.to_dict() for a in audits]
    report["audit_log"] = log
    passed = all(a.satisfied for a in audits)
    report["pass"] = passed
    return report, 0 if passed else 1


def cmd_inequalities(args) -> tuple[dict, int]:
    cfg = _config(args)
    if cfg.samples < 1:
        raise UsageError("--samples must be >= 1")
    report = _base_report("inequalities", cfg)
    rng = np.random.default_rng(cfg.seed)
    layout = SystemLayout.qubits(3)
    groups = {"A": (0,), "B": (1,), "C": (2,)}

    summary: dict[str, dict] = {}
    for _ in range(cfg.samples):
        rho = random_density(layout, rng)
        found = check_entropy_inequalities(rho, groups)
        found += check_correlation_bounds(rho, (0,), (1,), (2,))
        for item in found:
            entry = summary.get(item.name)
            # chain_rule reports a residual: track the max, others the min slack
            if item.name == "chain_rule":
                worse = entry is None or item.slack > entry["slack"]
            else:
                worse = entry is None or item.slack < entry["slack"]
            if worse:
                summary[item.name] = item.to_dict()

    cross_samples = min(cfg.samples, 200)
    pair_layout = SystemLayout.qubits(2)
    cross_dev = 0.0
    for _ in range(cross_samples):
        rho = random_density(pair_layout, rng)
        product = np.kron(partial_trace(rho, [0]).matrix,
                          partial_trace(rho, [1]).matrix)
        mi = mutual_information(rho, (0,), (1,))
        re_val = relative_entropy(rho, DensityOp(pair_layout, product))
        cross_dev = max(cross_dev, abs(mi - re_val))

    ordered = sorted(summary)
    report["inequalities"] = [
        {("max_residual" if name == "chain_rule" else "min_slack"): summary[name]["slack"],
         "name": name, "witness": summary[name]["witness"]}
        for name in ordered]
    report["cross_check"] = {
        "name": "mutual_info_equals_relative_entropy_to_marginals",
        "samples": cross_samples,
        "max_deviation": cross_dev,
    }
    passed = all(
        (summary[name]["slack"] <= cfg.entropy_tol if name == "chain_rule"
         else summary[name]["slack"] >= -cfg.entropy_tol)
        for name in ordered) and cross_dev <= cfg.entropy_tol
    report["pass"] = passed
    return report, 0 if passed else 1


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="pqclab",
        description="Verify and audit private-channel protocols; emit JSON reports.")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p: argparse.ArgumentParser):
        p.add_argument("--seed", type=int, default=0, help="seed for random probes/samples")
        p.add_argument("--samples", type=int, default=500,
                       help="sample count for inequality sweeps")
        p.add_argument("--probes", type=int, default=50,
                       help="Haar-random probe count per ensemble")
        p.add_argument("--tol-algebra", type=float, default=ALGEBRA_TOL,
                       help="tolerance for algebraic identities")
        p.add_argument("--tol-entropy", type=float, default=ENTROPY_TOL,
                       help="tolerance for entropy-valued quantities")
        p.add_argument("--json", metavar="PATH", default=None,
                       help="also write the report to this path")

    for name, fn, needs_protocol in (("verify", cmd_verify, True),
                                     ("audit", cmd_audit, True),
                                     ("inequalities", cmd_inequalities, False)):
        p = sub.add_parser(name)
        if needs_protocol:
            p.add_argument("protocol",
                           help="builder name or protocol descriptor file")
            p.add_argument("--n", type=int, default=1,
                           help="input size in (qu)bits for builder names")
        common(p)
        p.set_defaults(handler=fn)
    return parser


def _finite(value):
    # keep reports valid JSON even if a degenerate sample produced inf/nan
    if isinstance(value, float) and not math.isfinite(value):
        return None
    if isinstance(value, dict):
        return {k: _finite(v) for k, v in value.items()}
    if isinstance(value, list):
        return [_finite(v) for v in value]
    return value


def _emit(report: dict, json_path: str | None):
    text = json.dumps(_finite(report), sort_keys=True, indent=2)
    print(text)
    if json_path:
        with open(json_path, "w", encoding="utf-8") as fh:
            fh.write(text + "\n")


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        report, code = args.handler(args)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    _emit(report, args.json)
    return code


if __name__ == "__main__":
    sys.exit(main())
