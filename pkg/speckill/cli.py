"""
cli.py

Command-line entry point. Loads a JSON run configuration, applies flag
overrides, dispatches to the owning module and writes the reports.

Exit codes: 0 CERTIFIED/PASS, 2 REFUTED/FAIL, 3 invalid input or config,
1 any other error.
"""

from __future__ import annotations

import argparse
import logging
import os
import sys
from typing import Any, Dict, List, Optional, Tuple

from speckill.calculus.derivations import (
    audit,
    derive_theorem_bound,
    interval_summary,
    pb_lower_bound,
)
from speckill.certify.certifier import certify, probe_plateau
from speckill.certify.utils.certificate_infra import CertificateStatus, SpectralCertificate
from speckill.cover.utils.cover_infra import (
    color_disjoint_families,
    d_regularity,
    intersection_graph,
)
from speckill.cover.utils.nu import BoundStatus, check_lower_bound, nu_c, scaling_study
from speckill.cover.utils.partition import build_partition
from speckill.errors import ConfigError, SpeckillError
from speckill.radial.utils.pi_rational import PiRational
from speckill.report.config import COMMANDS, FORMATS, RunConfig, parse_config
from speckill.report.writers import (
    certificate_markdown,
    cover_markdown,
    norms_frame,
    pb_markdown,
    trace_markdown,
    write_frame,
    write_reports,
)

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_ERROR = 1
EXIT_FAIL = 2
EXIT_INVALID = 3

CERTIFICATE_EXIT = {
    CertificateStatus.CERTIFIED: EXIT_OK,
    CertificateStatus.REFUTED: EXIT_FAIL,
    CertificateStatus.INVALID_INPUT: EXIT_INVALID,
}


def build_parser(command: Optional[str] = None) -> argparse.ArgumentParser:
    prog = command or "speckill"
    parser = argparse.ArgumentParser(
        prog=prog,
        description=(
            "Certify spectral killers, propagate spectral invariant bounds and "
            "check Poisson bracket lower bounds for ball covers."
        ),
    )
    if command is None:
        parser.add_argument(
            "command",
            nargs="?",
            default=None,
            help=f"One of {', '.join(COMMANDS)}. Defaults to the config's command field.",
        )
    parser.add_argument("--config", type=str, required=True, help="Path to the JSON run config.")
    parser.add_argument("--out", type=str, default=None, help="Output directory.")
    parser.add_argument(
        "--format",
        type=str,
        default=None,
        help=f"Comma-separated report formats out of {', '.join(FORMATS)}.",
    )
    parser.add_argument("--probe", type=str, default=None, help="Probe plateau value a.")
    parser.add_argument("--seed", type=int, default=None, help="Seed for randomized steps.")
    parser.add_argument("--grid", type=int, default=None, help="Grid resolution for cover-pb.")
    parser.add_argument(
        "--exact-l-cap",
        type=int,
        default=None,
        help="Largest number of partition members solved by exact enumeration.",
    )
    parser.add_argument("--verbose", action="store_true", help="Log at DEBUG level.")
    return parser


def apply_overrides(config: RunConfig, args: argparse.Namespace) -> RunConfig:
    """
    Applies command-line flags on top of the parsed configuration.
    """
    errors = []
    if args.out is not None:
        config.output.directory = args.out
    if args.format is not None:
        formats = tuple(f.strip() for f in args.format.split(",") if f.strip())
        unknown = [f for f in formats if f not in FORMATS]
        if unknown:
            errors.append(f"--format: unknown formats {unknown}")
        config.output.formats = formats
    if args.seed is not None:
        if args.seed < 0:
            errors.append("--seed: must be a nonnegative integer")
        config.seed = args.seed
    if args.probe is not None:
        try:
            config.probe_a = PiRational.of(args.probe)
        except (TypeError, ValueError, ZeroDivisionError):
            errors.append(f"--probe: expected a number, got {args.probe!r}")
    if config.cover is not None:
        if args.grid is not None:
            config.cover.grid = args.grid
        if args.exact_l_cap is not None:
            config.cover.exact_cap = args.exact_l_cap
    if errors:
        raise ConfigError(errors)
    return config


# ================ Commands ================


def _certificate_outputs(
    config: RunConfig, cert: SpectralCertificate, stem: str, title: str
) -> Tuple[int, List[str]]:
    payload = {"command": config.command, "seed": config.seed, "certificate": cert.to_json()}
    written = write_reports(
        config.output.directory,
        stem,
        config.output.formats,
        payload,
        rows=[row.to_json() for row in cert.table],
        markdown=certificate_markdown(cert, title),
    )
    print(f"{title}: {cert.status.value} ({len(cert.table)} index-n rows)")
    if cert.offender is not None:
        print(
            f"  offender: step {cert.offender.step}, l = {cert.offender.orbit.l}, "
            f"action = {cert.offender.action} (~{float(cert.offender.action):.12g})"
        )
    if cert.reason:
        print(f"  reason: {cert.reason}")
    return CERTIFICATE_EXIT[cert.status], written


def run_killer_certify(config: RunConfig) -> Tuple[int, List[str]]:
    cert = certify(config.killer)
    return _certificate_outputs(config, cert, "certificate", "Spectral certificate")


def run_killer_probe(config: RunConfig) -> Tuple[int, List[str]]:
    if config.probe_a is None:
        raise ConfigError(["probe.a: killer-probe needs a plateau value (config or --probe)"])
    cert = probe_plateau(config.killer, config.probe_a)
    return _certificate_outputs(config, cert, "probe_certificate", "Probe certificate")


def run_cover_analyze(config: RunConfig) -> Tuple[int, List[str]]:
    cover = config.cover.cover
    graph = intersection_graph(cover)
    d = d_regularity(cover, graph)
    families = color_disjoint_families(cover, graph)
    ids = [b.ball_id for b in cover.balls]

    summary: Dict[str, Any] = {
        "command": config.command,
        "domain": cover.domain.to_json(),
        "balls": len(cover),
        "d": d,
        "degrees": {ids[k]: deg for k, deg in sorted(graph.degree())},
        "edges": [[ids[i], ids[j]] for i, j in sorted(graph.edges())],
        "families": [[ids[k] for k in family] for family in families],
    }
    rows = [
        {"ball": ids[k], "degree": graph.degree(k), "family": color}
        for color, family in enumerate(families, start=1)
        for k in family
    ]
    written = write_reports(
        config.output.directory,
        "cover_analysis",
        config.output.formats,
        summary,
        rows=sorted(rows, key=lambda row: ids.index(row["ball"])),
        markdown=cover_markdown(summary),
    )
    print(f"Cover: {len(cover)} balls, d = {d}, {len(families)} disjoint families")
    return EXIT_OK, written


def run_cover_pb(config: RunConfig) -> Tuple[int, List[str]]:
    spec = config.cover
    pou = build_partition(
        spec.cover, cutoff=spec.cutoff, grid=spec.grid, support_factor=spec.support_factor
    )
    nu = nu_c(pou, exact_cap=spec.exact_cap, seed=config.seed)
    report = check_lower_bound(
        pou, nu, energy_asserted=spec.energy_asserted, grid_slack=spec.grid_slack
    )
    scaling = scaling_study(spec.cover, cutoff=spec.cutoff).to_json() if spec.scaling else None

    payload = {
        "command": config.command,
        "seed": config.seed,
        "cover": spec.cover.to_json(),
        "partition": pou.to_json(),
        "bound_check": report.to_json(),
        "scaling": scaling,
    }
    written = write_reports(
        config.output.directory,
        "pb_report",
        [f for f in config.output.formats if f != "csv"],
        payload,
        markdown=pb_markdown(report, scaling),
    )
    if "csv" in config.output.formats:
        path = os.path.join(config.output.directory, "pb_norms.csv")
        written.append(write_frame(norms_frame(nu, pou.points), path))

    print(f"nu_c = {nu.nu_c:.12g}, bound = {report.bound}, status {report.status.value}")
    code = EXIT_FAIL if report.status is BoundStatus.FAIL else EXIT_OK
    return code, written


def run_bound_propagate(config: RunConfig) -> Tuple[int, List[str]]:
    spec = config.bound
    payload: Dict[str, Any] = {"command": config.command}
    markdown: List[str] = []
    rows: List[Dict[str, Any]] = []
    ok = True

    if spec.balls:
        if spec.model is None:
            raise ConfigError(["bound.model: needed to derive the ball bound"])
        trace = derive_theorem_bound(
            spec.balls,
            spec.model,
            certificates=spec.certificates,
            eps_fraction=spec.eps_fraction,
        )
        report = audit(trace)
        ok = ok and report.ok
        payload["theorem"] = {
            "final": interval_summary(trace.final),
            "audit": report.to_json(),
            "trace": trace.to_json(),
        }
        rows += [fact.to_json() for fact in trace.facts]
        markdown += trace_markdown(trace, report.ok, "Ball bound trace") + [""]
        print(f"c(H) in {trace.final.interval} (audit {'ok' if report.ok else 'FAILED'})")

    if spec.pb_d is not None:
        bound, trace = pb_lower_bound(spec.pb_d, spec.pb_r)
        report = audit(trace)
        ok = ok and report.ok
        payload["pb"] = {
            "d": spec.pb_d,
            "r": spec.pb_r,
            "bound": str(bound),
            "bound_value": float(bound),
            "audit": report.to_json(),
            "trace": trace.to_json(),
        }
        rows += [fact.to_json() for fact in trace.facts]
        markdown += trace_markdown(trace, report.ok, "Poisson bracket bound trace")
        print(f"pb(U) >= {bound} (audit {'ok' if report.ok else 'FAILED'})")

    written = write_reports(
        config.output.directory,
        "bound_trace",
        config.output.formats,
        payload,
        rows=rows,
        markdown=markdown,
    )
    return (EXIT_OK if ok else EXIT_ERROR), written


RUNNERS = {
    "killer-certify": run_killer_certify,
    "killer-probe": run_killer_probe,
    "cover-analyze": run_cover_analyze,
    "cover-pb": run_cover_pb,
    "bound-propagate": run_bound_propagate,
}


def run(config: RunConfig) -> int:
    """
    Dispatches a validated configuration and writes its reports.

    Args:
        config (RunConfig): The configuration.

    Returns:
        int: The exit code.
    """
    code, written = RUNNERS[config.command](config)
    for path in written:
        logger.info("Wrote %s", path)
    return code


def main(argv: Optional[List[str]] = None, command: Optional[str] = None) -> int:
    parser = build_parser(command)
    args = parser.parse_args(argv)

    logging.basicConfig(
        level=logging.DEBUG if args.verbose else logging.INFO, format="%(message)s"
    )

    try:
        config = parse_config(args.config, command or args.command)
        config = apply_overrides(config, args)
        return run(config)
    except ConfigError as e:
        for error in e.errors:
            logger.error("config error: %s", error)
        return e.error_code
    except SpeckillError as e:
        logger.error("%s: %s", type(e).__name__, e.message)
        return e.error_code
    except OSError as e:
        logger.error("I/O error: %s", e)
        return EXIT_ERROR


def _command_entry(command: str) -> int:
    return main(sys.argv[1:], command=command)


def killer_certify() -> int:
    return _command_entry("killer-certify")


def killer_probe() -> int:
    return _command_entry("killer-probe")


def cover_analyze() -> int:
    return _command_entry("cover-analyze")


def cover_pb() -> int:
    return _command_entry("cover-pb")


def bound_propagate() -> int:
    return _command_entry("bound-propagate")


if __name__ == "__main__":
    sys.exit(main())
