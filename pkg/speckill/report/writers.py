"""
writers.py

Report emission: JSON (indent 2, insertion-ordered keys), CSV through pandas
and short Markdown summaries. Floats are written with 12 significant digits
and rationals as "p/q" so reports are byte-deterministic.
"""

from __future__ import annotations

import enum
import json
import logging
import os
from fractions import Fraction
from typing import Any, Dict, Iterable, List, Optional, Sequence

import numpy as np
import pandas as pd

from speckill.calculus.utils.fact_infra import BoundTrace
from speckill.certify.utils.certificate_infra import SpectralCertificate
from speckill.cover.utils.nu import LowerBoundReport, NuReport
from speckill.radial.utils.pi_rational import PiRational, fraction_str

logger = logging.getLogger(__name__)

FLOAT_FORMAT = "%.12g"


def format_float(value: float) -> float:
    """Rounds to 12 significant digits."""
    return float(FLOAT_FORMAT % value)


def to_plain(value: Any) -> Any:
    """
    Converts report payloads to JSON-ready values with the fixed numeric
    formatting.
    """
    if isinstance(value, enum.Enum):
        return value.value
    if isinstance(value, bool) or value is None or isinstance(value, str):
        return value
    if isinstance(value, Fraction):
        return fraction_str(value)
    if isinstance(value, PiRational):
        return value.to_json()
    if isinstance(value, (np.integer, int)):
        return int(value)
    if isinstance(value, (np.floating, float)):
        return format_float(float(value))
    if isinstance(value, dict):
        return {str(k): to_plain(v) for k, v in value.items()}
    if isinstance(value, (list, tuple, np.ndarray)):
        return [to_plain(v) for v in value]
    if hasattr(value, "to_json"):
        return to_plain(value.to_json())
    return str(value)


def dumps(payload: Any) -> str:
    return json.dumps(to_plain(payload), indent=2, allow_nan=False) + "\n"


def write_json(payload: Any, path: str) -> str:
    with open(path, "w") as f:
        f.write(dumps(payload))
    logger.debug("Wrote %s", path)
    return path


def write_csv(rows: Sequence[Dict[str, Any]], path: str) -> str:
    """
    Writes rows (flattened with dotted column names) to a CSV file.
    """
    frame = pd.json_normalize([to_plain(row) for row in rows], sep=".")
    frame.to_csv(path, index=False, float_format=FLOAT_FORMAT)
    logger.debug("Wrote %s (%s rows)", path, len(frame))
    return path


def write_frame(frame: pd.DataFrame, path: str) -> str:
    frame.to_csv(path, index=False, float_format=FLOAT_FORMAT)
    logger.debug("Wrote %s (%s rows)", path, len(frame))
    return path


def write_markdown(lines: Iterable[str], path: str) -> str:
    with open(path, "w") as f:
        f.write("\n".join(lines) + "\n")
    logger.debug("Wrote %s", path)
    return path


def write_reports(
    out_dir: str,
    stem: str,
    formats: Sequence[str],
    payload: Any,
    rows: Optional[Sequence[Dict[str, Any]]] = None,
    markdown: Optional[List[str]] = None,
) -> List[str]:
    """
    Writes <stem>.json, <stem>.csv and <stem>.md for the requested formats.

    Returns:
        List[str]: Paths written, in format order.
    """
    os.makedirs(out_dir, exist_ok=True)
    written = []
    base = os.path.join(out_dir, stem)
    if "json" in formats:
        written.append(write_json(payload, base + ".json"))
    if "csv" in formats and rows is not None:
        written.append(write_csv(rows, base + ".csv"))
    if "md" in formats and markdown is not None:
        written.append(write_markdown(markdown, base + ".md"))
    return written


# ================ Markdown summaries ================


def _pi_text(value: Optional[PiRational]) -> str:
    if value is None:
        return "-"
    return f"{value} (~{FLOAT_FORMAT % float(value)})"


def certificate_markdown(
    cert: SpectralCertificate, title: str = "Spectral certificate"
) -> List[str]:
    lines = [f"# {title}", "", f"**Status:** {cert.status.value}", ""]
    if cert.reason:
        lines += [f"Reason: {cert.reason}", ""]
    lines += [f"- chosen m: {_pi_text(cert.chosen_m)}", f"- digest: `{cert.digest()}`", ""]

    if cert.frame:
        lines += ["## Frame", ""] + [f"- {statement}" for statement in cert.frame] + [""]

    if cert.table:
        lines += [
            "## Index-n orbits",
            "",
            "| step | kind | l | c1 | action | verdict |",
            "|---|---|---|---|---|---|",
        ]
        for row in cert.table:
            orbit = row.orbit
            l_text = "" if orbit.l is None else str(orbit.l)
            lines.append(
                f"| {row.step} | {orbit.kind.value} | {l_text} | {orbit.c1} "
                f"| {_pi_text(row.action)} | {row.verdict.value} |"
            )
        lines.append("")

    if cert.offender is not None:
        lines += [
            "## Offender",
            "",
            f"Step {cert.offender.step}, l = {cert.offender.orbit.l}, "
            f"action {_pi_text(cert.offender.action)}",
            "",
        ]
    return lines


def cover_markdown(summary: Dict[str, Any]) -> List[str]:
    lines = [
        "# Cover analysis",
        "",
        f"- balls: {summary['balls']}",
        f"- edges: {len(summary['edges'])}",
        f"- d: {summary['d']}",
        f"- families: {len(summary['families'])}",
        "",
    ]
    for k, family in enumerate(summary["families"], start=1):
        lines.append(f"- family {k}: {', '.join(family)}")
    return lines


def pb_markdown(report: LowerBoundReport, scaling: Optional[Dict[str, Any]] = None) -> List[str]:
    nu: NuReport = report.nu
    bound = "-" if report.bound is None else FLOAT_FORMAT % report.bound
    lines = [
        "# Poisson bracket lower bound",
        "",
        f"**Status:** {report.status.value}",
        "",
        f"- nu_c: {FLOAT_FORMAT % nu.nu_c} at ({FLOAT_FORMAT % nu.argmax[0]}, "
        f"{FLOAT_FORMAT % nu.argmax[1]}), grid {nu.resolution}, exact: {nu.exact}",
        f"- bound 1/(2 d^2 pi r^2): {bound} ({report.bound_expr or 'n/a'})",
        f"- d: {report.d}, r: {FLOAT_FORMAT % report.r}, grid slack: {report.grid_slack}",
        f"- subordinate: {report.subordinate}, energy asserted: {report.energy_asserted}",
    ]
    if report.reason:
        lines.append(f"- note: {report.reason}")
    if scaling is not None:
        lines += ["", f"Scaling slope of nu_c against r: {FLOAT_FORMAT % scaling['slope']}"]
    return lines


def trace_markdown(trace: BoundTrace, audit_ok: bool, title: str = "Bound trace") -> List[str]:
    lines = [f"# {title}", "", f"Audit: {'passed' if audit_ok else 'FAILED'}", ""]
    final = trace.final
    if final is not None:
        lines += [f"Final: {final.quantity} in {final.interval}", ""]
    lines += ["| id | quantity | interval | rule | premises |", "|---|---|---|---|---|"]
    for fact in trace.facts:
        premises = ", ".join(fact.premises) or "-"
        lines.append(
            f"| {fact.fact_id} | {fact.quantity} | {fact.interval} | {fact.rule} | {premises} |"
        )
    return lines


def norms_frame(nu: NuReport, points: np.ndarray) -> pd.DataFrame:
    """Per-grid-point infinity-to-one norms as a DataFrame (x, y, norm)."""
    return pd.DataFrame({"x": points[:, 0], "y": points[:, 1], "norm": nu.per_point})
