"""
Reports
=======

.. currentmodule:: probpts.report

An analysis is reported as one :class:`ReportEntry` per statement, in label order, which is source order.

The JSON report has a fixed shape and key order:

.. code:: json

    {
        "program": "pointers.prog",
        "mode": "safe",
        "points": [
            {"label": 0, "line": 1, "pre": {"a": []}, "post": {"a": [["c'", "1/1", 1.0]]}}
        ],
        "warnings": []
    }

Every variable maps to a list of ``[address, exact probability, decimal approximation]`` triples, with addresses in
alphabetical order. :func:`load_report` reads the exact probabilities back.

The table report lists the type before the program, then the type after every statement other than a sequence, one
line per variable.


API reference
-------------

.. autofunction:: build_entries

.. autofunction:: build_report

.. autofunction:: load_report

.. autofunction:: format_table

.. autofunction:: format_outcomes
"""
import json
from dataclasses import dataclass
from typing import Any, Dict, List, Optional
from probpts.analyzer import AnalysisResult
from probpts.interp import Summary
from probpts.lattice import PtsType, dump_env, dump_pts, format_env, load_pts
from probpts.syntax import Program, Seq, describe, walk
from probpts.utils import format_decimal, format_prob


@dataclass(frozen=True)
class ReportEntry:
    label: int
    line: int
    column: int
    statement: str
    is_seq: bool
    pre: PtsType
    post: PtsType


def build_entries(program: Program, result: AnalysisResult) -> List[ReportEntry]:
    pre = result.pre
    post = result.post
    return [
        ReportEntry(
            label=stmt.label,
            line=stmt.span[0],
            column=stmt.span[1],
            statement=describe(stmt),
            is_seq=isinstance(stmt, Seq),
            pre=pre[stmt.label],
            post=post[stmt.label],
        )
        for stmt in walk(program.body)
    ]


def build_report(entries: List[ReportEntry], result: AnalysisResult, *, path: str, mode: str) -> Dict[str, Any]:
    return {
        "program": path,
        "mode": mode,
        "points": [
            {
                "label": entry.label,
                "line": entry.line,
                "pre": dump_pts(entry.pre),
                "post": dump_pts(entry.post),
            }
            for entry in entries
        ],
        "warnings": list(result.warnings),
    }


def dump_report(report: Dict[str, Any]) -> str:
    return json.dumps(report, indent=2)


def load_report(text: str) -> Dict[str, Any]:
    """
    Parses a JSON report, turning every serialized type back into a :class:`~probpts.lattice.PtsType`.
    """
    report = json.loads(text)
    for point in report["points"]:
        point["pre"] = load_pts(point["pre"])
        point["post"] = load_pts(point["post"])
    return report


def format_pts(pts: PtsType, name: str) -> str:
    pairs = ", ".join(f"({addr}, {format_prob(prob)})" for addr, prob in pts[name].items())
    return f"{name} -> {{{pairs}}}"


def _rows(where: str, statement: str, pts: PtsType) -> List[List[str]]:
    rows = []
    for index, name in enumerate(pts.vars):
        if index == 0:
            rows.append([where, statement, format_pts(pts, name)])
        else:
            rows.append(["", "", format_pts(pts, name)])
    return rows or [[where, statement, ""]]


def format_table(entries: List[ReportEntry], final: Optional[PtsType] = None) -> str:
    """
    Formats entries as a table of the points-to type after each statement.
    """
    rows = [["line", "after", "points-to"]]
    if entries:
        rows.extend(_rows("", "(entry)", entries[0].pre))
    for entry in entries:
        if not entry.is_seq:
            rows.extend(_rows(str(entry.line), entry.statement, entry.post))
    if final is not None:
        rows.extend(_rows("", "(exit)", final))
    widths = [max(len(row[column]) for row in rows) for column in range(2)]
    return "\n".join(
        f"{row[0].ljust(widths[0])}  {row[1].ljust(widths[1])}  {row[2]}".rstrip()
        for row in rows
    )


# Interpreter outcomes.

def dump_outcomes(summary: Summary) -> Dict[str, Any]:
    return {
        "finals": [
            {"env": dump_env(env), "weight": format_prob(weight), "decimal": round(float(weight), 6)}
            for env, weight in summary.finals.items()
        ],
        "abort": format_prob(summary.abort),
        "out_of_fuel": format_prob(summary.out_of_fuel),
        "total_mass": format_prob(summary.total),
    }


def format_outcomes(summary: Summary) -> str:
    """
    Formats each distinct final environment with its summed weight, then the abort, out-of-fuel and final masses.
    """
    lines = [
        f"{{{format_env(env)}}}: {format_prob(weight)} ({format_decimal(weight)})"
        for env, weight in summary.finals.items()
    ]
    lines.append(f"abort: {format_prob(summary.abort)}")
    lines.append(f"out of fuel: {format_prob(summary.out_of_fuel)}")
    lines.append(f"total mass: {format_prob(summary.total)}")
    return "\n".join(lines)
