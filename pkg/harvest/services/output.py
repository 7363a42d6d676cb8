# harvest/services/output.py
"""
CSV / JSON serialization of records.

CSV: fixed column order, 17 significant digits, "\n" line endings, so that identical runs
give byte-identical files and parse -> re-serialize is the identity. Every CSV written to
disk gets a `<file>.manifest.json` sidecar.
"""

from __future__ import annotations

import csv
import json
import logging
from io import StringIO
from pathlib import Path

from pydantic import BaseModel

from harvest.errors import ValidationError
from harvest.schemas import LmaxRow, ObservableRecord, PhysicalConfig, RangeResult, RunManifest, Scenario

logger = logging.getLogger(__name__)

RECORD_COLUMNS = [
    "scenario",
    "a_sigma",
    "omega_sigma",
    "l_sigma",
    "p",
    "re_x",
    "im_x",
    "abs_x",
    "concurrence",
    "p_err",
    "x_err",
    "status",
]

LMAX_COLUMNS = ["scenario", "a_sigma", "omega_sigma", "l_max", "bracket_width", "evaluations", "l_hi", "status"]


def format_number(v: float) -> str:
    return format(float(v), ".17g")


def _csv(header: list[str], rows: list[list[str]]) -> str:
    buf = StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    w.writerows(rows)
    return buf.getvalue()


def _parse(text: str, header: list[str]) -> list[dict[str, str]]:
    reader = csv.DictReader(StringIO(text))
    if reader.fieldnames != header:
        raise ValidationError(f"unexpected CSV header {reader.fieldnames}")
    return list(reader)


# ---------------------------
# Observable records
# ---------------------------


def record_row(rec: ObservableRecord) -> list[str]:
    nums = [
        rec.cfg.a_sigma,
        rec.cfg.omega_sigma,
        rec.cfg.l_sigma,
        rec.p,
        rec.re_x,
        rec.im_x,
        rec.abs_x,
        rec.concurrence,
        rec.p_err,
        rec.x_err,
    ]
    return [rec.scenario.value, *(format_number(v) for v in nums), rec.status]


def records_to_csv(records: list[ObservableRecord]) -> str:
    return _csv(RECORD_COLUMNS, [record_row(r) for r in records])


def records_from_csv(text: str) -> list[ObservableRecord]:
    out = []
    for row in _parse(text, RECORD_COLUMNS):
        out.append(
            ObservableRecord(
                scenario=Scenario(row["scenario"]),
                cfg=PhysicalConfig(
                    a_sigma=float(row["a_sigma"]),
                    omega_sigma=float(row["omega_sigma"]),
                    l_sigma=float(row["l_sigma"]),
                ),
                p=float(row["p"]),
                re_x=float(row["re_x"]),
                im_x=float(row["im_x"]),
                concurrence=float(row["concurrence"]),
                p_err=float(row["p_err"]),
                x_err=float(row["x_err"]),
                status=row["status"],
            )
        )
    return out


def record_dict(rec: ObservableRecord) -> dict[str, object]:
    return {
        "scenario": rec.scenario.value,
        "a_sigma": rec.cfg.a_sigma,
        "omega_sigma": rec.cfg.omega_sigma,
        "l_sigma": rec.cfg.l_sigma,
        "p": rec.p,
        "re_x": rec.re_x,
        "im_x": rec.im_x,
        "abs_x": rec.abs_x,
        "concurrence": rec.concurrence,
        "p_err": rec.p_err,
        "x_err": rec.x_err,
        "status": rec.status,
    }


# ---------------------------
# L_max rows
# ---------------------------


def lmax_row(row: LmaxRow) -> list[str]:
    r = row.result
    return [
        row.scenario.value,
        format_number(row.a_sigma),
        format_number(row.omega_sigma),
        format_number(r.l_max_sigma),
        format_number(r.bracket_width),
        str(r.evaluations),
        format_number(r.l_hi),
        r.status,
    ]


def lmax_to_csv(rows: list[LmaxRow]) -> str:
    return _csv(LMAX_COLUMNS, [lmax_row(r) for r in rows])


def lmax_from_csv(text: str) -> list[LmaxRow]:
    return [
        LmaxRow(
            scenario=Scenario(row["scenario"]),
            a_sigma=float(row["a_sigma"]),
            omega_sigma=float(row["omega_sigma"]),
            result=RangeResult(
                l_max_sigma=float(row["l_max"]),
                bracket_width=float(row["bracket_width"]),
                evaluations=int(row["evaluations"]),
                l_hi=float(row["l_hi"]),
                status=row["status"],
            ),
        )
        for row in _parse(text, LMAX_COLUMNS)
    ]


def lmax_dict(row: LmaxRow) -> dict[str, object]:
    r = row.result
    return {
        "scenario": row.scenario.value,
        "a_sigma": row.a_sigma,
        "omega_sigma": row.omega_sigma,
        "l_max": r.l_max_sigma,
        "bracket_width": r.bracket_width,
        "evaluations": r.evaluations,
        "l_hi": r.l_hi,
        "status": r.status,
    }


# ---------------------------
# JSON / files
# ---------------------------


def to_json(rows: list[dict[str, object]], manifest: RunManifest) -> str:
    payload = {"manifest": manifest.model_dump(mode="json"), "records": rows}
    return json.dumps(payload, indent=2) + "\n"


def render(kind: str, items: list[BaseModel], fmt: str, manifest: RunManifest) -> str:
    """Serialize ObservableRecords (kind="records") or LmaxRows (kind="lmax") as csv or json."""
    if kind == "records":
        to_csv, to_dict = records_to_csv, record_dict
    elif kind == "lmax":
        to_csv, to_dict = lmax_to_csv, lmax_dict
    else:
        raise ValidationError(f"unknown output kind {kind!r}")
    if fmt == "csv":
        return to_csv(items)
    if fmt == "json":
        return to_json([to_dict(i) for i in items], manifest)
    raise ValidationError(f"unknown format {fmt!r}")


def manifest_path(path: Path) -> Path:
    return path.with_name(path.name + ".manifest.json")


def write_output(path: Path, text: str, manifest: RunManifest, *, sidecar: bool = True) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(text, encoding="utf-8", newline="")
    if sidecar:
        manifest_path(path).write_text(manifest.model_dump_json(indent=2) + "\n", encoding="utf-8")
    logger.info("wrote %s", path)
