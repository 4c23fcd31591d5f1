"""On-disk formats: logit dumps, temperature files, reports and CSV tables.

Logit dump
    UTF-8 line-delimited JSON, one object per line::

        {"format_version": 1, "id": "test-00017", "label": 2,
         "logits": [[0.1, -1.3, 2.2], ...]}

    ``logits`` is an N x C array of stochastic forward passes; every record
    in a file must share C. Labels are zero-based. Blank lines are skipped.

Reports and temperature files
    A single JSON document with fixed key order; floats are written with 17
    significant digits and NaN/inf as ``null``.

Tables
    RFC 4180 CSV with a header row whose first column is ``format_version``.
"""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Iterator, Sequence

import numpy as np

from dropcal.binned_metrics import BinnedReport
from dropcal.errors import ParseError, SchemaError
from dropcal.prob_core import LogitSampleSet, TemperatureParam
from dropcal.rejection import RejectionCurve

FORMAT_VERSION = 1

RELIABILITY_COLUMNS = (
    "format_version", "table", "axis", "bin", "lower", "upper", "count",
    "mean_confidence", "accuracy", "mean_uncertainty", "error_rate",
)
REJECTION_COLUMNS = (
    "format_version", "table", "threshold", "retained_count",
    "retained_fraction", "top1_error",
)


@dataclass(frozen=True)
class LogitDumpRecord:
    id: str
    label: int
    logits: np.ndarray


def fmt_float(x) -> str:
    x = float(x)
    if not math.isfinite(x):
        return ""
    return format(x, ".17g")


def _parse_float(text):
    return float(text) if text != "" else float("nan")


# ---------------------------------------------------------------- logit dumps


def iter_logit_dump(path) -> Iterator[LogitDumpRecord]:
    """Stream records from a logit dump, validating each line."""
    n_classes = None
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as exc:
                raise ParseError(f"invalid JSON: {exc.msg}", lineno) from exc
            if not isinstance(obj, dict):
                raise ParseError("record is not a JSON object", lineno)
            rec_id = str(obj.get("id", f"line-{lineno}"))
            version = obj.get("format_version", FORMAT_VERSION)
            if version != FORMAT_VERSION:
                raise SchemaError(f"record {rec_id!r}: unsupported format_version {version!r}")
            logits, label = obj.get("logits"), obj.get("label")
            if not isinstance(logits, list) or not logits or not all(isinstance(r, list) for r in logits):
                raise SchemaError(f"record {rec_id!r} (line {lineno}): logits must be a nonempty N x C array")
            width = len(logits[0])
            if any(len(row) != width for row in logits):
                raise SchemaError(f"record {rec_id!r} (line {lineno}): ragged logits rows")
            try:
                arr = np.array(logits, dtype=np.float64)
            except (TypeError, ValueError) as exc:
                raise SchemaError(f"record {rec_id!r} (line {lineno}): non-numeric logits") from exc
            if width < 2 or not np.all(np.isfinite(arr)):
                raise SchemaError(f"record {rec_id!r} (line {lineno}): need C >= 2 finite logits")
            if n_classes is None:
                n_classes = width
            elif width != n_classes:
                raise SchemaError(
                    f"record {rec_id!r} (line {lineno}): {width} classes, file uses {n_classes}"
                )
            if isinstance(label, bool) or not isinstance(label, int) or not 0 <= label < width:
                raise SchemaError(f"record {rec_id!r} (line {lineno}): label {label!r} out of range")
            yield LogitDumpRecord(rec_id, label, arr)


def read_logit_dump(path) -> list[LogitSampleSet]:
    return [LogitSampleSet(r.logits, r.label) for r in iter_logit_dump(path)]


def read_logit_dump_array(path):
    """Read a dump straight into ``(logits (n, N, C), labels, ids)``.

    All records must share N.
    """
    records = list(iter_logit_dump(path))
    if not records:
        raise SchemaError(f"{path}: empty logit dump")
    shapes = {r.logits.shape for r in records}
    if len(shapes) != 1:
        raise SchemaError(f"{path}: records disagree on the number of passes")
    logits = np.stack([r.logits for r in records])
    labels = np.array([r.label for r in records], dtype=np.int64)
    return logits, labels, [r.id for r in records]


def write_logit_dump(path, sets: Iterable, ids: Sequence[str] | None = None) -> None:
    """Write sample sets (or ``(logits, label)`` pairs) as a logit dump."""
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for i, s in enumerate(sets):
            samples, label = (s.samples, s.label) if isinstance(s, LogitSampleSet) else s
            rec_id = None if ids is None else ids[i]
            fh.write(json.dumps({
                "format_version": FORMAT_VERSION,
                "id": rec_id if rec_id is not None else f"{i:06d}",
                "label": int(label),
                "logits": np.asarray(samples, dtype=np.float64).tolist(),
            }) + "\n")


def save_dump_array(path, logits, labels, prefix="") -> None:
    ids = [f"{prefix}-{i:06d}" if prefix else f"{i:06d}" for i in range(len(labels))]
    write_logit_dump(path, zip(logits, labels), ids)


# ----------------------------------------------------------------------- JSON


def dumps(obj, indent=2) -> str:
    """JSON with 17-significant-digit floats and NaN/inf mapped to null."""
    out = io.StringIO()
    _emit(obj, out, indent, 0)
    out.write("\n")
    return out.getvalue()


def _emit(obj, out, indent, level):
    pad = " " * (indent * (level + 1))
    end = " " * (indent * level)
    if isinstance(obj, dict):
        if not obj:
            out.write("{}")
            return
        out.write("{\n")
        for i, (k, v) in enumerate(obj.items()):
            out.write(f"{pad}{json.dumps(str(k))}: ")
            _emit(v, out, indent, level + 1)
            out.write(",\n" if i < len(obj) - 1 else "\n")
        out.write(end + "}")
    elif isinstance(obj, (list, tuple, np.ndarray)):
        items = list(obj)
        if not items:
            out.write("[]")
            return
        out.write("[\n")
        for i, v in enumerate(items):
            out.write(pad)
            _emit(v, out, indent, level + 1)
            out.write(",\n" if i < len(items) - 1 else "\n")
        out.write(end + "]")
    elif isinstance(obj, (bool, np.bool_)):
        out.write("true" if obj else "false")
    elif isinstance(obj, (int, np.integer)):
        out.write(str(int(obj)))
    elif isinstance(obj, (float, np.floating)):
        out.write(fmt_float(obj) or "null")
    elif obj is None:
        out.write("null")
    else:
        out.write(json.dumps(str(obj)))


def temperature_to_dict(param: TemperatureParam, config=None) -> dict:
    doc = {
        "format_version": FORMAT_VERSION,
        "temperature": param.t,
        "fit_nll": param.fit_nll,
        "fit_iterations": param.fit_iterations,
    }
    if config is not None:
        doc["config"] = dict(config)
    return doc


def read_temperature(path) -> TemperatureParam:
    try:
        doc = json.loads(Path(path).read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise ParseError(f"{path}: invalid JSON: {exc.msg}") from exc
    if not isinstance(doc, dict) or "temperature" not in doc:
        raise SchemaError(f"{path}: missing 'temperature'")
    fit_nll = doc.get("fit_nll")
    return TemperatureParam(
        t=float(doc["temperature"]),
        fit_nll=float("nan") if fit_nll is None else float(fit_nll),
        fit_iterations=int(doc.get("fit_iterations", 0)),
    )


def report_table_to_dict(report: BinnedReport) -> dict:
    edges = report.edges
    bins = []
    for k in range(report.m_bins):
        bins.append({
            "bin": k,
            "lower": edges[k],
            "upper": edges[k + 1],
            "count": int(report.counts[k]),
            "mean_confidence": report.mean_confidence[k],
            "accuracy": report.accuracy[k],
            "mean_uncertainty": report.mean_uncertainty[k],
            "error_rate": report.error_rate[k],
        })
    return {
        "axis": report.axis,
        "m_bins": report.m_bins,
        "total_n": report.total_n,
        "ece": report.ece,
        "uce": report.uce,
        "bins": bins,
    }


# ------------------------------------------------------------------------ CSV


def reliability_csv(tables: dict[str, BinnedReport]) -> str:
    """CSV of one or more labelled reliability tables (e.g. calibrated/uncalibrated)."""
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\r\n")
    writer.writerow(RELIABILITY_COLUMNS)
    for name, report in tables.items():
        edges = report.edges
        for k in range(report.m_bins):
            writer.writerow([
                FORMAT_VERSION, name, report.axis, k,
                fmt_float(edges[k]), fmt_float(edges[k + 1]), int(report.counts[k]),
                fmt_float(report.mean_confidence[k]), fmt_float(report.accuracy[k]),
                fmt_float(report.mean_uncertainty[k]), fmt_float(report.error_rate[k]),
            ])
    return buf.getvalue()


def parse_reliability_csv(text: str) -> dict[tuple[str, str], dict[str, np.ndarray]]:
    """Parse :func:`reliability_csv` output into per-(table, axis) column arrays."""
    rows = list(csv.DictReader(io.StringIO(text)))
    grouped: dict = {}
    for row in rows:
        if int(row["format_version"]) != FORMAT_VERSION:
            raise SchemaError(f"unsupported format_version {row['format_version']!r}")
        grouped.setdefault((row["table"], row["axis"]), []).append(row)
    out = {}
    for key, group in grouped.items():
        cols = {"count": np.array([int(r["count"]) for r in group], dtype=np.int64)}
        for name in ("lower", "upper", "mean_confidence", "accuracy", "mean_uncertainty", "error_rate"):
            cols[name] = np.array([_parse_float(r[name]) for r in group])
        out[key] = cols
    return out


def rejection_csv(curves: dict[str, RejectionCurve]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\r\n")
    writer.writerow(REJECTION_COLUMNS)
    for name, curve in curves.items():
        for i in range(len(curve)):
            writer.writerow([
                FORMAT_VERSION, name, fmt_float(curve.thresholds[i]),
                int(curve.retained_count[i]), fmt_float(curve.retained_fraction[i]),
                fmt_float(curve.top1_error[i]),
            ])
    return buf.getvalue()


def rejection_curve_to_dict(curve: RejectionCurve) -> dict:
    return {
        "total_n": curve.total_n,
        "points": [
            {
                "threshold": curve.thresholds[i],
                "retained_count": int(curve.retained_count[i]),
                "retained_fraction": curve.retained_fraction[i],
                "top1_error": curve.top1_error[i],
            }
            for i in range(len(curve))
        ],
    }
