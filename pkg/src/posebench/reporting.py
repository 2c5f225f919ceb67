"""Result tables: precision/efficiency, human comparison, ICC, distributions.

Documents are column-oriented and render deterministically to CSV,
aligned plain text, or a pipe-delimited markup table. Percentages print
with 2 decimals, millimeters with 2 decimals, normalized values with 3
significant figures; rounding is the half-to-even rule of IEEE floats.
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass
from enum import Enum
from typing import Mapping, Sequence

from .agreement import HumanBaseline, IccResult
from .bench import BenchResult
from .metrics import DistributionSummary, MetricReport
from .skeleton import KEYPOINTS, KeypointId

OVERALL_LABEL = "All body parts"


class ReportKind(str, Enum):
    PERFORMANCE = "performance"
    HUMAN_COMPARISON = "human_comparison"
    ICC = "icc"
    ERROR_DISTRIBUTION = "error_distribution"
    SAMPLE_EFFICIENCY = "sample_efficiency"


class CellFormat(str, Enum):
    TEXT = "text"
    PERCENT = "percent"  # 2 decimals
    MM = "mm"  # 2 decimals
    NORMALIZED = "normalized"  # 3 significant figures
    INT = "int"
    MS = "ms"  # 2 decimals


def format_cell(value, fmt: CellFormat) -> str:
    if value is None:
        return ""
    if fmt is CellFormat.TEXT:
        return str(value)
    if fmt is CellFormat.INT:
        return str(int(value))
    if fmt in (CellFormat.PERCENT, CellFormat.MM, CellFormat.MS):
        return f"{value:.2f}"
    if fmt is CellFormat.NORMALIZED:
        return f"{value:.3g}"
    raise ValueError(f"unsupported cell format {fmt}")


@dataclass(frozen=True)
class Column:
    label: str
    values: tuple
    fmt: CellFormat = CellFormat.TEXT


@dataclass(frozen=True)
class ReportDocument:
    kind: ReportKind
    columns: tuple[Column, ...]

    def __post_init__(self) -> None:
        lengths = {len(c.values) for c in self.columns}
        if len(lengths) > 1:
            raise ValueError(f"ragged columns: lengths {sorted(lengths)}")

    @property
    def n_rows(self) -> int:
        return len(self.columns[0].values) if self.columns else 0

    def cell_text(self) -> list[list[str]]:
        header = [c.label for c in self.columns]
        rows = [
            [format_cell(c.values[i], c.fmt) for c in self.columns]
            for i in range(self.n_rows)
        ]
        return [header] + rows


def _column_mean(values: Sequence) -> float | None:
    present = [v for v in values if v is not None]
    if not present:
        return None
    return sum(present) / len(present)


def performance_report(
    reports: Sequence[MetricReport],
    resolutions: Mapping[str, tuple[int, int]] | None = None,
    params: Mapping[str, int] | None = None,
    flops: Mapping[str, int] | None = None,
    latency: Mapping[str, BenchResult] | None = None,
) -> ReportDocument:
    """One row per model: head-relative accuracy, ME, declared cost, latency."""
    if not reports:
        raise ValueError("performance report needs at least one model report")
    taus = sorted(reports[0].overall.pckh, reverse=True)
    models = [r.model_id for r in reports]

    def meta(mapping, model_id):
        return mapping.get(model_id) if mapping else None

    columns = [Column("model", tuple(models))]
    res_values = []
    for m in models:
        r = meta(resolutions, m)
        res_values.append(f"{r[0]}x{r[1]}" if r else None)
    columns.append(Column("resolution", tuple(res_values)))
    for tau in taus:
        columns.append(
            Column(
                f"pckh@{round(tau * 100)}",
                tuple(r.overall.pckh.get(tau) for r in reports),
                CellFormat.PERCENT,
            )
        )
    columns.append(
        Column("me", tuple(r.overall.me for r in reports), CellFormat.NORMALIZED)
    )
    columns.append(
        Column("me_mm", tuple(r.overall.me_mm for r in reports), CellFormat.MM)
    )
    columns.append(
        Column("parameters", tuple(meta(params, m) for m in models), CellFormat.INT)
    )
    columns.append(
        Column("flops", tuple(meta(flops, m) for m in models), CellFormat.INT)
    )
    lat_values = tuple(
        b.median_latency_ms_per_image if (b := meta(latency, m)) else None
        for m in models
    )
    columns.append(Column("latency_ms", lat_values, CellFormat.MS))
    return ReportDocument(ReportKind.PERFORMANCE, tuple(columns))


def human_comparison_report(
    baseline: HumanBaseline,
    reports: Sequence[MetricReport] = (),
) -> ReportDocument:
    """Per-keypoint spread and per-model human-relative precision.

    The final row holds the unweighted column means over the 19
    keypoints; per-model columns are the share of predictions within the
    95th-percentile spread and the millimeter gap between model mean
    error and human spread.
    """
    labels = tuple(k.label for k in KEYPOINTS) + (OVERALL_LABEL,)

    def with_mean(values: list) -> tuple:
        return tuple(values) + (_column_mean(values),)

    h = [baseline.per_keypoint[k].h for k in KEYPOINTS]
    h95 = [baseline.per_keypoint[k].h95 for k in KEYPOINTS]
    columns = [
        Column("keypoint", labels),
        Column("h", with_mean(h), CellFormat.NORMALIZED),
        Column("h_mm", with_mean([v * 1000 for v in h]), CellFormat.MM),
        Column("h95", with_mean(h95), CellFormat.NORMALIZED),
        Column("h95_mm", with_mean([v * 1000 for v in h95]), CellFormat.MM),
    ]
    for report in reports:
        pck_values = [report.per_keypoint[k].pck_human95 for k in KEYPOINTS]
        diff_values = [
            report.per_keypoint[k].me_mm - baseline.per_keypoint[k].h * 1000
            for k in KEYPOINTS
        ]
        columns.append(
            Column(
                f"{report.model_id}:pck_human95",
                with_mean(pck_values),
                CellFormat.PERCENT,
            )
        )
        columns.append(
            Column(
                f"{report.model_id}:me_minus_h_mm",
                with_mean(diff_values),
                CellFormat.MM,
            )
        )
    return ReportDocument(ReportKind.HUMAN_COMPARISON, tuple(columns))


def icc_report(results: Mapping[str, IccResult]) -> ReportDocument:
    """Agreement and consistency coefficients with bracketed intervals."""
    if not results:
        raise ValueError("icc report needs at least one model result")

    def cell(point: float, ci: tuple[float, float] | None) -> str:
        if ci is None:
            return f"{point:.2f}"
        return f"{point:.2f} [{ci[0]:.2f}, {ci[1]:.2f}]"

    columns = [Column("coefficient", ("icc_a1", "icc_c1"))]
    for model_id in results:
        r = results[model_id]
        columns.append(
            Column(model_id, (cell(r.icc_a1, r.ci_a1), cell(r.icc_c1, r.ci_c1)))
        )
    return ReportDocument(ReportKind.ICC, tuple(columns))


def error_distribution_report(
    distributions: Mapping[str, Mapping[KeypointId, DistributionSummary]],
) -> ReportDocument:
    """Order statistics of normalized errors per source and keypoint."""
    if not distributions:
        raise ValueError("distribution report needs at least one source")
    sources: list[str] = []
    keypoints: list[str] = []
    stats: dict[str, list[float]] = {f: [] for f in DistributionSummary._fields}
    for source in distributions:
        for k in KEYPOINTS:
            summary = distributions[source][k]
            sources.append(source)
            keypoints.append(k.label)
            for name, value in zip(DistributionSummary._fields, summary):
                stats[name].append(value)
    columns = [
        Column("source", tuple(sources)),
        Column("keypoint", tuple(keypoints)),
    ]
    for name in DistributionSummary._fields:
        columns.append(Column(name, tuple(stats[name]), CellFormat.NORMALIZED))
    return ReportDocument(ReportKind.ERROR_DISTRIBUTION, tuple(columns))


def sample_efficiency_report(
    series: Mapping[str, Sequence[tuple[int, float]]],
) -> ReportDocument:
    """Mean error as a function of training-set size, one series per model."""
    if not series:
        raise ValueError("sample-efficiency report needs at least one series")
    sizes = sorted({size for points in series.values() for size, _ in points})
    columns = [Column("training_frames", tuple(sizes), CellFormat.INT)]
    for model_id in series:
        by_size = dict(series[model_id])
        columns.append(
            Column(
                model_id,
                tuple(by_size.get(size) for size in sizes),
                CellFormat.NORMALIZED,
            )
        )
    return ReportDocument(ReportKind.SAMPLE_EFFICIENCY, tuple(columns))


def render(doc: ReportDocument, fmt: str = "csv") -> bytes:
    """Serialize a document; same document and format give identical bytes."""
    cells = doc.cell_text()
    if fmt == "csv":
        out = io.StringIO()
        writer = csv.writer(out, lineterminator="\n")
        writer.writerows(cells)
        return out.getvalue().encode("utf-8")
    if fmt == "txt":
        widths = [
            max(len(row[i]) for row in cells) for i in range(len(cells[0]))
        ]
        lines = [
            "  ".join(cell.ljust(w) for cell, w in zip(row, widths)).rstrip()
            for row in cells
        ]
        return ("\n".join(lines) + "\n").encode("utf-8")
    if fmt == "md":
        header, *rows = cells
        lines = [
            "| " + " | ".join(header) + " |",
            "| " + " | ".join("---" for _ in header) + " |",
        ]
        lines.extend("| " + " | ".join(row) + " |" for row in rows)
        return ("\n".join(lines) + "\n").encode("utf-8")
    raise ValueError(f"unsupported format {fmt!r}; use csv, txt or md")


def generate_report(kind: ReportKind | str, **inputs) -> ReportDocument:
    """Dispatch to the builder for ``kind``; see the builders for inputs."""
    kind = ReportKind(kind)
    try:
        if kind is ReportKind.PERFORMANCE:
            return performance_report(
                inputs.pop("reports"),
                inputs.pop("resolutions", None),
                inputs.pop("params", None),
                inputs.pop("flops", None),
                inputs.pop("latency", None),
            )
        if kind is ReportKind.HUMAN_COMPARISON:
            return human_comparison_report(
                inputs.pop("baseline"), inputs.pop("reports", ())
            )
        if kind is ReportKind.ICC:
            return icc_report(inputs.pop("results"))
        if kind is ReportKind.ERROR_DISTRIBUTION:
            return error_distribution_report(inputs.pop("distributions"))
        return sample_efficiency_report(inputs.pop("series"))
    except KeyError as exc:
        raise ValueError(f"missing input for {kind.value} report: {exc}") from None
