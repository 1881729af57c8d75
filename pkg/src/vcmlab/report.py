"""Presentation artifacts: mean trajectories, summary tables, plot-ready CSVs.

A report covers named cells (a cell = the logs of one country x treatment,
or any other grouping). Per cell it carries the per-round mean series, the
reciprocity metrics, and optionally a fitted censored regression; pairwise
cells can be compared coefficient by coefficient. Rendering emits aligned
plain-text tables with significance stars (two-tailed, * 0.05 / ** 0.01)
and CSV files whose floats round-trip bit-exactly.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass, field
from datetime import datetime, timezone
from pathlib import Path
from typing import Mapping, Sequence

from .econ import (
    ReciprocityMetrics,
    TobitFit,
    build_design,
    coeff_diff_z,
    reciprocity_metrics,
    tobit_fit,
)
from .econ.design import DesignRow
from .errors import DomainError, StructuralError
from .simulate import SessionLog

__all__ = [
    "CellReport",
    "CoefficientComparison",
    "AnalysisReport",
    "per_round_means",
    "significance_stars",
    "build_report",
    "render_report",
    "read_trajectory_csv",
]


def significance_stars(p_two_tailed: float) -> str:
    if p_two_tailed < 0.01:
        return "**"
    if p_two_tailed < 0.05:
        return "*"
    return ""


def per_round_means(logs: SessionLog | Sequence[SessionLog]) -> list[float]:
    """Mean contribution per round, pooled over all subjects of all logs."""
    if isinstance(logs, SessionLog):
        logs = [logs]
    if not logs:
        raise StructuralError("no logs given")
    configs = {log.config for log in logs}
    if len(configs) > 1:
        raise StructuralError("logs mix session configs")
    T = logs[0].config.rounds_T
    sums = [0.0] * T
    counts = [0] * T
    for log in logs:
        for rec in log.records:
            sums[rec.round - 1] += rec.contribution
            counts[rec.round - 1] += 1
    if any(c == 0 for c in counts):
        raise StructuralError("some rounds have no records")
    return [s / c for s, c in zip(sums, counts)]


@dataclass(frozen=True)
class CellReport:
    label: str
    log_ids: tuple[str, ...]
    per_round_means: tuple[float, ...]
    reciprocity: ReciprocityMetrics
    fit: TobitFit | None


@dataclass(frozen=True)
class CoefficientComparison:
    cell_a: str
    cell_b: str
    rows: tuple[tuple[str, float, float], ...]  # (coefficient, z, p_two_tailed)


@dataclass(frozen=True)
class AnalysisReport:
    cells: tuple[CellReport, ...]
    comparisons: tuple[CoefficientComparison, ...]
    created_at: str
    rounds_window: tuple[int, int] | None


def _filter_rows(rows: list[DesignRow], window: tuple[int, int] | None) -> list[DesignRow]:
    if window is None:
        return rows
    lo, hi = window
    return [row for row in rows if lo <= row.round <= hi]


def build_report(
    cell_logs: Mapping[str, Sequence[SessionLog]],
    comparisons: Sequence[tuple[str, str]] = (),
    rounds_window: tuple[int, int] | None = None,
    fit_cells: bool = True,
) -> AnalysisReport:
    """Assemble the full report for named cells.

    ``rounds_window`` restricts the regression rows (lags still come from
    the full history) but not the trajectory series, which always spans all
    rounds. Comparisons run coefficient by coefficient over the regressors
    the two fits share.
    """
    if rounds_window is not None:
        lo, hi = rounds_window
        if lo > hi or lo < 1:
            raise DomainError(f"bad rounds window {rounds_window}")
    cells: list[CellReport] = []
    fits: dict[str, TobitFit] = {}
    for label, logs in cell_logs.items():
        logs = list(logs)
        if not logs:
            raise StructuralError(f"cell {label!r} has no logs")
        fit = None
        if fit_cells:
            rows = _filter_rows(build_design(logs), rounds_window)
            endowment = logs[0].config.endowment_e
            fit = tobit_fit(rows, lower=0.0, upper=float(endowment))
            fits[label] = fit
        cells.append(
            CellReport(
                label=label,
                log_ids=tuple(log.session_id for log in logs),
                per_round_means=tuple(per_round_means(logs)),
                reciprocity=reciprocity_metrics(logs),
                fit=fit,
            )
        )
    comparison_results: list[CoefficientComparison] = []
    for a, b in comparisons:
        if a not in fits or b not in fits:
            raise StructuralError(f"comparison ({a}, {b}) references unfitted cells")
        fit_a, fit_b = fits[a], fits[b]
        shared = [name for name in fit_a.names if name in fit_b.names]
        rows = []
        for name in shared:
            result = coeff_diff_z(
                fit_a.estimate(name), fit_a.stderr(name),
                fit_b.estimate(name), fit_b.stderr(name),
            )
            rows.append((name, result.z, result.p_two_tailed))
        comparison_results.append(
            CoefficientComparison(cell_a=a, cell_b=b, rows=tuple(rows))
        )
    return AnalysisReport(
        cells=tuple(cells),
        comparisons=tuple(comparison_results),
        created_at=datetime.now(timezone.utc).isoformat(timespec="seconds"),
        rounds_window=rounds_window,
    )


# --- rendering -------------------------------------------------------------

def _format_table(rows: list[list[str]]) -> str:
    widths = [max(len(r[i]) for r in rows) for i in range(len(rows[0]))]
    lines = []
    for r in rows:
        lines.append("  ".join(cell.ljust(w) for cell, w in zip(r, widths)).rstrip())
    return "\n".join(lines) + "\n"


def _trajectory_csv(report: AnalysisReport, path: Path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["cell", "round", "mean_contribution"])
        for cell in report.cells:
            for t, mean in enumerate(cell.per_round_means, start=1):
                writer.writerow([cell.label, t, repr(mean)])


def read_trajectory_csv(path: str | Path) -> dict[str, list[float]]:
    """Re-ingest the trajectory CSV; floats round-trip bit-exactly."""
    series: dict[str, list[float]] = {}
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames != ["cell", "round", "mean_contribution"]:
            raise StructuralError(f"{path}: not a trajectory file")
        for row in reader:
            series.setdefault(row["cell"], []).append(float(row["mean_contribution"]))
    return series


def _reciprocity_table(report: AnalysisReport) -> str:
    rows = [["cell", "subjects", "mean individual r", "free-rider-count r", "excluded"]]
    for cell in report.cells:
        m = cell.reciprocity
        rows.append(
            [
                cell.label,
                str(m.subjects_used + m.subjects_excluded),
                f"{m.mean_individual_r:.2f}",
                f"{m.pooled_free_rider_r:.2f}",
                str(m.subjects_excluded),
            ]
        )
    return _format_table(rows)


def _fits_table(report: AnalysisReport) -> str:
    fitted = [c for c in report.cells if c.fit is not None]
    if not fitted:
        return "no fitted cells\n"
    names: list[str] = []
    for cell in fitted:
        for name in cell.fit.names:
            if name not in names:
                names.append(name)
    rows = [["coefficient"] + [c.label for c in fitted]]
    for name in names:
        value_row = [name]
        se_row = [""]
        for cell in fitted:
            fit = cell.fit
            if name in fit.names:
                idx = fit.names.index(name)
                stars = significance_stars(float(fit.pvalues[idx]))
                value_row.append(f"{fit.params[idx]:.2f}{stars}")
                se_row.append(f"({fit.se[idx]:.2f})")
            else:
                value_row.append("-")
                se_row.append("")
        rows.append(value_row)
        rows.append(se_row)
    diagnostics = [
        ("sigma", lambda f: f"{f.sigma_hat:.2f}"),
        ("N", lambda f: str(f.n_obs)),
        ("pseudo R2", lambda f: f"{f.pseudo_r2:.2f}"),
        ("LLF", lambda f: f"{f.llf:.2f}"),
        ("corr(obs, pred)", lambda f: f"{f.corr_obs_pred:.2f}"),
        ("% at lower bound", lambda f: f"{100 * f.share_at_lower:.0f}"),
        ("% at upper bound", lambda f: f"{100 * f.share_at_upper:.0f}"),
        ("clusters", lambda f: str(f.n_clusters)),
    ]
    for label, fmt in diagnostics:
        rows.append([label] + [fmt(c.fit) for c in fitted])
    legend = "* p < 0.05, ** p < 0.01 (two-tailed); clustered SEs in parentheses\n"
    return _format_table(rows) + legend


def _comparisons_table(report: AnalysisReport) -> str:
    if not report.comparisons:
        return "no comparisons requested\n"
    out = []
    for comp in report.comparisons:
        rows = [["coefficient", "|z|", ""]]
        for name, z, p in comp.rows:
            rows.append([name, f"{abs(z):.2f}", significance_stars(p)])
        out.append(f"{comp.cell_a} vs {comp.cell_b}\n" + _format_table(rows))
    legend = "* p < 0.05, ** p < 0.01 (two-tailed normal)\n"
    return "\n".join(out) + legend


def render_report(report: AnalysisReport, out_dir: str | Path) -> list[Path]:
    """Write all artifacts; returns the paths written."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    paths: list[Path] = []

    def emit(name: str, text: str) -> None:
        path = out / name
        path.write_text(text, encoding="utf-8")
        paths.append(path)

    trajectory = out / "trajectories.csv"
    _trajectory_csv(report, trajectory)
    paths.append(trajectory)

    emit("reciprocity.txt", _reciprocity_table(report))
    emit("fits.txt", _fits_table(report))
    emit("comparisons.txt", _comparisons_table(report))

    fits_csv = out / "fits.csv"
    with open(fits_csv, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["cell", "coefficient", "estimate", "clustered_se"])
        for cell in report.cells:
            if cell.fit is None:
                continue
            for name, b, s in zip(cell.fit.names, cell.fit.params, cell.fit.se):
                writer.writerow([cell.label, name, repr(float(b)), repr(float(s))])
            writer.writerow([cell.label, "sigma", repr(cell.fit.sigma_hat),
                             repr(cell.fit.sigma_se)])
    paths.append(fits_csv)

    comparisons_csv = out / "comparisons.csv"
    with open(comparisons_csv, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["cell_a", "cell_b", "coefficient", "z", "p_two_tailed"])
        for comp in report.comparisons:
            for name, z, p in comp.rows:
                writer.writerow([comp.cell_a, comp.cell_b, name, repr(z), repr(p)])
    paths.append(comparisons_csv)

    meta = out / "report.json"
    meta.write_text(
        json.dumps(
            {
                "created_at": report.created_at,
                "rounds_window": report.rounds_window,
                "cells": {c.label: list(c.log_ids) for c in report.cells},
            },
            indent=2,
        )
        + "\n",
        encoding="utf-8",
    )
    paths.append(meta)
    return paths
