"""Evaluation metrics and CSV export.

Per layer: unique-group count against the theoretical maximum, the LUT array
count, logic density (unique groups per array), total LUT-6 usage and the
route counts before and after annealing. The aggregate density divides the
summed unique groups by the summed array count, it is not a mean of ratios.
"""

from __future__ import annotations

import csv
import os
from dataclasses import dataclass, field

from .anneal import AnnealTrace, route_reduction_report
from .clustering import ClusterPlan
from .codegen import PEConfig
from .cost import lut_array_width
from .placement import PlacementPlan
from .qweights import GroupedWeights

LAYER_COLUMNS = [
    "name", "n_unique_groups", "theoretical_max", "n_arrays", "logic_density",
    "luts_per_array", "total_luts", "routes_initial", "routes_final",
    "remaining_fraction", "parallel_factor", "seed", "nn_k",
    "anneal_iters", "anneal_alpha", "anneal_seed",
]
META_KEYS = LAYER_COLUMNS[10:]


@dataclass
class LayerReport:
    """Metrics for one compiled layer plus run metadata for reproducibility."""

    name: str
    n_unique: int
    theoretical_max: int
    n_arrays: int
    luts_per_array: int
    routes_final: int
    routes_initial: int | None = None
    trace: AnnealTrace | None = None
    meta: dict[str, str] = field(default_factory=dict)

    @property
    def logic_density(self) -> float:
        return self.n_unique / self.n_arrays

    @property
    def total_luts(self) -> int:
        return self.n_arrays * self.luts_per_array

    @property
    def remaining_fraction(self) -> float | None:
        if self.routes_initial is None:
            return None
        return self.routes_final / self.routes_initial


def layer_report(grouped: GroupedWeights, cluster_plan: ClusterPlan,
                 plan: PlacementPlan, trace: AnnealTrace,
                 meta: dict[str, str] | None = None) -> LayerReport:
    """Collect the metrics of one freshly compiled layer."""
    layer = grouped.layer
    return LayerReport(
        name=layer.name,
        n_unique=grouped.n_unique,
        theoretical_max=1 << (layer.weight_bits * layer.kernel_size),
        n_arrays=cluster_plan.n_arrays,
        luts_per_array=lut_array_width(layer.weight_bits, layer.kernel_size),
        routes_final=trace.final,
        routes_initial=trace.initial,
        trace=trace,
        meta=dict(meta or {}),
    )


def report_from_netlist(cfg: PEConfig, name: str) -> LayerReport:
    """Rebuild the recoverable metrics from a stored netlist."""
    stored = {slot for a in cfg.arrays for slot in a.slots if slot is not None}
    return LayerReport(
        name=name,
        n_unique=len(stored),
        theoretical_max=1 << (cfg.widths.weight_bits * cfg.widths.group_size),
        n_arrays=cfg.n_arrays,
        luts_per_array=cfg.widths.lut_width,
        routes_final=sum(len(w) for w in cfg.switch_wiring),
    )


def aggregate_density(reports: list[LayerReport]) -> float | None:
    total_arrays = sum(r.n_arrays for r in reports)
    if total_arrays == 0:
        return None
    return sum(r.n_unique for r in reports) / total_arrays


def _fmt(value) -> str:
    if value is None:
        return ""
    if isinstance(value, float):
        return f"{value:.6f}"
    return str(value)


def _layer_row(report: LayerReport) -> list[str]:
    row = [
        report.name,
        _fmt(report.n_unique),
        _fmt(report.theoretical_max),
        _fmt(report.n_arrays),
        _fmt(report.logic_density),
        _fmt(report.luts_per_array),
        _fmt(report.total_luts),
        _fmt(report.routes_initial),
        _fmt(report.routes_final),
        _fmt(report.remaining_fraction),
    ]
    row.extend(report.meta.get(key, "") for key in META_KEYS)
    return row


def _write_csv(path: str, header: list[str], rows: list[list[str]]) -> None:
    try:
        with open(path, "w", encoding="utf-8", newline="") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(header)
            writer.writerows(rows)
    except OSError as exc:
        raise OSError(f"cannot write report {path}: {exc}") from exc


def export_reports(reports: list[LayerReport], out_dir: str) -> list[str]:
    """Write per-layer CSVs, per-layer annealing traces and the aggregate CSV.

    Returns the written paths. Output is byte-deterministic for identical
    inputs: fixed column order, fixed float formatting, newline endings.
    """
    os.makedirs(out_dir, exist_ok=True)
    written = []
    for report in reports:
        layer_path = os.path.join(out_dir, f"{report.name}.csv")
        _write_csv(layer_path, LAYER_COLUMNS, [_layer_row(report)])
        written.append(layer_path)
        if report.trace is not None:
            trace_path = os.path.join(out_dir, f"{report.name}_anneal.csv")
            rows = [[str(it), f"{frac:.6f}"]
                    for it, frac in route_reduction_report(report.trace)]
            _write_csv(trace_path, ["iter", "remaining_fraction"], rows)
            written.append(trace_path)

    agg_rows = [_layer_row(report) for report in reports]
    if reports:
        total = [
            "TOTAL",
            _fmt(sum(r.n_unique for r in reports)),
            "",
            _fmt(sum(r.n_arrays for r in reports)),
            _fmt(aggregate_density(reports)),
            "",
            _fmt(sum(r.total_luts for r in reports)),
            _fmt(sum(r.routes_initial for r in reports)
                 if all(r.routes_initial is not None for r in reports) else None),
            _fmt(sum(r.routes_final for r in reports)),
            "",
        ] + [""] * len(META_KEYS)
        agg_rows.append(total)
    agg_path = os.path.join(out_dir, "aggregate.csv")
    _write_csv(agg_path, LAYER_COLUMNS, agg_rows)
    written.append(agg_path)
    return written
