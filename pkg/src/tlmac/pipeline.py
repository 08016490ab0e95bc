"""Per-layer compile pipeline: group, cluster, place, anneal, generate.

Kept separate from the CLI so tests and library users drive the same path.
Every stochastic pass takes an explicit seed and the seeds land in the report
metadata, which makes compilations reproducible byte for byte.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .anneal import AnnealConfig, AnnealTrace, anneal, count_routes
from .clustering import ClusterPlan, spectral_cluster
from .codegen import PEConfig, build_pe_config, emit_netlist
from .cost import cluster_capacity
from .errors import ValidationError
from .placement import PlacementPlan, place_groups
from .qweights import GroupedWeights, QuantLayer, reshape_to_groups
from .reports import LayerReport, layer_report
from .simulate import oracle_conv, simulate_layer


@dataclass
class PipelineOptions:
    """Knobs shared by every layer of one compile invocation."""

    parallel_factor: int = 64
    nn_k: int | None = None
    seed: int = 0
    anneal_iters: int = 10000
    anneal_alpha: float = 1.4
    anneal_seed: int = 0
    anneal_budget_per_route: float | None = None
    verify: bool = False
    verify_size: int = 8

    def meta(self) -> dict[str, str]:
        return {
            "parallel_factor": str(self.parallel_factor),
            "seed": str(self.seed),
            "nn_k": "" if self.nn_k is None else str(self.nn_k),
            "anneal_iters": str(self.anneal_iters),
            "anneal_alpha": str(self.anneal_alpha),
            "anneal_seed": str(self.anneal_seed),
        }


@dataclass
class CompiledLayer:
    """Everything the pipeline produced for one layer."""

    grouped: GroupedWeights
    cluster_plan: ClusterPlan
    placement: PlacementPlan
    trace: AnnealTrace
    config: PEConfig
    report: LayerReport


def compile_layer(layer: QuantLayer, options: PipelineOptions | None = None) -> CompiledLayer:
    """Run the full flow for one layer and return all intermediate artifacts."""
    options = options or PipelineOptions()
    grouped = reshape_to_groups(layer, options.parallel_factor)
    n_clusters = cluster_capacity(layer.kernel_size)
    cluster_plan = spectral_cluster(grouped.usage, n_clusters,
                                    seed=options.seed, nn_k=options.nn_k)
    placement = place_groups(cluster_plan, grouped, seed=options.seed)

    initial_routes = count_routes(placement.routing)
    iterations = options.anneal_iters
    if options.anneal_budget_per_route is not None:
        iterations = math.ceil(options.anneal_budget_per_route * initial_routes)
    cfg = AnnealConfig(iterations=iterations, alpha=options.anneal_alpha,
                       seed=options.anneal_seed)
    placement, trace = anneal(placement, cfg)

    config = build_pe_config(placement, cluster_plan, grouped)
    meta = options.meta()
    meta["anneal_iters"] = str(iterations)
    report = layer_report(grouped, cluster_plan, placement, trace, meta=meta)
    return CompiledLayer(
        grouped=grouped,
        cluster_plan=cluster_plan,
        placement=placement,
        trace=trace,
        config=config,
        report=report,
    )


def self_check(compiled: CompiledLayer, seed: int, size: int = 8) -> None:
    """Compare the simulator against the reference convolution on random input.

    Raises ValidationError on the first mismatching element.
    """
    layer = compiled.grouped.layer
    rng = np.random.default_rng(seed)
    acts = rng.integers(0, 1 << layer.act_bits,
                        size=(layer.in_channels, size, size), dtype=np.int64)
    pad = layer.kernel_size // 2
    got = simulate_layer(compiled.config, compiled.grouped, acts, stride=1, pad=pad)
    want = oracle_conv(layer, acts, stride=1, pad=pad)
    if not np.array_equal(got, want):
        o, y, x = (int(v) for v in np.argwhere(got != want)[0])
        raise ValidationError(
            f"layer {layer.name!r}: self check mismatch at output ({o}, {y}, {x}): "
            f"simulated {int(got[o, y, x])}, reference {int(want[o, y, x])}"
        )


def compile_and_emit(layer: QuantLayer, options: PipelineOptions,
                     netlist_path: str) -> LayerReport:
    """Compile one layer, write its netlist, optionally self-check."""
    compiled = compile_layer(layer, options)
    emit_netlist(compiled.config, netlist_path)
    if options.verify:
        self_check(compiled, seed=options.seed, size=options.verify_size)
    return compiled.report
