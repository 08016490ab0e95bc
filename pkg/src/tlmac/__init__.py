"""Compiler and functional simulator for table-lookup multiply-accumulate PEs."""

from .anneal import AnnealConfig, AnnealTrace, anneal, count_routes, route_reduction_report
from .clustering import (
    ClusterPlan,
    baseline_chunk_cluster,
    lower_bound_arrays,
    spectral_cluster,
)
from .codegen import (
    LutArraySpec,
    PEConfig,
    build_pe_config,
    build_truth_tables,
    emit_netlist,
    load_netlist,
    mac_decode_table,
)
from .cost import LutCostParams, bitparallel_lut_count, cluster_capacity, lut_array_width
from .errors import (
    AccumulatorOverflowError,
    ConfigMismatchError,
    NetlistFormatError,
    PlacementError,
    QWeightsFormatError,
    TlmacError,
    ValidationError,
)
from .pipeline import CompiledLayer, PipelineOptions, compile_layer
from .placement import PlacementPlan, place_groups, validate_placement
from .qweights import (
    GroupedWeights,
    QuantLayer,
    RedundancyStats,
    load_activations,
    load_layer,
    load_layers,
    redundancy_stats,
    reshape_to_groups,
    save_activations,
    save_layer,
    save_output,
)
from .reports import LayerReport, aggregate_density, export_reports, layer_report
from .simulate import oracle_conv, pe_step, simulate_layer

__version__ = "0.1.0"

__all__ = [
    "AccumulatorOverflowError",
    "AnnealConfig",
    "AnnealTrace",
    "ClusterPlan",
    "CompiledLayer",
    "ConfigMismatchError",
    "GroupedWeights",
    "LayerReport",
    "LutArraySpec",
    "LutCostParams",
    "NetlistFormatError",
    "PEConfig",
    "PipelineOptions",
    "PlacementError",
    "PlacementPlan",
    "QWeightsFormatError",
    "QuantLayer",
    "RedundancyStats",
    "TlmacError",
    "ValidationError",
    "aggregate_density",
    "anneal",
    "baseline_chunk_cluster",
    "bitparallel_lut_count",
    "build_pe_config",
    "build_truth_tables",
    "cluster_capacity",
    "compile_layer",
    "count_routes",
    "emit_netlist",
    "export_reports",
    "layer_report",
    "load_activations",
    "load_layer",
    "load_layers",
    "load_netlist",
    "lower_bound_arrays",
    "lut_array_width",
    "mac_decode_table",
    "oracle_conv",
    "pe_step",
    "place_groups",
    "redundancy_stats",
    "reshape_to_groups",
    "route_reduction_report",
    "save_activations",
    "save_layer",
    "save_output",
    "simulate_layer",
    "spectral_cluster",
    "validate_placement",
]
