from tlmac import (
    PipelineOptions,
    aggregate_density,
    compile_layer,
    emit_netlist,
    export_reports,
    load_netlist,
)
from tlmac.reports import report_from_netlist

from conftest import make_layer


def compiled_report(rng, **kwargs):
    parallel = kwargs.pop("parallel_factor", 2)
    layer = make_layer(rng, **kwargs)
    compiled = compile_layer(layer, PipelineOptions(parallel_factor=parallel))
    return compiled


class TestLayerReport:
    def test_density_one_when_every_step_uses_every_group(self, rng):
        # a layer with a single repeated kernel row: one group, used everywhere
        layer = make_layer(rng, out_channels=4, in_channels=4, kernel=3)
        layer.weights[:] = 1
        compiled = compile_layer(layer, PipelineOptions(parallel_factor=2))
        report = compiled.report
        assert report.n_unique == report.n_arrays == 1
        assert report.logic_density == 1.0

    def test_hand_recomputed_fields(self, rng):
        compiled = compiled_report(rng, out_channels=4, in_channels=2,
                                   kernel=3, weight_bits=3)
        grouped, plan = compiled.grouped, compiled.cluster_plan
        report = compiled.report
        assert report.n_unique == grouped.n_unique
        assert report.theoretical_max == 512
        assert report.n_arrays == plan.n_arrays
        assert report.logic_density == grouped.n_unique / plan.n_arrays
        assert report.luts_per_array == 5  # 3-bit weights, 3-wide groups
        assert report.total_luts == plan.n_arrays * 5
        assert report.remaining_fraction == report.routes_final / report.routes_initial

    def test_small_step_count_density(self, rng):
        # with steps <= clusters the identity partition applies, so the array
        # count equals the largest per-step group count
        compiled = compiled_report(rng, out_channels=2, in_channels=2,
                                   kernel=3, parallel_factor=2)
        grouped = compiled.grouped
        assert grouped.n_steps <= 8
        expected_arrays = int(grouped.usage.sum(axis=1).max())
        assert compiled.report.n_arrays == expected_arrays
        assert compiled.report.logic_density == grouped.n_unique / expected_arrays

    def test_aggregate_density_is_ratio_of_sums(self, rng):
        reports = [compiled_report(rng, out_channels=4).report,
                   compiled_report(rng, out_channels=6, weight_bits=2).report]
        total_groups = sum(r.n_unique for r in reports)
        total_arrays = sum(r.n_arrays for r in reports)
        assert aggregate_density(reports) == total_groups / total_arrays

    def test_report_from_netlist_matches(self, rng, tmp_path):
        compiled = compiled_report(rng, out_channels=4, in_channels=3)
        path = tmp_path / "x.netlist.json"
        emit_netlist(compiled.config, str(path))
        rebuilt = report_from_netlist(load_netlist(str(path)), "x")
        full = compiled.report
        assert rebuilt.n_arrays == full.n_arrays
        assert rebuilt.luts_per_array == full.luts_per_array
        assert rebuilt.routes_final == full.routes_final
        assert rebuilt.routes_initial is None
        assert rebuilt.remaining_fraction is None
        # stored distinct groups may collapse duplicates placed in several
        # clusters, but every unique group of the layer is stored somewhere
        assert rebuilt.n_unique == full.n_unique


class TestExport:
    def test_empty_list_writes_header_only_aggregate(self, tmp_path):
        written = export_reports([], str(tmp_path / "reports"))
        (agg,) = written
        lines = open(agg).read().splitlines()
        assert len(lines) == 1
        assert lines[0].startswith("name,")

    def test_single_layer_writes_layer_and_trace(self, rng, tmp_path):
        compiled = compiled_report(rng)
        out = tmp_path / "reports"
        written = export_reports([compiled.report], str(out))
        names = sorted(p.split("/")[-1] for p in written)
        assert names == ["aggregate.csv", "layer.csv", "layer_anneal.csv"]
        trace_lines = open(out / "layer_anneal.csv").read().splitlines()
        assert trace_lines[0] == "iter,remaining_fraction"
        assert trace_lines[1].startswith("0,1.000000")

    def test_re_export_identical_bytes(self, rng, tmp_path):
        compiled = compiled_report(rng)
        first = tmp_path / "a"
        second = tmp_path / "b"
        export_reports([compiled.report], str(first))
        export_reports([compiled.report], str(second))
        for name in ("layer.csv", "layer_anneal.csv", "aggregate.csv"):
            assert (first / name).read_bytes() == (second / name).read_bytes()

    def test_aggregate_total_row(self, rng, tmp_path):
        reports = [compiled_report(rng).report]
        reports[0].name = "only"
        export_reports(reports, str(tmp_path))
        rows = open(tmp_path / "aggregate.csv").read().splitlines()
        assert rows[1].startswith("only,")
        assert rows[2].startswith("TOTAL,")

    def test_metadata_columns_echo_seeds(self, rng, tmp_path):
        layer = make_layer(rng, name="meta")
        compiled = compile_layer(layer, PipelineOptions(parallel_factor=2, seed=5,
                                                        anneal_seed=6))
        export_reports([compiled.report], str(tmp_path))
        header, row = open(tmp_path / "meta.csv").read().splitlines()
        cells = dict(zip(header.split(","), row.split(",")))
        assert cells["seed"] == "5"
        assert cells["anneal_seed"] == "6"
        assert cells["parallel_factor"] == "2"
