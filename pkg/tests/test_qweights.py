import json

import numpy as np
import pytest

from tlmac import (
    QWeightsFormatError,
    QuantLayer,
    ValidationError,
    load_activations,
    load_layer,
    load_layers,
    redundancy_stats,
    reshape_to_groups,
    save_activations,
    save_layer,
)
from tlmac.qweights import default_acc_bits

from conftest import make_layer


def write_qweights(tmp_path, name="l0", b_w=3, b_a=3, b_p=None, d_o=4, d_i=2, d_k=3,
                   weights=None):
    expected = d_o * d_i * d_k * d_k
    if weights is None:
        weights = [0] * expected
    obj = {"name": name, "B_w": b_w, "B_a": b_a, "D_o": d_o, "D_i": d_i, "D_k": d_k,
           "weights": weights}
    if b_p is not None:
        obj["B_p"] = b_p
    path = tmp_path / f"{name}.json"
    path.write_text(json.dumps(obj))
    return str(path)


class TestLoadLayer:
    def test_weight_above_signed_range_rejected(self, tmp_path):
        weights = [0] * 72
        weights[5] = 3  # max for signed 2-bit is 1
        path = write_qweights(tmp_path, b_w=2, weights=weights)
        with pytest.raises(ValidationError, match="weight"):
            load_layer(path)

    def test_valid_file_round_trips_dims(self, tmp_path):
        path = write_qweights(tmp_path, d_o=4, d_i=2, d_k=3,
                              weights=[int(v) for v in np.arange(72) % 3 - 1])
        layer = load_layer(path)
        assert layer.out_channels == 4
        assert layer.in_channels == 2
        assert layer.kernel_size == 3
        assert layer.weights.shape == (4, 2, 3, 3)

    def test_short_weight_list_names_expected_count(self, tmp_path):
        path = write_qweights(tmp_path, weights=[0] * 71)
        with pytest.raises(QWeightsFormatError, match="expected 72 values"):
            load_layer(path)

    def test_invalid_json_reports_line(self, tmp_path):
        path = tmp_path / "bad.json"
        path.write_text('{"name": "x",\n  "B_w": }')
        with pytest.raises(QWeightsFormatError, match="line 2"):
            load_layer(str(path))

    def test_missing_field_named(self, tmp_path):
        path = tmp_path / "short.json"
        path.write_text(json.dumps({"name": "x", "B_w": 2, "B_a": 2}))
        with pytest.raises(QWeightsFormatError, match="'D_o'"):
            load_layer(str(path))

    def test_default_acc_bits_applied(self, tmp_path):
        path = write_qweights(tmp_path, b_w=3, b_a=4, d_i=2, d_k=3)
        layer = load_layer(path)
        assert layer.acc_bits == default_acc_bits(3, 4, 2, 3)

    def test_acc_bits_below_product_width_rejected(self, tmp_path):
        path = write_qweights(tmp_path, b_w=3, b_a=3, b_p=5)
        with pytest.raises(ValidationError, match="B_p"):
            load_layer(path)

    def test_save_load_round_trip(self, tmp_path, rng):
        layer = make_layer(rng, name="rt")
        path = tmp_path / "rt.json"
        save_layer(layer, str(path))
        back = load_layer(str(path))
        assert back.name == layer.name
        assert back.acc_bits == layer.acc_bits
        assert np.array_equal(back.weights, layer.weights)

    def test_multi_layer_file(self, tmp_path, rng):
        a, b = make_layer(rng, name="a"), make_layer(rng, name="b", kernel=1)
        entries = []
        for layer in (a, b):
            entries.append({
                "name": layer.name, "B_w": layer.weight_bits, "B_a": layer.act_bits,
                "B_p": layer.acc_bits, "D_o": layer.out_channels,
                "D_i": layer.in_channels, "D_k": layer.kernel_size,
                "weights": [int(v) for v in layer.weights.ravel()],
            })
        path = tmp_path / "model.json"
        path.write_text(json.dumps({"layers": entries}))
        loaded = load_layers(str(path))
        assert [l.name for l in loaded] == ["a", "b"]


class TestReshape:
    def test_dims_small(self, rng):
        layer = make_layer(rng, out_channels=4, in_channels=2, kernel=3)
        grouped = reshape_to_groups(layer, parallel_factor=2)
        assert grouped.n_parallel == 6
        assert grouped.n_steps == 4

    def test_all_zero_layer_has_single_group(self):
        layer = QuantLayer(name="z", weights=np.zeros((3, 2, 3, 3), dtype=np.int64),
                           weight_bits=2, act_bits=2, acc_bits=10)
        grouped = reshape_to_groups(layer, parallel_factor=3)
        assert grouped.n_unique == 1
        assert tuple(grouped.group_table[0]) == (0, 0, 0)
        assert grouped.usage.shape == (grouped.n_steps, 1)
        assert grouped.usage.all()

    def test_resnet_scale_dims(self):
        layer = QuantLayer(name="big", weights=np.zeros((512, 512, 3, 3), dtype=np.int64),
                           weight_bits=3, act_bits=3, acc_bits=20)
        grouped = reshape_to_groups(layer, parallel_factor=64)
        assert grouped.n_steps == 4096
        assert grouped.n_parallel == 192

    def test_round_trip_positions(self, rng):
        layer = make_layer(rng, out_channels=5, in_channels=3, kernel=3)
        parallel = 2
        grouped = reshape_to_groups(layer, parallel)
        tiles = grouped.n_tiles
        for tile in range(tiles):
            for i in range(layer.in_channels):
                t = tile * layer.in_channels + i
                for local in range(parallel):
                    o = tile * parallel + local
                    for r in range(layer.kernel_size):
                        p = local * layer.kernel_size + r
                        got = grouped.group_table[grouped.group_index[t, p]]
                        if o < layer.out_channels:
                            assert np.array_equal(got, layer.weights[o, i, r])
                            assert not grouped.pad_mask[t, p]
                        else:
                            assert np.array_equal(got, np.zeros(layer.kernel_size))
                            assert grouped.pad_mask[t, p]

    def test_usage_matches_group_index(self, rng):
        layer = make_layer(rng, out_channels=6, in_channels=2, kernel=3, weight_bits=2)
        grouped = reshape_to_groups(layer, parallel_factor=2)
        for t in range(grouped.n_steps):
            present = set(int(u) for u in grouped.group_index[t])
            assert set(np.flatnonzero(grouped.usage[t])) == present

    def test_group_table_rows_distinct(self, rng):
        layer = make_layer(rng, out_channels=8, in_channels=4, kernel=3, weight_bits=2)
        grouped = reshape_to_groups(layer, parallel_factor=4)
        rows = {tuple(int(w) for w in row) for row in grouped.group_table}
        assert len(rows) == grouped.n_unique

    def test_first_occurrence_order(self, rng):
        layer = make_layer(rng, out_channels=4, in_channels=2, kernel=1, weight_bits=3)
        grouped = reshape_to_groups(layer, parallel_factor=4)
        flat = grouped.group_table[grouped.group_index.ravel()]
        seen = []
        for row in flat:
            key = tuple(int(w) for w in row)
            if key not in seen:
                seen.append(key)
        assert [tuple(int(w) for w in row) for row in grouped.group_table] == seen

    def test_bad_parallel_factor(self, rng):
        layer = make_layer(rng)
        with pytest.raises(ValidationError):
            reshape_to_groups(layer, parallel_factor=0)

    def test_kernel_wider_than_lut_inputs_rejected(self):
        with pytest.raises(ValidationError, match="kernel"):
            QuantLayer(name="wide", weights=np.zeros((1, 1, 7, 7), dtype=np.int64),
                       weight_bits=2, act_bits=2, acc_bits=10)


class TestRedundancy:
    @pytest.mark.parametrize("weight_bits,kernel,expected",
                             [(2, 3, 64), (3, 3, 512), (4, 3, 4096)])
    def test_theoretical_max(self, rng, weight_bits, kernel, expected):
        layer = make_layer(rng, weight_bits=weight_bits, kernel=kernel)
        stats = redundancy_stats(reshape_to_groups(layer, 2))
        assert stats.theoretical_max == expected

    def test_pigeonhole_bound_on_dense_layer(self, rng):
        # positions far exceed the 512 representable 3-bit triples
        layer = make_layer(rng, out_channels=16, in_channels=16, kernel=3, weight_bits=3)
        grouped = reshape_to_groups(layer, 4)
        assert grouped.n_steps * grouped.n_parallel > 512
        stats = redundancy_stats(grouped)
        distinct = {tuple(int(w) for w in grouped.group_table[i])
                    for i in grouped.group_index.ravel()}
        assert stats.n_unique == len(distinct) <= 512
        assert stats.uniqueness_ratio <= 1.0
        assert stats.redundancy_ratio == stats.n_unique / (grouped.n_steps * grouped.n_parallel)

    def test_unique_bound(self, rng):
        layer = make_layer(rng, out_channels=3, in_channels=2, kernel=3, weight_bits=4)
        grouped = reshape_to_groups(layer, 2)
        assert grouped.n_unique <= min(grouped.n_steps * grouped.n_parallel,
                                       1 << (4 * 3))


class TestActivations:
    def test_round_trip(self, tmp_path, rng):
        acts = rng.integers(0, 8, size=(3, 4, 5), dtype=np.int64)
        path = tmp_path / "acts.json"
        save_activations(acts, 3, str(path))
        back, bits = load_activations(str(path))
        assert bits == 3
        assert np.array_equal(back, acts)

    def test_value_out_of_range(self, tmp_path):
        path = tmp_path / "acts.json"
        path.write_text(json.dumps({"D_i": 1, "H": 1, "W": 2, "B_a": 2,
                                    "values": [1, 4]}))
        with pytest.raises(ValidationError):
            load_activations(str(path))

    def test_count_mismatch(self, tmp_path):
        path = tmp_path / "acts.json"
        path.write_text(json.dumps({"D_i": 1, "H": 2, "W": 2, "B_a": 2,
                                    "values": [0, 1, 2]}))
        with pytest.raises(QWeightsFormatError, match="expected 4"):
            load_activations(str(path))

    def test_zero_dimension_rejected(self, tmp_path):
        path = tmp_path / "acts.json"
        path.write_text(json.dumps({"D_i": 1, "H": 0, "W": 2, "B_a": 2,
                                    "values": []}))
        with pytest.raises(QWeightsFormatError, match="'H'|H must"):
            load_activations(str(path))


class TestNonIntegerPayloads:
    def test_float_weight_rejected(self, tmp_path):
        weights = [0] * 72
        weights[3] = 0.5
        path = write_qweights(tmp_path, weights=weights)
        with pytest.raises(QWeightsFormatError, match=r"weights\[3\]"):
            load_layer(path)

    def test_bool_weight_rejected(self, tmp_path):
        weights = [0] * 72
        weights[0] = True
        path = write_qweights(tmp_path, weights=weights)
        with pytest.raises(QWeightsFormatError, match=r"weights\[0\]"):
            load_layer(path)
