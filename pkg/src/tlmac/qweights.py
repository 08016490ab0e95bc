"""Quantised layer ingest: file formats, validation and weight-group reshaping.

QWeights file (JSON):

    {"name": str, "B_w": int, "B_a": int, "B_p": int,
     "D_o": int, "D_i": int, "D_k": int, "weights": [int, ...]}

``weights`` is the flattened [out_channel][in_channel][row][col] tensor in
row-major order. ``B_p`` may be omitted, in which case a safe accumulator
width is derived from the other fields. A file may also hold a list of such
objects under a top-level ``{"layers": [...]}`` key.

Activation tensor file (JSON):

    {"D_i": int, "H": int, "W": int, "B_a": int, "values": [uint, ...]}

with values in [channel][row][col] row-major order. Simulator outputs are
written in the analogous layout with ``D_o`` and ``B_p`` metadata.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass

import numpy as np

from .errors import QWeightsFormatError, ValidationError

MAX_GROUP_SIZE = 6


def default_acc_bits(weight_bits: int, act_bits: int, in_channels: int, kernel_size: int) -> int:
    """Accumulator width that cannot overflow for a full convolution sum."""
    taps = in_channels * kernel_size * kernel_size
    return weight_bits + act_bits + math.ceil(math.log2(taps)) + 1


@dataclass
class QuantLayer:
    """One quantised convolution layer: signed integer weights plus widths.

    weights has shape [out_channels, in_channels, kernel, kernel] and holds
    signed two's-complement values representable in ``weight_bits`` bits.
    """

    name: str
    weights: np.ndarray
    weight_bits: int
    act_bits: int
    acc_bits: int

    def __post_init__(self):
        self.weights = np.asarray(self.weights, dtype=np.int64)
        if self.weights.ndim != 4 or self.weights.shape[2] != self.weights.shape[3]:
            raise ValidationError(
                f"layer {self.name!r}: weights must be [D_o, D_i, D_k, D_k], "
                f"got shape {self.weights.shape}"
            )
        if self.kernel_size > MAX_GROUP_SIZE:
            raise ValidationError(
                f"layer {self.name!r}: kernel size {self.kernel_size} exceeds "
                f"the supported maximum of {MAX_GROUP_SIZE}"
            )
        for width, label in ((self.weight_bits, "B_w"), (self.act_bits, "B_a"),
                             (self.acc_bits, "B_p")):
            if width < 1:
                raise ValidationError(f"layer {self.name!r}: {label} must be >= 1, got {width}")
        if self.acc_bits < self.weight_bits + self.act_bits:
            raise ValidationError(
                f"layer {self.name!r}: B_p={self.acc_bits} is below B_w+B_a="
                f"{self.weight_bits + self.act_bits}"
            )
        lo = -(1 << (self.weight_bits - 1))
        hi = (1 << (self.weight_bits - 1)) - 1
        bad = np.argwhere((self.weights < lo) | (self.weights > hi))
        if bad.size:
            o, i, r, c = (int(x) for x in bad[0])
            raise ValidationError(
                f"layer {self.name!r}: weight[{o}][{i}][{r}][{c}]="
                f"{int(self.weights[o, i, r, c])} outside signed {self.weight_bits}-bit "
                f"range [{lo}, {hi}]"
            )

    @property
    def out_channels(self) -> int:
        return self.weights.shape[0]

    @property
    def in_channels(self) -> int:
        return self.weights.shape[1]

    @property
    def kernel_size(self) -> int:
        return self.weights.shape[2]


@dataclass
class GroupedWeights:
    """Layer weights reshaped into the step-parallel weight-group layout.

    Sequential step t enumerates output-channel tiles of ``parallel_factor``
    channels, input-channel minor: t = tile * in_channels + channel. Parallel
    position p enumerates kernel rows within a tile: p = local_channel *
    kernel + row. ``group_table`` holds the deduplicated weight groups in
    first-occurrence order, ``group_index`` maps each (t, p) to its table
    entry and ``usage`` is the step-by-group incidence matrix. ``pad_mask``
    marks (t, p) positions that belong to zero-padded output channels beyond
    the real channel count.
    """

    layer: QuantLayer
    parallel_factor: int
    group_table: np.ndarray
    group_index: np.ndarray
    usage: np.ndarray
    pad_mask: np.ndarray

    @property
    def n_steps(self) -> int:
        return self.group_index.shape[0]

    @property
    def n_parallel(self) -> int:
        return self.group_index.shape[1]

    @property
    def n_unique(self) -> int:
        return self.group_table.shape[0]

    @property
    def n_tiles(self) -> int:
        return -(-self.layer.out_channels // self.parallel_factor)


@dataclass
class RedundancyStats:
    """Weight-group redundancy metrics for one layer."""

    n_unique: int
    theoretical_max: int
    redundancy_ratio: float
    uniqueness_ratio: float
    n_pad_positions: int = 0


def reshape_to_groups(layer: QuantLayer, parallel_factor: int = 64) -> GroupedWeights:
    """Reshape a layer into weight groups over [n_steps, n_parallel].

    When out_channels is not divisible by parallel_factor the final tile is
    padded with all-zero weight groups so every step produces a full set of
    parallel outputs; padded positions are flagged in ``pad_mask``.
    """
    if parallel_factor < 1:
        raise ValidationError(f"parallel factor must be >= 1, got {parallel_factor}")
    kernel = layer.kernel_size
    if kernel > MAX_GROUP_SIZE:
        raise ValidationError(
            f"kernel size {kernel} exceeds the supported maximum of {MAX_GROUP_SIZE}"
        )
    d_o, d_i = layer.out_channels, layer.in_channels
    n_tiles = -(-d_o // parallel_factor)
    padded = np.zeros((n_tiles * parallel_factor, d_i, kernel, kernel), dtype=np.int64)
    padded[:d_o] = layer.weights

    # [tile, local, i, row, col] -> [tile, i, local, row, col] -> [t, p, col]
    groups = padded.reshape(n_tiles, parallel_factor, d_i, kernel, kernel)
    groups = groups.transpose(0, 2, 1, 3, 4)
    n_steps = n_tiles * d_i
    n_parallel = parallel_factor * kernel
    groups = groups.reshape(n_steps, n_parallel, kernel)

    flat = groups.reshape(n_steps * n_parallel, kernel)
    uniq, first, inverse = np.unique(flat, axis=0, return_index=True, return_inverse=True)
    order = np.argsort(first, kind="stable")
    rank = np.empty(len(order), dtype=np.int64)
    rank[order] = np.arange(len(order))
    group_table = uniq[order]
    group_index = rank[inverse.ravel()].reshape(n_steps, n_parallel)

    usage = np.zeros((n_steps, group_table.shape[0]), dtype=bool)
    usage[np.arange(n_steps)[:, None], group_index] = True

    tile_of_step = np.arange(n_steps) // d_i
    chan_of_pos = np.arange(n_parallel) // kernel
    pad_mask = (tile_of_step[:, None] * parallel_factor + chan_of_pos[None, :]) >= d_o

    return GroupedWeights(
        layer=layer,
        parallel_factor=parallel_factor,
        group_table=group_table,
        group_index=group_index,
        usage=usage,
        pad_mask=pad_mask,
    )


def redundancy_stats(grouped: GroupedWeights) -> RedundancyStats:
    """Unique-group counts and ratios against the theoretical maximum."""
    layer = grouped.layer
    theoretical = 1 << (layer.weight_bits * layer.kernel_size)
    positions = grouped.n_steps * grouped.n_parallel
    return RedundancyStats(
        n_unique=grouped.n_unique,
        theoretical_max=theoretical,
        redundancy_ratio=grouped.n_unique / positions,
        uniqueness_ratio=grouped.n_unique / theoretical,
        n_pad_positions=int(grouped.pad_mask.sum()),
    )


def _require(obj: dict, key: str, kind, path: str):
    if key not in obj:
        raise QWeightsFormatError(f"{path}: missing field {key!r}")
    value = obj[key]
    if kind is int and (not isinstance(value, int) or isinstance(value, bool)):
        raise QWeightsFormatError(f"{path}: field {key!r} must be an integer")
    if kind is str and not isinstance(value, str):
        raise QWeightsFormatError(f"{path}: field {key!r} must be a string")
    if kind is list and not isinstance(value, list):
        raise QWeightsFormatError(f"{path}: field {key!r} must be a list")
    return value


def _load_json(path: str) -> dict:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            return json.load(fh)
    except json.JSONDecodeError as exc:
        raise QWeightsFormatError(
            f"{path}: invalid JSON at line {exc.lineno}, column {exc.colno}: {exc.msg}"
        ) from exc


def _layer_from_dict(obj: dict, path: str, name: str | None = None) -> QuantLayer:
    layer_name = name if name is not None else _require(obj, "name", str, path)
    b_w = _require(obj, "B_w", int, path)
    b_a = _require(obj, "B_a", int, path)
    d_o = _require(obj, "D_o", int, path)
    d_i = _require(obj, "D_i", int, path)
    d_k = _require(obj, "D_k", int, path)
    values = _require(obj, "weights", list, path)
    for dim, label in ((d_o, "D_o"), (d_i, "D_i"), (d_k, "D_k")):
        if dim < 1:
            raise QWeightsFormatError(f"{path}: {label} must be >= 1, got {dim}")
    expected = d_o * d_i * d_k * d_k
    if len(values) != expected:
        raise QWeightsFormatError(
            f"{path}: expected {expected} values in 'weights', got {len(values)}"
        )
    for idx, v in enumerate(values):
        if not isinstance(v, int) or isinstance(v, bool):
            raise QWeightsFormatError(f"{path}: weights[{idx}] is not an integer")
    b_p = obj.get("B_p")
    if b_p is None:
        b_p = default_acc_bits(b_w, b_a, d_i, d_k)
    elif not isinstance(b_p, int) or isinstance(b_p, bool):
        raise QWeightsFormatError(f"{path}: field 'B_p' must be an integer")
    weights = np.asarray(values, dtype=np.int64).reshape(d_o, d_i, d_k, d_k)
    return QuantLayer(name=layer_name, weights=weights, weight_bits=b_w,
                      act_bits=b_a, acc_bits=b_p)


def load_layer(path: str, name: str | None = None) -> QuantLayer:
    """Load and validate a single-layer QWeights file."""
    obj = _load_json(path)
    if not isinstance(obj, dict):
        raise QWeightsFormatError(f"{path}: top-level value must be an object")
    if "layers" in obj:
        raise QWeightsFormatError(
            f"{path}: multi-layer file, use load_layers() or pass one layer per file"
        )
    return _layer_from_dict(obj, path, name)


def load_layers(path: str) -> list[QuantLayer]:
    """Load one or many layers from a QWeights file."""
    obj = _load_json(path)
    if isinstance(obj, dict) and "layers" in obj:
        entries = _require(obj, "layers", list, path)
        return [_layer_from_dict(entry, f"{path}[layers][{i}]")
                for i, entry in enumerate(entries)]
    if isinstance(obj, dict):
        return [_layer_from_dict(obj, path)]
    raise QWeightsFormatError(f"{path}: top-level value must be an object")


def save_layer(layer: QuantLayer, path: str) -> None:
    obj = {
        "name": layer.name,
        "B_w": layer.weight_bits,
        "B_a": layer.act_bits,
        "B_p": layer.acc_bits,
        "D_o": layer.out_channels,
        "D_i": layer.in_channels,
        "D_k": layer.kernel_size,
        "weights": [int(v) for v in layer.weights.ravel()],
    }
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(obj, fh)
        fh.write("\n")


def load_activations(path: str) -> tuple[np.ndarray, int]:
    """Load an activation tensor file, returning (values [D_i, H, W], act_bits)."""
    obj = _load_json(path)
    if not isinstance(obj, dict):
        raise QWeightsFormatError(f"{path}: top-level value must be an object")
    d_i = _require(obj, "D_i", int, path)
    height = _require(obj, "H", int, path)
    width = _require(obj, "W", int, path)
    b_a = _require(obj, "B_a", int, path)
    values = _require(obj, "values", list, path)
    for dim, label in ((d_i, "D_i"), (height, "H"), (width, "W"), (b_a, "B_a")):
        if dim < 1:
            raise QWeightsFormatError(f"{path}: {label} must be >= 1, got {dim}")
    expected = d_i * height * width
    if len(values) != expected:
        raise QWeightsFormatError(
            f"{path}: expected {expected} values, got {len(values)}"
        )
    acts = np.asarray(values, dtype=np.int64).reshape(d_i, height, width)
    if acts.min(initial=0) < 0 or acts.max(initial=0) >= (1 << b_a):
        bad = np.argwhere((acts < 0) | (acts >= (1 << b_a)))[0]
        raise ValidationError(
            f"{path}: activation at {tuple(int(x) for x in bad)} outside "
            f"unsigned {b_a}-bit range"
        )
    return acts, b_a


def save_activations(acts: np.ndarray, act_bits: int, path: str) -> None:
    d_i, height, width = acts.shape
    obj = {"D_i": int(d_i), "H": int(height), "W": int(width), "B_a": int(act_bits),
           "values": [int(v) for v in acts.ravel()]}
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(obj, fh)
        fh.write("\n")


def save_output(out: np.ndarray, acc_bits: int, path: str) -> None:
    """Write a simulator output tensor in the activation-file layout."""
    d_o, height, width = out.shape
    obj = {"D_o": int(d_o), "H": int(height), "W": int(width), "B_p": int(acc_bits),
           "values": [int(v) for v in out.ravel()]}
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(obj, fh)
        fh.write("\n")
