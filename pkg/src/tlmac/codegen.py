"""Generate LUT truth tables, mapping memories and the netlist artifact.

Bit conventions, fixed because INIT values are bit-exact artifacts:

* LUT input bits 0..G-1 carry the activation bits a_0..a_{G-1}; bits G..5
  carry the select value, least significant bit at position G.
* Each LUT array holds ``lut_width`` LUT-6 primitives; LUT j outputs bit j of
  the two's-complement encoding of the selected group's MAC result.
* Bit v of an INIT value is the LUT output for the 6-bit input pattern v.
  INIT values serialise as 16 uppercase hex digits.
* Vacant slots read as all zeros.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from .clustering import ClusterPlan
from .cost import LutCostParams, cluster_capacity, lut_array_width
from .errors import NetlistFormatError, PlacementError, TlmacError
from .placement import VACANT, PlacementPlan
from .qweights import GroupedWeights


@dataclass
class LutArraySpec:
    """One LUT array: its stored groups and the per-LUT 64-bit truth tables."""

    array_id: int
    slots: list[tuple[int, ...] | None]
    init_values: list[int]


@dataclass(eq=False)
class PEConfig:
    """Emit-ready PE configuration: truth tables plus the mapping memories."""

    widths: LutCostParams
    n_steps: int
    n_parallel: int
    arrays: list[LutArraySpec]
    step_select: np.ndarray
    mux_map: np.ndarray
    switch_wiring: list[list[int]]

    @property
    def n_arrays(self) -> int:
        return len(self.arrays)

    def __eq__(self, other) -> bool:
        if not isinstance(other, PEConfig):
            return NotImplemented
        return (
            self.widths == other.widths
            and self.n_steps == other.n_steps
            and self.n_parallel == other.n_parallel
            and len(self.arrays) == len(other.arrays)
            and all(a.array_id == b.array_id and a.slots == b.slots
                    and a.init_values == b.init_values
                    for a, b in zip(self.arrays, other.arrays))
            and np.array_equal(self.step_select, other.step_select)
            and np.array_equal(self.mux_map, other.mux_map)
            and self.switch_wiring == other.switch_wiring
        )


def build_truth_tables(plan: PlacementPlan, widths: LutCostParams) -> list[LutArraySpec]:
    """Derive every array's 64-bit INIT values from its placed groups."""
    group_size = widths.group_size
    lut_width = widths.lut_width
    capacity = cluster_capacity(group_size)
    if plan.n_clusters > capacity:
        raise PlacementError(
            f"{plan.n_clusters} select values cannot be encoded in "
            f"{6 - group_size} bits (capacity {capacity})"
        )
    patterns = np.arange(1 << group_size)
    act_bits = (patterns[:, None] >> np.arange(group_size)) & 1
    lo = -(1 << (lut_width - 1))
    hi = (1 << (lut_width - 1)) - 1
    mask = (1 << lut_width) - 1

    arrays = []
    for e in range(plan.n_arrays):
        init = [0] * lut_width
        slots: list[tuple[int, ...] | None] = []
        for s in range(capacity):
            u = int(plan.occupancy[e, s]) if s < plan.n_clusters else VACANT
            if u == VACANT:
                slots.append(None)
                continue
            group = plan.group_table[u]
            slots.append(tuple(int(w) for w in group))
            macs = act_bits @ group
            if macs.min() < lo or macs.max() > hi:
                raise RuntimeError(
                    f"array {e} slot {s}: MAC result outside signed "
                    f"{lut_width}-bit range, sizing invariant broken"
                )
            for a, mac in enumerate(macs):
                pattern = a | (s << group_size)
                encoded = int(mac) & mask
                for j in range(lut_width):
                    if (encoded >> j) & 1:
                        init[j] |= 1 << pattern
        arrays.append(LutArraySpec(array_id=e, slots=slots, init_values=init))
    return arrays


def build_pe_config(plan: PlacementPlan, cluster_plan: ClusterPlan,
                    grouped: GroupedWeights) -> PEConfig:
    """Assemble the full PE configuration for one compiled layer."""
    layer = grouped.layer
    widths = LutCostParams(
        group_size=layer.kernel_size,
        act_bits=layer.act_bits,
        weight_bits=layer.weight_bits,
        acc_bits=layer.acc_bits,
    )
    arrays = build_truth_tables(plan, widths)

    lookup = np.full((plan.n_clusters, grouped.n_unique), VACANT, dtype=np.int64)
    for (c, u), e in plan.location.items():
        lookup[c, u] = e
    step_select = cluster_plan.labels.astype(np.int64).copy()
    mux_map = np.empty((grouped.n_steps, grouped.n_parallel), dtype=np.int64)
    for t in range(grouped.n_steps):
        row = lookup[int(step_select[t]), grouped.group_index[t]]
        if (row == VACANT).any():
            missing = int(grouped.group_index[t][row == VACANT][0])
            raise PlacementError(
                f"step {t}: no array holds group {missing} at select "
                f"{int(step_select[t])}"
            )
        mux_map[t] = row

    switch_wiring = [
        [int(e) for e in np.flatnonzero(plan.routing[:, :, p].any(axis=1))]
        for p in range(grouped.n_parallel)
    ]
    return PEConfig(
        widths=widths,
        n_steps=grouped.n_steps,
        n_parallel=grouped.n_parallel,
        arrays=arrays,
        step_select=step_select,
        mux_map=mux_map,
        switch_wiring=switch_wiring,
    )


def emit_netlist(cfg: PEConfig, path: str) -> None:
    """Write the netlist JSON with INIT values as 16-hex-digit strings."""
    obj = {
        "widths": {
            "G": cfg.widths.group_size,
            "B_a": cfg.widths.act_bits,
            "B_w": cfg.widths.weight_bits,
            "B_l": cfg.widths.lut_width,
            "B_p": cfg.widths.acc_bits,
        },
        "dims": {"D_s": cfg.n_steps, "D_p": cfg.n_parallel},
        "arrays": [
            {
                "id": a.array_id,
                "slots": [list(s) if s is not None else None for s in a.slots],
                "init": [f"{v:016X}" for v in a.init_values],
            }
            for a in cfg.arrays
        ],
        "step_select": [int(s) for s in cfg.step_select],
        "mux_map": [[int(e) for e in row] for row in cfg.mux_map],
        "switch_wiring": cfg.switch_wiring,
    }
    try:
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(obj, fh, indent=1)
            fh.write("\n")
    except OSError as exc:
        raise TlmacError(f"cannot write netlist {path}: {exc}") from exc


def _expect(cond: bool, path: str, message: str) -> None:
    if not cond:
        raise NetlistFormatError(f"{path}: {message}")


def load_netlist(path: str) -> PEConfig:
    """Parse and validate a netlist file back into a PEConfig."""
    try:
        with open(path, "r", encoding="utf-8") as fh:
            obj = json.load(fh)
    except json.JSONDecodeError as exc:
        raise NetlistFormatError(
            f"{path}: invalid JSON at line {exc.lineno}, column {exc.colno}: {exc.msg}"
        ) from exc
    except OSError as exc:
        raise NetlistFormatError(f"cannot read netlist {path}: {exc}") from exc

    _expect(isinstance(obj, dict), path, "top-level value must be an object")
    for key in ("widths", "dims", "arrays", "step_select", "mux_map", "switch_wiring"):
        _expect(key in obj, path, f"missing field {key!r}")

    widths_obj = obj["widths"]
    _expect(isinstance(widths_obj, dict), path, "'widths' must be an object")
    for key in ("G", "B_a", "B_w", "B_l", "B_p"):
        _expect(isinstance(widths_obj.get(key), int), path, f"widths.{key} must be an integer")
    try:
        widths = LutCostParams(
            group_size=widths_obj["G"],
            act_bits=widths_obj["B_a"],
            weight_bits=widths_obj["B_w"],
            acc_bits=widths_obj["B_p"],
        )
    except ValueError as exc:
        raise NetlistFormatError(f"{path}: {exc}") from exc
    _expect(widths_obj["B_l"] == lut_array_width(widths.weight_bits, widths.group_size),
            path, "B_l is inconsistent with B_w and G")
    group_size = widths.group_size
    lut_width = widths.lut_width
    capacity = cluster_capacity(group_size)

    dims = obj["dims"]
    _expect(isinstance(dims, dict)
            and isinstance(dims.get("D_s"), int) and isinstance(dims.get("D_p"), int),
            path, "'dims' must hold integer D_s and D_p")
    n_steps, n_parallel = dims["D_s"], dims["D_p"]
    _expect(n_steps >= 1 and n_parallel >= 1, path, "dims must be >= 1")

    raw_arrays = obj["arrays"]
    _expect(isinstance(raw_arrays, list) and raw_arrays, path, "'arrays' must be a non-empty list")
    w_lo = -(1 << (widths.weight_bits - 1))
    w_hi = (1 << (widths.weight_bits - 1)) - 1
    arrays = []
    for e, entry in enumerate(raw_arrays):
        _expect(isinstance(entry, dict), path, f"arrays[{e}] must be an object")
        _expect(entry.get("id") == e, path, f"arrays[{e}] has id {entry.get('id')!r}")
        slots_raw = entry.get("slots")
        _expect(isinstance(slots_raw, list) and len(slots_raw) == capacity,
                path, f"arrays[{e}].slots must list {capacity} entries")
        slots: list[tuple[int, ...] | None] = []
        for s, slot in enumerate(slots_raw):
            if slot is None:
                slots.append(None)
                continue
            _expect(isinstance(slot, list) and len(slot) == group_size
                    and all(isinstance(w, int) and w_lo <= w <= w_hi for w in slot),
                    path, f"arrays[{e}].slots[{s}] must hold {group_size} weights "
                          f"in [{w_lo}, {w_hi}]")
            slots.append(tuple(slot))
        init_raw = entry.get("init")
        _expect(isinstance(init_raw, list) and len(init_raw) == lut_width,
                path, f"arrays[{e}].init must list {lut_width} values")
        init_values = []
        for j, text in enumerate(init_raw):
            _expect(isinstance(text, str) and len(text) == 16
                    and all(ch in "0123456789abcdefABCDEF" for ch in text),
                    path, f"arrays[{e}].init[{j}] must be 16 hex digits")
            init_values.append(int(text, 16))
        arrays.append(LutArraySpec(array_id=e, slots=slots, init_values=init_values))

    select_raw = obj["step_select"]
    _expect(isinstance(select_raw, list) and len(select_raw) == n_steps,
            path, f"step_select must list {n_steps} values")
    _expect(all(isinstance(s, int) and 0 <= s < capacity for s in select_raw),
            path, f"step_select values must lie in [0, {capacity})")

    mux_raw = obj["mux_map"]
    _expect(isinstance(mux_raw, list) and len(mux_raw) == n_steps,
            path, f"mux_map must list {n_steps} rows")
    for t, row in enumerate(mux_raw):
        _expect(isinstance(row, list) and len(row) == n_parallel
                and all(isinstance(e, int) and 0 <= e < len(arrays) for e in row),
                path, f"mux_map[{t}] must list {n_parallel} valid array ids")

    wiring_raw = obj["switch_wiring"]
    _expect(isinstance(wiring_raw, list) and len(wiring_raw) == n_parallel,
            path, f"switch_wiring must list {n_parallel} entries")
    for p, wires in enumerate(wiring_raw):
        _expect(isinstance(wires, list)
                and all(isinstance(e, int) and 0 <= e < len(arrays) for e in wires)
                and wires == sorted(set(wires)),
                path, f"switch_wiring[{p}] must be a sorted list of valid array ids")
        for t, row in enumerate(mux_raw):
            if row[p] not in wires:
                raise NetlistFormatError(
                    f"{path}: mux_map[{t}][{p}]={row[p]} is not wired to switch {p}"
                )

    return PEConfig(
        widths=widths,
        n_steps=n_steps,
        n_parallel=n_parallel,
        arrays=arrays,
        step_select=np.asarray(select_raw, dtype=np.int64),
        mux_map=np.asarray(mux_raw, dtype=np.int64),
        switch_wiring=[list(w) for w in wiring_raw],
    )


def mac_decode_table(cfg: PEConfig) -> np.ndarray:
    """Signed MAC value per (array, 6-bit input), read purely from INIT bits."""
    lut_width = cfg.widths.lut_width
    init = np.array([a.init_values for a in cfg.arrays], dtype=np.uint64)
    shifts = np.arange(64, dtype=np.uint64)
    bits = ((init[:, :, None] >> shifts[None, None, :]) & np.uint64(1)).astype(np.int64)
    weights = (1 << np.arange(lut_width, dtype=np.int64))
    encoded = (bits * weights[None, :, None]).sum(axis=1)
    sign = 1 << (lut_width - 1)
    return encoded - (encoded >= sign) * (1 << lut_width)
