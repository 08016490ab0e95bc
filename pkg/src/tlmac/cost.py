"""Closed-form LUT cost formulas used for sizing and reporting."""

from __future__ import annotations

import math
from dataclasses import dataclass

MAX_GROUP_SIZE = 6


@dataclass(frozen=True)
class LutCostParams:
    """Width bundle for one PE: group size plus activation/weight/accumulator bits."""

    group_size: int
    act_bits: int
    weight_bits: int
    acc_bits: int

    def __post_init__(self):
        if not 1 <= self.group_size <= MAX_GROUP_SIZE:
            raise ValueError(f"group size must be in [1, {MAX_GROUP_SIZE}], got {self.group_size}")
        for width, label in ((self.act_bits, "act_bits"), (self.weight_bits, "weight_bits"),
                             (self.acc_bits, "acc_bits")):
            if width < 1:
                raise ValueError(f"{label} must be >= 1, got {width}")

    @property
    def lut_width(self) -> int:
        return lut_array_width(self.weight_bits, self.group_size)

    @property
    def cluster_capacity(self) -> int:
        return cluster_capacity(self.group_size)


def bitparallel_lut_count(group_size: int, act_bits: int, acc_bits: int) -> int:
    """LUT-6 count of a fully bit-parallel MAC with the given widths."""
    fan_in = group_size * act_bits
    if fan_in < 6:
        raise ValueError(f"bit-parallel cost undefined below one LUT of input (G*B_a={fan_in})")
    return (1 << (fan_in - 6)) * acc_bits


def lut_array_width(weight_bits: int, group_size: int) -> int:
    """Output bits needed for the worst-case sum of group_size signed weights.

    A single weight needs no carry headroom, so ceil(log2(1)) counts as 0.
    """
    if group_size < 1:
        raise ValueError(f"group size must be >= 1, got {group_size}")
    if weight_bits < 1:
        raise ValueError(f"weight bits must be >= 1, got {weight_bits}")
    return weight_bits + math.ceil(math.log2(group_size))


def cluster_capacity(group_size: int) -> int:
    """Selectable weight groups per LUT array: the unused input bits address them."""
    if not 1 <= group_size <= MAX_GROUP_SIZE:
        raise ValueError(f"group size must be in [1, {MAX_GROUP_SIZE}], got {group_size}")
    return 1 << (MAX_GROUP_SIZE - group_size)
