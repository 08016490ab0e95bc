"""Functional model of the PE: bit-serial lookup, mux select, shift-add.

The simulator reads MAC results exclusively from the configuration's truth
tables and mapping memories; the raw weight tensor is never consulted, so a
corrupted INIT bit shows up as an output mismatch. ``oracle_conv`` is the
ground-truth integer convolution the compiled configuration is checked
against.
"""

from __future__ import annotations

import numpy as np

from .codegen import PEConfig, mac_decode_table
from .errors import AccumulatorOverflowError, ConfigMismatchError, ValidationError
from .qweights import GroupedWeights, QuantLayer


def _acc_range(acc_bits: int) -> tuple[int, int]:
    return -(1 << (acc_bits - 1)), (1 << (acc_bits - 1)) - 1


def pe_step(cfg: PEConfig, window, step: int, preload) -> np.ndarray:
    """One sequential step: bit-serial MAC of a shared window into each output.

    ``window`` holds the group_size unsigned activations shared by the pool;
    ``preload`` is the incoming partial sum per output. Every bit-plane's MAC
    result is fetched from the truth tables, sign extended, shifted left by
    the bit index and accumulated. The running value is range-checked against
    the accumulator width after every add, as the hardware register would
    overflow there.
    """
    group_size = cfg.widths.group_size
    act_bits = cfg.widths.act_bits
    acc_bits = cfg.widths.acc_bits
    if not 0 <= step < cfg.n_steps:
        raise ValidationError(f"step {step} outside [0, {cfg.n_steps})")
    window = np.asarray(window, dtype=np.int64)
    if window.shape != (group_size,):
        raise ValidationError(
            f"window must hold {group_size} activations, got shape {window.shape}"
        )
    if window.min() < 0 or window.max() >= (1 << act_bits):
        raise ValidationError(
            f"window values must lie in [0, {1 << act_bits}), got {window.tolist()}"
        )
    lo, hi = _acc_range(acc_bits)
    acc = np.asarray(preload, dtype=np.int64).copy()
    if acc.shape != (cfg.n_parallel,):
        raise ValidationError(
            f"preload must hold {cfg.n_parallel} values, got shape {acc.shape}"
        )
    if acc.min() < lo or acc.max() > hi:
        raise ValidationError("preload outside accumulator range")

    decode = mac_decode_table(cfg)
    select = int(cfg.step_select[step])
    mux_row = cfg.mux_map[step]
    place = 1 << np.arange(group_size, dtype=np.int64)
    for b in range(act_bits):
        pattern = int((((window >> b) & 1) * place).sum()) | (select << group_size)
        acc += decode[mux_row, pattern] << b
        if acc.min() < lo or acc.max() > hi:
            p = int(np.flatnonzero((acc < lo) | (acc > hi))[0])
            raise AccumulatorOverflowError(step, p, int(acc[p]), acc_bits)
    return acc


def _check_geometry(cfg: PEConfig, grouped: GroupedWeights, acts: np.ndarray) -> None:
    layer = grouped.layer
    if cfg.widths.group_size != layer.kernel_size:
        raise ConfigMismatchError(
            f"config group size {cfg.widths.group_size} != kernel {layer.kernel_size}"
        )
    if (cfg.widths.act_bits != layer.act_bits
            or cfg.widths.weight_bits != layer.weight_bits
            or cfg.widths.acc_bits != layer.acc_bits):
        raise ConfigMismatchError("config widths disagree with the layer metadata")
    if cfg.n_steps != grouped.n_steps or cfg.n_parallel != grouped.n_parallel:
        raise ConfigMismatchError(
            f"config dims ({cfg.n_steps}, {cfg.n_parallel}) != layer dims "
            f"({grouped.n_steps}, {grouped.n_parallel})"
        )
    if acts.ndim != 3 or acts.shape[0] != layer.in_channels:
        raise ConfigMismatchError(
            f"activation tensor shape {acts.shape} does not provide "
            f"{layer.in_channels} input channels"
        )


def simulate_layer(cfg: PEConfig, grouped: GroupedWeights, acts,
                   stride: int = 1, pad: int = 0) -> np.ndarray:
    """Run the full convolution through the configured PE.

    A 1-by-kernel window slides row major over the zero-padded input. Each
    window position drives all sequential steps; each step produces partial
    sums for every kernel row of a tile of output channels, which accumulate
    into a partial-sum buffer until their output rows complete. Geometry
    comes from the layer metadata, values come from the truth tables only.
    """
    acts = np.asarray(acts, dtype=np.int64)
    _check_geometry(cfg, grouped, acts)
    layer = grouped.layer
    if stride < 1:
        raise ValidationError(f"stride must be >= 1, got {stride}")
    if pad < 0:
        raise ValidationError(f"padding must be >= 0, got {pad}")
    if acts.size and (acts.min() < 0 or acts.max() >= (1 << layer.act_bits)):
        raise ValidationError("activations outside the unsigned activation range")

    kernel = layer.kernel_size
    parallel_factor = grouped.parallel_factor
    _, height, width = acts.shape
    h_pad = height + 2 * pad
    w_pad = width + 2 * pad
    if h_pad < kernel or w_pad < kernel:
        raise ConfigMismatchError(
            f"padded input {h_pad}x{w_pad} is smaller than the {kernel}x{kernel} kernel"
        )
    h_out = (h_pad - kernel) // stride + 1
    w_out = (w_pad - kernel) // stride + 1

    padded = np.zeros((layer.in_channels, h_pad, w_pad), dtype=np.int64)
    padded[:, pad:pad + height, pad:pad + width] = acts

    decode = mac_decode_table(cfg)
    act_bits = layer.act_bits
    lo, hi = _acc_range(layer.acc_bits)
    n_chan = grouped.n_tiles * parallel_factor
    out = np.zeros((n_chan, h_out, w_out), dtype=np.int64)

    xs = np.arange(w_out) * stride
    cols = xs[:, None] + np.arange(kernel)[None, :]
    place = 1 << np.arange(kernel, dtype=np.int64)
    bit_shift = np.arange(act_bits, dtype=np.int64)
    locals_idx = np.arange(parallel_factor)

    for y in range(h_pad):
        rows = [r for r in range(kernel)
                if (y - r) % stride == 0 and 0 <= (y - r) // stride < h_out]
        if not rows:
            continue
        for t in range(grouped.n_steps):
            tile, chan = divmod(t, layer.in_channels)
            select = int(cfg.step_select[t])
            win = padded[chan, y][cols]
            bits = (win[None, :, :] >> bit_shift[:, None, None]) & 1
            patterns = bits @ place + (select << kernel)
            lut = decode[cfg.mux_map[t][None, :, None], patterns[:, None, :]]
            contrib = (lut << bit_shift[:, None, None]).sum(axis=0)
            for r in rows:
                oy = (y - r) // stride
                rows_p = locals_idx * kernel + r
                chans = tile * parallel_factor + locals_idx
                segment = out[chans, oy, :]
                segment += contrib[rows_p]
                if segment.min() < lo or segment.max() > hi:
                    where = np.argwhere((segment < lo) | (segment > hi))[0]
                    p = int(where[0]) * kernel + r
                    raise AccumulatorOverflowError(
                        t, p, int(segment[tuple(where)]), layer.acc_bits
                    )
                out[chans, oy, :] = segment

    return out[:layer.out_channels]


def oracle_conv(layer: QuantLayer, acts, stride: int = 1, pad: int = 0) -> np.ndarray:
    """Ground-truth integer convolution in wide arithmetic."""
    acts = np.asarray(acts, dtype=np.int64)
    if acts.ndim != 3 or acts.shape[0] != layer.in_channels:
        raise ConfigMismatchError(
            f"activation tensor shape {acts.shape} does not provide "
            f"{layer.in_channels} input channels"
        )
    if stride < 1:
        raise ValidationError(f"stride must be >= 1, got {stride}")
    if pad < 0:
        raise ValidationError(f"padding must be >= 0, got {pad}")
    kernel = layer.kernel_size
    _, height, width = acts.shape
    h_pad = height + 2 * pad
    w_pad = width + 2 * pad
    if h_pad < kernel or w_pad < kernel:
        raise ConfigMismatchError(
            f"padded input {h_pad}x{w_pad} is smaller than the {kernel}x{kernel} kernel"
        )
    h_out = (h_pad - kernel) // stride + 1
    w_out = (w_pad - kernel) // stride + 1
    padded = np.zeros((layer.in_channels, h_pad, w_pad), dtype=np.int64)
    padded[:, pad:pad + height, pad:pad + width] = acts

    out = np.zeros((layer.out_channels, h_out, w_out), dtype=np.int64)
    for r in range(kernel):
        for c in range(kernel):
            patch = padded[:, r:r + stride * h_out:stride, c:c + stride * w_out:stride]
            out += np.einsum("oi,ihw->ohw", layer.weights[:, :, r, c], patch)
    return out
