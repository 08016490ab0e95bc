"""Independent oracles shared by the test modules.

Everything here recomputes expected values from first principles (pure
Python loops, direct arithmetic) so library results are checked against a
separately coded path.
"""

import numpy as np


def direct_mac(group, acts):
    """Plain multiply-accumulate of one weight group against activations."""
    return sum(int(w) * int(a) for w, a in zip(group, acts))


def decode_init_output(init_values, pattern, lut_width):
    """Read one two's-complement output straight from INIT bit positions."""
    encoded = 0
    for j, init in enumerate(init_values):
        encoded |= ((init >> pattern) & 1) << j
    if encoded >= 1 << (lut_width - 1):
        encoded -= 1 << lut_width
    return encoded


def exhaustive_truth_table_check(cfg):
    """Every 6-bit pattern of every array must decode to the MAC of the
    addressed slot's group under the binary activations, or 0 when vacant."""
    group_size = cfg.widths.group_size
    lut_width = cfg.widths.lut_width
    for array in cfg.arrays:
        for pattern in range(64):
            bits = [(pattern >> g) & 1 for g in range(group_size)]
            select = pattern >> group_size
            group = array.slots[select]
            expected = 0 if group is None else direct_mac(group, bits)
            got = decode_init_output(array.init_values, pattern, lut_width)
            assert got == expected, (
                f"array {array.array_id} pattern {pattern:06b}: "
                f"decoded {got}, expected {expected}"
            )


def naive_conv(layer, acts, stride=1, pad=0):
    """Second direct convolution with a different loop order than the
    library oracle (per-output scalar loops instead of kernel-slice sums)."""
    acts = np.asarray(acts)
    d_i, height, width = acts.shape
    k = layer.kernel_size
    h_pad, w_pad = height + 2 * pad, width + 2 * pad
    h_out = (h_pad - k) // stride + 1
    w_out = (w_pad - k) // stride + 1
    padded = np.zeros((d_i, h_pad, w_pad), dtype=np.int64)
    padded[:, pad:pad + height, pad:pad + width] = acts
    out = np.zeros((layer.out_channels, h_out, w_out), dtype=np.int64)
    for o in range(layer.out_channels):
        for oy in range(h_out):
            for ox in range(w_out):
                total = 0
                for i in range(d_i):
                    for r in range(k):
                        for c in range(k):
                            total += int(layer.weights[o, i, r, c]) * \
                                int(padded[i, oy * stride + r, ox * stride + c])
                out[o, oy, ox] = total
    return out
