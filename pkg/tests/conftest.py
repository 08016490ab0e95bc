import numpy as np
import pytest

from tlmac import QuantLayer


def make_layer(rng, name="layer", out_channels=4, in_channels=2, kernel=3,
               weight_bits=3, act_bits=3, acc_bits=None):
    """Random in-range layer for tests."""
    lo = -(1 << (weight_bits - 1))
    hi = (1 << (weight_bits - 1)) - 1
    weights = rng.integers(lo, hi + 1,
                           size=(out_channels, in_channels, kernel, kernel),
                           dtype=np.int64)
    kwargs = {}
    if acc_bits is not None:
        kwargs["acc_bits"] = acc_bits
    else:
        from tlmac.qweights import default_acc_bits
        kwargs["acc_bits"] = default_acc_bits(weight_bits, act_bits, in_channels, kernel)
    return QuantLayer(name=name, weights=weights, weight_bits=weight_bits,
                      act_bits=act_bits, **kwargs)


def make_activations(rng, layer, height, width):
    return rng.integers(0, 1 << layer.act_bits,
                        size=(layer.in_channels, height, width), dtype=np.int64)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)
