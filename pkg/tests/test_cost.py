import pytest
from hypothesis import given, strategies as st

from tlmac import LutCostParams, bitparallel_lut_count, cluster_capacity, lut_array_width


class TestBitParallel:
    def test_reference_point(self):
        # 4-bit inputs, 10-bit outputs, two weights: 40 LUTs, 20 per weight
        assert bitparallel_lut_count(2, 4, 10) == 40

    def test_single_lut(self):
        assert bitparallel_lut_count(6, 1, 1) == 1

    def test_three_by_four(self):
        assert bitparallel_lut_count(3, 4, 12) == 768

    def test_below_one_lut_rejected(self):
        with pytest.raises(ValueError):
            bitparallel_lut_count(2, 2, 8)

    @given(g=st.integers(2, 6), b_a=st.integers(1, 6), b_p=st.integers(1, 24))
    def test_monotone_in_each_parameter(self, g, b_a, b_p):
        if g * b_a < 6:
            return
        base = bitparallel_lut_count(g, b_a, b_p)
        assert bitparallel_lut_count(g, b_a, b_p + 1) > base
        assert bitparallel_lut_count(g, b_a + 1, b_p) > base
        if (g + 1) * b_a >= 6 and g < 6:
            assert bitparallel_lut_count(g + 1, b_a, b_p) > base


class TestArrayWidth:
    @pytest.mark.parametrize("weight_bits,group,expected",
                             [(4, 2, 5), (3, 3, 5), (2, 1, 2), (3, 1, 3), (2, 6, 5)])
    def test_values(self, weight_bits, group, expected):
        assert lut_array_width(weight_bits, group) == expected

    def test_width_covers_worst_case_sum(self):
        for weight_bits in range(1, 6):
            for group in range(1, 7):
                width = lut_array_width(weight_bits, group)
                lo = group * -(1 << (weight_bits - 1))
                hi = group * ((1 << (weight_bits - 1)) - 1)
                assert -(1 << (width - 1)) <= lo
                assert hi <= (1 << (width - 1)) - 1


class TestCapacity:
    @pytest.mark.parametrize("group,expected", [(3, 8), (6, 1), (1, 32), (2, 16)])
    def test_values(self, group, expected):
        assert cluster_capacity(group) == expected

    @pytest.mark.parametrize("group", [0, 7, -1])
    def test_domain(self, group):
        with pytest.raises(ValueError):
            cluster_capacity(group)

    def test_weights_per_lut_ratio(self):
        # 5 LUTs storing 2 * 16 weights
        ratio = lut_array_width(4, 2) / (2 * cluster_capacity(2))
        assert ratio == 5 / 32


class TestParams:
    def test_bundle_properties(self):
        params = LutCostParams(group_size=3, act_bits=3, weight_bits=3, acc_bits=12)
        assert params.lut_width == 5
        assert params.cluster_capacity == 8

    @pytest.mark.parametrize("kwargs", [
        dict(group_size=0, act_bits=1, weight_bits=1, acc_bits=1),
        dict(group_size=7, act_bits=1, weight_bits=1, acc_bits=1),
        dict(group_size=3, act_bits=0, weight_bits=1, acc_bits=1),
        dict(group_size=3, act_bits=1, weight_bits=1, acc_bits=0),
    ])
    def test_invalid_bundles(self, kwargs):
        with pytest.raises(ValueError):
            LutCostParams(**kwargs)
