"""Counter-based stream tests: known-answer vector, compiled-twin equality,
draw addressing, uniform/exponential/normal mappings.
"""
import math

import numpy as np
import pytest
from hypothesis import given, strategies as st
from numpy.random import Philox

from kol import _philox
from kol._kernels import _norm_ppf as jit_norm_ppf
from kol._kernels import _philox_block as jit_block

# Random123 distribution vector for philox4x64x10, counter 0, key 0
KAT_ZERO = (
    0x16554D9ECA36314C,
    0xDB20FE9D672D0FDC,
    0xD7E772CEE186176B,
    0x7E68B68AEC7BA23B,
)

KEY_CASES = [
    (0, 0, 0),
    (1, 0, 0),
    (0, 7, 3),
    (12345, 0xDEADBEEF, 0xFEEDFACE),
    (2**64 - 1, 2**63, 11),
]


class TestBlockFunction:
    def test_known_answer_zero(self):
        assert _philox.philox_block(0, 0, 0) == KAT_ZERO

    def test_block_counter_masked_to_64_bits(self):
        assert _philox.philox_block(2**64, 0, 0) == KAT_ZERO

    @pytest.mark.parametrize("block,k0,k1", KEY_CASES)
    def test_compiled_twin_identical(self, block, k0, k1):
        ref = _philox.philox_block(block, k0, k1)
        jit = jit_block(np.uint64(block), np.uint64(k0), np.uint64(k1))
        assert tuple(int(w) for w in jit) == ref

    def test_numpy_philox_is_one_block_ahead(self):
        # numpy's BitGenerator increments the counter before generating, so
        # its block n equals philox_block(n + 1, ...); this is why raw
        # substreams here start at block 0 rather than matching numpy's.
        k0, k1 = 123, 456
        words = Philox(counter=0, key=k0 + (k1 << 64)).random_raw(8)
        for n in range(2):
            expect = _philox.philox_block(n + 1, k0, k1)
            got = tuple(int(w) for w in words[4 * n:4 * n + 4])
            assert got == expect

    def test_mulhilo(self):
        a = 0xD2E7470EE14C6C93
        b = 0x9E3779B97F4A7C15
        hi, lo = _philox.mulhilo64(a, b)
        full = a * b
        assert hi == full >> 64
        assert lo == full & (2**64 - 1)


class TestDrawAddressing:
    def test_draw_maps_to_block_and_lane(self):
        for d in range(11):
            raw = _philox.raw_draw(5, 9, d)
            block = _philox.philox_block(d >> 2, 5, 9)
            assert raw == block[d & 3]

    def test_substreams_differ(self):
        a = [_philox.raw_draw(1, 0, d) for d in range(4)]
        b = [_philox.raw_draw(1, 1, d) for d in range(4)]
        assert a != b

    def test_seed_changes_stream(self):
        a = [_philox.raw_draw(1, 0, d) for d in range(4)]
        b = [_philox.raw_draw(2, 0, d) for d in range(4)]
        assert a != b


class TestMappings:
    def test_uniform_open_formula_and_range(self):
        for raw in (0, 1, 2**53, 2**64 - 1):
            u = _philox.uniform_open(raw)
            assert u == (2 * (raw >> 12) + 1) * 2.0**-53
            assert 0.0 < u < 1.0

    def test_uniform_open_endpoints_exact(self):
        # the odd-numerator mapping is exact float arithmetic: the extremes
        # land on 2^-53 and 1 - 2^-53, never on 0.0 or 1.0
        assert _philox.uniform_open(0) == 2.0**-53
        assert _philox.uniform_open(2**64 - 1) == 1.0 - 2.0**-53

    def test_uniform_pos_formula_and_range(self):
        assert _philox.uniform_pos(0) == 2.0**-53
        assert _philox.uniform_pos(2**64 - 1) == 1.0
        for raw in (0, 3, 2**40, 2**64 - 1):
            u = _philox.uniform_pos(raw)
            assert u == ((raw >> 11) + 1) * 2.0**-53
            assert 0.0 < u <= 1.0

    def test_exp1_endpoints(self):
        # raw 0 gives the largest representable variate, 53*log 2
        assert _philox.exp1_from_raw(0) == pytest.approx(53 * math.log(2.0),
                                                         rel=1e-15)
        assert _philox.exp1_from_raw(2**64 - 1) == 0.0

    @given(st.integers(min_value=0, max_value=2**64 - 1))
    def test_exp1_nonnegative(self, raw):
        v = _philox.exp1_from_raw(raw)
        assert 0.0 <= v <= 53 * math.log(2.0)


# frozen against mpmath erfinv at 50 digits; the upper-tail points are
# dyadic so 1 - p is computed exactly inside the far-tail branch
NORM_PPF_ORACLE = [
    (1e-10, -6.361340902404056204695),
    (2.0**-20, -4.763001034267813956989),
    (0.025, -1.959963984540054235525),
    (0.1, -1.281551565544600466965),
    (0.5, 0.0),
    (0.6, 0.2533471031357997987982),
    (0.975, 1.959963984540054235525),
    (1.0 - 2.0**-20, 4.763001034267813956989),
]


class TestNormPpf:
    @pytest.mark.parametrize("p,expect", NORM_PPF_ORACLE)
    def test_oracle_values(self, p, expect):
        got = _philox.norm_ppf(p)
        if expect == 0.0:
            assert got == 0.0
        else:
            assert got == pytest.approx(expect, rel=2e-15)

    @pytest.mark.parametrize("p,expect", NORM_PPF_ORACLE)
    def test_compiled_twin_bit_identical(self, p, expect):
        assert jit_norm_ppf(p) == _philox.norm_ppf(p)

    def test_compiled_twin_on_dense_grid(self):
        ps = np.linspace(1e-12, 1.0 - 1e-12, 4001)
        for p in ps:
            assert jit_norm_ppf(float(p)) == _philox.norm_ppf(float(p))

    @given(st.floats(min_value=1e-300, max_value=1.0, exclude_max=True))
    def test_monotone(self, p):
        q = min(p * 1.0001 + 1e-12, float(np.nextafter(1.0, 0.0)))
        if p < q < 1.0:
            assert _philox.norm_ppf(q) >= _philox.norm_ppf(p)

    def test_antisymmetric(self):
        for p in (0.01, 0.1, 0.25, 0.4, 0.45):
            a = _philox.norm_ppf(p)
            b = _philox.norm_ppf(1.0 - p)
            assert a == pytest.approx(-b, rel=1e-9, abs=1e-12)

    def test_round_trip_through_erfc(self):
        # CDF(ppf(p)) == p to near machine precision across both branches
        for p in (1e-9, 1e-4, 0.02, 0.3, 0.5, 0.7, 0.98, 1 - 1e-4):
            z = _philox.norm_ppf(p)
            cdf = 0.5 * math.erfc(-z / math.sqrt(2.0))
            assert cdf == pytest.approx(p, rel=4e-13)
