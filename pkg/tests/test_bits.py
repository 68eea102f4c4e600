import numpy as np
import pytest
from hypothesis import given, strategies as st

from qpcsim.bits import BitString


class TestConstruction:
    def test_from_bits_round_trip(self):
        bits = [1, 0, 1, 1, 0, 0, 1, 0]
        s = BitString.from_bits(bits)
        assert list(s) == bits
        assert len(s) == 8

    def test_from_hex(self):
        s = BitString.from_hex("0xBEEF", 16)
        assert s.value == 0xBEEF
        assert s.length == 16

    def test_from_hex_overflow_rejected(self):
        with pytest.raises(ValueError):
            BitString.from_hex("0x1FF", 8)

    def test_value_must_fit(self):
        with pytest.raises(ValueError):
            BitString(4, 2)

    def test_random_is_seed_reproducible(self):
        a = BitString.random(40, np.random.default_rng(7))
        b = BitString.random(40, np.random.default_rng(7))
        assert a == b

    def test_random_draws_differ_across_seeds(self):
        draws = {BitString.random(64, np.random.default_rng(s)).value
                 for s in range(8)}
        assert len(draws) == 8


class TestAlgebra:
    def test_xor_requires_equal_lengths(self):
        with pytest.raises(ValueError):
            BitString(1, 2) ^ BitString(1, 3)

    @given(st.integers(0, 2**16 - 1), st.integers(0, 2**16 - 1))
    def test_xor_matches_int_xor(self, a, b):
        s = BitString(a, 16) ^ BitString(b, 16)
        assert s.value == a ^ b

    @given(st.integers(0, 2**12 - 1))
    def test_xor_self_is_zero(self, a):
        assert (BitString(a, 12) ^ BitString(a, 12)).is_zero

    def test_complement(self):
        s = BitString.from_bits([1, 0, 1])
        assert list(s.complement()) == [0, 1, 0]

    def test_ones_positions(self):
        s = BitString.from_bits([0, 1, 1, 0, 1])
        assert s.ones_positions() == (1, 2, 4)


class TestFormatting:
    def test_to01_is_position_ordered(self):
        assert BitString.from_bits([1, 0, 0, 1]).to01() == "1001"

    def test_hex_round_trip(self):
        s = BitString.from_hex("0xbeef", 16)
        assert BitString.from_hex(s.to_hex(), 16) == s
