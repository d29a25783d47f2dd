"""Tests for CacheGeometry and parse_size."""
import pytest

from llc_lab import CacheGeometry, InvalidSpecError
from llc_lab.geometry import parse_size


class TestParseSize:
    @pytest.mark.parametrize("text, expected", [
        ("4096", 4096),
        ("256K", 256 * 1024),
        ("2M", 2 * 1024 * 1024),
        ("16kB", 16 * 1024),
        ("0x1000", 4096),
        (512, 512),
    ])
    def test_valid(self, text, expected):
        assert parse_size(text) == expected

    def test_invalid(self):
        with pytest.raises(InvalidSpecError, match="size"):
            parse_size("lots")


class TestGeometry:
    def test_from_capacity(self):
        g = CacheGeometry.from_capacity("256K", 16)
        assert g.num_sets == 256
        assert g.capacity == 256 * 1024
        assert g == CacheGeometry(256, 16, 64)

    def test_address_slicing(self):
        g = CacheGeometry(4, 2, 64)
        address = (5 << 8) | (3 << 6) | 17
        assert g.block_of(address) == address >> 6
        assert g.set_index(address) == 3
        assert g.tag(address) == 5

    def test_str(self):
        assert str(CacheGeometry(1, 8)) == "1x8x64B"

    def test_sets_power_of_two(self):
        with pytest.raises(InvalidSpecError, match="power of two"):
            CacheGeometry(3, 4)

    def test_ways_positive(self):
        with pytest.raises(InvalidSpecError, match="ways"):
            CacheGeometry(4, 0)

    def test_capacity_not_divisible(self):
        with pytest.raises(InvalidSpecError, match="multiple"):
            CacheGeometry.from_capacity(1000, 16)

    def test_hashable(self):
        assert len({CacheGeometry(2, 2), CacheGeometry(2, 2), CacheGeometry(4, 2)}) == 2
