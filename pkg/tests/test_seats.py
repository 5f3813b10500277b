"""
Box-Ball Toolkit - Seat Tests
=============================

Seat labels, coordinates, slot contents and capacity carriers.
"""

import os
import sys

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

sys.path.insert(0, os.path.dirname(os.path.dirname(os.path.abspath(__file__))))

from boxball.lattice import Configuration  # noqa: E402

MIXED = "@1 11000101010"

configs = st.builds(
    Configuration,
    st.lists(st.integers(min_value=0, max_value=1), min_size=0, max_size=36),
    st.integers(min_value=-10, max_value=10),
)


class TestSeatLabels:
    """Tests for the numbered-seat sweep."""

    def test_labels(self):
        """Test seat labels of a row with one 2-soliton and three 1-solitons."""
        from boxball.seats import seat_decompose

        view = seat_decompose(Configuration.from_text(MIXED))
        assert view.lo == -1
        assert view.labels_text()[:14] == [
            "r", "r", "1u", "2u", "1d", "2d", "r", "1u", "1d", "1u", "1d", "1u", "1d", "r",
        ]
        assert view.label(2) == (2, True)
        assert view.label(5) is None
        assert view.max_level == 2

    def test_coordinates(self):
        """Test xi_k, its right inverse and Xi_k."""
        from boxball.seats import Xi, s, seat_decompose, xi

        view = seat_decompose(Configuration.from_text(MIXED))
        assert [xi(view, 1, x) for x in range(-1, 7)] == [-1, 0, 0, 1, 1, 2, 3, 3]
        assert xi(view, 1, 12) == 4
        assert s(view, 1, 3) == 5
        assert Xi(view, 1, 1) == 3
        assert Xi(view, 2, 1) == 1
        assert xi(view, 1, -10) == -10

    def test_slot_contents(self):
        """Test zeta_1 and zeta_2."""
        from boxball.seats import seat_decompose

        view = seat_decompose(Configuration.from_text(MIXED))
        assert view.zeta(1) == {3: 3}
        assert view.zeta(2) == {0: 1}
        assert view.zeta_at(1, 0) == 0

    def test_effective_distance(self):
        """Test connected solitons sit at distance zero."""
        from boxball.seats import effective_distance, seat_decompose
        from boxball.solitons import identify

        joined = Configuration.from_text("@1 1010")
        a, b = identify(joined).solitons(1)
        assert effective_distance(seat_decompose(joined), a, b) == 0

        split = Configuration.from_text("@1 10110010")
        a, b = identify(split).solitons(1)
        assert effective_distance(seat_decompose(split), a, b) == 2


class TestSlots:
    """Tests for slot arrays and reconstruction."""

    def test_census(self):
        """Test the slot census equals the soliton census."""
        from boxball.seats import seat_decompose, slots

        block = slots(seat_decompose(Configuration.from_text(MIXED)))
        assert block.census() == {1: 3, 2: 1}
        assert block.levels == 2

    def test_json_roundtrip(self):
        """Test the slot array export."""
        from boxball.seats import SlotArray, seat_decompose, slots

        block = slots(seat_decompose(Configuration.from_text(MIXED)))
        assert SlotArray.from_json(block.to_json()) == block

    def test_reconstruct_hand_row(self):
        """Test the inverse map on the mixed row."""
        from boxball.seats import reconstruct, seat_decompose, slots

        config = Configuration.from_text(MIXED)
        assert reconstruct(slots(seat_decompose(config))) == config

    def test_reconstruct_out_of_range(self):
        """Test a slot index outside the generated block."""
        from boxball.errors import NotFoundError
        from boxball.seats import SlotArray, reconstruct

        with pytest.raises(NotFoundError):
            reconstruct(SlotArray(1, 2, 0, {1: {5: 1}}))

    def test_reconstruct_needs_records(self):
        """Test zero records is refused."""
        from boxball.errors import DomainError
        from boxball.seats import SlotArray, reconstruct

        with pytest.raises(DomainError):
            reconstruct(SlotArray(0, 0, 0, {}))

    def test_insert_level(self):
        """Test a 2-soliton word after a record."""
        from boxball.seats import insert_level, labels_to_config

        levels, up = insert_level(np.array([0, 0]), np.array([False, False]), 2, np.array([1, 0]))
        assert levels.tolist() == [0, 1, 2, 1, 2, 0]
        assert up.tolist() == [False, True, True, False, False, False]
        assert labels_to_config(levels, up, 0) == Configuration.from_text("@1 11")

    @settings(max_examples=150, deadline=None)
    @given(configs)
    def test_reconstruct_roundtrip(self, config):
        """Test slots then reconstruct is the identity."""
        from boxball.seats import reconstruct, seat_decompose, slots

        assert reconstruct(slots(seat_decompose(config))) == config


class TestEvolutionInSlots:
    """Tests for offsets and the linear slot evolution."""

    def test_offset_zero_at_record(self):
        """Test o_k vanishes with a record at 0 and no crossing."""
        from boxball.seats import offset

        config = Configuration.from_text(MIXED)
        assert offset(config, 1) == 0
        assert offset(config, 2) == 0

    def test_slots_shift_by_k(self):
        """Test zeta_k(T eta, i + k) = zeta_k(eta, i) on the mixed row."""
        from boxball.lattice import evolve
        from boxball.seats import seat_decompose

        after = seat_decompose(evolve(Configuration.from_text(MIXED)))
        assert after.zeta(1) == {4: 3}
        assert after.zeta(2) == {2: 1}

    @settings(max_examples=100, deadline=None)
    @given(configs)
    def test_linear_evolution(self, config):
        """Test the slot shift on random rows."""
        from boxball.lattice import evolve
        from boxball.seats import offset, seat_decompose

        nxt = evolve(config)
        before, after = seat_decompose(config), seat_decompose(nxt)
        for k in range(1, before.max_level + 1):
            o = offset(config, k, nxt)
            assert {i + k + o: c for i, c in before.zeta(k).items()} == after.zeta(k)


class TestCapacityCarriers:
    """Tests for capacity-limited carriers."""

    def test_capacity_two(self):
        """Test a full carrier passes balls on."""
        from boxball.seats import capacity_carrier

        carrier = capacity_carrier(Configuration.from_text("@0 111000"), 2)
        assert carrier.start == -1
        assert carrier.values[:7].tolist() == [0, 1, 2, 2, 1, 0, 0]
        assert carrier.at(-20) == 0

    def test_capacity_must_be_positive(self):
        """Test DomainError for capacity zero."""
        from boxball.errors import DomainError
        from boxball.seats import capacity_carrier

        with pytest.raises(DomainError):
            capacity_carrier(Configuration.from_text("@0 1"), 0)

    @settings(max_examples=100, deadline=None)
    @given(configs)
    def test_capacity_matches_low_seats(self, config):
        """Test W_l equals the load of seats 1..l and the dichotomy at slots."""
        from boxball.seats import capacity_carrier, check_carrier_xi, check_slot_dichotomy, seat_decompose

        view = seat_decompose(config)
        for ell in range(1, view.max_level + 1):
            assert np.array_equal(capacity_carrier(config, ell).values, view.carrier_load(ell))
            check_slot_dichotomy(view, ell)
            check_carrier_xi(config, ell)


if __name__ == "__main__":
    pytest.main([__file__, "-v"])
