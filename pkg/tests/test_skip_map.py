"""
Box-Ball Toolkit - Skip Map Tests
=================================

Psi_k images, slot indices, the counting identities and the
orthogonal decomposition on hand-worked rows and random rows.
"""

import os
import sys
from fractions import Fraction

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

sys.path.insert(0, os.path.dirname(os.path.dirname(os.path.abspath(__file__))))

from boxball.lattice import Configuration  # noqa: E402

MIXED = "@1 11000101010"
THREE_SIZES = "@1 111000110100"

configs = st.builds(
    Configuration,
    st.lists(st.integers(min_value=0, max_value=1), min_size=0, max_size=32),
    st.integers(min_value=-8, max_value=8),
)


class TestSkip:
    """Tests for the k-skip map."""

    def test_skip_one_level(self):
        """Test Psi_1 keeps only the 2-soliton, shrunk to size 1."""
        from boxball.skip_map import skip

        result = skip(Configuration.from_text(MIXED), 1)
        assert result.image == Configuration.from_text("@1 1")
        assert result.origin_shift == 0

    def test_skip_removes_everything(self):
        """Test Psi_k is empty once k reaches the largest size."""
        from boxball.skip_map import skip

        assert skip(Configuration.from_text(MIXED), 2).image.balls == 0

    def test_skip_two_levels(self):
        """Test Psi_2 of the three-size row."""
        from boxball.skip_map import skip

        assert skip(Configuration.from_text(THREE_SIZES), 2).image == Configuration.from_text("@0 010")

    def test_negative_level(self):
        """Test a negative level is refused."""
        from boxball.errors import DomainError
        from boxball.skip_map import skip

        with pytest.raises(DomainError):
            skip(Configuration.from_text(MIXED), -1)

    @settings(max_examples=100, deadline=None)
    @given(configs)
    def test_skip_zero_is_identity(self, config):
        """Test Psi_0 is the identity."""
        from boxball.skip_map import skip

        assert skip(config, 0).image == config

    @settings(max_examples=80, deadline=None)
    @given(configs, st.integers(min_value=1, max_value=2), st.integers(min_value=1, max_value=2))
    def test_structure(self, config, k, ell):
        """Test the semigroup law, seat correspondence and recentering."""
        from boxball.skip_map import check_seat_correspondence, check_semigroup, skip_recentered

        check_semigroup(config, k, ell)
        check_seat_correspondence(config, k)
        skip_recentered(config, k)

    @settings(max_examples=80, deadline=None)
    @given(configs, st.integers(min_value=1, max_value=3))
    def test_soliton_sizes_drop_by_k(self, config, k):
        """Test Psi_k turns l-solitons with l > k into (l - k)-solitons."""
        from boxball.skip_map import skip
        from boxball.solitons import identify

        before = identify(config).census()
        after = identify(skip(config, k).image).census()
        assert after == {ell - k: c for ell, c in before.items() if ell > k}


class TestSlotIndices:
    """Tests for J_k, slot sums and sigma."""

    def test_J_index(self):
        """Test the first nonempty slots at or right of 0."""
        from boxball.seats import seat_decompose
        from boxball.skip_map import J_index

        view = seat_decompose(Configuration.from_text(THREE_SIZES))
        assert view.zeta(2) == {2: 1}
        assert J_index(view, 2, 1) == 2
        assert J_index(view, 3, 1) == 0

    def test_J_index_missing(self):
        """Test NotFoundError past the last nonempty slot."""
        from boxball.errors import NotFoundError
        from boxball.seats import seat_decompose
        from boxball.skip_map import J_index

        view = seat_decompose(Configuration.from_text(THREE_SIZES))
        with pytest.raises(NotFoundError):
            J_index(view, 2, 2)

    def test_crossing_indices(self):
        """Test the table of J_k(i)."""
        from boxball.seats import seat_decompose
        from boxball.skip_map import crossing_indices

        table = crossing_indices(seat_decompose(Configuration.from_text(MIXED)))
        assert table.J[(1, 1)] == 3
        assert table.J[(2, 1)] == 0

    def test_slot_sum(self):
        """Test slot sums over a range and an empty range."""
        from boxball.seats import seat_decompose
        from boxball.skip_map import slot_sum

        view = seat_decompose(Configuration.from_text(MIXED))
        assert slot_sum(view, 1, 0, 10) == 3
        assert slot_sum(view, 1, 4, 3) == 0

    def test_sigma(self):
        """Test crossing indices of the 3-soliton over the 2-soliton's slot."""
        from boxball.skip_map import sigma

        config = Configuration.from_text(THREE_SIZES)
        assert sigma(config, 2, 3, 1, 0) is None
        assert sigma(config, 2, 3, 1, 3) == 1

    def test_sigma_needs_larger_level(self):
        """Test DomainError for l <= k."""
        from boxball.errors import DomainError
        from boxball.skip_map import sigma

        with pytest.raises(DomainError):
            sigma(Configuration.from_text(THREE_SIZES), 2, 2, 1, 1)


class TestCounting:
    """Tests for the overtaking and blocked counts."""

    def test_overtaken_smaller(self):
        """Test N_{2,1} against the zeta_1 slot sum."""
        from boxball.skip_map import audit_counting

        report = audit_counting(Configuration.from_text(MIXED), 2, 1, 1, 4)
        assert report["overtaken count"] == {"lhs": 3, "rhs": 3, "pass": True}
        assert report["blocked count"]["lhs"] == 0

    def test_overtaking_bracket(self):
        """Test M_{2,3} inside its slot-sum bracket."""
        from boxball.skip_map import audit_counting

        report = audit_counting(Configuration.from_text(THREE_SIZES), 2, 3, 1, 3)
        assert report["blocked count"]["lhs"] == 2
        assert report["overtaking bracket"] == {"lhs": 1, "rhs": [1, 1], "pass": True}
        assert report["sigma"] == {"0": None, "3": 1}


class TestDecomposition:
    """Tests for the orthogonal decomposition of Y."""

    def test_exact_total(self):
        """Test the terms add up to Y exactly at Bernoulli(1/4)."""
        from boxball.qstat import q_from_bernoulli
        from boxball.skip_map import delta_Y, orthogonal_decomposition

        q = q_from_bernoulli("1/4")
        config = Configuration.from_text(MIXED)
        out = orthogonal_decomposition(config, 2, 1, 4, q)
        assert out.displacement == 14
        assert out.total == 14
        assert [t.level for t in out.terms] == [0, 1]
        centered, count = delta_Y(config, 2, 1, 1, 4, q)
        assert count == 4
        assert centered == 3 - Fraction(3, 13) * 4
        assert out.to_json()["total"] == "14"

    def test_level_range(self):
        """Test delta_Y refuses h >= k."""
        from boxball.errors import DomainError
        from boxball.qstat import q_from_bernoulli
        from boxball.skip_map import delta_Y

        with pytest.raises(DomainError):
            delta_Y(Configuration.from_text(MIXED), 2, 2, 1, 1, q_from_bernoulli("1/4"))


if __name__ == "__main__":
    pytest.main([__file__, "-v"])
