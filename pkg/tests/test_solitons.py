"""
Box-Ball Toolkit - Soliton Tests
================================

Takahashi-Satsuma grouping, numbering, volumes and tagged tracking.
"""

import os
import sys

import pytest
from hypothesis import assume, given, settings
from hypothesis import strategies as st

sys.path.insert(0, os.path.dirname(os.path.dirname(os.path.abspath(__file__))))

from boxball.lattice import Configuration  # noqa: E402

THREE_SIZES = "@1 111000110100"

configs = st.builds(
    Configuration,
    st.lists(st.integers(min_value=0, max_value=1), min_size=0, max_size=36),
    st.integers(min_value=-10, max_value=10),
)


class TestTakahashiSatsuma:
    """Tests for soliton identification."""

    def test_three_sizes(self):
        """Test the grouping of one excursion holding sizes 1, 2 and 3."""
        from boxball.solitons import identify

        sset = identify(Configuration.from_text(THREE_SIZES))
        assert sset.census() == {1: 1, 2: 1, 3: 1}
        big, = sset.solitons(3)
        mid, = sset.solitons(2)
        small, = sset.solitons(1)
        assert big.heads == (1, 2, 3) and big.tails == (4, 5, 6) and big.position == 0
        assert mid.heads == (7, 8) and mid.tails == (11, 12) and mid.position == 6
        assert small.heads == (10,) and small.tails == (9,) and small.position == 8

    def test_free_classification(self):
        """Test only the largest soliton of the excursion is free."""
        from boxball.solitons import identify

        sset = identify(Configuration.from_text(THREE_SIZES))
        assert sset.is_free(sset.solitons(3)[0])
        assert not sset.is_free(sset.solitons(2)[0])
        assert not sset.is_free(sset.solitons(1)[0])

    def test_overtake_census(self):
        """Test smaller solitons inside [H_1, T_1]."""
        from boxball.solitons import identify, overtake_census

        sset = identify(Configuration.from_text("@1 1101000"))
        big, = sset.solitons(2)
        assert overtake_census(big, sset) == {1: 1}

    def test_empty_configuration(self):
        """Test no solitons in the empty configuration."""
        from boxball.solitons import identify

        sset = identify(Configuration([], 0))
        assert sset.census() == {}
        assert sset.max_size == 0

    @settings(max_examples=150, deadline=None)
    @given(configs)
    def test_partition_of_sites(self, config):
        """Test heads are balls, tails are holes and no site is used twice."""
        from boxball.solitons import identify

        sset = identify(config)
        used = []
        for sol in sset.all():
            assert all(config[x] == 1 for x in sol.heads)
            assert all(config[x] == 0 for x in sol.tails)
            used.extend(sol.sites)
        assert len(used) == len(set(used))
        assert sum(k * c for k, c in sset.census().items()) == config.balls

    @settings(max_examples=100, deadline=None)
    @given(configs)
    def test_census_is_conserved(self, config):
        """Test the soliton census is invariant under T."""
        from boxball.lattice import evolve
        from boxball.solitons import identify

        assert identify(evolve(config)).census() == identify(config).census()


class TestNumbering:
    """Tests for natural and volume numbering."""

    def test_connected_pair(self):
        """Test two adjacent 1-solitons form one volume."""
        from boxball.errors import NotFoundError
        from boxball.solitons import identify

        sset = identify(Configuration.from_text("@1 1010"))
        first, second = sset.solitons(1)
        assert sset.natural_index(first) == 1
        assert sset.natural_index(second) == 2
        groups = sset.volume_groups(1)
        assert len(groups) == 1 and groups[0].volume == 2
        assert sset.volume_index(second) == 1
        with pytest.raises(NotFoundError):
            sset.by_volume(1, 2)

    def test_larger_soliton_separates_volumes(self):
        """Test a 2-soliton between two 1-solitons splits their volume."""
        from boxball.solitons import identify

        sset = identify(Configuration.from_text("@1 10110010"))
        assert [s.position for s in sset.solitons(1)] == [0, 6]
        groups = sset.volume_groups(1)
        assert [g.volume for g in groups] == [1, 1]
        assert sset.by_volume(1, 2).position == 6

    def test_records_separate_volumes(self):
        """Test solitons of different excursions are not connected."""
        from boxball.solitons import identify

        sset = identify(Configuration.from_text("@1 10010"))
        assert [g.volume for g in sset.volume_groups(1)] == [1, 1]

    def test_missing_natural_index(self):
        """Test NotFoundError for an absent soliton."""
        from boxball.errors import NotFoundError
        from boxball.solitons import identify

        with pytest.raises(NotFoundError):
            identify(Configuration.from_text("@1 10")).by_natural(2, 1)

    def test_json_rows(self):
        """Test the exported soliton array."""
        from boxball.solitons import identify, soliton_set_to_json

        rows = soliton_set_to_json(identify(Configuration.from_text("@1 1010")))
        assert [r["position"] for r in rows] == [0, 2]
        assert rows[1]["volume_rep"] == 0
        assert rows[1]["volume"] == 2


class TestTracking:
    """Tests for tagged solitons through time."""

    def test_track_step_maps_tails_to_heads(self):
        """Test gamma(1) has the tails of gamma as heads."""
        from boxball.solitons import identify, track_step

        config = Configuration.from_text(THREE_SIZES)
        big = identify(config).solitons(3)[0]
        moved = track_step(big, config)
        assert moved.heads == big.tails
        assert moved.position == 3

    def test_free_soliton_moves_k(self):
        """Test one step of the free 3-soliton."""
        from boxball.solitons import run_tagged

        traj = run_tagged(Configuration.from_text(THREE_SIZES), 3, 1, 1)
        assert traj.positions == [0, 3]
        assert traj.free == [True]
        assert traj.increment(1) == 3
        assert traj.blocked_steps(1) == 0

    def test_blocked_soliton_stays(self):
        """Test the 2-soliton is blocked for the first step."""
        from boxball.solitons import run_tagged

        traj = run_tagged(Configuration.from_text(THREE_SIZES), 2, 1, 1)
        assert traj.positions == [6, 6]
        assert traj.blocked_steps(1) == 1
        assert traj.overtaken_bounds(1) == (0, 1)

    def test_overtaking_counts(self):
        """Test a 2-soliton passing a 1-soliton gains 2."""
        from boxball.solitons import run_tagged

        traj = run_tagged(Configuration.from_text("@1 1101000"), 2, 1, 3)
        assert traj.overtaken_total(1, 3) == 1
        assert traj.increment(3) == 2 * 3 + 2
        assert traj.positions[3] == traj.position_formula(3)

    def test_track_all_keys_by_volume(self):
        """Test every representative is tracked."""
        from boxball.solitons import track_all

        paths = track_all(Configuration.from_text("@1 10010"), 1, 2)
        assert sorted(paths) == [1, 2]
        assert all(len(p) == 3 for p in paths.values())

    def test_light_cone_guard(self):
        """Test the window cap during tracking."""
        from boxball.errors import LightConeError
        from boxball.solitons import run_tagged

        with pytest.raises(LightConeError):
            run_tagged(Configuration.from_text("@1 1110001"), 3, 1, 10, max_sites=4)

    def test_overtaken_bound_on_samples(self):
        """Test M_{k,l} counts every larger soliton crossing the tagged X, excursion merges included."""
        from boxball.harness import window_sides
        from boxball.lattice import evolve
        from boxball.qstat import q_from_bernoulli
        from boxball.sampler import SampleSpec, two_sided_nu
        from boxball.solitons import identify, run_tagged

        q, n = q_from_bernoulli("1/4"), 50
        left, right = window_sides(q, n, 1)
        for replica in range(25):
            config = two_sided_nu(SampleSpec(q, records=right, left=left, seed=5), replica)
            traj = run_tagged(config, 1, 1, n)

            paths = [[s] for s in identify(config).all() if s.size > 1]
            current = config
            for _ in range(n):
                current = evolve(current)
                nxt = identify(current)
                for path in paths:
                    path.append(nxt.find(path[-1].size, path[-1].tails))
            crossings = sum(
                1
                for path in paths
                for m in range(1, n + 1)
                if path[m - 1].position < traj.positions[m - 1] and path[m].position > traj.positions[m]
            )
            assert crossings == sum(traj.overtaken_by_total(ell, n) for ell in traj.larger_sizes())
            if traj.free[0]:
                low, high = traj.overtaken_bounds(n)
                assert low <= traj.blocked_steps(n) <= high

    @settings(max_examples=80, deadline=None)
    @given(configs, st.integers(min_value=1, max_value=6))
    def test_position_formula(self, config, n):
        """Test the position formula and trajectory export on random rows."""
        from boxball.errors import NotFoundError
        from boxball.solitons import identify, run_tagged, trajectory_to_json

        sset = identify(config)
        assume(sset.sizes)
        k = sset.sizes[0]
        try:
            traj = run_tagged(config, k, 1, n, numbering="natural")
        except NotFoundError:
            assume(False)
        assert traj.positions[n] == traj.position_formula(n)
        data = trajectory_to_json(traj)
        assert data["Y"] == traj.increment(n)
        assert len(data["steps"]) == n


if __name__ == "__main__":
    pytest.main([__file__, "-v"])
