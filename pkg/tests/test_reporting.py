"""
Box-Ball Toolkit - Reporting Tests
==================================
"""

import io
import json
import os
import sys
from fractions import Fraction

import numpy as np
import pytest

sys.path.insert(0, os.path.dirname(os.path.dirname(os.path.abspath(__file__))))


class TestReporting:
    """Tests for JSON, CSV and text output."""

    def test_dumps_exact_and_numpy(self):
        """Test rationals become strings and numpy scalars plain numbers."""
        from boxball.reporting import dumps

        data = json.loads(dumps({"a": Fraction(3, 13), "b": np.int64(4), "c": np.arange(2)}))
        assert data == {"a": "3/13", "b": 4, "c": [0, 1]}

    def test_schema_added_once(self):
        """Test the schema version is prepended."""
        from boxball.reporting import write_json

        stream = io.StringIO()
        write_json({"x": 1}, stream=stream)
        assert json.loads(stream.getvalue()) == {"schema_version": 1, "x": 1}

    def test_series_frame_skips_records(self):
        """Test only numeric series become columns."""
        from boxball.harness import ExperimentReport
        from boxball.reporting import series_frame

        report = ExperimentReport("x", {}, series={"Y": [1, 2, 3], "gap": [0.5], "counterexamples": [{"a": 1}]})
        frame = series_frame(report)
        assert list(frame.columns) == ["Y", "gap"]
        assert len(frame) == 3

    def test_render_report(self):
        """Test the text summary lists checks and notes."""
        from boxball.harness import Check, ExperimentReport, Verdict
        from boxball.reporting import render_report

        report = ExperimentReport("velocity", {"k": 1})
        report.checks.append(Check("Y/n", 0.79, 0.01, 0.8, 0.03, "f", Verdict.PASS, "fine"))
        text = render_report(report)
        assert text.splitlines()[0] == "velocity: PASS"
        assert "note [Y/n]: fine" in text

    def test_render_table(self):
        """Test the scalar table renders one row per level."""
        from boxball.qstat import q_from_bernoulli, scalar_table
        from boxball.reporting import table_frame

        frame = table_frame(scalar_table(q_from_bernoulli("1/4"), 2))
        assert list(frame.index) == [1, 2]
        assert frame.loc[2, "v_eff"] == "16/7"


if __name__ == "__main__":
    pytest.main([__file__, "-v"])
