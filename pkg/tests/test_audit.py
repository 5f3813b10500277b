"""
Box-Ball Toolkit - Audit Tests
==============================

Every audit case on hand-worked rows, a small end-to-end audit, and
the failure path with its counterexample.
"""

import os
import sys

import pytest

sys.path.insert(0, os.path.dirname(os.path.dirname(os.path.abspath(__file__))))

from boxball.lattice import Configuration  # noqa: E402

ROWS = ["@1 11000101010", "@1 111000110100", "@0 1100011100110010110000", "@-3 1010011"]


@pytest.fixture
def quarter():
    from boxball.qstat import q_from_bernoulli

    return q_from_bernoulli("1/4")


class TestCases:
    """Tests for the individual identities."""

    @pytest.mark.parametrize("text", ROWS)
    def test_cases_hold_on_rows(self, text):
        """Test every sample case on hand-worked rows."""
        from boxball.audit import SAMPLE_CASES
        from boxball.errors import NotFoundError

        config = Configuration.from_text(text)
        for case in SAMPLE_CASES:
            try:
                case.run(config, 3)
            except NotFoundError:
                continue

    def test_case_ids_unique(self):
        """Test case ids are distinct."""
        from boxball.audit import SAMPLE_CASES

        ids = [c.id for c in SAMPLE_CASES]
        assert len(ids) == len(set(ids))

    def test_narayana_counts(self):
        """Test enumeration agrees with Narayana numbers."""
        from boxball.audit import CaseStatus, narayana_counts

        results = narayana_counts(5)
        assert len(results) == 6
        assert all(r.status is CaseStatus.PASS for r in results)

    def test_record_scan_covers_far_sites(self, monkeypatch):
        """Test a wrong record flag far right of the window start is caught."""
        from boxball import audit
        from boxball.errors import IdentityViolation
        from boxball.lattice import RecordIndex, records

        config = Configuration.from_text("@0 " + "10" * 400 + "1100" * 100)
        audit._record_scan(config, 1)
        true = records(config)
        far = int(true.sites[-3])
        assert far - true.lo > 1000

        def broken(row):
            idx = records(row)
            keep = idx.sites != far
            return RecordIndex(idx.sites[keep], idx.zero_index, idx.lo, idx.hi)

        monkeypatch.setattr(audit, "records", broken)
        with pytest.raises(IdentityViolation) as info:
            audit._record_scan(config, 1)
        assert str(far) in str(info.value)


class TestAuditor:
    """Tests for the ensemble audit."""

    def test_small_audit_passes(self, quarter):
        """Test a short audit on fresh samples."""
        from boxball.audit import SAMPLE_CASES, identity_audit

        report = identity_audit(quarter, samples=2, n=2, seed=0, threads=1)
        assert report.passed
        names = {c.name for c in report.checks}
        assert {c.id for c in SAMPLE_CASES} | {"narayana"} <= names
        assert report.series["counterexamples"] == []

    def test_failure_carries_counterexample(self, quarter, monkeypatch):
        """Test a violated identity fails the report and names the row."""
        from boxball import audit
        from boxball.errors import IdentityViolation

        def broken(config, n):
            raise IdentityViolation("broken", "always fails", config.to_text())

        monkeypatch.setattr(audit, "SAMPLE_CASES", [audit.AuditCase("broken", "always fails", broken)])
        auditor = audit.IdentityAuditor(quarter, samples=2, n=1, seed=0, threads=1)
        report = auditor.run_all()
        assert not report.passed
        assert len(auditor.failures()) == 2
        first = report.series["counterexamples"][0]
        assert first["case"] == "broken"
        assert first["config"].startswith("@")
        assert Configuration.from_text(first["config"]).balls >= 0


if __name__ == "__main__":
    pytest.main([__file__, "-v"])
