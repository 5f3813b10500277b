"""
Box-Ball Toolkit - CLI Tests
============================

Subcommands end to end through main(argv), output formats, exit codes
and the help surface.
"""

import json
import os
import sys

import pytest

ROOT = os.path.dirname(os.path.dirname(os.path.abspath(__file__)))
sys.path.insert(0, ROOT)

FIGURE = os.path.join(ROOT, "_data", "fig1.txt")
HELP_FLAGS = os.path.join(ROOT, "tests", "golden", "help_flags.txt")


def run(capsys, *argv):
    from boxball.cli import main

    code = main(list(argv))
    out = capsys.readouterr().out
    return code, out


class TestDeterministicCommands:
    """Tests for evolve, identify, linearize and skip."""

    def test_evolve_text(self, capsys):
        """Test rows are printed one per time step."""
        code, out = run(capsys, "evolve", "--text", "@0 10", "--steps", "2")
        assert code == 0
        assert out.splitlines() == ["@0 10", "@1 1", "@2 1"]

    def test_evolve_file_json(self, capsys):
        """Test the figure row read from a file."""
        code, out = run(capsys, "evolve", "--in", FIGURE, "--json", "--carrier")
        assert code == 0
        data = json.loads(out)
        assert data["schema_version"] == 1
        assert data["configurations"][1] == "@2 1100001100110100111"
        assert data["carriers"][0]["start"] == -1

    def test_identify(self, capsys):
        """Test the soliton listing."""
        code, out = run(capsys, "identify", "--text", "@1 111000110100", "--json")
        assert code == 0
        data = json.loads(out)
        assert data["census"] == {"1": 1, "2": 1, "3": 1}
        assert [r["k"] for r in data["solitons"]] == [3, 2, 1]

    def test_identify_track(self, capsys):
        """Test tracking the free soliton."""
        code, out = run(capsys, "identify", "--text", "@1 111000110100", "--track", "--k", "3", "--steps", "1", "--json")
        assert code == 0
        assert json.loads(out)["trajectory"]["positions"] == [0, 3]

    def test_linearize_roundtrip(self, capsys, tmp_path):
        """Test slots written as JSON rebuild the configuration."""
        code, out = run(capsys, "linearize", "--text", "@1 11000101010", "--json")
        assert code == 0
        data = json.loads(out)
        assert data["labels"][2:6] == ["1u", "2u", "1d", "2d"]
        path = tmp_path / "slots.json"
        path.write_text(json.dumps(data["slots"]), encoding="utf-8")
        code, out = run(capsys, "linearize", "--reconstruct", str(path))
        assert code == 0
        assert out.strip() == "@1 11000101010"

    def test_skip(self, capsys):
        """Test the 1-skip image."""
        code, out = run(capsys, "skip", "--text", "@1 11000101010", "--k", "1")
        assert code == 0
        assert out.splitlines() == ["@1 1", "origin shift 0"]

    def test_bad_configuration(self, capsys):
        """Test malformed input exits with 2."""
        code, _ = run(capsys, "evolve", "--text", "@0 12")
        assert code == 2


class TestParameterCommands:
    """Tests for qstat and sample."""

    def test_qstat_json(self, capsys):
        """Test exact scalars in JSON."""
        code, out = run(capsys, "qstat", "--bernoulli", "1/4", "--k", "2", "--json")
        assert code == 0
        rows = json.loads(out)["table"]["rows"]
        assert rows[1]["v_eff"]["exact"] == "16/7"
        assert rows[0]["G"]["exact"] == "36/125"

    def test_qstat_extras(self, capsys):
        """Test the lambda grid, rate points and excursion law."""
        code, out = run(
            capsys, "qstat", "--bernoulli", "1/4", "--lambdas", "0", "--rate", "0.8", "--excursions", "2", "--json",
        )
        assert code == 0
        data = json.loads(out)
        assert data["lambda_y"]["0.0"] == pytest.approx(0.0, abs=1e-12)
        assert data["rate"]["0.8"] == pytest.approx(0.0, abs=1e-6)
        assert data["excursion_law"]["0"] == "3/4"

    def test_qstat_text(self, capsys):
        """Test the plain table."""
        code, out = run(capsys, "qstat", "--q", "1/4,1/4")
        assert code == 0
        assert "v_eff" in out

    def test_qstat_markov_pair_and_cut(self, capsys):
        """Test --markov takes a b as two values and --cut drops the upper levels."""
        code, out = run(capsys, "qstat", "--markov", "3/16", "3/16", "--cut", "2", "--k", "2", "--json")
        assert code == 0
        table = json.loads(out)["table"]
        assert table["q"]["class"] == "finite"
        assert table["q"]["levels"] == 2
        assert table["rows"][0]["q_k"]["exact"] == "3/16"

    def test_negative_cut(self, capsys):
        """Test exit code 2 for a negative cut level."""
        code, _ = run(capsys, "qstat", "--bernoulli", "1/4", "--cut", "-1")
        assert code == 2

    def test_missing_family(self, capsys):
        """Test exit code 2 without a parameter family."""
        code, _ = run(capsys, "qstat")
        assert code == 2

    def test_sample(self, capsys, tmp_path):
        """Test a sample written to a file is reproducible."""
        first, second = tmp_path / "a.txt", tmp_path / "b.txt"
        assert run(capsys, "sample", "--bernoulli", "1/4", "--records", "8", "--seed", "3", "--out", str(first))[0] == 0
        assert run(capsys, "sample", "--bernoulli", "1/4", "--records", "8", "--seed", "3", "--out", str(second))[0] == 0
        assert first.read_text() == second.read_text()
        assert first.read_text().startswith("@0 0")

    def test_sample_mu(self, capsys):
        """Test the mu flag."""
        code, out = run(capsys, "sample", "--bernoulli", "1/4", "--records", "5", "--mu")
        assert code == 0
        assert out.startswith("@-")


class TestExperimentCommands:
    """Tests for the ensemble commands."""

    def test_velocity_json_and_csv(self, capsys, tmp_path):
        """Test the report and the per-replica CSV."""
        csv = tmp_path / "y.csv"
        code, out = run(
            capsys, "velocity", "--bernoulli", "1/4", "--steps", "5", "--replicas", "6",
            "--threads", "1", "--json", "--csv", str(csv),
        )
        assert code in (0, 1)
        data = json.loads(out)
        assert data["experiment"] == "velocity"
        assert data["spec"]["config"]["replicas"] == 6
        assert len(csv.read_text().splitlines()) == 7

    def test_correlate_text(self, capsys):
        """Test the plain-text report."""
        code, out = run(
            capsys, "correlate", "--bernoulli", "1/4", "--n-list", "2,3", "--u", "0.5", "--v", "0.5",
            "--replicas", "2", "--threads", "1",
        )
        assert code == 0
        assert out.startswith("correlation: PASS")

    def test_audit_failure_exit(self, capsys, tmp_path, monkeypatch):
        """Test a failed identity exits 1 and writes the counterexample file."""
        from boxball import audit
        from boxball.errors import IdentityViolation

        def broken(config, n):
            raise IdentityViolation("broken", "always fails", config.to_text())

        monkeypatch.setattr(audit, "SAMPLE_CASES", [audit.AuditCase("broken", "always fails", broken)])
        target = tmp_path / "cex.txt"
        code, _ = run(
            capsys, "audit", "--bernoulli", "1/4", "--samples", "1", "--threads", "1",
            "--counterexamples", str(target),
        )
        assert code == 1
        assert "broken" in target.read_text()


class TestHelp:
    """Tests for the help surface."""

    def test_unknown_command(self, capsys):
        """Test exit code 2 for an unknown subcommand."""
        from boxball.cli import main

        assert main(["teleport"]) == 2

    def test_help_lists_flags(self, capsys):
        """Test every flag of the golden list appears in its command's help."""
        expected = {}
        with open(HELP_FLAGS, encoding="utf-8") as fh:
            for line in fh:
                line = line.strip()
                if line and not line.startswith("#"):
                    command, flag = line.split()
                    expected.setdefault(command, []).append(flag)
        for command, flags in expected.items():
            code, out = run(capsys, command, "--help")
            assert code == 0
            for flag in flags:
                assert flag in out, f"{command} --help lacks {flag}"


if __name__ == "__main__":
    pytest.main([__file__, "-v"])
