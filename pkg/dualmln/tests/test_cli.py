"""
Tests for the ``compile`` and ``infer`` management commands.
"""

# Copyright 2025 Enveng Group.
# SPDX-License-Identifier: AGPL-3.0-or-later

from io import StringIO

import pytest
from cli.config import RunConfig
from core import constants
from core.types import InputError
from django.core.management import call_command
from django.core.management.base import CommandError


def run(*args):
    """Call a command and return what it wrote to stdout."""
    out = StringIO()
    call_command(*args, stdout=out, stderr=StringIO())
    return out.getvalue()


@pytest.fixture(name="happy_sad_files")
def happy_sad_files_fixture(programs_dir):
    """Return the program and evidence arguments of the Happy/Sad run."""
    return [
        "-i",
        str(programs_dir / "happy_sad.mln"),
        "-e",
        str(programs_dir / "happy_sad.db"),
    ]


@pytest.fixture(name="affiliation_files")
def affiliation_files_fixture(programs_dir):
    """Return the program and evidence arguments of the affiliation run."""
    return [
        "-i",
        str(programs_dir / "affiliation.mln"),
        "-e",
        str(programs_dir / "affiliation.db"),
    ]


class TestCompile:
    """The plan dump."""

    def test_affiliation_tasks(self, affiliation_files):
        """A coreference task and a classification task are reported."""
        report = run("compile", *affiliation_files)
        assert "coref:pCoref [Coref] rules F1-F5" in report
        assert "classification:affil [SimpleClassification] rules F6-F9" in report

    def test_monolithic(self, affiliation_files):
        """``--monolithic`` leaves a single generic task."""
        report = run("compile", *affiliation_files, "--monolithic")
        assert "generic [Generic] rules F1-F9" in report
        assert "[Coref]" not in report

    def test_explain_plan(self, affiliation_files):
        """``--explain-plan`` appends the chosen materializations."""
        report = run("compile", *affiliation_files, "--explain-plan")
        assert "\ndmos:\n" in report

    def test_missing_file(self, tmp_path):
        """An unreadable program exits with the input error code."""
        with pytest.raises(CommandError) as excinfo:
            run("compile", "-i", str(tmp_path / "absent.mln"))
        assert excinfo.value.returncode == constants.EXIT_INPUT_ERROR


class TestInfer:
    """Result rows, traces and exit codes."""

    def test_happy_sad_map(self, happy_sad_files, tmp_path):
        """MAP rows are sorted and carry 1 or 0."""
        output = tmp_path / "out.tsv"
        text = run("infer", *happy_sad_files, "-o", str(output))
        assert output.read_text(encoding="utf-8") == "Happy\tA\t1\nSad\tA\t0\n"
        assert "certified optimal" in text

    def test_rows_on_stdout(self, happy_sad_files):
        """Without ``-o`` the rows go to stdout."""
        assert run("infer", *happy_sad_files).splitlines() == [
            "Happy\tA\t1",
            "Sad\tA\t0",
        ]

    def test_query_filter(self, affiliation_files):
        """``-q`` restricts the rows to the named relations."""
        rows = run("infer", *affiliation_files, "-q", "affil").splitlines()
        assert rows
        assert all(row.startswith("affil\t") for row in rows)
        assert "affil\tChomsky\tMIT\t1" in rows

    def test_unknown_query_relation(self, happy_sad_files):
        """Only query relations may be requested."""
        with pytest.raises(CommandError) as excinfo:
            run("infer", *happy_sad_files, "-q", "GoodNews")
        assert excinfo.value.returncode == constants.EXIT_INPUT_ERROR

    def test_marginal_without_clauses(self, tmp_path):
        """Atoms of zero-weight rules are left at one half."""
        program = tmp_path / "empty.mln"
        program.write_text(
            "dom person = {A}\n*Happy(person)\n0: Happy(p)\n", encoding="utf-8"
        )
        assert run("infer", "-i", str(program), "--mode", "marginal") == (
            "Happy\tA\t0.500000\n"
        )

    def test_same_seed_same_output(self, affiliation_files, tmp_path):
        """Runs are reproducible for a fixed seed."""
        first, second = tmp_path / "first.tsv", tmp_path / "second.tsv"
        run("infer", *affiliation_files, "--seed", "5", "-o", str(first))
        run("infer", *affiliation_files, "--seed", "5", "-o", str(second))
        assert first.read_bytes() == second.read_bytes()

    def test_trace_and_plot(self, happy_sad_files, tmp_path):
        """The trace has a header and one row per round; the plot is a PNG."""
        trace, plot = tmp_path / "trace.tsv", tmp_path / "rmse.png"
        run("infer", *happy_sad_files, "--trace", str(trace), "--plot", str(plot))
        lines = trace.read_text(encoding="utf-8").splitlines()
        assert lines[0] == "k\talpha\trmse\tdisagreement\tdual\tbest_primal"
        assert lines[1].split("\t")[0] == "0"
        assert plot.read_bytes().startswith(b"\x89PNG")

    def test_infeasible_program(self, tmp_path):
        """Contradicting hard rules exit with the infeasibility code."""
        program = tmp_path / "clash.mln"
        program.write_text(
            "dom person = {A}\n*Happy(person)\ninf: Happy(p)\ninf: !Happy(p)\n",
            encoding="utf-8",
        )
        with pytest.raises(CommandError) as excinfo:
            run("infer", "-i", str(program))
        assert excinfo.value.returncode == constants.EXIT_INFEASIBLE

    def test_invalid_iterations(self, happy_sad_files):
        """A round budget below one is an input error."""
        with pytest.raises(CommandError) as excinfo:
            run("infer", *happy_sad_files, "--iters", "0")
        assert excinfo.value.returncode == constants.EXIT_INPUT_ERROR


class TestRunConfig:
    """Option parsing outside the command runner."""

    def test_queries_split_on_commas(self, programs_dir):
        """Repeated and comma-separated ``-q`` values are merged."""
        run_config = RunConfig.from_options(
            {"program": programs_dir / "affiliation.mln", "queries": ["affil, pCoref"]}
        )
        assert run_config.queries == ("affil", "pCoref")

    def test_solver_overrides(self, programs_dir):
        """Solver flags reach the solver configuration."""
        run_config = RunConfig(programs_dir / "happy_sad.mln", max_flips=50, samples=7)
        config = run_config.solver_config()
        assert config.max_flips == 50
        assert config.gibbs_samples == 7

    def test_unknown_mode(self, programs_dir):
        """Only the two inference modes exist."""
        with pytest.raises(InputError):
            RunConfig(programs_dir / "happy_sad.mln", mode="mpe")
