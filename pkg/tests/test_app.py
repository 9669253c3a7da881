"""
Tests for the command registry.
"""

import asyncio
import time

import pytest

from entropy_lab.app import EXIT_OK, EXIT_USAGE, EXIT_VERDICT, LabApp, error_result, exit_code_for, gather_limited
from entropy_lab.config import Config, RunConfig
from entropy_lab.errors import ExperimentRefusedError, NewtonDivergenceError, ParameterError
from entropy_lab.serialization import SUMMARY_FILE


@pytest.fixture
def app():
    """Fresh registry with a few fixed commands."""
    registry = LabApp(Config())

    @registry.command()
    async def passing(run, settings):
        """Return a passing verdict.

        Further lines are not part of the help.
        """
        return {"passed": True, "threads": settings.threads}

    @registry.command(name="failing")
    async def failing_verdict(run, settings):
        """Return a failed verdict."""
        return {"passed": False}

    @registry.command()
    async def refused(run, settings):
        raise ExperimentRefusedError("weighted runs are not supported")

    @registry.command()
    async def invalid(run, settings):
        raise ParameterError("m is below m1")

    @registry.command()
    async def diverged(run, settings):
        raise NewtonDivergenceError(1.0, 50, 0.3)

    return registry


class TestExitCodes:
    """Tests for exit code mapping."""

    def test_mapping(self):
        """Test success, failed verdicts and errors."""
        assert exit_code_for({"value": 1}) == EXIT_OK
        assert exit_code_for({"passed": True}) == EXIT_OK
        assert exit_code_for({"passed": False}) == EXIT_VERDICT
        assert exit_code_for(error_result("bad")) == EXIT_USAGE
        assert exit_code_for(error_result("failed", EXIT_VERDICT)) == EXIT_VERDICT


class TestLabApp:
    """Tests for registration and running."""

    def test_registration(self, app):
        """Test names and one-line help texts."""
        assert set(app.commands) == {"passing", "failing", "refused", "invalid", "diverged"}
        assert app.commands["passing"].help == "Return a passing verdict."
        assert app.commands["refused"].help == ""

    async def test_success_writes_summary(self, app, tmp_path):
        """Test a successful run and its summary block."""
        run = RunConfig(out_dir=tmp_path, threads=3)
        result = await app.run("passing", run)
        assert result == {"passed": True, "threads": 3}
        summary = (tmp_path / SUMMARY_FILE).read_text(encoding="utf-8")
        assert f"[passing {run.digest()}]" in summary

    async def test_failed_verdict(self, app, tmp_path):
        """Test that failed verdicts are results, not errors."""
        result = await app.run("failing", RunConfig(out_dir=tmp_path))
        assert exit_code_for(result) == EXIT_VERDICT
        assert (tmp_path / SUMMARY_FILE).is_file()

    @pytest.mark.parametrize("name", ["refused", "invalid"])
    async def test_usage_errors(self, app, tmp_path, name):
        """Test that refusals and parameter errors exit with 2 and write no summary."""
        result = await app.run(name, RunConfig(out_dir=tmp_path))
        assert result["error"] is True
        assert exit_code_for(result) == EXIT_USAGE
        assert not (tmp_path / SUMMARY_FILE).exists()

    async def test_numerical_failure(self, app, tmp_path):
        """Test that solver failures exit with 1."""
        result = await app.run("diverged", RunConfig(out_dir=tmp_path))
        assert result["error"] is True
        assert "Newton" in result["error_message"]
        assert exit_code_for(result) == EXIT_VERDICT

    async def test_unknown_command(self, app):
        """Test that unknown commands list the available ones."""
        result = await app.run("nope", RunConfig())
        assert exit_code_for(result) == EXIT_USAGE
        assert "passing" in result["error_message"]

    def test_settings_overrides(self, app, tmp_path):
        """Test that run-level globals override environment settings."""
        settings = app.settings_for(RunConfig(out_dir=tmp_path, seed=5, tol=1e-2))
        assert settings.out_dir == tmp_path
        assert settings.seed == 5
        assert settings.tol == 1e-2
        assert settings.threads == app.config.lab.threads

    def test_run_sync(self, app, tmp_path):
        """Test the synchronous wrapper."""
        assert app.run_sync("passing", RunConfig(out_dir=tmp_path))["passed"] is True


class TestGatherLimited:
    """Tests for bounded concurrent execution."""

    async def test_preserves_order(self):
        """Test that results come back in call order."""

        def make(value, delay):
            def call():
                time.sleep(delay)
                return value

            return call

        calls = [make(index, 0.02 * (3 - index)) for index in range(4)]
        assert await gather_limited(calls, threads=2) == [0, 1, 2, 3]

    async def test_respects_limit(self):
        """Test that no more than the limit run at once."""
        active = 0
        peak = 0
        lock = asyncio.Lock()
        loop = asyncio.get_running_loop()

        async def enter():
            nonlocal active, peak
            async with lock:
                active += 1
                peak = max(peak, active)

        async def leave():
            nonlocal active
            async with lock:
                active -= 1

        def call():
            asyncio.run_coroutine_threadsafe(enter(), loop).result()
            time.sleep(0.02)
            asyncio.run_coroutine_threadsafe(leave(), loop).result()

        await gather_limited([call] * 6, threads=2)
        assert peak <= 2
