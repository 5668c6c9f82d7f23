import pytest

from core.echo_bridge import IterationEcho
from core.env_vault import SolverVault
from core.errors import ConfigError


class TestSolverVault:
    def test_defaults(self, monkeypatch, tmp_path):
        for name in ("SCPR_TOL", "SCPR_MAX_ITER", "SCPR_EPISODES", "SCPR_HORIZON",
                     "SCPR_SEED", "SCPR_WORKERS", "SCPR_LOG_LEVEL"):
            monkeypatch.delenv(name, raising=False)
        vault = SolverVault.from_env(str(tmp_path / "missing.env"))
        assert vault == SolverVault()
        assert vault.validate()

    def test_dotenv_file_is_read(self, monkeypatch, tmp_path):
        monkeypatch.delenv("SCPR_EPISODES", raising=False)
        monkeypatch.delenv("SCPR_LOG_LEVEL", raising=False)
        env = tmp_path / ".env"
        env.write_text("SCPR_EPISODES=250\nSCPR_LOG_LEVEL=debug\n")
        vault = SolverVault.from_env(str(env))
        assert vault.episodes == 250
        assert vault.log_level == "DEBUG"

    def test_malformed_value(self, monkeypatch):
        monkeypatch.setenv("SCPR_WORKERS", "many")
        with pytest.raises(ConfigError, match="malformed"):
            SolverVault.from_env()

    @pytest.mark.parametrize("field, value", [
        ("tol", 0.0), ("max_iter", -1), ("horizon", -2), ("episodes", 0), ("workers", 0),
    ])
    def test_validate_rejects(self, field, value):
        with pytest.raises(ConfigError, match=field):
            SolverVault(**{field: value}).validate()


class TestIterationEcho:
    def test_pulses_are_queryable(self):
        echo = IterationEcho("demo")
        echo.pulse(1, 0.5, 0.0, 0.0, 0.5)
        echo.pulse(2, 0.25, 0.0, 0.0, 0.75)
        assert echo.query(2).highest == 0.75
        assert echo.query(3) is None
        assert echo.is_monotone()

    def test_decrease_breaks_monotonicity(self):
        echo = IterationEcho()
        echo.pulse(1, 0.1, -0.1, 0.0, 1.0)
        assert not echo.is_monotone()

    def test_out_of_range_breaks_monotonicity(self):
        echo = IterationEcho()
        echo.pulse(1, 0.1, 0.0, 0.0, 1.5)
        assert not echo.is_monotone()
