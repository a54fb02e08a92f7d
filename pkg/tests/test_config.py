"""
Tests for configuration module.
"""

import pytest
import tempfile
from pathlib import Path
import yaml

from ht_quadrature.config import (
    Config,
    MeshConfig,
    SpectralConfig,
    SolverConfig,
    LoggingConfig,
    setup_logging,
)
from ht_quadrature.exceptions import ConfigurationError


class TestConfig:
    """Tests for Config class."""

    def test_config_from_dict(self):
        """Test creating config from dictionary."""
        data = {
            "mesh": {"kind": "uniform", "N": 4, "T": 1.0},
            "degrees": {"spec": "uniform:1"},
        }
        config = Config.from_dict(data)

        assert config.mesh.kind == "uniform"
        assert config.mesh.N == 4
        assert config.degrees.spec == "uniform:1"
        assert config.spectral.K_F == 4000
        assert config.parallel.threads == 1

    def test_config_from_yaml(self):
        """Test loading config from YAML file."""
        config_data = {
            "mesh": {"kind": "dyadic", "N": 6, "T": 10.0},
            "quadrature": {"K_min": 3, "K_max": 8},
            "spectral": {"K_F": 2000, "tol": 1e-9},
            "solver": {"kind": "hyperbolic", "mu": 1.0, "load": "one"},
        }

        # Create temporary YAML file
        with tempfile.NamedTemporaryFile(mode='w', suffix='.yaml', delete=False) as f:
            yaml.dump(config_data, f)
            temp_path = f.name

        try:
            config = Config.from_yaml(temp_path)

            assert config.mesh.N == 6
            assert config.quadrature.K_min == 3
            assert config.quadrature.K_max == 8
            assert config.spectral.K_F == 2000
            assert config.solver.kind == "hyperbolic"
            config.validate()
        finally:
            Path(temp_path).unlink()

    def test_missing_yaml_raises(self):
        """Test that a missing config file is reported."""
        with pytest.raises(FileNotFoundError):
            Config.from_yaml("does/not/exist.yaml")

    def test_yaml_must_be_mapping(self, tmp_path):
        """Test that a YAML list at top level is rejected."""
        path = tmp_path / "list.yaml"
        path.write_text("- mesh\n- degrees\n")

        with pytest.raises(ConfigurationError):
            Config.from_yaml(str(path))

    def test_unknown_key_rejected(self):
        """Test that unknown section keys become ConfigurationError."""
        with pytest.raises(ConfigurationError):
            Config.from_dict({"mesh": {"elements": 4}})

    def test_defaults_match_quadrature_study_setup(self):
        """Test default mesh is the dyadic T=10, N=6 setup with p=2."""
        config = Config()

        assert config.mesh.kind == "dyadic"
        assert config.mesh.N == 6
        assert config.mesh.T == 10.0
        assert config.degrees.spec == "uniform:2"
        assert config.quadrature.K_min == 2
        assert config.quadrature.K_max == 20
        config.validate()

    def test_spectral_config_defaults(self):
        """Test SpectralConfig default values."""
        config = SpectralConfig()

        assert config.K_F == 4000
        assert config.tol == 1e-10
        assert config.accelerate is True
        assert config.certify is True

    def test_solver_config_defaults(self):
        """Test SolverConfig default values."""
        config = SolverConfig()

        assert config.kind == "parabolic"
        assert config.mu == 0.0
        assert config.study == "hp"
        assert config.sigma == 0.17
        assert config.N_min == 2
        assert config.N_max == 10

    def test_to_dict_round_trip(self):
        """Test that to_dict feeds back into from_dict."""
        config = Config()
        config.mesh.N = 3
        again = Config.from_dict(config.to_dict())

        assert again == config


class TestValidation:
    """Tests for configuration validation."""

    @pytest.mark.parametrize("section, values", [
        ("mesh", {"kind": "random"}),
        ("mesh", {"N": 0}),
        ("mesh", {"T": -1.0}),
        ("mesh", {"kind": "geometric", "sigma": 1.5}),
        ("mesh", {"kind": "explicit", "breakpoints": [0.0]}),
        ("quadrature", {"K_min": 5, "K_max": 4}),
        ("quadrature", {"K": 65}),
        ("spectral", {"K_F": 4}),
        ("spectral", {"tol": 0.0}),
        ("solver", {"kind": "elliptic"}),
        ("solver", {"mu": -1.0}),
        ("solver", {"study": "p"}),
        ("solver", {"study": "hp", "N_min": 1}),
        ("parallel", {"threads": 0}),
        ("output", {"digits": 18}),
        ("logging", {"level": "LOUD"}),
    ])
    def test_invalid_values_rejected(self, section, values):
        """Test that each invalid value raises ConfigurationError."""
        config = Config.from_dict({section: values})

        with pytest.raises(ConfigurationError):
            config.validate()

    def test_configuration_error_is_value_error(self):
        """Test that ConfigurationError can be caught as ValueError."""
        with pytest.raises(ValueError):
            MeshConfig(N=0).validate()


class TestEnvironmentOverrides:
    """Tests for environment variable overrides."""

    def test_threads_override(self, monkeypatch):
        """Test HTQ_THREADS sets parallel.threads as an integer."""
        monkeypatch.setenv("HTQ_THREADS", "4")
        config = Config.load(None)

        assert config.parallel.threads == 4

    def test_output_and_level_override(self, monkeypatch):
        """Test string overrides."""
        monkeypatch.setenv("HTQ_OUTPUT_DIR", "elsewhere")
        monkeypatch.setenv("HTQ_LOG_LEVEL", "DEBUG")
        config = Config.load(None)

        assert config.output.dir == "elsewhere"
        assert config.logging.level == "DEBUG"

    def test_spectral_override_applies_to_yaml(self, monkeypatch, tmp_path):
        """Test that environment beats the YAML file."""
        path = tmp_path / "config.yaml"
        path.write_text(yaml.dump({"spectral": {"K_F": 1000}}))
        monkeypatch.setenv("HTQ_SPECTRAL_KF", "3000")

        config = Config.from_yaml(str(path))

        assert config.spectral.K_F == 3000

    def test_non_integer_threads_rejected(self, monkeypatch):
        """Test that a malformed integer override is a ConfigurationError."""
        monkeypatch.setenv("HTQ_THREADS", "many")

        with pytest.raises(ConfigurationError):
            Config.load(None)


class TestLogging:
    """Tests for setup_logging."""

    def test_file_handler_created(self, tmp_path):
        """Test that the log file lands in the log directory."""
        import logging

        log_dir = tmp_path / "logs"
        setup_logging(LoggingConfig(level="DEBUG", file="run.log", console=False), log_dir=str(log_dir))
        logging.getLogger("ht_quadrature.test").info("hello")

        assert (log_dir / "run.log").exists()

    def test_no_file_no_directory(self, tmp_path):
        """Test that no directory is created without a log file."""
        log_dir = tmp_path / "logs"
        setup_logging(LoggingConfig(file=None), log_dir=str(log_dir))

        assert not log_dir.exists()


class TestShippedConfigs:
    """Tests that the configuration files in config/ load and validate."""

    @pytest.mark.parametrize("name", ["config.yaml", "config.example.yaml"])
    def test_loads(self, name):
        path = Path(__file__).resolve().parents[1] / "config" / name

        config = Config.from_yaml(str(path)).validate()

        assert config.logging.file == "htq.log"
