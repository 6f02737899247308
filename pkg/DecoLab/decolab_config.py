"""Configuration module for DecoLab"""

import logging
import os
import sys
from dataclasses import dataclass, fields
from pathlib import Path
from typing import Any, Dict, Optional, Union

import yaml


logger = logging.getLogger(__name__)

SEED_ENV_VAR = "DECOLAB_SEED"


@dataclass
class DecolabConfig:
    """Tolerances, search budgets and logging settings for DecoLab"""

    hermitian_tol: float = 1e-12
    psd_tol: float = 1e-10
    trace_tol: float = 1e-9
    rank_tol: float = 1e-10
    strict_margin: float = 1e-10
    unimodular_tol: float = 1e-8
    residual_tol: float = 1e-8
    min_weight: float = 1e-10
    search_starts: int = 64
    max_terms_factor: int = 4
    optimizer_restarts: int = 256
    optimizer_maxiter: int = 4000
    shots: int = 10000
    seed: int = 0
    workers: int = 1
    logging_level: str = "INFO"
    logging_format: str = "%(asctime)s - %(name)s - %(levelname)s - %(message)s"
    logging_datefmt: str = "%H:%M:%S"

    @classmethod
    def _get_defaults(cls) -> Dict[str, Any]:
        """Return default configuration values"""
        return {
            "hermitian_tol": 1e-12,
            "psd_tol": 1e-10,
            "trace_tol": 1e-9,
            "rank_tol": 1e-10,
            "strict_margin": 1e-10,
            "unimodular_tol": 1e-8,
            "residual_tol": 1e-8,
            "min_weight": 1e-10,
            "search_starts": 64,
            "max_terms_factor": 4,
            "optimizer_restarts": 256,
            "optimizer_maxiter": 4000,
            "shots": 10000,
            "seed": 0,
            "workers": 1,
            "logging_level": "INFO",
            "logging_format": "%(asctime)s - %(name)s - %(levelname)s - %(message)s",
            "logging_datefmt": "%H:%M:%S",
        }

    @classmethod
    def get_config_path(cls) -> Path:
        """Get the path to the config file shipped next to the package"""
        return Path(__file__).resolve().parent / "config.yaml"

    @classmethod
    def from_yaml(cls, yaml_path: Optional[Union[str, Path]] = None) -> "DecolabConfig":
        """Load configuration from YAML file, writing defaults if it is missing"""
        if yaml_path is None:
            yaml_path = cls.get_config_path()

        config_file = Path(yaml_path)

        if not config_file.exists():
            defaults = cls._get_defaults()
            with open(config_file, "w", encoding="utf-8") as f:
                yaml.dump(defaults, f, default_flow_style=False, allow_unicode=True)
            logger.info("Created default config file: %s", yaml_path)

        with open(config_file, "r", encoding="utf-8") as f:
            data = yaml.safe_load(f) or {}
            logger.info("Read config file: %s", yaml_path)

        known = {f.name for f in fields(cls)}
        unknown = sorted(set(data) - known)
        if unknown:
            logger.warning("Ignoring unknown config keys: %s", ", ".join(unknown))
            data = {k: v for k, v in data.items() if k in known}

        # YAML loads 1e-10 style literals without a dot as strings, and 1.0 as int 1
        float_fields = [
            "hermitian_tol",
            "psd_tol",
            "trace_tol",
            "rank_tol",
            "strict_margin",
            "unimodular_tol",
            "residual_tol",
            "min_weight",
        ]
        for field_name in float_fields:
            if field_name in data:
                data[field_name] = float(data[field_name])

        int_fields = [
            "search_starts",
            "max_terms_factor",
            "optimizer_restarts",
            "optimizer_maxiter",
            "shots",
            "seed",
            "workers",
        ]
        for field_name in int_fields:
            if field_name in data:
                data[field_name] = int(data[field_name])

        return cls(**data)

    def save_yaml(self, yaml_path: Optional[Union[str, Path]] = None) -> None:
        """Save configuration to YAML file"""
        if yaml_path is None:
            yaml_path = self.get_config_path()
        data = {f.name: getattr(self, f.name) for f in fields(self)}

        with open(yaml_path, "w", encoding="utf-8") as f:
            yaml.dump(data, f, default_flow_style=False, allow_unicode=True)
            logger.info("Saved config file: %s", yaml_path)

    def resolve_seed(self, cli_seed: Optional[int] = None) -> int:
        """Seed precedence: explicit flag, then DECOLAB_SEED, then the config value"""
        if cli_seed is not None:
            return int(cli_seed)
        env_seed = os.getenv(SEED_ENV_VAR)
        if env_seed:
            try:
                return int(env_seed, 0)
            except ValueError:
                logger.warning(
                    "Ignoring non-integer %s=%r, using config seed", SEED_ENV_VAR, env_seed
                )
        return int(self.seed)

    def tolerances(self) -> Dict[str, float]:
        """Tolerances echoed into every run report"""
        return {
            "hermitian_tol": self.hermitian_tol,
            "psd_tol": self.psd_tol,
            "trace_tol": self.trace_tol,
            "rank_tol": self.rank_tol,
            "strict_margin": self.strict_margin,
            "unimodular_tol": self.unimodular_tol,
            "residual_tol": self.residual_tol,
            "min_weight": self.min_weight,
        }

    def configure_logging(self) -> None:
        logging.basicConfig(
            level=self.logging_level,
            format=self.logging_format,
            datefmt=self.logging_datefmt,
            stream=sys.stderr,
        )
