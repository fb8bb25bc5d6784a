"""
Configuração: esquemas pydantic, leitura YAML e logging.
"""

from config.settings import (
    ConfigError,
    FusionScaleConfig,
    ModelConfig,
    RunConfig,
    SceneSpecConfig,
    VALID_COMBINATIONS,
    VARIANTS,
    config_hash,
    load_run_config,
)
from config.logging_setup import setup_logging

__all__ = [
    'ConfigError',
    'FusionScaleConfig',
    'ModelConfig',
    'RunConfig',
    'SceneSpecConfig',
    'VALID_COMBINATIONS',
    'VARIANTS',
    'config_hash',
    'load_run_config',
    'setup_logging'
]
