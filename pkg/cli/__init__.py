"""
Linha de comandos: train, eval, ablate, visualize, serve.
"""

from cli.trainer import InferenceResult, Trainer, TrainingDivergedError, run_inference
from cli.commands import (
    Overlay,
    TrainResult,
    cmd_ablate,
    cmd_eval,
    cmd_serve,
    cmd_train,
    cmd_visualize,
    load_split,
)
from cli.main import build_parser, main

__all__ = [
    'InferenceResult',
    'Trainer',
    'TrainingDivergedError',
    'run_inference',
    'Overlay',
    'TrainResult',
    'cmd_ablate',
    'cmd_eval',
    'cmd_serve',
    'cmd_train',
    'cmd_visualize',
    'load_split',
    'build_parser',
    'main'
]
