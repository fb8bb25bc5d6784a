"""
Observers Module - Implementação do Padrão Observer

O Trainer notifica estes observers em cada época: registo em ficheiro,
checkpoints e histórico em memória, sem acoplamento entre eles.
"""

from observers.training_observer import EpochRecord, TrainingObserver
from observers.log_observer import LOG_HEADER, TrainingLogObserver, format_log_line
from observers.checkpoint_observer import CheckpointObserver
from observers.history_observer import HistoryObserver

__all__ = [
    'EpochRecord',
    'TrainingObserver',
    'LOG_HEADER',
    'TrainingLogObserver',
    'format_log_line',
    'CheckpointObserver',
    'HistoryObserver'
]
