"""
Checkpoint Observer - grava last.pt em cada época e best.pt quando o
mAP@.5 de validação melhora.

Padrão: Observer (Comportamental)
Papel: ConcreteObserver
"""
import logging
from pathlib import Path

from models.checkpoint import save_checkpoint
from observers.training_observer import EpochRecord, TrainingObserver


logger = logging.getLogger(__name__)


class CheckpointObserver(TrainingObserver):

    def __init__(self, out_dir: str, best_map: float = -1.0):
        self.out_dir = Path(out_dir)
        self.best_map = best_map

    @property
    def best_path(self) -> Path:
        return self.out_dir / 'best.pt'

    @property
    def last_path(self) -> Path:
        return self.out_dir / 'last.pt'

    def on_epoch_completed(self, trainer, record: EpochRecord) -> None:
        improved = record.map50 > self.best_map
        if improved:
            self.best_map = record.map50
        best = max(self.best_map, 0.0)
        save_checkpoint(str(self.last_path), trainer.model, trainer.model_config, trainer.seed,
                        record.epoch, best, trainer.optimizer)
        if improved:
            save_checkpoint(str(self.best_path), trainer.model, trainer.model_config, trainer.seed,
                            record.epoch, best, trainer.optimizer)
            logger.info("novo melhor mAP@.5 %.4f na época %d → %s",
                        record.map50, record.epoch, self.best_path)
