"""
Training Log Observer - escreve uma linha por época no registo de treino.

Formato (separado por tabulações):
    epoch  loss  loss_cls  loss_box  map50  config_hash  seed

Padrão: Observer (Comportamental)
Papel: ConcreteObserver
"""
import logging
from pathlib import Path

from observers.training_observer import EpochRecord, TrainingObserver


logger = logging.getLogger(__name__)

LOG_HEADER = ('epoch', 'loss', 'loss_cls', 'loss_box', 'map50', 'config_hash', 'seed')


def format_log_line(record: EpochRecord) -> str:
    return '\t'.join([
        str(record.epoch),
        f"{record.loss:.6f}",
        f"{record.loss_cls:.6f}",
        f"{record.loss_box:.6f}",
        f"{record.map50:.6f}",
        record.config_hash,
        str(record.seed),
    ])


class TrainingLogObserver(TrainingObserver):
    """
    Anexa as linhas ao ficheiro; o cabeçalho é escrito se o ficheiro for novo
    (retomar um treino continua o mesmo registo).
    """

    def __init__(self, path: str):
        self.path = Path(path)

    def on_training_started(self, trainer) -> None:
        self.path.parent.mkdir(parents=True, exist_ok=True)
        if not self.path.exists() or self.path.stat().st_size == 0:
            self.path.write_text('\t'.join(LOG_HEADER) + '\n', encoding='utf-8')

    def on_epoch_completed(self, trainer, record: EpochRecord) -> None:
        with self.path.open('a', encoding='utf-8') as handle:
            handle.write(format_log_line(record) + '\n')
        logger.info("época %d: loss=%.4f (cls=%.4f, box=%.4f) mAP@.5=%.4f",
                    record.epoch, record.loss, record.loss_cls, record.loss_box, record.map50)

    def on_training_diverged(self, trainer, epoch: int, batch_seed: int) -> None:
        with self.path.open('a', encoding='utf-8') as handle:
            handle.write(f"# diverged\tepoch={epoch}\tbatch_seed={batch_seed}\n")
