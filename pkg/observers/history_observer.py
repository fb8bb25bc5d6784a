"""
History Observer - guarda em memória os EpochRecord de uma execução.

Usado pela ablação e pelos testes para ler a trajetória sem voltar a
ler o registo em disco.

Padrão: Observer (Comportamental)
Papel: ConcreteObserver
"""
from typing import List, Optional

from observers.training_observer import EpochRecord, TrainingObserver


class HistoryObserver(TrainingObserver):

    def __init__(self):
        self.records: List[EpochRecord] = []
        self.diverged_at: Optional[int] = None

    def on_epoch_completed(self, trainer, record: EpochRecord) -> None:
        self.records.append(record)

    def on_training_diverged(self, trainer, epoch: int, batch_seed: int) -> None:
        self.diverged_at = batch_seed

    @property
    def losses(self) -> List[float]:
        return [record.loss for record in self.records]

    @property
    def final_map(self) -> float:
        return self.records[-1].map50 if self.records else 0.0
