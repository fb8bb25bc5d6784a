"""
Training Observer - Interface Abstrata do Padrão Observer

Define a interface que todos os observers de treino implementam. O
Trainer (subject) notifica-os no início, no fim de cada época, no fim do
treino e quando a perda deixa de ser finita.

Padrão: Observer (Comportamental)
Papel: Observer (interface abstrata)
"""
from abc import ABC, abstractmethod
from dataclasses import dataclass
from typing import Any, Dict


@dataclass(frozen=True)
class EpochRecord:
    """
    Resultado de uma época.

    Attributes:
        epoch: Índice da época (1 para a primeira)
        loss, loss_cls, loss_box: Médias por lote no treino
        map50: mAP@.5 no conjunto de validação
        config_hash, seed: Identificação da execução
    """
    epoch: int
    loss: float
    loss_cls: float
    loss_box: float
    map50: float
    config_hash: str
    seed: int

    def to_dict(self) -> Dict[str, Any]:
        return {
            'epoch': self.epoch,
            'loss': self.loss,
            'loss_cls': self.loss_cls,
            'loss_box': self.loss_box,
            'map50': self.map50,
            'config_hash': self.config_hash,
            'seed': self.seed,
        }


class TrainingObserver(ABC):
    """
    Interface abstrata para observers de eventos de treino.
    """

    @abstractmethod
    def on_epoch_completed(self, trainer, record: EpochRecord) -> None:
        """
        Método chamado no fim de cada época.

        Args:
            trainer: Trainer que emitiu o evento (acesso ao modelo e otimizador)
            record: Métricas da época
        """
        pass

    def on_training_started(self, trainer) -> None:
        """Hook opcional; implementação padrão vazia."""
        pass

    def on_training_finished(self, trainer) -> None:
        """Hook opcional; implementação padrão vazia."""
        pass

    def on_training_diverged(self, trainer, epoch: int, batch_seed: int) -> None:
        """
        Hook opcional chamado quando a perda deixa de ser finita.

        Args:
            epoch: Época em curso
            batch_seed: Semente do lote que produziu a perda não finita
        """
        pass
