"""
Trainer - Subject do Padrão Observer.

Treina um detetor com AdamW, avalia o mAP@.5 no conjunto de validação no
fim de cada época e notifica os observers registados (registo em ficheiro,
checkpoints, histórico).
"""
import logging
import math
from dataclasses import dataclass, field
from typing import Dict, List, Sequence

import numpy as np
import torch

from config.settings import ModelConfig, RunConfig, config_hash
from data.batches import iterate_batches
from data.samples import GroundTruthBox, ModalitySample
from evaluation.metrics import MatchResult, map50
from models.detector import Detector
from models.loss import compute_loss
from models.postprocess import Detection
from observers.training_observer import EpochRecord, TrainingObserver


logger = logging.getLogger(__name__)


class TrainingDivergedError(RuntimeError):
    """Perda não finita; batch_seed reproduz o lote."""

    def __init__(self, epoch: int, batch_seed: int):
        super().__init__(f"perda não finita na época {epoch} (semente do lote {batch_seed})")
        self.epoch = epoch
        self.batch_seed = batch_seed


@dataclass
class InferenceResult:
    detections: List[List[Detection]]
    ground_truth: List[List[GroundTruthBox]]
    sample_ids: List[str]
    match: MatchResult
    gate_means: Dict[int, float] = field(default_factory=dict)


def run_inference(runner, samples: Sequence[ModalitySample], num_classes: int, img_size: int,
                  batch_size: int = 16, conf_threshold: float = 0.01,
                  iou_threshold: float = 0.6) -> InferenceResult:
    """
    Previsões sobre todas as amostras (ordem original, sem aumento de dados) e mAP@.5.

    Args:
        runner: Detector ou DetectorDecorator
    """
    detections, ground_truth, ids = [], [], []
    gate_sums: Dict[int, List[float]] = {}
    for batch in iterate_batches(samples, batch_size, seed=0, augment=False,
                                 img_size=img_size, shuffle=False):
        detections.extend(runner.predict(batch.rgb, batch.ir, conf_threshold, iou_threshold))
        ground_truth.extend(batch.boxes)
        ids.extend(batch.sample_ids)
        for level, gates in runner.gate_summary().items():
            gate_sums.setdefault(level, []).append(gates['w_light'] * len(batch))
    match = map50(detections, ground_truth, num_classes)
    gate_means = {level: sum(values) / len(ids) for level, values in gate_sums.items()}
    return InferenceResult(detections, ground_truth, ids, match, gate_means)


class Trainer:
    """
    Subject que notifica TrainingObservers.

    Attributes:
        model: Detector concreto (o que é gravado nos checkpoints)
        runner: model ou um decorator à volta dele (usado no forward)
        optimizer: AdamW sobre os parâmetros do modelo
        seed: Semente da execução (ordem dos lotes: seed + época)
    """

    def __init__(self, model: Detector, run_cfg: RunConfig, train_samples: Sequence[ModalitySample],
                 val_samples: Sequence[ModalitySample], runner=None):
        self.model = model
        self.runner = runner if runner is not None else model
        self.run_cfg = run_cfg
        self.model_config: ModelConfig = model.cfg
        self.seed = run_cfg.seed
        self.train_samples = train_samples
        self.val_samples = val_samples
        self.optimizer = torch.optim.AdamW(model.parameters(), lr=run_cfg.lr,
                                           weight_decay=run_cfg.weight_decay)
        self.start_epoch = 0
        self._observers: List[TrainingObserver] = []

    # =====================================================
    # SUBJECT (Padrão Observer)
    # =====================================================

    def attach(self, observer: TrainingObserver) -> None:
        if observer not in self._observers:
            self._observers.append(observer)

    def detach(self, observer: TrainingObserver) -> None:
        if observer in self._observers:
            self._observers.remove(observer)

    def notify_epoch_completed(self, record: EpochRecord) -> None:
        for observer in self._observers:
            observer.on_epoch_completed(self, record)

    def _notify(self, hook: str, *args) -> None:
        for observer in self._observers:
            getattr(observer, hook)(self, *args)

    # =====================================================
    # TREINO
    # =====================================================

    def resume_from(self, state) -> None:
        """Continua a partir de um CheckpointState (parâmetros, otimizador, época)."""
        self.model.load_state_dict(state.parameters)
        if state.optimizer is not None:
            self.optimizer.load_state_dict(state.optimizer)
        self.start_epoch = state.epoch
        logger.info("treino retomado na época %d", state.epoch + 1)

    def train_epoch(self, epoch: int) -> Dict[str, float]:
        self.model.train()
        totals = np.zeros(3)
        batches = 0
        for batch in iterate_batches(self.train_samples, self.run_cfg.batch_size,
                                     seed=self.seed + epoch, augment=self.run_cfg.augment,
                                     img_size=self.model_config.img_size):
            output = self.runner(batch.rgb, batch.ir)
            loss = compute_loss(output, batch.targets)
            if not math.isfinite(float(loss.total.detach())):
                self._notify('on_training_diverged', epoch, batch.seed)
                logger.error("perda não finita na época %d, lote %d", epoch, batch.seed)
                raise TrainingDivergedError(epoch, batch.seed)
            self.optimizer.zero_grad()
            loss.total.backward()
            self.optimizer.step()
            values = loss.to_dict()
            totals += (values['loss'], values['loss_cls'], values['loss_box'])
            batches += 1
        mean = totals / max(batches, 1)
        return {'loss': float(mean[0]), 'loss_cls': float(mean[1]), 'loss_box': float(mean[2])}

    def validate(self) -> float:
        if not self.val_samples:
            return 0.0
        result = run_inference(self.runner, self.val_samples, self.model_config.num_classes,
                               self.model_config.img_size, self.run_cfg.batch_size,
                               self.run_cfg.conf_threshold, self.run_cfg.iou_threshold)
        return result.match.map50

    def fit(self) -> List[EpochRecord]:
        """
        Treina de start_epoch + 1 até run_cfg.epochs.

        Raises:
            TrainingDivergedError: Perda não finita
        """
        records = []
        digest = config_hash(self.model_config)
        self._notify('on_training_started')
        for epoch in range(self.start_epoch + 1, self.run_cfg.epochs + 1):
            losses = self.train_epoch(epoch)
            record = EpochRecord(epoch=epoch, map50=self.validate(), config_hash=digest,
                                 seed=self.seed, **losses)
            records.append(record)
            self.notify_epoch_completed(record)
        self._notify('on_training_finished')
        return records
