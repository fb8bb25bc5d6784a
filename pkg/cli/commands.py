"""
Comandos da linha de comandos: train, eval, ablate, visualize, serve.

Cada comando recebe uma RunConfig já validada (caminhos absolutos) e
devolve os artefactos que escreveu.
"""
import logging
import re
from dataclasses import dataclass
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Tuple

import cv2
import numpy as np

from config.settings import RunConfig, config_hash
from data.batches import iterate_batches
from data.samples import DatasetError, ModalitySample
from data.synthetic import SceneSpec, generate_dataset
from data.yolo_dataset import load_yolo_dataset
from decorators import ModalityMaskDecorator, TimedDetectorDecorator
from evaluation.metrics import match_image
from evaluation.params import count_params
from evaluation.report import (
    AblationCell,
    ablation_rows,
    format_ablation_table,
    format_ap_table,
    write_ablation_report,
    write_metrics_report,
)
from factories import DetectorFactory, get_grid
from models.checkpoint import load_checkpoint, restore_rng_state
from models.detector import Detector
from observers import CheckpointObserver, HistoryObserver, TrainingLogObserver
from cli.trainer import Trainer, run_inference


logger = logging.getLogger(__name__)

EVAL_SEED_OFFSET = 1_000_000
TRAIN_LOG_NAME = 'train_log.tsv'
PANEL_SCALE = 4

# Cores BGR das marcações
COLOR_TP = (0, 200, 0)
COLOR_FP = (0, 0, 255)
COLOR_FN = (0, 255, 255)


# =====================================================
# DADOS
# =====================================================

def load_split(cfg: RunConfig, split: str) -> List[ModalitySample]:
    """
    Amostras de treino ('train') ou de validação ('val').

    Sintético: sementes seed + i (treino) e seed + 1 000 000 + i (validação).
    Diretório: subdiretórios train/ e val/ se existirem; senão o diretório inteiro.
    """
    if split not in ('train', 'val'):
        raise DatasetError(f"split desconhecido: '{split}'")
    if cfg.data == 'synthetic':
        spec = SceneSpec.from_config(cfg.scene, cfg.model.img_size, cfg.model.num_classes, cfg.seed)
        if split == 'train':
            return generate_dataset(spec, cfg.train_scenes, cfg.seed)
        return generate_dataset(spec, cfg.eval_scenes, cfg.seed + EVAL_SEED_OFFSET)

    root = Path(cfg.data)
    if (root / 'train').is_dir() and (root / 'val').is_dir():
        return load_yolo_dataset(str(root / split))
    logger.warning("%s sem train/ e val/: o mesmo conjunto é usado nos dois splits", root)
    return load_yolo_dataset(str(root))


def wrap_modality(model: Detector, modality: str):
    return ModalityMaskDecorator(model, modality) if modality != 'both' else model


# =====================================================
# TRAIN
# =====================================================

@dataclass
class TrainResult:
    model: Detector
    history: HistoryObserver
    log_path: Path
    best_path: Path
    last_path: Path


def cmd_train(cfg: RunConfig, train_samples: Optional[Sequence[ModalitySample]] = None,
              val_samples: Optional[Sequence[ModalitySample]] = None,
              save_checkpoints: bool = True) -> TrainResult:
    """
    Treino com semente, registo por época e checkpoints best.pt / last.pt.

    Raises:
        TrainingDivergedError: Perda não finita (semente do lote no registo)
    """
    out_dir = Path(cfg.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    train_samples = train_samples if train_samples is not None else load_split(cfg, 'train')
    val_samples = val_samples if val_samples is not None else load_split(cfg, 'val')

    model = DetectorFactory.create_detector(cfg.model, seed=cfg.seed)
    trainer = Trainer(model, cfg, train_samples, val_samples, runner=wrap_modality(model, cfg.modality))

    best_map = -1.0
    if cfg.resume:
        state = load_checkpoint(cfg.resume, expected_hash=config_hash(cfg.model))
        trainer.resume_from(state)
        restore_rng_state(state.rng)
        best_map = state.best_map

    history = HistoryObserver()
    log_observer = TrainingLogObserver(str(out_dir / TRAIN_LOG_NAME))
    checkpoints = CheckpointObserver(str(out_dir), best_map=best_map)
    trainer.attach(log_observer)
    trainer.attach(history)
    if save_checkpoints:
        trainer.attach(checkpoints)

    logger.info("treino %s (%s, %s), %d cenas, %d épocas, semente %d",
                config_hash(cfg.model), cfg.model.variant, cfg.model.neck,
                len(train_samples), cfg.epochs, cfg.seed)
    trainer.fit()
    return TrainResult(model, history, log_observer.path, checkpoints.best_path, checkpoints.last_path)


# =====================================================
# EVAL
# =====================================================

def cmd_eval(cfg: RunConfig, checkpoint: str, split: str = 'val', strict_config: bool = False,
             dump_gates: bool = False) -> Dict[str, object]:
    """
    mAP@.5 e AP por classe de um checkpoint.

    Args:
        strict_config: Exigir que o hash de cfg.model coincida com o do checkpoint

    Raises:
        CheckpointError: Hash diferente (com strict_config)
        DatasetError: Split vazio
    """
    state = load_checkpoint(checkpoint, expected_hash=config_hash(cfg.model) if strict_config else None)
    model = DetectorFactory.create_from_checkpoint(state)
    samples = load_split(cfg.model_copy(update={'model': state.model_config}), split)
    if not samples:
        raise DatasetError(f"split '{split}' vazio")

    timed = TimedDetectorDecorator(wrap_modality(model, cfg.modality))
    result = run_inference(timed, samples, state.model_config.num_classes,
                           state.model_config.img_size, cfg.batch_size,
                           cfg.conf_threshold, cfg.iou_threshold)

    report: Dict[str, object] = dict(result.match.to_report())
    report['config_hash'] = state.config_hash
    report['seed'] = cfg.seed
    report['split'] = split
    report['modality'] = cfg.modality
    if dump_gates:
        for level, value in sorted(result.gate_means.items()):
            report[f"gates.P{level}.w_light"] = round(value, 6)

    out_dir = Path(cfg.out_dir)
    write_metrics_report(str(out_dir / f"metrics_{split}.yaml"), report)
    (out_dir / f"ap_{split}.md").write_text(format_ap_table(result.match) + '\n', encoding='utf-8')
    # a latência varia entre execuções; fica fora do relatório de métricas
    write_metrics_report(str(out_dir / f"latency_{split}.yaml"),
                         {'latency_ms': timed.get_mean_latency_ms(), 'images': timed.images})
    logger.info("mAP@.5 (%s) = %.4f em %d imagens", split, result.match.map50, len(samples))
    return report


# =====================================================
# ABLATE
# =====================================================

def _slug(label: str) -> str:
    return re.sub(r'[^a-z0-9]+', '-', label.lower()).strip('-')


def cmd_ablate(grid: str, cfg: RunConfig, seeds: Optional[Sequence[int]] = None) -> List[Dict[str, object]]:
    """
    Treina cada linha da grelha com as mesmas sementes e escreve a tabela.

    Raises:
        ConfigError: Grelha desconhecida
    """
    rows = get_grid(grid)
    seeds = list(seeds) if seeds else [cfg.seed]
    base_dir = Path(cfg.out_dir) / f"ablation_{grid}"
    cells, hashes = [], {}

    for row in rows:
        row_cfg = row.apply(cfg)
        maps, params = [], 0
        for seed in seeds:
            seed_cfg = row_cfg.model_copy(update={
                'seed': seed,
                'out_dir': str(base_dir / _slug(row.label) / f"seed{seed}"),
                'resume': None,
            })
            result = cmd_train(seed_cfg, save_checkpoints=False)
            maps.append(result.history.final_map)
            params = count_params(result.model)
        cells.append(AblationCell(row.label, maps, params, row.reference))
        hashes[row.label] = config_hash(row_cfg.model)
        logger.info("%s: mAP@.5 = %s", row.label, ', '.join(f"{m:.4f}" for m in maps))

    table = ablation_rows(cells)
    write_ablation_report(str(base_dir), grid, table, seeds, hashes)
    return table


# =====================================================
# VISUALIZE
# =====================================================

@dataclass
class Overlay:
    sample_id: str
    path: Path
    true_positives: int
    false_positives: int
    false_negatives: int


def _to_bgr8(image: np.ndarray) -> np.ndarray:
    image8 = np.round(np.clip(image, 0.0, 1.0) * 255.0).astype(np.uint8)
    if image8.shape[2] == 1:
        return cv2.cvtColor(image8, cv2.COLOR_GRAY2BGR)
    return cv2.cvtColor(image8, cv2.COLOR_RGB2BGR)


def _draw_box(panel: np.ndarray, box: Tuple[float, float, float, float], color) -> None:
    height, width = panel.shape[:2]
    x1, y1 = int(round(box[0] * width)), int(round(box[1] * height))
    x2, y2 = int(round(box[2] * width)) - 1, int(round(box[3] * height)) - 1
    cv2.rectangle(panel, (x1, y1), (max(x1, x2), max(y1, y2)), color, thickness=1)


def render_overlay(rgb: np.ndarray, ir: Optional[np.ndarray], match, gts) -> np.ndarray:
    """Painéis RGB | IR ampliados com TP (verde), FP (vermelho) e FN (amarelo)."""
    panels = [_to_bgr8(rgb)]
    if ir is not None:
        panels.append(_to_bgr8(ir))
    panels = [cv2.resize(p, None, fx=PANEL_SCALE, fy=PANEL_SCALE, interpolation=cv2.INTER_NEAREST)
              for p in panels]
    for panel in panels:
        for det, is_tp in zip(match.detections, match.true_positive):
            _draw_box(panel, det.box, COLOR_TP if is_tp else COLOR_FP)
        for index in match.missed_gt:
            _draw_box(panel, gts[index].xyxy, COLOR_FN)
    separator = np.full((panels[0].shape[0], 2, 3), 255, dtype=np.uint8)
    stacked = [panels[0]]
    for panel in panels[1:]:
        stacked.extend([separator, panel])
    return np.concatenate(stacked, axis=1)


def cmd_visualize(cfg: RunConfig, checkpoint: str, sample_ids: Sequence[str],
                  split: str = 'val', conf_threshold: float = 0.25) -> List[Overlay]:
    """
    Uma imagem por amostra: {sample_id}_{config_hash}_s{seed}_e{época}.png,
    com hash, semente e época lidos do checkpoint.

    Amostras inexistentes são ignoradas com um aviso.
    """
    state = load_checkpoint(checkpoint)
    model = DetectorFactory.create_from_checkpoint(state)
    runner = wrap_modality(model, cfg.modality)
    samples = {s.sample_id: s for s in load_split(cfg.model_copy(update={'model': state.model_config}), split)}
    tag = f"{state.config_hash}_s{state.seed}_e{state.epoch}"
    out_dir = Path(cfg.out_dir) / 'overlays'
    out_dir.mkdir(parents=True, exist_ok=True)

    overlays = []
    for sample_id in sample_ids:
        sample = samples.get(sample_id)
        if sample is None:
            logger.warning("amostra '%s' inexistente em '%s': ignorada", sample_id, split)
            continue
        batch = next(iterate_batches([sample], 1, seed=0, augment=False,
                                     img_size=state.model_config.img_size, shuffle=False))
        detections = runner.predict(batch.rgb, batch.ir, conf_threshold, cfg.iou_threshold)[0]
        gts = batch.boxes[0]
        match = match_image(detections, gts)

        rgb = batch.rgb[0].permute(1, 2, 0).numpy()
        ir = batch.ir[0].permute(1, 2, 0).numpy() if batch.ir is not None else None
        path = out_dir / f"{sample_id}_{tag}.png"
        cv2.imwrite(str(path), render_overlay(rgb, ir, match, gts))
        overlays.append(Overlay(sample_id, path, sum(match.true_positive),
                                len(match.true_positive) - sum(match.true_positive),
                                len(match.missed_gt)))
    return overlays


# =====================================================
# SERVE
# =====================================================

def cmd_serve(host: str = '0.0.0.0', port: int = 5000) -> None:
    from App import app
    app.run(host=host, port=port)
