"""
Contentor de checkpoint versionado.

Um ficheiro torch.save com um dicionário:
    format      'rgbir-detector-ckpt'
    version     1
    manifest    config_hash, seed, epoch, best_map, model_config
    parameters  nome → tensor (state_dict do modelo)
    optimizer   state_dict do otimizador (ou None)
    rng         estados torch / numpy / python
"""
import logging
import random
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Dict, Optional

import numpy as np
import torch

from config.settings import ModelConfig, config_hash


logger = logging.getLogger(__name__)

CHECKPOINT_FORMAT = 'rgbir-detector-ckpt'
CHECKPOINT_VERSION = 1


class CheckpointError(ValueError):
    """Checkpoint ilegível, de outro formato ou incompatível com a configuração."""


@dataclass
class CheckpointState:
    model_config: ModelConfig
    parameters: Dict[str, torch.Tensor]
    seed: int
    epoch: int
    best_map: float = 0.0
    optimizer: Optional[Dict[str, Any]] = None
    rng: Dict[str, Any] = field(default_factory=dict)

    @property
    def config_hash(self) -> str:
        return config_hash(self.model_config)


def capture_rng_state() -> Dict[str, Any]:
    return {
        'torch': torch.get_rng_state(),
        'numpy': np.random.get_state(),
        'python': random.getstate(),
    }


def restore_rng_state(state: Dict[str, Any]) -> None:
    if 'torch' in state:
        torch.set_rng_state(state['torch'])
    if 'numpy' in state:
        np.random.set_state(state['numpy'])
    if 'python' in state:
        random.setstate(state['python'])


def save_checkpoint(path: str, model: torch.nn.Module, model_config: ModelConfig, seed: int,
                    epoch: int, best_map: float = 0.0,
                    optimizer: Optional[torch.optim.Optimizer] = None) -> Path:
    target = Path(path)
    target.parent.mkdir(parents=True, exist_ok=True)
    payload = {
        'format': CHECKPOINT_FORMAT,
        'version': CHECKPOINT_VERSION,
        'manifest': {
            'config_hash': config_hash(model_config),
            'seed': seed,
            'epoch': epoch,
            'best_map': best_map,
            'model_config': model_config.model_dump(mode='json'),
        },
        'parameters': {name: t.detach().cpu() for name, t in model.state_dict().items()},
        'optimizer': optimizer.state_dict() if optimizer is not None else None,
        'rng': capture_rng_state(),
    }
    torch.save(payload, target)
    logger.debug("checkpoint gravado em %s (época %d)", target, epoch)
    return target


def load_checkpoint(path: str, expected_hash: Optional[str] = None) -> CheckpointState:
    """
    Lê e valida um checkpoint.

    Args:
        path: Ficheiro gravado por save_checkpoint
        expected_hash: Se dado, tem de coincidir com o hash do manifesto

    Raises:
        CheckpointError: Ficheiro inexistente, formato/versão desconhecidos
            ou hash diferente
    """
    source = Path(path)
    if not source.is_file():
        raise CheckpointError(f"checkpoint inexistente: {source}")
    try:
        payload = torch.load(source, map_location='cpu', weights_only=False)
    except Exception as exc:
        raise CheckpointError(f"checkpoint ilegível {source}: {exc}") from exc

    if not isinstance(payload, dict) or payload.get('format') != CHECKPOINT_FORMAT:
        raise CheckpointError(f"{source} não é um checkpoint '{CHECKPOINT_FORMAT}'")
    if payload.get('version') != CHECKPOINT_VERSION:
        raise CheckpointError(
            f"{source}: versão {payload.get('version')} não suportada (esperada {CHECKPOINT_VERSION})"
        )

    manifest = payload['manifest']
    model_config = ModelConfig.model_validate(manifest['model_config'])
    stored_hash = manifest['config_hash']
    if stored_hash != config_hash(model_config):
        raise CheckpointError(f"{source}: manifesto corrompido (hash não corresponde à configuração)")
    if expected_hash is not None and stored_hash != expected_hash:
        raise CheckpointError(
            f"hash da configuração {expected_hash} difere do checkpoint {stored_hash}"
        )

    return CheckpointState(
        model_config=model_config,
        parameters=payload['parameters'],
        seed=int(manifest['seed']),
        epoch=int(manifest['epoch']),
        best_map=float(manifest.get('best_map', 0.0)),
        optimizer=payload.get('optimizer'),
        rng=payload.get('rng') or {},
    )
