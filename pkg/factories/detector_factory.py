"""
Factory Method para criação de detetores.

A ModelConfig diz qual variante de fusão e qual pescoço usar; a factory
decide que classes concretas instanciar e monta o Detector. O código
cliente (CLI, serviço, testes) nunca importa as classes de fusão ou de
pescoço diretamente.
"""
import logging
from typing import Dict, Optional, Type

import torch
import torch.nn as nn

from config.settings import ModelConfig, VALID_COMBINATIONS
from fusion import ConcatFusion, DGCMFM
from models.backbone import DualStreamBackbone, SingleStreamBackbone
from models.checkpoint import CheckpointState
from models.detector import Detector
from models.head import DecoupledHead
from neck import FeaturePyramidNeck, HierarchicalFeatureAggregationNeck


logger = logging.getLogger(__name__)


class DetectorFactory:
    """
    Factory dos detetores da grelha de ablação.

    Variantes de fusão:
        full, dgc-gate      DGC-MFM completo (gates + Mamba bidirecional)
        bi-mamba            Mamba bidirecional sobre a média das modalidades
        uni-mamba           idem, só varrimento direto
        concat-fusion       concatenação + projeção 1×1
        single-stream       sem fluxo IR nem fusão

    Example:
        >>> model = DetectorFactory.create_detector(ModelConfig(variant='full', neck='hfan'))
        >>> model.describe()['variant']
        'full'
    """

    # Registo variante → classe do módulo de fusão (None: fluxo único)
    _fusion_types: Dict[str, Optional[Type[nn.Module]]] = {
        'full': DGCMFM,
        'dgc-gate': DGCMFM,
        'bi-mamba': DGCMFM,
        'uni-mamba': DGCMFM,
        'concat-fusion': ConcatFusion,
        'single-stream': None,
    }

    _neck_types: Dict[str, Type[nn.Module]] = {
        'fpn': FeaturePyramidNeck,
        'hfan': HierarchicalFeatureAggregationNeck,
    }

    @staticmethod
    def create_detector(cfg: ModelConfig, seed: Optional[int] = None) -> Detector:
        """
        Método Factory: monta backbone, pescoço e cabeças para cfg.

        Args:
            cfg: Configuração validada
            seed: Se dado, fixa a inicialização dos pesos

        Raises:
            ValueError: Variante ou pescoço sem classe registada
        """
        if cfg.variant not in DetectorFactory._fusion_types:
            raise ValueError(
                f"Variante inválida: '{cfg.variant}'. "
                f"Variantes disponíveis: {', '.join(DetectorFactory.get_available_variants())}"
            )
        neck_class = DetectorFactory._neck_types.get(cfg.neck)
        if neck_class is None:
            raise ValueError(f"Pescoço inválido: '{cfg.neck}'")

        if seed is not None:
            torch.manual_seed(seed)

        channels = cfg.pyramid_channels
        fusion_class = DetectorFactory._fusion_types[cfg.variant]
        if fusion_class is None:
            backbone = SingleStreamBackbone(channels)
        else:
            backbone = DualStreamBackbone(channels, lambda level: fusion_class(cfg.fusion_config(level)))

        if neck_class is HierarchicalFeatureAggregationNeck:
            neck = neck_class(channels, use_cru=cfg.use_cru, use_gad=cfg.use_gad,
                              use_awf=cfg.use_awf, hierarchical=cfg.hierarchical)
        else:
            neck = neck_class(channels)

        head = DecoupledHead(channels, cfg.num_classes, use_p2_head=cfg.use_p2_head)
        detector = Detector(cfg, backbone, neck, head)
        logger.debug("detetor criado: %s", detector.describe())
        return detector

    @staticmethod
    def create_from_checkpoint(state: CheckpointState) -> Detector:
        """Reconstrói o detetor de um checkpoint e carrega os parâmetros."""
        detector = DetectorFactory.create_detector(state.model_config)
        detector.load_state_dict(state.parameters)
        return detector

    @staticmethod
    def get_available_variants() -> list[str]:
        return list(DetectorFactory._fusion_types.keys())

    @staticmethod
    def get_variant_catalog() -> list[dict]:
        """Variantes registadas com os pescoços admitidos por cada uma."""
        return [
            {
                'variant': variant,
                'fusion': fusion_class.__name__ if fusion_class else None,
                'necks': list(VALID_COMBINATIONS[variant]),
            }
            for variant, fusion_class in DetectorFactory._fusion_types.items()
        ]

    @staticmethod
    def get_fusion_class(variant: str) -> Optional[Type[nn.Module]]:
        return DetectorFactory._fusion_types.get(variant)
