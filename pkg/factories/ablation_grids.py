"""
Grelhas de ablação: cada linha é uma alteração à configuração base.

    fusion-neck      fusão (Concat / Uni-Mamba / Bi-Mamba / DGC-Gate) × pescoço (FPN / HFAN)
    hfan-components  remove-one sobre a HFAN (fluxo único, escala n)
    modality         modelo completo com entrada RGB+IR, só RGB, só IR
"""
from dataclasses import dataclass, field
from typing import Any, Dict, List, Tuple

from config.settings import ConfigError, RunConfig


@dataclass(frozen=True)
class AblationRow:
    """
    Attributes:
        label: Nome da linha na tabela
        model: Sobreposições à ModelConfig
        modality: both | rgb | ir
        reference: Linha contra a qual se calcula Δ
    """
    label: str
    model: Dict[str, Any] = field(default_factory=dict)
    modality: str = 'both'
    reference: bool = False

    def apply(self, base: RunConfig) -> RunConfig:
        model_cfg = base.model.model_validate({**base.model.model_dump(), **self.model})
        return base.model_copy(update={'model': model_cfg, 'modality': self.modality})


ABLATION_GRIDS: Dict[str, Tuple[AblationRow, ...]] = {
    'fusion-neck': (
        AblationRow('Concat + FPN', {'variant': 'concat-fusion', 'neck': 'fpn'}, reference=True),
        AblationRow('Concat + HFAN', {'variant': 'concat-fusion', 'neck': 'hfan'}),
        AblationRow('Uni-Mamba + FPN', {'variant': 'uni-mamba', 'neck': 'fpn'}),
        AblationRow('Bi-Mamba + FPN', {'variant': 'bi-mamba', 'neck': 'fpn'}),
        AblationRow('DGC-Gate + FPN', {'variant': 'dgc-gate', 'neck': 'fpn'}),
        AblationRow('DGC-Gate + HFAN (full)', {'variant': 'full', 'neck': 'hfan'}),
    ),
    'hfan-components': (
        AblationRow('Full Model', {'variant': 'single-stream', 'neck': 'hfan', 'scale': 'n'},
                    reference=True),
        AblationRow('w/o HS', {'variant': 'single-stream', 'neck': 'hfan', 'scale': 'n',
                               'hierarchical': False}),
        AblationRow('w/o CRU', {'variant': 'single-stream', 'neck': 'hfan', 'scale': 'n',
                                'use_cru': False}),
        AblationRow('w/o GAD', {'variant': 'single-stream', 'neck': 'hfan', 'scale': 'n',
                                'use_gad': False}),
        AblationRow('w/o AWF', {'variant': 'single-stream', 'neck': 'hfan', 'scale': 'n',
                                'use_awf': False}),
        AblationRow('FPN Baseline', {'variant': 'single-stream', 'neck': 'fpn', 'scale': 'n'}),
    ),
    'modality': (
        AblationRow('RGB + IR', {'variant': 'full', 'neck': 'hfan'}, reference=True),
        AblationRow('RGB only', {'variant': 'full', 'neck': 'hfan'}, modality='rgb'),
        AblationRow('IR only', {'variant': 'full', 'neck': 'hfan'}, modality='ir'),
    ),
}


def get_grid(name: str) -> Tuple[AblationRow, ...]:
    """
    Raises:
        ConfigError: Grelha desconhecida
    """
    if name not in ABLATION_GRIDS:
        raise ConfigError(
            f"grelha de ablação desconhecida: '{name}'. Disponíveis: {', '.join(ABLATION_GRIDS)}"
        )
    return ABLATION_GRIDS[name]


def available_grids() -> List[str]:
    return list(ABLATION_GRIDS)
