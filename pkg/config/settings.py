"""
Configuração das execuções (treino, avaliação, ablação, serviço).

Todos os esquemas são modelos pydantic; um ficheiro YAML hierárquico
fornece os valores e cada flag da linha de comandos sobrepõe a chave
correspondente.
"""
import hashlib
import json
import logging
from pathlib import Path
from typing import Any, Dict, Optional, Tuple

import yaml
from pydantic import BaseModel, ConfigDict, Field, ValidationError, field_validator, model_validator


logger = logging.getLogger(__name__)


class ConfigError(ValueError):
    """Configuração inválida ou incompatível."""


# Larguras base (níveis 2..5) da escala 's'; 'n' e 'm' multiplicam por 0.5 e 2.0
BASE_CHANNELS: Tuple[int, int, int, int] = (16, 32, 64, 128)
SCALE_MULTIPLIERS: Dict[str, float] = {'n': 0.5, 's': 1.0, 'm': 2.0}

VARIANTS = ('full', 'concat-fusion', 'uni-mamba', 'bi-mamba', 'dgc-gate', 'single-stream')
NECKS = ('fpn', 'hfan')

# Combinações variante/pescoço admitidas (grelha da ablação de fusão)
VALID_COMBINATIONS: Dict[str, Tuple[str, ...]] = {
    'concat-fusion': ('fpn', 'hfan'),
    'uni-mamba': ('fpn',),
    'bi-mamba': ('fpn',),
    'dgc-gate': ('fpn',),
    'full': ('hfan',),
    'single-stream': ('fpn', 'hfan'),
}


class FusionScaleConfig(BaseModel):
    """
    Parâmetros do DGC-MFM numa escala.

    Attributes:
        channels: Canais C da escala
        bottleneck: Dimensão d do MLP do Difference Gate (None → max(C/4, 4))
        gamma_init: Valor inicial da temperatura γ do Illumination Gate
        shuffle_groups: Grupos g do Fusion-Shuffle (None → 4, ou 2 se C < 8)
        mamba_depth: Número de blocos Mamba bidirecionais empilhados
        state_dim: Dimensão S do estado do SSM
        bidirectional: Varrimento nos dois sentidos (False → Uni-Mamba)
        gated: Usar os gates IG/DG (False → média simples das modalidades)
        tie_directions: Partilhar parâmetros entre varrimentos (modo de teste)
    """
    model_config = ConfigDict(frozen=True)

    channels: int = Field(gt=0)
    bottleneck: Optional[int] = None
    gamma_init: float = 1.0
    shuffle_groups: Optional[int] = None
    mamba_depth: int = Field(default=1, ge=1)
    state_dim: int = Field(default=8, ge=1)
    bidirectional: bool = True
    gated: bool = True
    tie_directions: bool = False

    @property
    def resolved_bottleneck(self) -> int:
        return self.bottleneck if self.bottleneck is not None else max(self.channels // 4, 4)

    @property
    def resolved_groups(self) -> int:
        if self.shuffle_groups is not None:
            return self.shuffle_groups
        return 4 if self.channels >= 8 else 2

    @model_validator(mode='after')
    def _check_shape(self) -> 'FusionScaleConfig':
        if self.resolved_bottleneck < 1:
            raise ValueError(f"bottleneck d tem de ser >= 1, recebido {self.resolved_bottleneck}")
        if self.channels % self.resolved_groups != 0:
            raise ValueError(
                f"shuffle_groups={self.resolved_groups} não divide channels={self.channels}"
            )
        return self


class ModelConfig(BaseModel):
    """
    Configuração do detetor.

    Os interruptores use_cru / use_gad / use_awf / hierarchical só têm
    efeito com neck='hfan' (ablação dos componentes do pescoço).
    """
    model_config = ConfigDict(frozen=True)

    variant: str = 'full'
    neck: str = 'hfan'
    scale: str = 's'
    channels: Optional[Tuple[int, int, int, int]] = None
    num_classes: int = Field(default=3, ge=1)
    img_size: int = 64
    use_p2_head: bool = True
    use_cru: bool = True
    use_gad: bool = True
    use_awf: bool = True
    hierarchical: bool = True
    state_dim: int = Field(default=8, ge=1)
    mamba_depth: int = Field(default=1, ge=1)
    gamma_init: float = 1.0
    tie_directions: bool = False

    @field_validator('variant')
    @classmethod
    def _check_variant(cls, value: str) -> str:
        if value not in VARIANTS:
            raise ValueError(f"variante inválida: '{value}'. Disponíveis: {', '.join(VARIANTS)}")
        return value

    @field_validator('neck')
    @classmethod
    def _check_neck(cls, value: str) -> str:
        if value not in NECKS:
            raise ValueError(f"pescoço inválido: '{value}'. Disponíveis: {', '.join(NECKS)}")
        return value

    @field_validator('scale')
    @classmethod
    def _check_scale(cls, value: str) -> str:
        if value not in SCALE_MULTIPLIERS:
            raise ValueError(f"escala inválida: '{value}'. Disponíveis: {', '.join(SCALE_MULTIPLIERS)}")
        return value

    @model_validator(mode='after')
    def _check_combination(self) -> 'ModelConfig':
        if self.img_size % 32 != 0:
            raise ValueError(f"img_size tem de ser divisível por 32, recebido {self.img_size}")
        if self.neck not in VALID_COMBINATIONS[self.variant]:
            raise ValueError(
                f"combinação '{self.variant}' + '{self.neck}' fora da grelha de ablação"
            )
        return self

    @property
    def pyramid_channels(self) -> Dict[int, int]:
        """Canais por nível da pirâmide (2..5)."""
        if self.channels is not None:
            widths = self.channels
        else:
            mult = SCALE_MULTIPLIERS[self.scale]
            widths = tuple(max(8, int(round(c * mult))) for c in BASE_CHANNELS)
        return {level: int(c) for level, c in zip((2, 3, 4, 5), widths)}

    def fusion_config(self, level: int) -> FusionScaleConfig:
        """Configuração do DGC-MFM para um nível, derivada da variante."""
        return FusionScaleConfig(
            channels=self.pyramid_channels[level],
            gamma_init=self.gamma_init,
            mamba_depth=self.mamba_depth,
            state_dim=self.state_dim,
            bidirectional=self.variant != 'uni-mamba',
            gated=self.variant in ('full', 'dgc-gate'),
            tie_directions=self.tie_directions,
        )


class SceneSpecConfig(BaseModel):
    """Parâmetros do gerador sintético (ver data.synthetic.SceneSpec)."""
    model_config = ConfigDict(frozen=True)

    count_range: Tuple[int, int] = (2, 6)
    size_range: Tuple[float, float] = (0.03, 0.30)
    illumination: Optional[float] = None
    illumination_range: Tuple[float, float] = (0.0, 1.0)
    visibility_probs: Tuple[float, float, float] = (0.4, 0.3, 0.3)


class RunConfig(BaseModel):
    """
    Configuração completa de uma execução.

    Attributes:
        command: train | eval | ablate | visualize | serve
        model: Configuração do detetor
        data: 'synthetic' ou diretório no formato YOLO
        modality: both | rgb | ir (entrada de uma só modalidade)
        out_dir: Diretório de saída (resolvido para caminho absoluto)
    """
    command: str = 'train'
    model: ModelConfig = ModelConfig()
    data: str = 'synthetic'
    scene: SceneSpecConfig = SceneSpecConfig()
    train_scenes: int = Field(default=400, ge=1)
    eval_scenes: int = Field(default=100, ge=0)
    epochs: int = Field(default=30, ge=0)
    batch_size: int = Field(default=16, ge=1)
    lr: float = Field(default=1e-3, gt=0)
    weight_decay: float = Field(default=5e-4, ge=0)
    augment: bool = True
    seed: int = 0
    out_dir: str = 'runs'
    modality: str = 'both'
    conf_threshold: float = Field(default=0.01, gt=0, lt=1)
    iou_threshold: float = Field(default=0.6, gt=0, lt=1)
    resume: Optional[str] = None

    @field_validator('modality')
    @classmethod
    def _check_modality(cls, value: str) -> str:
        if value not in ('both', 'rgb', 'ir'):
            raise ValueError(f"modalidade inválida: '{value}'")
        return value

    def resolved(self) -> 'RunConfig':
        """Devolve uma cópia com todos os caminhos absolutos."""
        updates: Dict[str, Any] = {'out_dir': str(Path(self.out_dir).expanduser().resolve())}
        if self.data != 'synthetic':
            updates['data'] = str(Path(self.data).expanduser().resolve())
        if self.resume:
            updates['resume'] = str(Path(self.resume).expanduser().resolve())
        return self.model_copy(update=updates)


# ========================================
# CARREGAMENTO E HASH
# ========================================

def _set_dotted(tree: Dict[str, Any], dotted_key: str, value: Any) -> None:
    node = tree
    parts = dotted_key.split('.')
    for part in parts[:-1]:
        node = node.setdefault(part, {})
    node[parts[-1]] = value


def load_run_config(path: Optional[str] = None,
                    overrides: Optional[Dict[str, Any]] = None) -> RunConfig:
    """
    Lê a configuração YAML e aplica as sobreposições da linha de comandos.

    Args:
        path: Ficheiro YAML (None → apenas valores por omissão)
        overrides: Chaves pontuadas ('model.variant') → valor; None é ignorado

    Returns:
        RunConfig validada com caminhos resolvidos

    Raises:
        ConfigError: Ficheiro inexistente, YAML inválido ou valores fora do esquema
    """
    tree: Dict[str, Any] = {}
    if path is not None:
        config_path = Path(path)
        if not config_path.is_file():
            raise ConfigError(f"ficheiro de configuração inexistente: {config_path}")
        try:
            tree = yaml.safe_load(config_path.read_text(encoding='utf-8')) or {}
        except yaml.YAMLError as exc:
            raise ConfigError(f"YAML inválido em {config_path}: {exc}") from exc
        if not isinstance(tree, dict):
            raise ConfigError(f"{config_path}: a raiz tem de ser um mapeamento chave-valor")

    for key, value in (overrides or {}).items():
        if value is not None:
            _set_dotted(tree, key, value)

    try:
        cfg = RunConfig.model_validate(tree)
    except ValidationError as exc:
        raise ConfigError(str(exc)) from exc

    logger.debug("configuração carregada de %s", path or '<omissão>')
    return cfg.resolved()


def config_hash(model_cfg: ModelConfig) -> str:
    """
    Hash estável (16 hex) dos campos que definem a arquitetura.

    Dois checkpoints com o mesmo hash têm parâmetros com nomes e formas
    idênticos.
    """
    payload = model_cfg.model_dump(mode='json')
    payload['channels'] = [model_cfg.pyramid_channels[level] for level in (2, 3, 4, 5)]
    canonical = json.dumps(payload, sort_keys=True, separators=(',', ':'))
    return hashlib.sha256(canonical.encode('utf-8')).hexdigest()[:16]
