"""
Varrimento seletivo (S6) sobre sequências de tokens.

Recorrência, com h_0 = 0:
    h_t = A_bar_t · h_{t-1} + B_bar_t · x_t
    y_t = C_t · h_t + D · x_t

selective_scan_naive é o oráculo sequencial; selective_scan processa a
sequência em blocos de comprimento fixo (produtos acumulados em espaço
logarítmico dentro do bloco, estado transportado entre blocos), com custo
linear em N.
"""
from dataclasses import dataclass, replace
from typing import Tuple

import torch
from einops import rearrange


DEFAULT_CHUNK_SIZE = 16


class ScanShapeError(ValueError):
    """Formas incompatíveis entre a sequência e os parâmetros do varrimento."""


class NonFiniteError(ValueError):
    """Tensor com NaN ou infinito onde se exigem valores finitos."""


def require_finite(name: str, tensor: torch.Tensor) -> None:
    """Rejeita tensores com valores não finitos, indicando quantos e onde."""
    finite = torch.isfinite(tensor)
    if not bool(finite.all()):
        bad = (~finite).nonzero()
        raise NonFiniteError(
            f"{name}: {bad.shape[0]} valores não finitos (primeiro em {tuple(bad[0].tolist())})"
        )


@dataclass(frozen=True)
class TokenSequence:
    """
    Mapa de características achatado em sequência (ordem linha a linha).

    Attributes:
        data: Tensor (B, N, C)
        origin_shape: (H, W) do mapa de origem, com N = H·W
    """
    data: torch.Tensor
    origin_shape: Tuple[int, int]

    def __post_init__(self) -> None:
        if self.data.dim() != 3:
            raise ScanShapeError(f"sequência tem de ser (B, N, C), recebido {tuple(self.data.shape)}")
        h, w = self.origin_shape
        if self.data.shape[1] != h * w:
            raise ScanShapeError(
                f"N={self.data.shape[1]} incompatível com origin_shape={self.origin_shape}"
            )

    @classmethod
    def from_feature_map(cls, feature_map: torch.Tensor) -> 'TokenSequence':
        """Achata (B, C, H, W) → (B, H·W, C), H antes de W."""
        h, w = feature_map.shape[-2:]
        return cls(rearrange(feature_map, 'b c h w -> b (h w) c'), (int(h), int(w)))

    def to_feature_map(self) -> torch.Tensor:
        h, w = self.origin_shape
        return rearrange(self.data, 'b (h w) c -> b c h w', h=h, w=w)

    def reversed(self) -> 'TokenSequence':
        """Rev(·): inverte a ordem dos tokens."""
        return replace(self, data=torch.flip(self.data, dims=[1]))

    def with_data(self, data: torch.Tensor) -> 'TokenSequence':
        return replace(self, data=data)

    @property
    def length(self) -> int:
        return self.data.shape[1]

    @property
    def channels(self) -> int:
        return self.data.shape[2]


@dataclass(frozen=True)
class ScanParameters:
    """
    Quantidades por passo do SSM seletivo.

    Attributes:
        delta: Passos positivos (B, N, C)
        A: Transição diagonal (C, S), negativa
        B_in: Projeção de entrada por token (B, N, S)
        C_out: Projeção de saída por token (B, N, S)
        D: Ligação direta por canal (C,)
    """
    delta: torch.Tensor
    A: torch.Tensor
    B_in: torch.Tensor
    C_out: torch.Tensor
    D: torch.Tensor

    @property
    def state_dim(self) -> int:
        return self.A.shape[-1]

    def check_against(self, x: TokenSequence) -> None:
        """Valida as formas face à sequência x."""
        batch, length, channels = x.data.shape
        expected = {
            'delta': (self.delta, (batch, length, channels)),
            'A': (self.A, (channels, self.state_dim)),
            'B_in': (self.B_in, (batch, length, self.state_dim)),
            'C_out': (self.C_out, (batch, length, self.state_dim)),
            'D': (self.D, (channels,)),
        }
        for name, (tensor, shape) in expected.items():
            if tuple(tensor.shape) != shape:
                raise ScanShapeError(f"{name} tem forma {tuple(tensor.shape)}, esperado {shape}")


def discretize(delta: torch.Tensor, A: torch.Tensor,
               B_in: torch.Tensor) -> Tuple[torch.Tensor, torch.Tensor]:
    """
    Discretização: retenção de ordem zero para A, primeira ordem para B.

    Args:
        delta: (B, N, C), delta >= 0
        A: (C, S)
        B_in: (B, N, S)

    Returns:
        (A_bar, B_bar), ambos (B, N, C, S): A_bar = exp(delta·A), B_bar = delta·B_in

    Raises:
        NonFiniteError: Entradas com NaN/inf
        ValueError: delta negativo
    """
    require_finite('delta', delta)
    require_finite('A', A)
    require_finite('B_in', B_in)
    if bool((delta < 0).any()):
        raise ValueError("delta tem de ser não negativo")
    A_bar = torch.exp(delta.unsqueeze(-1) * A)
    B_bar = delta.unsqueeze(-1) * B_in.unsqueeze(-2)
    return A_bar, B_bar


def selective_scan_naive(x: TokenSequence, p: ScanParameters) -> TokenSequence:
    """Recorrência passo a passo, da esquerda para a direita (oráculo O(N))."""
    p.check_against(x)
    A_bar, B_bar = discretize(p.delta, p.A, p.B_in)
    u = x.data
    batch, length, channels = u.shape
    h = u.new_zeros(batch, channels, p.state_dim)

    outputs = []
    for t in range(length):
        h = A_bar[:, t] * h + B_bar[:, t] * u[:, t].unsqueeze(-1)
        y = torch.einsum('bcs,bs->bc', h, p.C_out[:, t])
        outputs.append(y)

    y = torch.stack(outputs, dim=1) + p.D * u
    return x.with_data(y)


def selective_scan(x: TokenSequence, p: ScanParameters,
                   chunk_size: int = DEFAULT_CHUNK_SIZE) -> TokenSequence:
    """
    Varrimento por blocos, equivalente a selective_scan_naive.

    Dentro de cada bloco de L tokens:
        h_t = Σ_{s<=t} exp(cum_t − cum_s)·B_bar_s·x_s + exp(cum_t)·h_prev
    com cum o somatório acumulado de log A_bar = delta·A. O custo por bloco
    é O(L²), fixo, logo o total é O(N·L).
    """
    p.check_against(x)
    if chunk_size < 1:
        raise ValueError(f"chunk_size tem de ser >= 1, recebido {chunk_size}")
    _, B_bar = discretize(p.delta, p.A, p.B_in)
    u = x.data
    batch, length, channels = u.shape

    # log A_bar exato, sem passar por exp/log
    log_a = p.delta.unsqueeze(-1) * p.A
    bx = B_bar * u.unsqueeze(-1)
    h = u.new_zeros(batch, channels, p.state_dim)

    outputs = []
    for start in range(0, length, chunk_size):
        stop = min(start + chunk_size, length)
        cum = torch.cumsum(log_a[:, start:stop], dim=1)
        size = stop - start

        causal = torch.ones(size, size, dtype=torch.bool, device=u.device).tril()
        diff = cum.unsqueeze(2) - cum.unsqueeze(1)          # [b, t, s, c, n]
        diff = diff.masked_fill(~causal[None, :, :, None, None], float('-inf'))
        states = torch.einsum('btscn,bscn->btcn', diff.exp(), bx[:, start:stop])
        states = states + cum.exp() * h.unsqueeze(1)

        outputs.append(torch.einsum('btcn,btn->btc', states, p.C_out[:, start:stop]))
        h = states[:, -1]

    y = torch.cat(outputs, dim=1) + p.D * u
    return x.with_data(y)
