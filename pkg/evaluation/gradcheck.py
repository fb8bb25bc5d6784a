"""
Verificação de gradientes por diferenças finitas centrais.

O operador é reduzido a um escalar (soma, ou produto interno com uma
projeção aleatória fixa) e o gradiente analítico do autograd é comparado,
elemento a elemento, com (f(x + h) − f(x − h)) / 2h, em float64.
"""
import logging
from dataclasses import dataclass
from typing import Callable, Optional, Sequence, Tuple

import torch


logger = logging.getLogger(__name__)

RELATIVE_FLOOR = 1e-6


@dataclass
class GradCheckReport:
    """
    Attributes:
        max_rel_error: max |a − n| / max(|a|, |n|, 1e-6)
        max_abs_error: max |a − n|
        passed: max_rel_error < tolerance e gradientes finitos
        location: (índice da entrada, índice plano) do pior elemento
        checked_elements: Número de elementos comparados
        message: Diagnóstico em caso de falha
    """
    max_rel_error: float
    max_abs_error: float
    passed: bool
    location: Optional[Tuple[int, int]]
    checked_elements: int
    message: str = ''


def _scalarize(output: torch.Tensor, projection: Optional[torch.Tensor]) -> torch.Tensor:
    if projection is None:
        return output.sum()
    return (output * projection).sum()


def grad_check(op: Callable[..., torch.Tensor], inputs: Sequence[torch.Tensor],
               step: float = 1e-4, tolerance: float = 1e-3, projection: str = 'random',
               max_elements: Optional[int] = None, wrt: Optional[Sequence[int]] = None,
               seed: int = 0) -> GradCheckReport:
    """
    Compara o gradiente analítico com o numérico.

    Args:
        op: Função das entradas que devolve um tensor
        inputs: Entradas (convertidas para float64)
        step: h das diferenças centrais (> 0)
        tolerance: Erro relativo máximo admitido
        projection: 'random' (projeção gaussiana fixa) ou 'sum'
        max_elements: Se dado, só esse número de elementos (amostrados) por entrada
        wrt: Índices das entradas a verificar (omissão: todas as de vírgula flutuante)
        seed: Semente da projeção e da amostragem

    Raises:
        ValueError: step ≤ 0 ou projeção desconhecida
    """
    if step <= 0:
        raise ValueError(f"step tem de ser > 0, recebido {step}")
    if projection not in ('random', 'sum'):
        raise ValueError(f"projeção desconhecida: '{projection}'")

    generator = torch.Generator().manual_seed(seed)
    values = [t.detach().to(torch.float64).clone() if t.is_floating_point() else t for t in inputs]
    targets = list(wrt) if wrt is not None else [i for i, t in enumerate(values) if t.is_floating_point()]

    leaves = [t.requires_grad_(True) if i in targets else t for i, t in enumerate(values)]
    output = op(*leaves)
    weights = None
    if projection == 'random':
        weights = torch.randn(output.shape, generator=generator, dtype=torch.float64)
    analytic = torch.autograd.grad(_scalarize(output, weights), [leaves[i] for i in targets],
                                   allow_unused=True)

    worst_rel, worst_abs, location, checked = 0.0, 0.0, None, 0
    with torch.no_grad():
        for slot, index in enumerate(targets):
            base = values[index].detach()
            grad = analytic[slot]
            grad = torch.zeros_like(base).reshape(-1) if grad is None else grad.reshape(-1)
            if not torch.isfinite(grad).all():
                bad = int(torch.nonzero(~torch.isfinite(grad))[0])
                return GradCheckReport(float('inf'), float('inf'), False, (index, bad), checked,
                                       f"gradiente analítico não finito na entrada {index}, elemento {bad}")

            positions = torch.arange(base.numel())
            if max_elements is not None and base.numel() > max_elements:
                positions = torch.randperm(base.numel(), generator=generator)[:max_elements]

            for position in positions.tolist():
                probe = [t.detach() if t.is_floating_point() else t for t in values]
                shifted = base.clone().reshape(-1)
                shifted[position] += step
                probe[index] = shifted.reshape(base.shape)
                plus = float(_scalarize(op(*probe), weights))
                shifted[position] -= 2 * step
                probe[index] = shifted.reshape(base.shape)
                minus = float(_scalarize(op(*probe), weights))
                numeric = (plus - minus) / (2 * step)

                exact = float(grad.reshape(-1)[position])
                abs_error = abs(exact - numeric)
                rel_error = abs_error / max(abs(exact), abs(numeric), RELATIVE_FLOOR)
                checked += 1
                if rel_error > worst_rel or location is None:
                    worst_rel, location = rel_error, (index, position)
                worst_abs = max(worst_abs, abs_error)

    passed = worst_rel < tolerance
    message = '' if passed else f"erro relativo {worst_rel:.3e} ≥ {tolerance:.1e} em {location}"
    if not passed:
        logger.debug("grad_check falhou: %s", message)
    return GradCheckReport(worst_rel, worst_abs, passed, location, checked, message)
