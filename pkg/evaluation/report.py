"""
Escrita dos relatórios: métricas (YAML plano), tabela de AP por classe e
tabela de ablação (Markdown + YAML).
"""
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Dict, List, Sequence

import numpy as np
import yaml

from evaluation.metrics import MatchResult


# Casas decimais das percentagens emitidas; Δ é calculado já com estes valores
REPORT_DECIMALS = 1


def write_metrics_report(path: str, report: Dict[str, Any]) -> Path:
    """YAML com chaves ordenadas; execuções iguais dão ficheiros iguais byte a byte."""
    target = Path(path)
    target.parent.mkdir(parents=True, exist_ok=True)
    target.write_text(yaml.safe_dump(report, sort_keys=True, default_flow_style=False),
                      encoding='utf-8')
    return target


def format_ap_table(result: MatchResult) -> str:
    lines = ['| Classe | GT | AP@.5 |', '|---|---|---|']
    for class_id in sorted(result.ap):
        lines.append(f"| {class_id} | {result.num_gt[class_id]} | {100 * result.ap[class_id]:.1f} |")
    lines.append(f"| **mAP** | {sum(result.num_gt.values())} | **{100 * result.map50:.1f}** |")
    return '\n'.join(lines)


@dataclass
class AblationCell:
    """
    Resultado de uma linha da grelha.

    Attributes:
        label: Nome da linha
        maps: mAP@.5 por semente (fração)
        params: Número de parâmetros
        reference: Linha de referência para Δ
    """
    label: str
    maps: List[float]
    params: int
    reference: bool = False

    @property
    def mean(self) -> float:
        return round(100.0 * float(np.mean(self.maps)), REPORT_DECIMALS)

    @property
    def spread(self) -> float:
        """Desvio padrão entre sementes (0 com uma semente)."""
        if len(self.maps) < 2:
            return 0.0
        return round(100.0 * float(np.std(self.maps, ddof=1)), REPORT_DECIMALS)


def ablation_rows(cells: Sequence[AblationCell]) -> List[Dict[str, Any]]:
    """Linhas com Δ = mAP da linha − mAP da referência, ambos já arredondados."""
    references = [cell for cell in cells if cell.reference]
    baseline = references[0].mean if references else cells[0].mean
    return [
        {
            'label': cell.label,
            'map50': cell.mean,
            'spread': cell.spread,
            'delta': round(cell.mean - baseline, REPORT_DECIMALS),
            'params': cell.params,
            'reference': cell.reference,
        }
        for cell in cells
    ]


def format_ablation_table(rows: Sequence[Dict[str, Any]]) -> str:
    lines = ['| Configuration | mAP@.5 | ± | Δ | Params |', '|---|---|---|---|---|']
    for row in rows:
        delta = '—' if row['reference'] else f"{row['delta']:+.{REPORT_DECIMALS}f}"
        lines.append(
            f"| {row['label']} | {row['map50']:.{REPORT_DECIMALS}f} | "
            f"{row['spread']:.{REPORT_DECIMALS}f} | {delta} | {row['params'] / 1e6:.3f}M |"
        )
    return '\n'.join(lines)


def write_ablation_report(out_dir: str, grid: str, rows: Sequence[Dict[str, Any]],
                          seeds: Sequence[int], config_hashes: Dict[str, str]) -> Dict[str, Path]:
    base = Path(out_dir)
    base.mkdir(parents=True, exist_ok=True)
    table_path = base / f"ablation_{grid}.md"
    table_path.write_text(format_ablation_table(rows) + '\n', encoding='utf-8')

    flat: Dict[str, Any] = {'grid': grid, 'seeds': list(seeds)}
    for index, row in enumerate(rows):
        prefix = f"row{index}"
        flat[f"{prefix}.label"] = row['label']
        flat[f"{prefix}.map50"] = row['map50']
        flat[f"{prefix}.spread"] = row['spread']
        flat[f"{prefix}.delta"] = row['delta']
        flat[f"{prefix}.params"] = row['params']
        flat[f"{prefix}.config_hash"] = config_hashes[row['label']]
    yaml_path = write_metrics_report(str(base / f"ablation_{grid}.yaml"), flat)
    return {'table': table_path, 'yaml': yaml_path}
