"""
Avaliação: IoU, mAP@.5, contagem de parâmetros, verificação de gradientes
e relatórios.
"""

from evaluation.metrics import (
    EvaluationError,
    ImageMatch,
    MatchResult,
    all_point_ap,
    iou,
    map50,
    match_image,
)
from evaluation.params import count_params, count_params_by_module
from evaluation.gradcheck import GradCheckReport, grad_check
from evaluation.report import (
    AblationCell,
    ablation_rows,
    format_ablation_table,
    format_ap_table,
    write_ablation_report,
    write_metrics_report,
)

__all__ = [
    'EvaluationError',
    'ImageMatch',
    'MatchResult',
    'all_point_ap',
    'iou',
    'map50',
    'match_image',
    'count_params',
    'count_params_by_module',
    'GradCheckReport',
    'grad_check',
    'AblationCell',
    'ablation_rows',
    'format_ablation_table',
    'format_ap_table',
    'write_ablation_report',
    'write_metrics_report'
]
