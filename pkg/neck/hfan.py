"""
Hierarchical Feature Aggregation Neck (HFAN).

Um ASFB por nível em cada passagem:
    descendente  T5 ← (·, P5, P4), T4 ← (T5, P4, P3), T3 ← (T4, P3, P2), T2 ← (T3, P2, ·)
    ascendente   O2 ← (T3, T2, ·), O3 ← (T4, T3, O2), O4 ← (T5, T4, O3), O5 ← (·, T5, O4)

Sem estrutura hierárquica (hierarchical=False) só existe a passagem
descendente.
"""
import logging
from typing import Dict

import torch.nn as nn

from neck.asfb import AdaptiveScaleFusionBlock
from neck.pyramid import PYRAMID_LEVELS, FeaturePyramid, check_pyramid


logger = logging.getLogger(__name__)


class HierarchicalFeatureAggregationNeck(nn.Module):
    """
    Args:
        channels: Canais por nível {2: C2, ..., 5: C5}
        use_cru, use_gad, use_awf: Interruptores de ablação dos componentes
        hierarchical: False → sem passagem ascendente
    """

    def __init__(self, channels: Dict[int, int], use_cru: bool = True, use_gad: bool = True,
                 use_awf: bool = True, hierarchical: bool = True):
        super().__init__()
        self.levels = PYRAMID_LEVELS
        self.hierarchical = hierarchical
        top, bottom = self.levels[-1], self.levels[0]
        toggles = dict(use_cru=use_cru, use_gad=use_gad, use_awf=use_awf)

        self.top_down = nn.ModuleDict({
            str(level): AdaptiveScaleFusionBlock(
                channels[level + 1] if level < top else None,
                channels[level],
                channels[level - 1] if level > bottom else None,
                **toggles,
            )
            for level in self.levels
        })
        self.bottom_up = nn.ModuleDict()
        if hierarchical:
            self.bottom_up = nn.ModuleDict({
                str(level): AdaptiveScaleFusionBlock(
                    channels[level + 1] if level < top else None,
                    channels[level],
                    channels[level - 1] if level > bottom else None,
                    **toggles,
                )
                for level in self.levels
            })
        logger.debug("HFAN: %d ASFB (hierárquico=%s)",
                     len(self.top_down) + len(self.bottom_up), hierarchical)

    def forward(self, pyramid: FeaturePyramid) -> FeaturePyramid:
        check_pyramid(pyramid, self.levels)
        top, bottom = self.levels[-1], self.levels[0]

        td: FeaturePyramid = {}
        for level in reversed(self.levels):
            td[level] = self.top_down[str(level)](
                td.get(level + 1),
                pyramid[level],
                pyramid[level - 1] if level > bottom else None,
            )
        if not self.hierarchical:
            return td

        out: FeaturePyramid = {}
        for level in self.levels:
            out[level] = self.bottom_up[str(level)](
                td[level + 1] if level < top else None,
                td[level],
                out.get(level - 1),
            )
        return out
