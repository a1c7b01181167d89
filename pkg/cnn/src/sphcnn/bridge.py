"""Fixed framelet bridge: one-level decomposition and reconstruction
as non-trainable strided convolutions.

The analysis matrix columns become the 7 kernels of a 2x2 stride-2
convolution; the synthesis rows become the kernels of the matching
transpose convolution, so reconstruct(decompose(x)) == x up to single
precision.  The 2x2 cell layout matches the face rasters: children
(left-bottom, right-bottom, left-top, right-top) sit at grid positions
(1,0), (1,1), (0,0), (0,1).
"""

from __future__ import annotations

import numpy as np
import torch
from torch import nn

from .formats import Bank

# raster (row, col) -> child index for one 2x2 sibling cell
_CELL_CHILD = {(0, 0): 2, (0, 1): 3, (1, 0): 0, (1, 1): 1}


class FrameletBridge(nn.Module):
    """Frozen decompose/reconstruct pair derived from a filter bank."""

    def __init__(self, bank: Bank):
        super().__init__()
        if bank.children != 4:
            raise ValueError("the bridge expects a 4-child bank")
        channels = bank.directions + 1
        analysis = np.zeros((channels, 1, 2, 2), dtype=np.float32)
        synthesis = np.zeros((channels, 1, 2, 2), dtype=np.float32)
        stacked = bank.synthesis  # (n+1, ell)
        for (row, col), child in _CELL_CHILD.items():
            analysis[:, 0, row, col] = bank.analysis[child, :]
            synthesis[:, 0, row, col] = stacked[:, child]
        self.channels = channels
        self.analysis = nn.Parameter(torch.from_numpy(analysis),
                                     requires_grad=False)
        self.synthesis = nn.Parameter(torch.from_numpy(synthesis),
                                      requires_grad=False)

    def decompose(self, x: torch.Tensor) -> torch.Tensor:
        """(N, 1, 2s, 2s) -> (N, n+1, s, s); channel 0 is the lowpass."""
        return nn.functional.conv2d(x, self.analysis, stride=2)

    def reconstruct(self, coeffs: torch.Tensor) -> torch.Tensor:
        """(N, n+1, s, s) -> (N, 1, 2s, 2s)."""
        return nn.functional.conv_transpose2d(coeffs, self.synthesis, stride=2)

    def forward(self, x: torch.Tensor) -> torch.Tensor:
        return self.reconstruct(self.decompose(x))
