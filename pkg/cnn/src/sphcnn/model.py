"""Denoising network: four ConvConvT cells around the framelet bridge.

Cell 1 filters the noisy face; the bridge decomposes its output into
the lowpass/detail channels, cells 3 and 4 process them with in-cell
residual additions, the bridge reconstructs, and cell 2 (sharing cell
1's parameters) filters the sum of the original input and the
reconstruction.  ReLU follows every convolution except the final
transpose convolution of the shared cell, whose output must carry
signed pixel values.  Everything is fully convolutional, so any
2^k x 2^k face raster works.
"""

from __future__ import annotations

from dataclasses import dataclass

import torch
from torch import nn

from .bridge import FrameletBridge
from .formats import Bank

PARAM_BUDGET = 30_000


@dataclass(frozen=True)
class ModelConfig:
    """Widths, bridge depth, and the training schedule.

    The trainable cells use 3x3 kernels; the 2x2 stride-2 kernels of
    the network are the fixed bridge convolutions.  The in-cell
    residual additions need shape-preserving layers, which rules out
    even kernels inside the cells.
    """

    outer_channels: int = 32   # shared cells 1 and 2
    inner_channels: int = 40   # cells 3 and 4
    kernel_size: int = 3
    bridge_depth: int = 1
    learning_rate: float = 0.005
    decay: float = 0.9
    epochs: int = 20
    batch_size: int = 20
    seed: int = 0

    def __post_init__(self):
        if self.kernel_size != 3:
            raise ValueError("cell kernels must be 3x3; the 2x2 kernels "
                             "belong to the fixed bridge")
        if self.bridge_depth != 1:
            raise ValueError("only a single framelet level is supported "
                             "inside the bridge")


class SharedCell(nn.Module):
    """Conv + ConvT used for both cell 1 and cell 2; no final ReLU."""

    def __init__(self, channels: int, kernel: int):
        super().__init__()
        pad = kernel // 2
        self.conv = nn.Conv2d(1, channels, kernel, padding=pad)
        self.deconv = nn.ConvTranspose2d(channels, 1, kernel, padding=pad)

    def forward(self, x):
        return self.deconv(torch.relu(self.conv(x)))


class ResidualCell(nn.Module):
    """Conv + ConvT with the conv output added to the ConvT output."""

    def __init__(self, in_channels: int, mid_channels: int, kernel: int):
        super().__init__()
        pad = kernel // 2
        self.conv = nn.Conv2d(in_channels, mid_channels, kernel, padding=pad)
        self.deconv = nn.ConvTranspose2d(mid_channels, mid_channels, kernel,
                                         padding=pad)

    def forward(self, x):
        y = torch.relu(self.conv(x))
        return torch.relu(self.deconv(y) + y)


class SphereDenoiser(nn.Module):
    def __init__(self, bank: Bank, config: ModelConfig = ModelConfig()):
        super().__init__()
        self.config = config
        self.bridge = FrameletBridge(bank)
        channels = self.bridge.channels
        self.shared = SharedCell(config.outer_channels, config.kernel_size)
        self.cell3 = ResidualCell(channels, config.inner_channels,
                                  config.kernel_size)
        self.cell4 = ResidualCell(config.inner_channels, channels,
                                  config.kernel_size)
        count = trainable_parameters(self)
        if count > PARAM_BUDGET:
            raise ValueError(
                f"{count} trainable parameters exceed the budget {PARAM_BUDGET}")

    def forward(self, x):
        filtered = self.shared(x)
        coeffs = self.bridge.decompose(filtered)
        coeffs = self.cell4(self.cell3(coeffs))
        rebuilt = self.bridge.reconstruct(coeffs)
        return self.shared(x + rebuilt)


def trainable_parameters(model: nn.Module) -> int:
    return sum(p.numel() for p in model.parameters() if p.requires_grad)


def build_model(bank: Bank, config: ModelConfig = ModelConfig()) -> SphereDenoiser:
    torch.manual_seed(config.seed)
    return SphereDenoiser(bank, config)
