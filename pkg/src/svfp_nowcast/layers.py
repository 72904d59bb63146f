"""Recurrent cells and initialisation shared by the SVFP model and the baseline."""
from __future__ import annotations

import torch
from torch import nn

LEAKY_SLOPE = 0.2


def init_weights(module: nn.Module, slope: float = LEAKY_SLOPE) -> None:
    """Fan-in scaled uniform weights and zero biases for conv/linear layers."""
    for m in module.modules():
        if isinstance(m, (nn.Conv2d, nn.ConvTranspose2d, nn.Linear)):
            nn.init.kaiming_uniform_(m.weight, a=slope, nonlinearity="leaky_relu")
            if m.bias is not None:
                nn.init.zeros_(m.bias)
    # cells re-apply their forget-gate bias after the sweep above
    for m in module.modules():
        if isinstance(m, (ConvLSTMCell, LSTMCell)):
            m.reset_forget_bias()


def _lstm_update(gates: torch.Tensor, c: torch.Tensor) -> tuple[torch.Tensor, torch.Tensor]:
    i, f, g, o = torch.chunk(gates, 4, dim=1)
    c = torch.sigmoid(f) * c + torch.sigmoid(i) * torch.tanh(g)
    h = torch.sigmoid(o) * torch.tanh(c)
    return h, c


class LSTMCell(nn.Module):
    """Fully connected LSTM cell with gate order (input, forget, cell, output)."""

    def __init__(self, input_size: int, hidden_size: int):
        super().__init__()
        self.hidden_size = hidden_size
        self.gates = nn.Linear(input_size + hidden_size, 4 * hidden_size)
        init_weights(self)

    def reset_forget_bias(self) -> None:
        with torch.no_grad():
            self.gates.bias.zero_()
            self.gates.bias[self.hidden_size : 2 * self.hidden_size] = 1.0

    def zero_state(self, batch: int, like: torch.Tensor):
        z = like.new_zeros(batch, self.hidden_size)
        return z, z.clone()

    def forward(self, x, state):
        h, c = state
        return _lstm_update(self.gates(torch.cat([x, h], dim=1)), c)


class ConvLSTMCell(nn.Module):
    """Convolutional LSTM cell; all gate transforms are same-padded convolutions."""

    def __init__(self, in_channels: int, hidden_channels: int, kernel_size: int = 3):
        super().__init__()
        self.in_channels = in_channels
        self.hidden_channels = hidden_channels
        self.kernel_size = kernel_size
        self.gates = nn.Conv2d(in_channels + hidden_channels, 4 * hidden_channels, kernel_size, padding=kernel_size // 2)
        init_weights(self)

    def reset_forget_bias(self) -> None:
        with torch.no_grad():
            self.gates.bias.zero_()
            self.gates.bias[self.hidden_channels : 2 * self.hidden_channels] = 1.0

    def zero_state(self, batch: int, height: int, width: int, like: torch.Tensor):
        z = like.new_zeros(batch, self.hidden_channels, height, width)
        return z, z.clone()

    def forward(self, x, state):
        h, c = state
        return _lstm_update(self.gates(torch.cat([x, h], dim=1)), c)


class ConvLSTMStack(nn.Module):
    """Stacked ConvLSTM cells; the top layer's hidden map is the output."""

    def __init__(self, in_channels: int, hidden_channels: int, n_layers: int, kernel_size: int = 3):
        super().__init__()
        chans = [in_channels] + [hidden_channels] * (n_layers - 1)
        self.cells = nn.ModuleList(ConvLSTMCell(c, hidden_channels, kernel_size) for c in chans)

    def zero_state(self, x: torch.Tensor):
        b, _, h, w = x.shape
        return [cell.zero_state(b, h, w, x) for cell in self.cells]

    def forward(self, x, state=None):
        if state is None:
            state = self.zero_state(x)
        new_state = []
        for cell, s in zip(self.cells, state):
            x, c = cell(x, s)
            new_state.append((x, c))
        return x, new_state
