"""Convolutional autoencoder built from a CaeSpec."""
from __future__ import annotations

import torch
from torch import nn

from .specs import CaeSpec


def _conv(spec: CaeSpec, cin: int, cout: int) -> nn.Module:
    cls = nn.Conv1d if spec.dim == 1 else nn.Conv2d
    return cls(cin, cout, spec.kernel, stride=spec.stride,
               padding=spec.padding,
               padding_mode="circular" if spec.circular else "zeros")


def _tconv(spec: CaeSpec, cin: int, cout: int) -> nn.Module:
    cls = nn.ConvTranspose1d if spec.dim == 1 else nn.ConvTranspose2d
    # transpose convs only support zero padding; for periodic data the
    # encoder's circular reads keep the seam information available
    return cls(cin, cout, spec.kernel, stride=spec.stride,
               padding=spec.padding, output_padding=spec.output_padding)


class Cae(nn.Module):
    """Encoder/decoder pair; every layer, the last included, is gated
    through SiLU."""

    def __init__(self, spec: CaeSpec):
        super().__init__()
        self.spec = spec
        act = nn.SiLU

        enc: list[nn.Module] = []
        chans = (spec.in_channels,) + spec.conv_channels
        for cin, cout in zip(chans[:-1], chans[1:]):
            enc += [_conv(spec, cin, cout), act()]
        enc += [nn.Flatten(),
                nn.Linear(spec.flat, spec.hidden), act(),
                nn.Linear(spec.hidden, spec.rank), act()]
        self.encoder = nn.Sequential(*enc)

        dec: list[nn.Module] = [
            nn.Linear(spec.rank, spec.hidden), act(),
            nn.Linear(spec.hidden, spec.flat), act(),
            nn.Unflatten(1, spec.conv_sizes()[-1]),
        ]
        back = chans[::-1]
        for cin, cout in zip(back[:-1], back[1:]):
            dec += [_tconv(spec, cin, cout), act()]
        self.decoder = nn.Sequential(*dec)

    def encode(self, x: torch.Tensor) -> torch.Tensor:
        return self.encoder(x)

    def decode(self, z: torch.Tensor) -> torch.Tensor:
        return self.decoder(z)

    def forward(self, x: torch.Tensor) -> torch.Tensor:
        return self.decode(self.encode(x))


def build(spec: CaeSpec, seed: int | None = None) -> Cae:
    """Construct a Cae; with a seed the parameter draw is reproducible."""
    if seed is not None:
        torch.manual_seed(seed)
    return Cae(spec)
