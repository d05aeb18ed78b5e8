"""Architecture presets for the frame autoencoders.

Three problem families, each with a fixed encoder/decoder layout that the
two frames share; only the input/output channel count differs (the moving
frame carries its node coordinates as extra channels). The latent width is
the one free knob; everything else (channel counts, kernel, stride,
padding, linear widths, weight decay, gradient-loss coefficient) is pinned
per family.
"""
from __future__ import annotations

from dataclasses import dataclass, asdict


@dataclass(frozen=True)
class CaeSpec:
    problem: str
    frame: str                    # "eulerian" | "lagrangian"
    in_channels: int
    space: tuple                  # spatial extent, (n,) or (ny, nx)
    conv_channels: tuple          # output channels of each encoder conv
    kernel: int
    stride: int
    padding: int
    circular: bool                # circular padding on encoder convs
    output_padding: int           # transpose-conv shape correction
    hidden: int                   # width of the middle linear layer
    rank: int                     # latent dimension
    weight_decay: float
    lambda_grad: float

    @property
    def dim(self) -> int:
        return len(self.space)

    @property
    def flat(self) -> int:
        """Width after flattening the last conv output."""
        c, *sp = self.conv_sizes()[-1]
        n = c
        for s in sp:
            n *= s
        return n

    def conv_sizes(self):
        """Per-layer output shapes (channels, space...) of the encoder
        convs; every conv halves each spatial extent."""
        sizes = []
        sp = self.space
        for c in self.conv_channels:
            sp = tuple(s // 2 for s in sp)
            sizes.append((c, *sp))
        return sizes

    def encoder_schedule(self):
        """(layer, in_shape, out_shape) rows matching the reference tables."""
        conv = f"Conv{self.dim}d"
        rows = []
        prev = (self.in_channels, *self.space)
        for size in self.conv_sizes():
            rows.append((f"{conv} with SiLU", prev, size))
            prev = size
        rows.append(("Flatten", prev, (self.flat,)))
        rows.append(("Linear with SiLU", (self.flat,), (self.hidden,)))
        rows.append(("Linear with SiLU", (self.hidden,), (self.rank,)))
        return rows

    def decoder_schedule(self):
        tconv = f"ConvTranspose{self.dim}d"
        rows = [
            ("Linear with SiLU", (self.rank,), (self.hidden,)),
            ("Linear with SiLU", (self.hidden,), (self.flat,)),
        ]
        sizes = self.conv_sizes()
        rows.append(("Unflatten", (self.flat,), sizes[-1]))
        back = sizes[::-1] + [(self.in_channels, *self.space)]
        for a, b in zip(back[:-1], back[1:]):
            rows.append((f"{tconv} with SiLU", a, b))
        return rows

    def to_json(self) -> dict:
        return asdict(self)


def _from_json(d: dict) -> CaeSpec:
    d = dict(d)
    d["space"] = tuple(d["space"])
    d["conv_channels"] = tuple(d["conv_channels"])
    return CaeSpec(**d)


CaeSpec.from_json = staticmethod(_from_json)

# Channel counts per frame: the moving frame prepends one coordinate
# channel per spatial dimension to the state channels.
_FAMILIES = {
    "burgers1d": dict(
        state_channels=1, space=(128,), conv_channels=(32,) * 5,
        kernel=5, stride=2, padding=2, circular=False, output_padding=1,
        hidden=40, weight_decay=1e-10, lambda_grad=0.05,
    ),
    "advdiff2d": dict(
        state_channels=1, space=(40, 40), conv_channels=(16,) * 3,
        kernel=4, stride=2, padding=1, circular=True, output_padding=0,
        hidden=90, weight_decay=1e-11, lambda_grad=0.0,
    ),
    "burgers2d": dict(
        state_channels=2, space=(128, 128), conv_channels=(32,) * 4,
        kernel=5, stride=2, padding=2, circular=False, output_padding=1,
        hidden=100, weight_decay=1e-8, lambda_grad=0.05,
    ),
}

PROBLEMS = tuple(_FAMILIES)
FRAMES = ("eulerian", "lagrangian")
DEFAULT_RANK = 8


def spec_for(problem: str, frame: str, rank: int = DEFAULT_RANK) -> CaeSpec:
    if problem not in _FAMILIES:
        raise ValueError(f"unknown problem {problem!r}; know {sorted(_FAMILIES)}")
    if frame not in FRAMES:
        raise ValueError(f"unknown frame {frame!r}")
    if rank < 1:
        raise ValueError("rank must be positive")
    fam = dict(_FAMILIES[problem])
    state = fam.pop("state_channels")
    dim = len(fam["space"])
    in_channels = state + (dim if frame == "lagrangian" else 0)
    return CaeSpec(problem=problem, frame=frame, in_channels=in_channels,
                   rank=rank, **fam)
