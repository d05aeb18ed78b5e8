"""Reader/writer for the lagrom snapshot container format.

This is an independent implementation of the documented byte layout; the
two packages exchange data only through these files (and the lagrom CLI),
never through imports. Layout: 8 ASCII magic bytes "LROMSNP1", an 8-byte
little-endian header length, a canonical JSON header (sorted keys, no
whitespace), then the payload as contiguous row-major little-endian
float64. Latent-frame sets store the payload squeezed to
[n_param, n_time, r]; field sets keep [n_param, n_time, n_channel, space...].
"""
from __future__ import annotations

import json
import struct

import numpy as np

MAGIC = b"LROMSNP1"


class ContainerError(ValueError):
    """Malformed or inconsistent container file."""


def header_bytes(header: dict) -> bytes:
    return json.dumps(header, sort_keys=True, separators=(",", ":")).encode("utf-8")


def write(path, header: dict, payload: np.ndarray) -> None:
    """Write one container. header['shape'] is set from the payload."""
    payload = np.ascontiguousarray(payload, dtype="<f8")
    header = dict(header)
    header["shape"] = list(payload.shape)
    hb = header_bytes(header)
    with open(path, "wb") as f:
        f.write(MAGIC)
        f.write(struct.pack("<Q", len(hb)))
        f.write(hb)
        f.write(payload.tobytes())


def read(path, allow_nan: bool = False) -> tuple[dict, np.ndarray]:
    with open(path, "rb") as f:
        magic = f.read(8)
        if magic != MAGIC:
            raise ContainerError(f"bad magic {magic!r}")
        raw = f.read(8)
        if len(raw) != 8:
            raise ContainerError("truncated header length")
        (hlen,) = struct.unpack("<Q", raw)
        hb = f.read(hlen)
        if len(hb) != hlen:
            raise ContainerError("truncated header")
        try:
            header = json.loads(hb.decode("utf-8"))
        except (UnicodeDecodeError, json.JSONDecodeError) as e:
            raise ContainerError(f"unreadable header: {e}") from e
        body = f.read()
    shape = tuple(int(n) for n in header["shape"])
    if len(body) != 8 * int(np.prod(shape)):
        raise ContainerError(f"payload length {len(body)} does not match shape {list(shape)}")
    data = np.frombuffer(body, dtype="<f8").astype(np.float64).reshape(shape)
    if not allow_nan and not np.isfinite(data).all():
        raise ContainerError("non-finite values in payload")
    return header, data


def read_fields(path) -> tuple[dict, np.ndarray]:
    """Read a field container as [n_param, n_time, n_channel, space...]."""
    header, data = read(path)
    if header.get("content") != "snapshots":
        raise ContainerError(f"expected a snapshot container, got {header.get('content')!r}")
    if header.get("frame") == "latent":
        raise ContainerError("expected field snapshots, got a latent container")
    if data.ndim < 4:
        raise ContainerError(f"field payload must be at least 4-dimensional, got {data.ndim}")
    return header, data


def read_latents(path) -> tuple[dict, np.ndarray]:
    """Read a latent container as [n_param, n_time, r]."""
    header, data = read(path)
    if header.get("frame") != "latent":
        raise ContainerError(f"expected a latent container, got frame {header.get('frame')!r}")
    if data.ndim == 4 and data.shape[2] == 1:   # tolerate unsqueezed writers
        data = data[:, :, 0, :]
    if data.ndim != 3:
        raise ContainerError(f"latent payload must be [n_param, n_time, r], got shape {list(data.shape)}")
    return header, data


def derived_header(src: dict, content: str, frame: str, channel_names,
                   extra: dict = None) -> dict:
    """Header for an output container that keeps the source's grid, parameter
    and time metadata but carries new content."""
    out = {
        "version": src.get("version", 1),
        "content": content,
        "frame": frame,
        "channel_names": list(channel_names),
        "param_names": list(src["param_names"]),
        "param_values": src["param_values"],
        "time": dict(src["time"]),
        "grid": src["grid"],
    }
    if extra:
        out.update(extra)
    return out
