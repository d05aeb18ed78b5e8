"""Bit-exact persistence: one binary container format for snapshot tensors,
latent trajectories and fitted models, plus deterministic CSV export of
result tables.

Container layout: 8 ASCII bytes "LROMSNP1", an 8-byte little-endian header
length, a UTF-8 JSON header, then the payload as contiguous little-endian
float64 in row-major order. Everything is fixed little-endian regardless of
host. No compression, no appends.
"""
from __future__ import annotations

import json
import struct
from typing import Optional, Sequence

import numpy as np

from .analysis import CoherenceSeries, ErrorTable, NWidthCurve
from .core import Grid, ParamSet, SnapshotSet, TimeAxis
from .dmd import ReducedOperator
from .pdmd import Compressor, PdmdModel

MAGIC = b"LROMSNP1"

# Keys written from SnapshotSet state; extra_header may not collide with them.
STRUCTURAL_KEYS = frozenset(
    ["version", "content", "frame", "shape", "channel_names",
     "param_names", "param_values", "time", "grid", "model"]
)


class ContainerError(ValueError):
    """Malformed or inconsistent container file."""


def _header_bytes(header: dict) -> bytes:
    # sort_keys + fixed separators -> byte-identical output for equal input;
    # Python's float repr round-trips binary64 exactly.
    return json.dumps(header, sort_keys=True, separators=(",", ":")).encode("utf-8")


def _grid_to_json(g: Grid) -> dict:
    return {
        "dim": g.dim,
        "bounds": [[a, b] for a, b in g.bounds],
        "points": list(g.points),
        "periodic": list(g.periodic),
    }


def _grid_from_json(d: dict) -> Grid:
    return Grid(
        bounds=tuple((float(a), float(b)) for a, b in d["bounds"]),
        points=tuple(int(n) for n in d["points"]),
        periodic=tuple(bool(p) for p in d["periodic"]),
    )


def _write_raw(path, header: dict, payload: np.ndarray):
    hb = _header_bytes(header)
    body = np.ascontiguousarray(payload, dtype="<f8").tobytes()
    with open(path, "wb") as f:
        f.write(MAGIC)
        f.write(struct.pack("<Q", len(hb)))
        f.write(hb)
        f.write(body)


def _read_raw(path) -> tuple[dict, np.ndarray]:
    with open(path, "rb") as f:
        magic = f.read(8)
        if magic != MAGIC:
            raise ContainerError(f"bad magic {magic!r}; not a {MAGIC.decode()} container")
        (hlen,) = struct.unpack("<Q", f.read(8))
        hb = f.read(hlen)
        if len(hb) != hlen:
            raise ContainerError("truncated header")
        try:
            header = json.loads(hb.decode("utf-8"))
        except (UnicodeDecodeError, json.JSONDecodeError) as e:
            raise ContainerError(f"unreadable header: {e}") from e
        body = f.read()
    shape = tuple(int(n) for n in header["shape"])
    expect = 8 * int(np.prod(shape)) if shape else 8
    if len(body) != expect:
        raise ContainerError(
            f"payload length {len(body)} does not match shape {list(shape)} "
            f"(expected {expect} bytes)"
        )
    payload = np.frombuffer(body, dtype="<f8").astype(np.float64).reshape(shape)
    return header, payload


def read_payload(path, allow_nan: bool = True) -> tuple[dict, np.ndarray]:
    """Raw (header, array) access without snapshot-set validation. This is
    the NaN-tolerant escape hatch; read_container always hands the payload
    to SnapshotSet, which requires finite entries."""
    header, payload = _read_raw(path)
    if not allow_nan and np.isnan(payload).any():
        raise ContainerError("NaN in payload")
    return header, payload


def write_container(s: SnapshotSet, path, extra_header: Optional[dict] = None,
                    created_at: Optional[str] = None):
    """Write a snapshot container. Latent sets are stored with the singleton
    channel axis squeezed ([n_param, n_time, r]); field sets keep the full
    [n_param, n_time, n_channel, space...] shape.

    extra_header keys ride along verbatim (this is how unknown keys read
    from another tool survive a round trip); structural keys are reserved.
    created_at is optional free-form provenance, never part of equality, and
    omitted by default so identical inputs give byte-identical files.
    """
    header = {
        "version": 1,
        "content": "snapshots",
        "frame": s.frame,
        "channel_names": list(s.channel_names),
        "param_names": list(s.params.names),
        "param_values": s.params.values.tolist(),
        "time": {"t0": s.times.t0, "dt": s.times.dt, "count": s.times.count},
        "grid": _grid_to_json(s.grid),
    }
    if s.frame == "latent" and s.n_channels == 1:
        payload = s.data[:, :, 0, :]
    else:
        payload = s.data
    header["shape"] = list(payload.shape)
    if extra_header:
        clash = STRUCTURAL_KEYS.intersection(extra_header)
        if clash:
            raise ValueError(f"extra_header may not set structural keys {sorted(clash)}")
        header.update(extra_header)
    if created_at is not None:
        header["created_at"] = created_at
    _write_raw(path, header, payload)


def read_container_full(path, allow_nan: bool = False) -> tuple[SnapshotSet, dict]:
    """Read a snapshot container along with its complete header (including
    any keys this package does not know about)."""
    header, payload = _read_raw(path)
    if header.get("content", "snapshots") != "snapshots":
        raise ContainerError(f"container holds {header.get('content')!r}, not snapshots")
    if not allow_nan and np.isnan(payload).any():
        raise ContainerError("NaN in payload (pass allow_nan=True to override)")
    frame = header["frame"]
    data = payload
    if frame == "latent" and data.ndim == 3:
        data = data[:, :, None, :]
    s = SnapshotSet(
        grid=_grid_from_json(header["grid"]),
        params=ParamSet(tuple(header["param_names"]),
                        np.asarray(header["param_values"], dtype=np.float64)),
        times=TimeAxis(float(header["time"]["t0"]), float(header["time"]["dt"]),
                       int(header["time"]["count"])),
        frame=frame,
        channel_names=tuple(header["channel_names"]),
        data=data,
    )
    return s, header


def read_container(path, allow_nan: bool = False) -> SnapshotSet:
    return read_container_full(path, allow_nan=allow_nan)[0]


def extra_header_of(header: dict) -> dict:
    """The non-structural keys of a header read back from disk, minus
    created_at; pass to write_container to carry them through a transform."""
    return {k: v for k, v in header.items()
            if k not in STRUCTURAL_KEYS and k != "created_at"}


# ---------------------------------------------------------------- models

def _pack_arrays(arrays: dict[str, np.ndarray]) -> tuple[list, np.ndarray]:
    layout = [[name, list(a.shape)] for name, a in arrays.items()]
    flat = np.concatenate([np.ascontiguousarray(a, dtype=np.float64).ravel()
                           for a in arrays.values()]) if arrays else np.zeros(0)
    return layout, flat


def _unpack_arrays(layout: list, flat: np.ndarray) -> dict[str, np.ndarray]:
    out, pos = {}, 0
    for name, shape in layout:
        n = int(np.prod(shape)) if shape else 1
        out[name] = flat[pos : pos + n].reshape([int(s) for s in shape]).copy()
        pos += n
    if pos != flat.size:
        raise ContainerError("model payload length does not match layout")
    return out


def write_pdmd_model(model: PdmdModel, path):
    comp = model.compressor
    arrays = {}
    if comp.kind == "pod":
        arrays["basis"] = comp.basis
        arrays["singular_values"] = comp.singular_values
    arrays["operators"] = model.operators
    arrays["anchors"] = model.anchors
    layout, flat = _pack_arrays(arrays)
    header = {
        "version": 1,
        "content": "pdmd_model",
        "frame": model.frame,
        "shape": [int(flat.size)],
        "channel_names": list(comp.channel_names),
        "param_names": list(model.params.names),
        "param_values": model.params.values.tolist(),
        "time": {"t0": model.train_times.t0, "dt": model.train_times.dt,
                 "count": model.train_times.count},
        "grid": _grid_to_json(model.grid),
        "model": {
            "compressor": comp.kind,
            "rank": model.rank,
            "kernel": model.kernel,
            "space_shape": list(comp.space_shape),
            "normalization": (
                {"offset": np.asarray(comp.normalization["offset"]).tolist(),
                 "scale": np.asarray(comp.normalization["scale"]).tolist()}
                if comp.normalization is not None else None
            ),
            "arrays": layout,
        },
    }
    _write_raw(path, header, flat)


def read_pdmd_model(path) -> PdmdModel:
    header, flat = _read_raw(path)
    if header.get("content") != "pdmd_model":
        raise ContainerError(f"container holds {header.get('content')!r}, not a pdmd model")
    m = header["model"]
    arrays = _unpack_arrays(m["arrays"], flat)
    norm = m.get("normalization")
    if norm is not None:
        norm = {"offset": np.asarray(norm["offset"], dtype=np.float64),
                "scale": np.asarray(norm["scale"], dtype=np.float64)}
    comp = Compressor(
        kind=m["compressor"],
        rank=int(m["rank"]),
        basis=arrays.get("basis"),
        singular_values=arrays.get("singular_values"),
        normalization=norm,
        channel_names=tuple(header["channel_names"]),
        space_shape=tuple(int(n) for n in m["space_shape"]),
    )
    return PdmdModel(
        compressor=comp,
        params=ParamSet(tuple(header["param_names"]),
                        np.asarray(header["param_values"], dtype=np.float64)),
        operators=arrays["operators"],
        anchors=arrays["anchors"],
        frame=header["frame"],
        grid=_grid_from_json(header["grid"]),
        train_times=TimeAxis(float(header["time"]["t0"]), float(header["time"]["dt"]),
                             int(header["time"]["count"])),
        kernel=m["kernel"],
    )


def write_reduced_operator(op: ReducedOperator, path):
    arrays = {"basis": op.basis, "operator": op.operator,
              "singular_values": op.singular_values}
    layout, flat = _pack_arrays(arrays)
    header = {
        "version": 1,
        "content": "reduced_operator",
        "frame": op.frame,
        "shape": [int(flat.size)],
        "model": {
            "rank": op.rank,
            "param": None if op.param is None else np.asarray(op.param).tolist(),
            "energy_fraction": op.energy_fraction,
            "degenerate": bool(op.degenerate),
            "arrays": layout,
        },
    }
    _write_raw(path, header, flat)


def read_reduced_operator(path) -> ReducedOperator:
    header, flat = _read_raw(path)
    if header.get("content") != "reduced_operator":
        raise ContainerError(f"container holds {header.get('content')!r}, not a reduced operator")
    m = header["model"]
    arrays = _unpack_arrays(m["arrays"], flat)
    param = m.get("param")
    return ReducedOperator(
        basis=arrays["basis"],
        operator=arrays["operator"],
        singular_values=arrays["singular_values"],
        energy_fraction=float(m["energy_fraction"]),
        frame=header["frame"],
        param=None if param is None else np.asarray(param, dtype=np.float64),
        degenerate=bool(m["degenerate"]),
    )


# ------------------------------------------------------------------ CSV

def _fmt(x) -> str:
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    return format(float(x), ".17g")


def export_csv(table, path, param_names: Optional[Sequence] = None):
    """Write a result table as UTF-8 CSV: header row, 17 significant digits,
    LF line endings, rows in parameter-major then time order. Accepts an
    ErrorTable, NWidthCurve, CoherenceSeries, or a (columns, rows) pair; an
    empty table produces a header-only file."""
    if isinstance(table, ErrorTable):
        d = table.param_values.shape[1]
        names = list(param_names) if param_names else [f"mu_{j}" for j in range(d)]
        if len(names) != d:
            raise ValueError("param_names length does not match table")
        cols = names + ["t", "rel_l2_error"]
        rows = [[*mu, t, e] for mu, t, e in table.rows()]
    elif isinstance(table, NWidthCurve):
        cols = ["n", "d_hat", "d_hat_normalized"]
        rows = [[int(n), d, dn] for n, d, dn in
                zip(table.n, table.d_hat, table.d_hat_normalized)]
    elif isinstance(table, CoherenceSeries):
        n_p = table.gamma.shape[0]
        if n_p == 1:
            cols = ["t", "gamma"]
            rows = [[t, g] for t, g in zip(table.times, table.gamma[0])]
        else:
            cols = ["param_index", "t", "gamma"]
            rows = [[i, t, g] for i in range(n_p)
                    for t, g in zip(table.times, table.gamma[i])]
    else:
        cols, rows = table
        cols = list(cols)
        rows = [list(r) for r in rows]
    lines = [",".join(cols)]
    for r in rows:
        lines.append(",".join(_fmt(v) for v in r))
    with open(path, "w", encoding="utf-8", newline="\n") as f:
        f.write("\n".join(lines) + "\n")
