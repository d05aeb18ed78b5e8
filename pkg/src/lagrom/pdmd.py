"""Parametric DMD in either frame: one global linear compression, a latent
one-step operator per training parameter, and radial-basis interpolation of
evolved latent states across the parameter space at prediction time.

The pipeline is frame-agnostic: the same code runs on fixed-frame fields and
on augmented moving-frame stacks; only the input data (and the final
reconstruction step) differ.
"""
from __future__ import annotations

import warnings
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .core import (
    Grid,
    ParamSet,
    RankDeficiency,
    SnapshotSet,
    TimeAxis,
    flatten_snapshots,
    stacked_matrix,
)
from .dmd import SV_FLOOR, LatentTrajectory, fit_latent_dmd
from .lagframe import reconstruct_eulerian, unstack


@dataclass(frozen=True)
class Compressor:
    """Linear (pod) or file-based (external) snapshot compressor.

    pod: basis columns span the leading left singular subspace of the global
    training matrix; optional per-channel affine normalization is applied
    before the SVD and recorded here so decoding can invert it.
    external: latent trajectories come from containers produced elsewhere;
    this object cannot decode by itself.
    """

    kind: str
    rank: int
    basis: Optional[np.ndarray] = None
    singular_values: Optional[np.ndarray] = None
    normalization: Optional[dict] = None
    channel_names: tuple[str, ...] = ()
    space_shape: tuple[int, ...] = ()
    latent_data: Optional[SnapshotSet] = None

    def __post_init__(self):
        if self.kind not in ("pod", "external"):
            raise ValueError(f"unknown compressor kind {self.kind!r}")
        if self.kind == "pod":
            if self.basis is None:
                raise ValueError("pod compressor needs a basis")
            gram = self.basis.T @ self.basis
            if np.linalg.norm(gram - np.eye(self.rank)) > 1e-10:
                raise ValueError("pod basis lost orthonormality")
        if self.normalization is not None:
            if np.any(np.asarray(self.normalization["scale"]) == 0):
                raise ValueError("normalization scale must be nonzero")

    def _apply_norm(self, M: np.ndarray) -> np.ndarray:
        if self.normalization is None:
            return M
        n_ch = len(self.channel_names)
        blocks = M.reshape(n_ch, -1, M.shape[1])
        off = np.asarray(self.normalization["offset"])[:, None, None]
        sc = np.asarray(self.normalization["scale"])[:, None, None]
        return ((blocks - off) / sc).reshape(M.shape)

    def _undo_norm(self, M: np.ndarray) -> np.ndarray:
        if self.normalization is None:
            return M
        n_ch = len(self.channel_names)
        blocks = M.reshape(n_ch, -1, M.shape[1])
        off = np.asarray(self.normalization["offset"])[:, None, None]
        sc = np.asarray(self.normalization["scale"])[:, None, None]
        return (blocks * sc + off).reshape(M.shape)

    def encode_matrix(self, M: np.ndarray) -> np.ndarray:
        """Latent columns for a matrix of flattened snapshot columns."""
        if self.kind != "pod":
            raise ValueError("only the pod compressor encodes in-process")
        return self.basis.T @ self._apply_norm(M)

    def decode_matrix(self, H: np.ndarray) -> np.ndarray:
        if self.kind != "pod":
            raise ValueError("only the pod compressor decodes in-process")
        return self._undo_norm(self.basis @ H)


def fit_pod(snaps: SnapshotSet, r: int, normalize: bool = False) -> Compressor:
    """Global truncated SVD over every training parameter and instant.

    normalize=False by default: the moving-frame stacks owe their exact low
    rank to the raw channel structure, and scaling would be recorded noise.

    Ranks beyond the numerical content of the data are allowed as long as
    the singular values stay strictly positive: moving-frame training sets
    are often low-rank to near machine precision, and a requested rank past
    that point just carries inert latent coordinates (the basis is still
    orthonormal, and the latent one-step fits cut those directions at their
    own floor). Refusal is reserved for structural deficiency.
    """
    M = stacked_matrix(snaps)
    cap = min(M.shape)
    if r < 1 or r > cap:
        raise RankDeficiency(f"data supports rank at most {cap}, requested {r}")
    norm = None
    if normalize:
        n_ch = snaps.n_channels
        blocks = M.reshape(n_ch, -1, M.shape[1])
        off = blocks.mean(axis=(1, 2))
        sc = blocks.std(axis=(1, 2))
        sc[sc == 0] = 1.0
        norm = {"offset": off, "scale": sc}
        M = ((blocks - off[:, None, None]) / sc[:, None, None]).reshape(M.shape)
    Phi, S, _ = np.linalg.svd(M, full_matrices=False)
    achievable = int(np.count_nonzero(S > 0.0))
    if r > achievable:
        raise RankDeficiency(f"data supports rank {achievable}, requested {r}")
    return Compressor(
        kind="pod",
        rank=r,
        basis=Phi[:, :r].copy(),
        singular_values=S.copy(),
        normalization=norm,
        channel_names=snaps.channel_names,
        space_shape=snaps.data.shape[3:],
    )


def external_compressor(latents: SnapshotSet, channel_names, space_shape) -> Compressor:
    """Wrap a latent container produced by an external encoder."""
    if latents.frame != "latent":
        raise ValueError("external compressor needs a latent-frame container")
    return Compressor(
        kind="external",
        rank=latents.data.shape[3],
        channel_names=tuple(channel_names),
        space_shape=tuple(space_shape),
        latent_data=latents,
    )


@dataclass(frozen=True)
class RbfInterpolant:
    """Cubic-kernel interpolant over parameter space with a linear tail.

    Parameter-free (no shape parameter); exact on linear functions. One
    weight column per output dimension.
    """

    nodes: np.ndarray
    weights: np.ndarray
    tail: np.ndarray

    @staticmethod
    def fit(nodes: np.ndarray, values: np.ndarray) -> "RbfInterpolant":
        """nodes: n_p x d; values: n_p x n_out."""
        nodes = np.atleast_2d(np.asarray(nodes, dtype=np.float64))
        values = np.asarray(values, dtype=np.float64)
        if values.ndim == 1:
            values = values[:, None]
        n, d = nodes.shape
        dist = np.linalg.norm(nodes[:, None, :] - nodes[None, :, :], axis=2)
        A = np.zeros((n + d + 1, n + d + 1))
        A[:n, :n] = dist**3
        A[:n, n] = 1.0
        A[:n, n + 1 :] = nodes
        A[n, :n] = 1.0
        A[n + 1 :, :n] = nodes.T
        rhs = np.zeros((n + d + 1, values.shape[1]))
        rhs[:n] = values
        try:
            sol = np.linalg.solve(A, rhs)
        except np.linalg.LinAlgError as e:
            raise ValueError("singular interpolation system (duplicate parameter nodes?)") from e
        return RbfInterpolant(nodes, sol[:n], sol[n:])

    def __call__(self, mu: np.ndarray) -> np.ndarray:
        mu = np.atleast_2d(np.asarray(mu, dtype=np.float64))
        dist = np.linalg.norm(mu[:, None, :] - self.nodes[None, :, :], axis=2)
        out = dist**3 @ self.weights + self.tail[0][None, :] + mu @ self.tail[1:]
        return out[0] if out.shape[0] == 1 else out


@dataclass(frozen=True)
class PdmdModel:
    """Everything the online stage needs: compressor, per-parameter latent
    operators, anchor latents at the last training instant."""

    compressor: Compressor
    params: ParamSet
    operators: np.ndarray  # [n_p, r, r]
    anchors: np.ndarray    # [n_p, r]
    frame: str
    grid: Grid
    train_times: TimeAxis
    kernel: str = "cubic_linear_tail"

    def __post_init__(self):
        if self.operators.shape[0] != self.params.n_params:
            raise ValueError("operator count does not match parameters")
        if self.operators.shape[1:] != (self.rank, self.rank):
            raise ValueError("operators must be r x r")
        if not np.isfinite(self.anchors).all():
            raise ValueError("non-finite anchor state")

    @property
    def rank(self) -> int:
        return self.anchors.shape[1]


def _latent_trajectories(train: SnapshotSet, compressor: Compressor, r: int) -> np.ndarray:
    """[n_p, r, n_t] latent coordinates for every training parameter."""
    if compressor.kind == "pod":
        if r > compressor.rank:
            raise RankDeficiency(f"compressor holds rank {compressor.rank}, requested {r}")
        out = np.empty((train.params.n_params, r, train.times.count))
        for i in range(train.params.n_params):
            H = compressor.encode_matrix(flatten_snapshots(train, i))
            out[i] = H[:r]
        return out
    lat = compressor.latent_data
    if lat.data.shape[3] != r:
        raise ValueError(
            f"external latents have dimension {lat.data.shape[3]}, requested {r} "
            "(external latent axes cannot be truncated)"
        )
    if lat.params.n_params != train.params.n_params or lat.times.count != train.times.count:
        raise ValueError("external latent container does not match the training set")
    return lat.data[:, :, 0, :].transpose(0, 2, 1).copy()


def fit_pdmd(train: SnapshotSet, compressor: Compressor, r: int) -> PdmdModel:
    """Offline stage: encode every parameter's trajectory, fit one latent
    operator per parameter, remember the final-instant latents as anchors."""
    H_all = _latent_trajectories(train, compressor, r)
    n_p = train.params.n_params
    ops = np.empty((n_p, r, r))
    anchors = np.empty((n_p, r))
    for i in range(n_p):
        traj = LatentTrajectory(H_all[i], times=train.times, param=train.params.row(i))
        try:
            ops[i] = fit_latent_dmd(traj)
        except Exception as e:
            raise type(e)(f"latent fit failed for parameter row {i}: {e}") from e
        anchors[i] = H_all[i][:, -1]
    return PdmdModel(
        compressor=compressor,
        params=train.params,
        operators=ops,
        anchors=anchors,
        frame=train.frame,
        grid=train.grid,
        train_times=train.times,
    )


def _evolved_latents(model: PdmdModel, k_max: int) -> np.ndarray:
    """[k_max+1, n_p, r]: anchors advanced 0..k_max steps per parameter."""
    n_p, r = model.anchors.shape
    out = np.empty((k_max + 1, n_p, r))
    out[0] = model.anchors
    for k in range(1, k_max + 1):
        for i in range(n_p):
            out[k, i] = model.operators[i] @ out[k - 1, i]
    return out


def _check_inside_box(model: PdmdModel, mu: np.ndarray):
    lo = model.params.values.min(axis=0)
    hi = model.params.values.max(axis=0)
    if np.any(mu < lo) or np.any(mu > hi):
        warnings.warn(
            f"parameter {mu} outside the training bounding box [{lo}, {hi}]; "
            "extrapolating", stacklevel=3
        )


def predict_pdmd(model: PdmdModel, mu_star, k: int) -> np.ndarray:
    """Online stage for one parameter and horizon: evolve every training
    anchor k steps, interpolate each latent dimension across parameters,
    evaluate at mu_star."""
    if k < 1:
        raise ValueError("k must be at least 1")
    mu = np.atleast_1d(np.asarray(mu_star, dtype=np.float64))
    _check_inside_box(model, mu)
    evolved = _evolved_latents(model, k)[k]  # [n_p, r]
    interp = RbfInterpolant.fit(model.params.values, evolved)
    return np.atleast_1d(interp(mu[None, :]))


def predict_pdmd_trajectory(model: PdmdModel, mu_star, steps: int) -> np.ndarray:
    """[steps, r] latents for horizons 1..steps (one interpolant per step)."""
    if steps < 1:
        raise ValueError("steps must be at least 1")
    mu = np.atleast_1d(np.asarray(mu_star, dtype=np.float64))
    _check_inside_box(model, mu)
    evolved = _evolved_latents(model, steps)
    out = np.empty((steps, model.rank))
    for k in range(1, steps + 1):
        interp = RbfInterpolant.fit(model.params.values, evolved[k])
        out[k - 1] = np.atleast_1d(interp(mu[None, :]))
    return out


def decode_and_reconstruct(model: PdmdModel, latent: np.ndarray, target: Grid) -> np.ndarray:
    """Decode one latent state and express it on the fixed target grid.

    Fixed-frame models decode directly to the field; moving-frame models
    decode to an augmented stack that is unstacked and reconstructed.
    Returns [n_state_channels, *target.shape].
    """
    latent = np.asarray(latent, dtype=np.float64).reshape(-1)
    if latent.shape[0] != model.rank:
        raise ValueError(f"latent length {latent.shape[0]} != rank {model.rank}")
    if model.compressor.kind == "external":
        raise ValueError(
            "external compressor decodes through exchange files; use "
            "export_latents / reconstruct_decoded_stack"
        )
    flat = model.compressor.decode_matrix(latent[:, None])[:, 0]
    n_ch = len(model.compressor.channel_names)
    block = flat.reshape(n_ch, *model.compressor.space_shape)
    if model.frame == "eulerian":
        if model.grid.shape != target.shape or model.grid.bounds != target.bounds:
            raise ValueError("fixed-frame decode requires target == training grid")
        return block
    state = unstack(block, model.grid, model.compressor.channel_names[model.grid.dim :])
    return reconstruct_eulerian(state, target)


def export_latents(model: PdmdModel, latents: np.ndarray, times: TimeAxis, path: str):
    """Write predicted latents to the exchange container for an external
    decoder. latents: [n_steps, r] for one parameter or [n_p, n_steps, r]."""
    from .io import write_container

    latents = np.asarray(latents, dtype=np.float64)
    if latents.ndim == 2:
        latents = latents[None]
    data = latents[:, :, None, :]
    params = model.params if latents.shape[0] == model.params.n_params else ParamSet(
        model.params.names, model.params.values[: latents.shape[0]]
    )
    s = SnapshotSet(model.grid, params, times, "latent", ("z",), data)
    write_container(s, path)


def reconstruct_decoded_stack(decoded: SnapshotSet, target: Grid) -> np.ndarray:
    """Ingest a decoded stack container from the external decoder and
    reconstruct every (param, time) entry on the target grid. Returns
    [n_p, n_t, n_values, *target.shape]."""
    n_vals = decoded.n_channels - decoded.grid.dim
    out = np.empty((decoded.params.n_params, decoded.times.count, n_vals, *target.shape))
    for i in range(decoded.params.n_params):
        for k in range(decoded.times.count):
            state = unstack(decoded.snapshot(i, k), decoded.grid,
                            decoded.channel_names[decoded.grid.dim :])
            out[i, k] = reconstruct_eulerian(state, target)
    return out
