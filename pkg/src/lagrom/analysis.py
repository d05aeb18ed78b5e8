"""Diagnostics that explain when a linear reduced basis can work: snapshot
coherence against a training window, singular value decay of the global
matrix, a sampled proxy for the best-rank-n approximation error, and the
relative L2 error metric used to score predictions."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import SnapshotSet, stacked_matrix

RANK_TOL = 1e-10


@dataclass(frozen=True)
class CoherenceSeries:
    """Max normalized inner product of each evaluation snapshot against the
    whole training window, per parameter."""

    times: np.ndarray       # [n_t_eval]
    gamma: np.ndarray       # [n_p, n_t_eval]
    frame: str

    def min_over(self, t_min: float, t_max: float) -> float:
        mask = (self.times > t_min) & (self.times <= t_max)
        if not mask.any():
            raise ValueError("no evaluation instants in the requested window")
        return float(self.gamma[:, mask].min())


def coherence(train: SnapshotSet, evaluate: SnapshotSet) -> CoherenceSeries:
    """gamma(t) = max over training snapshots s of
    |<w(t), w(s)>| / (||w(t)|| ||w(s)||), with w the full channel stack
    flattened; unweighted dot products.

    Frames must match: the comparison is between like representations.
    """
    if train.frame != evaluate.frame:
        raise ValueError("coherence compares snapshots in the same frame")
    T = stacked_matrix(train)  # [n_dof, n_train_cols]
    t_norms = np.linalg.norm(T, axis=0)
    if np.any(t_norms == 0):
        raise ValueError("zero-norm training snapshot")
    Tn = T / t_norms
    n_p, n_t = evaluate.params.n_params, evaluate.times.count
    gamma = np.empty((n_p, n_t))
    for i in range(n_p):
        E = evaluate.data[i].reshape(n_t, -1).T
        e_norms = np.linalg.norm(E, axis=0)
        if np.any(e_norms == 0):
            raise ValueError("zero-norm evaluation snapshot")
        g = np.abs(Tn.T @ (E / e_norms)).max(axis=0)
        gamma[i] = g
    if gamma.max() > 1.0 + 1e-12:
        raise AssertionError("coherence left [0, 1]")
    np.clip(gamma, 0.0, 1.0, out=gamma)
    return CoherenceSeries(times=evaluate.times.times, gamma=gamma, frame=train.frame)


@dataclass(frozen=True)
class ErrorTable:
    """Per-(parameter, time) relative L2 errors plus their average."""

    mean: float
    per_entry: np.ndarray   # [n_p, n_t]
    param_values: np.ndarray
    times: np.ndarray

    def rows(self):
        """Yield (param_row, t, err) in parameter-major then time order."""
        for i in range(self.per_entry.shape[0]):
            for k in range(self.per_entry.shape[1]):
                yield self.param_values[i], self.times[k], self.per_entry[i, k]


def relative_l2_error(truth, pred, param_values=None, times=None) -> ErrorTable:
    """Average over parameters and instants of ||u - u_hat||_2 / ||u||_2.

    truth, pred: SnapshotSets or arrays [n_p, n_t, ...] with identical
    shapes; the trailing axes are flattened per entry.
    """
    if isinstance(truth, SnapshotSet):
        if param_values is None:
            param_values = truth.params.values
        if times is None:
            times = truth.times.times
        truth = truth.data
    if isinstance(pred, SnapshotSet):
        pred = pred.data
    truth = np.asarray(truth, dtype=np.float64)
    pred = np.asarray(pred, dtype=np.float64)
    if truth.shape != pred.shape:
        raise ValueError(f"shape mismatch: truth {truth.shape}, prediction {pred.shape}")
    n_p, n_t = truth.shape[:2]
    T = truth.reshape(n_p, n_t, -1)
    P = pred.reshape(n_p, n_t, -1)
    denom = np.linalg.norm(T, axis=2)
    if np.any(denom == 0):
        raise ValueError("zero-norm truth snapshot; relative error undefined")
    per = np.linalg.norm(T - P, axis=2) / denom
    if param_values is None:
        param_values = np.arange(n_p, dtype=np.float64)[:, None]
    if times is None:
        times = np.arange(n_t, dtype=np.float64)
    return ErrorTable(
        mean=float(per.mean()),
        per_entry=per,
        param_values=np.asarray(param_values, dtype=np.float64),
        times=np.asarray(times, dtype=np.float64),
    )


def singular_value_decay(snaps: SnapshotSet) -> np.ndarray:
    """sigma_i / sigma_1 of the flattened global snapshot matrix."""
    S = np.linalg.svd(stacked_matrix(snaps), compute_uv=False)
    if S[0] == 0:
        raise ValueError("all-zero snapshot set")
    return S / S[0]


def numerical_rank(snaps: SnapshotSet, tol: float = RANK_TOL) -> int:
    """Count of normalized singular values above tol."""
    return int(np.count_nonzero(singular_value_decay(snaps) > tol))


@dataclass(frozen=True)
class NWidthCurve:
    """Worst-case projection error of the sampled manifold onto its own
    leading POD subspaces, for n = 0 .. n_max. descriptor carries free-form
    problem metadata (width, horizon, diffusion) for reporting."""

    n: np.ndarray
    d_hat: np.ndarray
    d_hat_normalized: np.ndarray
    descriptor: dict = None


def nwidth_proxy(snaps: SnapshotSet, n_max: int, descriptor: dict = None) -> NWidthCurve:
    """d_hat(n) = max over sampled snapshots m of ||(I - P_n) m||_2 with P_n
    the orthogonal projector onto the leading-n POD subspace of the samples.
    d_hat(0) is the largest sample norm. Non-increasing in n by construction;
    an upper bound on the true best-subspace error of the sampled set.
    """
    M = stacked_matrix(snaps)
    if n_max < 0:
        raise ValueError("n_max must be nonnegative")
    if n_max > M.shape[1]:
        raise ValueError(f"n_max {n_max} exceeds sample count {M.shape[1]}")
    n_eff = min(n_max, M.shape[0])
    Phi, _, _ = np.linalg.svd(M, full_matrices=False)
    d = np.zeros(n_max + 1)
    d[0] = np.linalg.norm(M, axis=0).max()
    coeffs = Phi.T @ M  # [min(shape), n_cols]
    # deflate actual residual vectors rather than tracking norms with a
    # running sum: the subtraction of squares cancels catastrophically and
    # floors exact rank collapse at sqrt(eps) instead of eps
    R = M.copy()
    for n in range(1, n_eff + 1):
        R -= np.outer(Phi[:, n - 1], coeffs[n - 1])
        d[n] = np.linalg.norm(R, axis=0).max()
    # beyond the ambient dimension the projector is the identity: d stays 0
    if np.any(np.diff(d) > 1e-12 * max(d[0], 1.0)):
        raise AssertionError("projection error increased with subspace size")
    norm = d / d[0] if d[0] > 0 else d.copy()
    return NWidthCurve(n=np.arange(n_max + 1), d_hat=d,
                       d_hat_normalized=norm, descriptor=descriptor)
