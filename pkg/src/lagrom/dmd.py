"""Single-parameter dynamic mode decomposition: truncated SVD, reduced
one-step operator, eigendecomposition, k-step prediction."""
from __future__ import annotations

import warnings
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .core import RankDeficiency, SolverBlowup, TimeAxis

SV_FLOOR = 1e-12        # relative singular-value floor: below this, rank is gone
OVERFLOW_FACTOR = 1e12  # prediction states may not grow past this times the input


@dataclass
class ReducedOperator:
    """Rank-r one-step model u^{k+1} ~ Phi A (Phi^T u^k).

    basis is n x r with orthonormal columns, operator the r x r reduced
    matrix, singular_values the retained sigma_1..sigma_r. degenerate marks
    a tie sigma_r ~ sigma_{r+1} at the floor (SVD ordering then decides the
    cut). The eigendecomposition is computed on first use.
    """

    basis: np.ndarray
    operator: np.ndarray
    singular_values: np.ndarray
    energy_fraction: float
    frame: str = "eulerian"
    param: Optional[np.ndarray] = None
    degenerate: bool = False
    _eig: Optional[tuple] = field(default=None, repr=False)

    @property
    def rank(self) -> int:
        return self.operator.shape[0]

    def eigendecomposition(self):
        """(eigenvalues, eigenvectors) of the reduced operator, cached."""
        if self._eig is None:
            lam, W = np.linalg.eig(self.operator)
            self._eig = (lam, W)
        return self._eig


def fit_dmd(snapshots: np.ndarray, r: int) -> ReducedOperator:
    """Fit a rank-r operator from a snapshot matrix with columns in time
    order: n x (m+1) with m transition pairs."""
    U = np.asarray(snapshots, dtype=np.float64)
    if U.ndim != 2 or U.shape[1] < 2:
        raise ValueError("need an n x (m+1) matrix with at least 2 columns")
    m = U.shape[1] - 1
    if not 1 <= r <= m:
        raise ValueError(f"rank must satisfy 1 <= r <= {m} transition pairs")
    U_minus = U[:, :-1]
    U_plus = U[:, 1:]
    Phi, S, Vt = np.linalg.svd(U_minus, full_matrices=False)
    achievable = int(np.count_nonzero(S > SV_FLOOR * S[0])) if S[0] > 0 else 0
    if r > achievable:
        raise RankDeficiency(
            f"data supports rank {achievable}, requested {r} (singular-value floor)"
        )
    degenerate = r < len(S) and abs(S[r - 1] - S[r]) < SV_FLOOR * S[0]
    Phi_r = Phi[:, :r]
    A = Phi_r.T @ U_plus @ Vt[:r].T @ np.diag(1.0 / S[:r])
    energy = float(np.sum(S[:r] ** 2) / np.sum(S**2))
    rho = float(np.max(np.abs(np.linalg.eigvals(A))))
    if rho > 1.0 + 1e-12:
        warnings.warn(f"unstable modes retained (spectral radius {rho:.6g})", stacklevel=2)
    return ReducedOperator(Phi_r, A, S[:r].copy(), energy, degenerate=degenerate)


def predict(op: ReducedOperator, u_n: np.ndarray, k: int, path: str = "power") -> np.ndarray:
    """Advance u_n by k steps through the reduced model.

    "power" iterates the real reduced matrix; "eigen" uses the spectral form
    and returns the real part. k=0 gives the rank-r projection of u_n.
    """
    if k < 0:
        raise ValueError("k must be nonnegative")
    u_n = np.asarray(u_n, dtype=np.float64)
    h = op.basis.T @ u_n
    h0_norm = float(np.linalg.norm(h))
    if path == "power":
        for _ in range(k):
            h = op.operator @ h
            if np.linalg.norm(h) > OVERFLOW_FACTOR * max(h0_norm, 1e-300):
                lam, _ = op.eigendecomposition()
                raise SolverBlowup(
                    f"prediction overflow (|lambda|max = {np.max(np.abs(lam)):.6g})"
                )
        return op.basis @ h
    if path == "eigen":
        lam, W = op.eigendecomposition()
        hk = W @ (lam**k * np.linalg.solve(W, h.astype(complex)))
        if np.linalg.norm(hk) > OVERFLOW_FACTOR * max(h0_norm, 1e-300):
            raise SolverBlowup(f"prediction overflow (|lambda|max = {np.max(np.abs(lam)):.6g})")
        return op.basis @ hk.real
    raise ValueError(f"unknown prediction path {path!r}")


@dataclass(frozen=True)
class LatentTrajectory:
    """One parameter's latent time series: r x (n_t+1) columns in time order."""

    coordinates: np.ndarray
    times: Optional[TimeAxis] = None
    param: Optional[np.ndarray] = None
    compressor_id: str = "pod"

    def __post_init__(self):
        coords = np.asarray(self.coordinates, dtype=np.float64)
        if coords.ndim != 2:
            raise ValueError("coordinates must be r x (n_t+1)")
        if not np.isfinite(coords).all():
            raise ValueError("non-finite latent coordinate")
        object.__setattr__(self, "coordinates", coords)


def fit_latent_dmd(H) -> np.ndarray:
    """Least-squares one-step operator on an r-dimensional latent trajectory:
    A = H_plus pinv(H_minus) with a relative singular-value cutoff of 1e-12
    and no further truncation (the space is already reduced)."""
    coords = H.coordinates if isinstance(H, LatentTrajectory) else np.asarray(H, dtype=np.float64)
    r, cols = coords.shape
    if cols - 1 < r:
        raise RankDeficiency(
            f"latent fit underdetermined: {cols - 1} transition pairs for dimension {r}"
        )
    H_minus = coords[:, :-1]
    H_plus = coords[:, 1:]
    return H_plus @ np.linalg.pinv(H_minus, rcond=SV_FLOOR)
