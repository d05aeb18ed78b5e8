"""Single-parameter DMD: fitting, spectral prediction, latent-space fits."""
import warnings

import numpy as np
import pytest

from lagrom.core import RankDeficiency, SolverBlowup
from lagrom.dmd import (
    LatentTrajectory,
    ReducedOperator,
    fit_dmd,
    fit_latent_dmd,
    predict,
)


def _rank2_snapshots(n=10, m=5, seed=3):
    """Snapshots generated by a known rank-2 linear system: a damped rotation
    pushed through an orthonormal lift. Exactly representable at r=2."""
    rng = np.random.default_rng(seed)
    Q, _ = np.linalg.qr(rng.standard_normal((n, 2)))
    th = 0.7
    A0 = 0.9 * np.array([[np.cos(th), -np.sin(th)], [np.sin(th), np.cos(th)]])
    h = np.array([1.0, 0.5])
    cols = [h]
    for _ in range(m):
        cols.append(A0 @ cols[-1])
    return Q @ np.array(cols).T, A0


class TestFitDmd:
    def test_rank2_system_recovered_exactly(self):
        U, A0 = _rank2_snapshots()
        op = fit_dmd(U, 2)
        for k in range(U.shape[1]):
            err = np.linalg.norm(predict(op, U[:, 0], k) - U[:, k])
            assert err < 1e-10
        # reduced operator is similar to the generator: same spectrum
        np.testing.assert_allclose(
            np.sort_complex(np.linalg.eigvals(op.operator)),
            np.sort_complex(np.linalg.eigvals(A0)),
            atol=1e-10,
        )

    def test_basis_orthonormal(self):
        U, _ = _rank2_snapshots()
        op = fit_dmd(U, 2)
        np.testing.assert_allclose(op.basis.T @ op.basis, np.eye(2), atol=1e-10)

    def test_constant_data_gives_identity_operator(self):
        col = np.array([1.0, 2.0, -0.5])
        U = np.column_stack([col] * 4)
        op = fit_dmd(U, 1)
        assert abs(op.operator[0, 0] - 1.0) < 1e-12

    def test_energy_fraction_monotone_in_rank(self):
        rng = np.random.default_rng(11)
        U = rng.standard_normal((12, 7))
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")  # random data has no stable spectrum
            fracs = [fit_dmd(U, r).energy_fraction for r in range(1, 7)]
        assert all(b >= a for a, b in zip(fracs, fracs[1:]))
        assert fracs[-1] <= 1.0 + 1e-15

    def test_rank_bounds_rejected(self):
        U, _ = _rank2_snapshots()
        with pytest.raises(ValueError):
            fit_dmd(U, 0)
        with pytest.raises(ValueError):
            fit_dmd(U, U.shape[1])  # only m = cols-1 pairs available
        with pytest.raises(ValueError):
            fit_dmd(U[:, :1], 1)  # single column: no transitions

    def test_rank_beyond_data_raises(self):
        # rank-2 data cannot support a rank-3 fit: sigma_3 sits at the floor
        U, _ = _rank2_snapshots()
        with pytest.raises(RankDeficiency):
            fit_dmd(U, 3)

    def test_degenerate_tie_flagged(self):
        # equal singular values at the cut: SVD ordering decides, flag it
        U = np.eye(4)  # U_minus has three tied singular values
        op = fit_dmd(U, 2)
        assert op.degenerate
        opf, _ = _rank2_snapshots()
        assert not fit_dmd(opf, 2).degenerate

    def test_unstable_modes_warn(self):
        U = np.array([[1.0, 1.5, 2.25, 3.375]])
        with pytest.warns(UserWarning, match="unstable modes retained"):
            fit_dmd(U, 1)

    def test_stable_fit_does_not_warn(self):
        U, _ = _rank2_snapshots()
        with warnings.catch_warnings():
            warnings.simplefilter("error")
            fit_dmd(U, 2)


class TestPredict:
    def test_zero_steps_is_projection(self):
        U, _ = _rank2_snapshots()
        op = fit_dmd(U, 2)
        rng = np.random.default_rng(0)
        u = rng.standard_normal(U.shape[0])
        got = predict(op, u, 0)
        np.testing.assert_allclose(got, op.basis @ (op.basis.T @ u), atol=1e-14)

    def test_diagonal_documented_values(self):
        op = ReducedOperator(
            basis=np.eye(2),
            operator=np.diag([0.9, 0.5]),
            singular_values=np.array([1.0, 1.0]),
            energy_fraction=1.0,
        )
        got = predict(op, np.array([1.0, 1.0]), 3)
        np.testing.assert_allclose(got, [0.729, 0.125], atol=1e-15)

    def test_semigroup_property(self):
        U, _ = _rank2_snapshots()
        op = fit_dmd(U, 2)
        u0 = U[:, 0]
        lhs = predict(op, u0, 5)
        rhs = predict(op, predict(op, u0, 2), 3)
        np.testing.assert_allclose(lhs, rhs, atol=1e-10)

    def test_power_and_eigen_paths_agree(self):
        # spectral radius 0.95, 50 steps: both paths within 1e-8
        rng = np.random.default_rng(7)
        M = rng.standard_normal((6, 6))
        M *= 0.95 / np.max(np.abs(np.linalg.eigvals(M)))
        Q, _ = np.linalg.qr(rng.standard_normal((20, 6)))
        op = ReducedOperator(Q, M, np.ones(6), 1.0)
        u0 = Q @ rng.standard_normal(6)
        a = predict(op, u0, 50, path="power")
        b = predict(op, u0, 50, path="eigen")
        np.testing.assert_allclose(a, b, atol=1e-8)

    def test_blowup_raises_on_both_paths(self):
        op = ReducedOperator(np.eye(1), np.array([[2.0]]), np.ones(1), 1.0)
        with pytest.raises(SolverBlowup):
            predict(op, np.array([1.0]), 50, path="power")
        with pytest.raises(SolverBlowup):
            predict(op, np.array([1.0]), 50, path="eigen")

    def test_bad_arguments(self):
        op = ReducedOperator(np.eye(1), np.array([[0.5]]), np.ones(1), 1.0)
        with pytest.raises(ValueError):
            predict(op, np.array([1.0]), -1)
        with pytest.raises(ValueError):
            predict(op, np.array([1.0]), 1, path="magic")

    def test_translating_pulse_resists_low_rank(self):
        """Fixed-frame snapshots of a moving pulse: r=8 leaves large
        prediction error, the baseline the moving-frame pipeline beats."""
        n, nt = 128, 41
        x = np.linspace(0, 1, n, endpoint=False)
        cols = []
        for t in np.linspace(0, 0.5, nt):
            d = np.mod(x - t - 0.3 + 0.5, 1.0) - 0.5
            cols.append(np.exp(-(d**2) / (2 * 0.04**2)))
        U = np.column_stack(cols)
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")  # transport spectra sit near the unit circle
            op = fit_dmd(U, 8)
        pred = predict(op, U[:, 0], nt - 1)
        rel = np.linalg.norm(pred - U[:, -1]) / np.linalg.norm(U[:, -1])
        assert rel > 0.2  # measured 0.361


class TestLatentTrajectory:
    def test_validates_shape_and_finiteness(self):
        with pytest.raises(ValueError):
            LatentTrajectory(np.zeros(5))
        with pytest.raises(ValueError):
            LatentTrajectory(np.array([[1.0, np.nan]]))
        tr = LatentTrajectory(np.ones((2, 4)))
        assert tr.coordinates.shape == (2, 4)


class TestFitLatentDmd:
    def test_recovers_generator(self):
        A = np.array([[0.9, 0.1], [0.0, 0.8]])
        h = np.array([1.0, 1.0])
        cols = [h]
        for _ in range(6):
            cols.append(A @ cols[-1])
        H = np.array(cols).T
        got = fit_latent_dmd(H)
        np.testing.assert_allclose(got, A, atol=1e-10)

    def test_accepts_trajectory_object(self):
        A = np.array([[0.5]])
        H = np.array([[1.0, 0.5, 0.25]])
        got = fit_latent_dmd(LatentTrajectory(H))
        np.testing.assert_allclose(got, A, atol=1e-12)

    def test_constant_trajectory_identity_on_span(self):
        h0 = np.array([2.0, -1.0, 0.5])
        H = np.column_stack([h0] * 5)
        A = fit_latent_dmd(H)
        np.testing.assert_allclose(A @ h0, h0, atol=1e-12)

    def test_underdetermined_raises(self):
        with pytest.raises(RankDeficiency):
            fit_latent_dmd(np.ones((3, 3)))  # 2 pairs for dimension 3
