"""Parametric pipeline: global compression, per-parameter latent operators,
cross-parameter interpolation, decode/reconstruct."""
import warnings

import numpy as np
import pytest
from scipy.interpolate import RBFInterpolator

from lagrom.core import (
    Grid,
    ParamSet,
    RankDeficiency,
    SnapshotSet,
    TimeAxis,
    flatten_snapshots,
)
from lagrom.fom import burgers1d_exact
from lagrom.pdmd import (
    Compressor,
    RbfInterpolant,
    decode_and_reconstruct,
    external_compressor,
    fit_pdmd,
    fit_pod,
    predict_pdmd,
    predict_pdmd_trajectory,
)
from lagrom.problems import burgers1d_data


@pytest.fixture(scope="module")
def train():
    """Closed-form viscous-front snapshots in the moving frame: four
    training parameters, horizon [0.2, 1.0]."""
    g = Grid.line(0.0, 1.0, 64)
    times = TimeAxis(0.2, 0.04, 21)
    return burgers1d_data("lagrangian", g, times, np.array([150.0, 250.0, 350.0, 450.0]))


class TestRbfInterpolant:
    @pytest.mark.properties
    def test_nodal_exactness(self, rng):
        nodes = rng.uniform(0, 1, (9, 2))
        vals = rng.standard_normal((9, 4))
        f = RbfInterpolant.fit(nodes, vals)
        np.testing.assert_allclose(f(nodes), vals, atol=1e-8)

    def test_linear_functions_reproduced(self, rng):
        # the polynomial tail makes affine data exact everywhere
        nodes = rng.uniform(0, 1, (7, 2))
        vals = 2.0 * nodes[:, 0] - 3.0 * nodes[:, 1] + 0.5
        f = RbfInterpolant.fit(nodes, vals)
        q = rng.uniform(0.1, 0.9, (15, 2))
        np.testing.assert_allclose(
            np.asarray(f(q)).ravel(), 2.0 * q[:, 0] - 3.0 * q[:, 1] + 0.5, atol=1e-9
        )

    def test_three_node_dense_solve_oracle(self):
        """Solve the full saddle system by hand for nodes 0,1,2 with values
        0,1,4 and compare the midpoint evaluation."""
        nd = np.array([[0.0], [1.0], [2.0]])
        v = np.array([0.0, 1.0, 4.0])
        A = np.zeros((5, 5))
        d = np.abs(nd[:, 0][:, None] - nd[:, 0][None, :])
        A[:3, :3] = d**3
        A[:3, 3] = 1.0
        A[:3, 4] = nd[:, 0]
        A[3, :3] = 1.0
        A[4, :3] = nd[:, 0]
        sol = np.linalg.solve(A, np.r_[v, 0.0, 0.0])
        mu = 1.5
        expected = (np.abs(mu - nd[:, 0]) ** 3) @ sol[:3] + sol[3] + sol[4] * mu
        assert expected == pytest.approx(2.3125, abs=1e-12)
        f = RbfInterpolant.fit(nd, v)
        got = float(np.asarray(f(np.array([[1.5]]))).ravel()[0])
        assert got == pytest.approx(expected, abs=1e-10)

    def test_matches_reference_implementation(self, rng):
        nodes = rng.uniform(0, 2, (12, 2))
        vals = rng.standard_normal((12, 3))
        mine = RbfInterpolant.fit(nodes, vals)
        ref = RBFInterpolator(nodes, vals, kernel="cubic", degree=1)
        q = rng.uniform(0.2, 1.8, (20, 2))
        np.testing.assert_allclose(mine(q), ref(q), atol=1e-10)

    def test_duplicate_nodes_rejected(self):
        nodes = np.array([[0.0], [1.0], [1.0]])
        with pytest.raises(ValueError, match="duplicate"):
            RbfInterpolant.fit(nodes, np.array([0.0, 1.0, 2.0]))


class TestFitPod:
    def test_basis_orthonormal_and_rank(self, train):
        comp = fit_pod(train, 6)
        assert comp.rank == 6
        np.testing.assert_allclose(comp.basis.T @ comp.basis, np.eye(6), atol=1e-12)
        assert comp.kind == "pod"
        assert comp.channel_names == ("chi", "u")
        assert comp.space_shape == (64,)

    def test_structural_rank_bounds(self, train):
        with pytest.raises(RankDeficiency):
            fit_pod(train, 0)
        with pytest.raises(RankDeficiency, match="at most"):
            fit_pod(train, 2 * 64 + 1)  # more than the row count

    def test_zero_data_refused(self):
        g = Grid.line(0.0, 1.0, 16)
        z = SnapshotSet(
            g,
            ParamSet(("c",), np.array([[1.0]])),
            TimeAxis(0.0, 0.1, 3),
            "eulerian",
            ("u",),
            np.zeros((1, 3, 1, 16)),
        )
        with pytest.raises(RankDeficiency):
            fit_pod(z, 1)

    def test_rank_past_numerical_content_is_allowed(self):
        # a pulse frozen in time has numerical rank 1; surplus latent
        # directions ride along as long as the singular values are positive
        g = Grid.line(0.0, 1.0, 32)
        u = np.exp(-((g.nodes(0) - 0.5) ** 2) / 0.01)
        data = np.tile(u, (1, 5, 1, 1))
        s = SnapshotSet(g, ParamSet(("c",), np.array([[1.0]])),
                        TimeAxis(0.0, 0.1, 5), "eulerian", ("u",), data)
        comp = fit_pod(s, 3)
        np.testing.assert_allclose(comp.basis.T @ comp.basis, np.eye(3), atol=1e-10)

    def test_normalized_zero_latent_decodes_to_channel_means(self, train):
        comp = fit_pod(train, 4, normalize=True)
        flat = comp.decode_matrix(np.zeros((4, 1)))[:, 0]
        blocks = flat.reshape(2, -1)
        M = np.concatenate([flatten_snapshots(train, i) for i in range(4)], axis=1)
        means = M.reshape(2, -1).mean(axis=1)
        np.testing.assert_allclose(blocks[0], means[0], atol=1e-12)
        np.testing.assert_allclose(blocks[1], means[1], atol=1e-12)

    def test_compressor_validation(self):
        with pytest.raises(ValueError, match="kind"):
            Compressor(kind="magic", rank=1)
        with pytest.raises(ValueError, match="basis"):
            Compressor(kind="pod", rank=1)
        with pytest.raises(ValueError, match="orthonormality"):
            Compressor(kind="pod", rank=2, basis=np.ones((4, 2)))

    def test_external_cannot_encode_or_decode_in_process(self, train):
        comp = fit_pod(train, 3)
        lat = _latent_container(train, comp, 3)
        ext = external_compressor(lat, train.channel_names, (64,))
        with pytest.raises(ValueError):
            ext.encode_matrix(np.zeros((128, 2)))
        with pytest.raises(ValueError):
            ext.decode_matrix(np.zeros((3, 2)))

    def test_external_needs_latent_frame(self, train):
        with pytest.raises(ValueError, match="latent"):
            external_compressor(train, train.channel_names, (64,))


def _latent_container(train, comp, r):
    lat = np.empty((train.params.n_params, train.times.count, 1, r))
    for i in range(train.params.n_params):
        lat[i, :, 0, :] = comp.encode_matrix(flatten_snapshots(train, i)).T
    return SnapshotSet(train.grid, train.params, train.times, "latent", ("z",), lat)


class TestFitPdmd:
    def test_shapes_and_anchors(self, train):
        comp = fit_pod(train, 4)
        model = fit_pdmd(train, comp, 4)
        assert model.operators.shape == (4, 4, 4)
        assert model.anchors.shape == (4, 4)
        assert model.rank == 4
        assert model.frame == "lagrangian"
        # anchors are the final-instant latents
        H = comp.encode_matrix(flatten_snapshots(train, 2))
        np.testing.assert_allclose(model.anchors[2], H[:, -1], atol=0)

    def test_external_latents_give_identical_operators(self, train):
        comp = fit_pod(train, 4)
        model_pod = fit_pdmd(train, comp, 4)
        ext = external_compressor(_latent_container(train, comp, 4),
                                  train.channel_names, (64,))
        model_ext = fit_pdmd(train, ext, 4)
        np.testing.assert_array_equal(model_pod.operators, model_ext.operators)
        np.testing.assert_array_equal(model_pod.anchors, model_ext.anchors)

    def test_external_latents_cannot_be_truncated(self, train):
        comp = fit_pod(train, 4)
        ext = external_compressor(_latent_container(train, comp, 4),
                                  train.channel_names, (64,))
        with pytest.raises(ValueError, match="truncated"):
            fit_pdmd(train, ext, 3)

    def test_frame_label_does_not_change_the_math(self, train):
        relabeled = SnapshotSet(train.grid, train.params, train.times,
                                "eulerian", ("a", "b"), train.data.copy())
        r = 4
        m1 = fit_pdmd(train, fit_pod(train, r), r)
        m2 = fit_pdmd(relabeled, fit_pod(relabeled, r), r)
        np.testing.assert_array_equal(m1.operators, m2.operators)
        np.testing.assert_array_equal(m1.anchors, m2.anchors)

    def test_requested_rank_beyond_compressor_raises(self, train):
        comp = fit_pod(train, 3)
        with pytest.raises(RankDeficiency):
            fit_pdmd(train, comp, 5)

    def test_too_few_instants_for_latent_fit(self, train):
        from lagrom.core import subset_time
        short = subset_time(train, 0, 2)  # 3 instants: 2 transition pairs
        comp = fit_pod(short, 3)
        with pytest.raises(RankDeficiency, match="parameter row"):
            fit_pdmd(short, comp, 3)


class TestPredict:
    def test_training_node_reduces_to_operator_power(self, train):
        """At a training parameter the interpolant is nodally exact, so the
        whole online stage collapses to a matrix power of the anchor."""
        comp = fit_pod(train, 4)
        model = fit_pdmd(train, comp, 4)
        i, k = 1, 7
        expected = model.anchors[i]
        for _ in range(k):
            expected = model.operators[i] @ expected
        got = predict_pdmd(model, train.params.row(i), k)
        np.testing.assert_allclose(got, expected, atol=1e-8)

    def test_trajectory_matches_single_horizons(self, train):
        comp = fit_pod(train, 4)
        model = fit_pdmd(train, comp, 4)
        traj = predict_pdmd_trajectory(model, [300.0], 5)
        for k in (1, 3, 5):
            np.testing.assert_allclose(
                traj[k - 1], predict_pdmd(model, [300.0], k), atol=1e-13
            )

    def test_unseen_parameter_error_small(self, train):
        comp = fit_pod(train, 4)
        model = fit_pdmd(train, comp, 4)
        k = 5
        lat = predict_pdmd(model, [300.0], k)
        rec = decode_and_reconstruct(model, lat, train.grid)
        t_eval = train.times.t_end + k * train.times.dt
        truth = burgers1d_exact(train.grid.nodes(0), t_eval, 300.0)
        rel = np.linalg.norm(rec[0] - truth) / np.linalg.norm(truth)
        assert rel < 0.10  # measured 0.028 on this configuration

    def test_extrapolation_warns(self, train):
        comp = fit_pod(train, 2)
        model = fit_pdmd(train, comp, 2)
        with pytest.warns(UserWarning, match="outside the training bounding box"):
            predict_pdmd(model, [500.0], 1)
        with warnings.catch_warnings():
            warnings.simplefilter("error")
            predict_pdmd(model, [300.0], 1)

    def test_horizon_validation(self, train):
        comp = fit_pod(train, 2)
        model = fit_pdmd(train, comp, 2)
        with pytest.raises(ValueError):
            predict_pdmd(model, [300.0], 0)
        with pytest.raises(ValueError):
            predict_pdmd_trajectory(model, [300.0], 0)


class TestDecodeAndReconstruct:
    def test_fixed_frame_decode_matches_compressor(self):
        g = Grid.line(0.0, 1.0, 64)
        times = TimeAxis(0.2, 0.04, 21)
        tr = burgers1d_data("eulerian", g, times, np.array([150.0, 250.0, 350.0]))
        comp = fit_pod(tr, 5)
        model = fit_pdmd(tr, comp, 5)
        h = model.anchors[0]
        rec = decode_and_reconstruct(model, h, g)
        direct = comp.decode_matrix(h[:, None])[:, 0].reshape(1, 64)
        np.testing.assert_array_equal(rec, direct)

    def test_fixed_frame_needs_training_grid(self):
        g = Grid.line(0.0, 1.0, 64)
        times = TimeAxis(0.2, 0.04, 21)
        tr = burgers1d_data("eulerian", g, times, np.array([150.0, 250.0]))
        model = fit_pdmd(tr, fit_pod(tr, 3), 3)
        with pytest.raises(ValueError, match="training grid"):
            decode_and_reconstruct(model, model.anchors[0], Grid.line(0.0, 1.0, 32))

    def test_moving_frame_training_snapshot_round_trip(self, train):
        """Encode a training snapshot, decode, resample on the fixed grid:
        the error is compression plus interpolation, both small here."""
        comp = fit_pod(train, 6)
        model = fit_pdmd(train, comp, 6)
        H = comp.encode_matrix(flatten_snapshots(train, 1))
        rec = decode_and_reconstruct(model, H[:, -1], train.grid)
        truth = burgers1d_exact(train.grid.nodes(0), train.times.t_end, 250.0)
        rel = np.linalg.norm(rec[0] - truth) / np.linalg.norm(truth)
        assert rel < 0.03  # measured 0.014

    def test_wrong_latent_length(self, train):
        model = fit_pdmd(train, fit_pod(train, 3), 3)
        with pytest.raises(ValueError, match="rank"):
            decode_and_reconstruct(model, np.zeros(5), train.grid)

    def test_external_model_cannot_decode_in_process(self, train):
        comp = fit_pod(train, 3)
        ext = external_compressor(_latent_container(train, comp, 3),
                                  train.channel_names, (64,))
        model = fit_pdmd(train, ext, 3)
        with pytest.raises(ValueError, match="exchange"):
            decode_and_reconstruct(model, model.anchors[0], train.grid)
