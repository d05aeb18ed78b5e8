import numpy as np
import pytest

from lagcae import container


def synthetic_fields(channels, space, n_p=3, n_t=4, seed=0):
    """Smooth random fields shaped [n_p, n_t, channels, *space]."""
    rng = np.random.default_rng(seed)
    shape = (n_p, n_t, channels, *space)
    xs = np.meshgrid(*[np.linspace(0.0, 1.0, s) for s in space], indexing="ij")
    data = np.zeros(shape)
    for i in range(n_p):
        for k in range(n_t):
            for c in range(channels):
                field = np.zeros(space)
                for _ in range(3):
                    w = rng.uniform(1.0, 4.0, len(space))
                    ph = rng.uniform(0.0, 2 * np.pi, len(space))
                    amp = rng.uniform(0.2, 1.0)
                    term = amp
                    for ax, x in enumerate(xs):
                        term = term * np.sin(2 * np.pi * w[ax] * x + ph[ax])
                    field += term
                data[i, k, c] = field
    return data


def field_header(frame, channel_names, space, n_p, n_t):
    dim = len(space)
    return {
        "version": 1,
        "content": "snapshots",
        "frame": frame,
        "channel_names": list(channel_names),
        "param_names": ["Re"],
        "param_values": [[200.0 + 20.0 * i] for i in range(n_p)],
        "time": {"t0": 0.0, "dt": 0.1, "count": n_t},
        "grid": {"dim": dim, "bounds": [[0.0, 1.5]] * dim,
                 "points": list(space), "periodic": [False] * dim},
    }


def write_fields(path, frame="lagrangian", channel_names=("chi", "u"),
                 space=(128,), n_p=3, n_t=4, seed=0, data=None):
    if data is None:
        data = synthetic_fields(len(channel_names), space, n_p, n_t, seed)
    header = field_header(frame, channel_names, space, n_p, n_t)
    container.write(path, header, data)
    return header, data


@pytest.fixture
def small_lag_1d(tmp_path):
    """Tiny 2-channel 1D container matching the burgers1d lagrangian spec."""
    path = tmp_path / "train.lrom"
    header, data = write_fields(path)
    return path, header, data
