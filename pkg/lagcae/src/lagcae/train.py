"""Training loop and container-level encode/decode application.

The loss is a mean over samples of the squared 2-norm of the snapshot
mismatch, optionally plus a weighted penalty of the same form on the
spatial finite-difference gradient. Fields are min-max normalized to
[0, 1] per channel before training; the affine record travels with the
weights so decoded output comes back in physical units.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import torch

from . import container
from .model import Cae, build
from .specs import CaeSpec


@dataclass
class TrainReport:
    recon: list = field(default_factory=list)   # per-epoch mean squared mismatch
    grad: list = field(default_factory=list)    # gradient penalty (0.0 when unused)
    total: list = field(default_factory=list)
    final_recon_error: float = float("nan")     # relative, physical units
    settings: dict = field(default_factory=dict)
    selection: list = field(default_factory=list)  # (epoch, forecastability) pairs
    selected_epoch: int | None = None


def _samples(data: np.ndarray) -> np.ndarray:
    """[n_p, n_t, c, *space] -> [n_p*n_t, c, *space]."""
    return data.reshape(-1, *data.shape[2:])


def normalization(samples: np.ndarray):
    """Per-channel min/max over every sample and spatial point."""
    axes = (0,) + tuple(range(2, samples.ndim))
    lo = samples.min(axis=axes)
    hi = samples.max(axis=axes)
    return lo, hi


def _affine_shape(x: np.ndarray, ndim: int) -> np.ndarray:
    return x.reshape((1, -1) + (1,) * (ndim - 2))


def apply_norm(samples, lo, hi):
    span = np.where(hi > lo, hi - lo, 1.0)
    return (samples - _affine_shape(lo, samples.ndim)) / _affine_shape(span, samples.ndim)


def invert_norm(samples, lo, hi):
    span = np.where(hi > lo, hi - lo, 1.0)
    return samples * _affine_shape(span, samples.ndim) + _affine_shape(lo, samples.ndim)


def _sq(t: torch.Tensor) -> torch.Tensor:
    """Mean over samples of the squared 2-norm over everything else."""
    return t.flatten(1).pow(2).sum(1).mean()


def _grad_penalty(xh: torch.Tensor, x: torch.Tensor, dim: int) -> torch.Tensor:
    pen = None
    for ax in range(-dim, 0):
        d = torch.gradient(xh - x, dim=ax)[0]
        term = _sq(d)
        pen = term if pen is None else pen + term
    return pen


def latent_forecastability(z: np.ndarray) -> float:
    """How well a per-parameter linear one-step map extrapolates the latent
    trajectories: fit on the first three quarters, roll out the rest, return
    the mean relative error at the final instant. z: [n_p, n_t, r].

    The downstream reducer evolves latents with exactly such a map, so this
    is the model-selection signal for a checkpoint, computed from training
    data alone.
    """
    n_p, n_t, r = z.shape
    split = max(r + 1, n_t - max(1, n_t // 4))
    if split >= n_t:
        return float("nan")
    errs = []
    for i in range(n_p):
        Z = z[i].T                                      # [r, n_t]
        A = np.linalg.lstsq(Z[:, :split - 1].T, Z[:, 1:split].T, rcond=None)[0].T
        zk = Z[:, split - 1].copy()
        for _ in range(n_t - split):
            zk = A @ zk
        errs.append(np.linalg.norm(zk - Z[:, -1]) / np.linalg.norm(Z[:, -1]))
    return float(np.mean(errs))


def _load_training_set(spec: CaeSpec, path):
    header, data = container.read_fields(path)
    if data.shape[2] != spec.in_channels:
        raise ValueError(
            f"container has {data.shape[2]} channels, spec wants {spec.in_channels} "
            f"({spec.problem}/{spec.frame})")
    if tuple(data.shape[3:]) != spec.space:
        raise ValueError(f"container space {data.shape[3:]} != spec {spec.space}")
    if header.get("frame") != spec.frame:
        raise ValueError(f"container frame {header.get('frame')!r} != spec {spec.frame!r}")
    return header, _samples(data)


def train(spec: CaeSpec, container_path, out_path, *, epochs: int = 3000,
          lr: float = 1e-3, seed: int = 0, batch: int | None = None,
          threads: int | None = None, stop_below: float | None = None,
          freeze_encoder: bool = False, select: bool = False,
          select_every: int = 50, log_every: int = 0) -> TrainReport:
    """Fit the autoencoder on a snapshot container and save the weights.

    batch=None picks the family default: the whole set in one step for 1D,
    32 samples for 2D. A non-finite loss aborts with the epoch named.

    freeze_encoder=True keeps the encoder at its seeded initialization and
    fits only the decoder. An untrained convolutional encoder acts as a
    smooth random projection, so latent trajectories inherit the slow,
    nearly linear drift of the fields themselves; a fully trained encoder
    bends them into curves a linear one-step evolution cannot follow. When
    the latents feed a linear forecaster downstream, freeze.

    With select=True, every select_every epochs the training set is encoded
    and scored by latent_forecastability; the checkpoint with the best score
    is the one saved.
    """
    if threads is not None:
        torch.set_num_threads(threads)
    header, phys = _load_training_set(spec, container_path)
    lo, hi = normalization(phys)
    x_all = torch.from_numpy(apply_norm(phys, lo, hi).astype(np.float32))
    n = x_all.shape[0]
    if batch is None:
        batch = n if spec.dim == 1 else 32
    batch = min(batch, n)
    n_p, n_t = len(header["param_values"]), header["time"]["count"]

    model = build(spec, seed)
    params = model.decoder.parameters() if freeze_encoder else model.parameters()
    opt = torch.optim.Adam(params, lr=lr, weight_decay=spec.weight_decay)
    shuffle = torch.Generator().manual_seed(seed)

    report = TrainReport(settings={
        "problem": spec.problem, "frame": spec.frame, "rank": spec.rank,
        "epochs": epochs, "lr": lr, "seed": seed, "batch": batch,
        "threads": threads, "weight_decay": spec.weight_decay,
        "lambda_grad": spec.lambda_grad, "n_samples": n,
        "freeze_encoder": freeze_encoder,
        "select": select, "select_every": select_every if select else None,
    })
    best = (math.inf, None, None)           # (score, epoch, state)
    lam = spec.lambda_grad

    def consider(epoch):
        nonlocal best
        z = _chunked(x_all, model.encode).astype(np.float64)
        score = latent_forecastability(z.reshape(n_p, n_t, spec.rank))
        report.selection.append((epoch, score))
        if math.isfinite(score) and score < best[0]:
            state = {k: v.detach().clone() for k, v in model.state_dict().items()}
            best = (score, epoch, state)

    for epoch in range(epochs):
        order = torch.randperm(n, generator=shuffle) if batch < n else torch.arange(n)
        recon_sum = 0.0
        grad_sum = 0.0
        for start in range(0, n, batch):
            x = x_all[order[start:start + batch]]
            if freeze_encoder:
                with torch.no_grad():
                    z = model.encode(x)
                xh = model.decode(z)
            else:
                xh = model(x)
            recon = _sq(xh - x)
            if lam != 0.0:
                grad = _grad_penalty(xh, x, spec.dim)
                loss = recon + lam * grad
                grad_sum += grad.item() * x.shape[0]
            else:
                loss = recon
            recon_sum += recon.item() * x.shape[0]
            opt.zero_grad()
            loss.backward()
            opt.step()
        r, g = recon_sum / n, grad_sum / n
        total = r + lam * g
        if not math.isfinite(total):
            raise RuntimeError(f"training diverged: non-finite loss at epoch {epoch}")
        report.recon.append(r)
        report.grad.append(g)
        report.total.append(total)
        if select and (epoch % select_every == select_every - 1
                       or epoch == epochs - 1):
            consider(epoch)
        if log_every and epoch % log_every == 0:
            print(f"epoch {epoch:5d}  total {total:.6e}  recon {r:.6e}")
        if stop_below is not None and total < stop_below:
            break

    if select and best[2] is not None:
        model.load_state_dict(best[2])
        report.selected_epoch = best[1]
        report.settings["selected_epoch"] = best[1]
    report.final_recon_error = _recon_error(model, x_all, phys, lo, hi)
    model.eval()
    _save(model, spec, lo, hi, header, report.settings, out_path)
    return report


def _recon_error(model: Cae, x_all, phys, lo, hi) -> float:
    """Mean relative snapshot error in physical units."""
    dec = _chunked(x_all, model.encode, model.decode)
    rec = invert_norm(dec.astype(np.float64), lo, hi)
    diff = (rec - phys).reshape(phys.shape[0], -1)
    ref = phys.reshape(phys.shape[0], -1)
    return float(np.mean(np.linalg.norm(diff, axis=1) / np.linalg.norm(ref, axis=1)))


def _chunked(x, *stages, size: int = 128) -> np.ndarray:
    outs = []
    with torch.no_grad():
        for start in range(0, x.shape[0], size):
            t = x[start:start + size]
            for stage in stages:
                t = stage(t)
            outs.append(t.numpy())
    return np.concatenate(outs, axis=0)


def _save(model, spec, lo, hi, header, settings, out_path):
    out_path = Path(out_path)
    payload = {
        "state": model.state_dict(),
        "spec": spec.to_json(),
        "norm_min": lo.tolist(),
        "norm_max": hi.tolist(),
        "channel_names": header["channel_names"],
        "source_header": {k: header[k] for k in
                          ("version", "frame", "param_names", "grid", "time")},
        "settings": settings,
    }
    torch.save(payload, out_path)
    with open(out_path.with_suffix(".json"), "w") as f:
        json.dump({"spec": spec.to_json(), "settings": settings}, f, indent=2)


def load_model(path):
    """Returns (model, record) with the model in eval mode."""
    record = torch.load(path, map_location="cpu", weights_only=False)
    spec = CaeSpec.from_json(record["spec"])
    model = Cae(spec)
    model.load_state_dict(record["state"])
    model.eval()
    return model, record


def encode_container(model_path, container_path, out_path) -> tuple:
    """Physical snapshots -> latent container the reducer can train on."""
    model, record = load_model(model_path)
    spec = model.spec
    header, samples = _load_training_set(spec, container_path)
    lo = np.asarray(record["norm_min"])
    hi = np.asarray(record["norm_max"])
    x = torch.from_numpy(apply_norm(samples, lo, hi).astype(np.float32))
    z = _chunked(x, model.encode).astype(np.float64)
    n_p = len(header["param_values"])
    n_t = header["time"]["count"]
    lat = z.reshape(n_p, n_t, spec.rank)   # one-channel latents store squeezed
    # the affine travels in the header so a consumer holding only this
    # container and the decoder weights can undo the scaling
    extra = {"normalization": {"channels": list(record["channel_names"]),
                               "min": lo.tolist(), "max": hi.tolist()}}
    out_header = container.derived_header(header, "snapshots", "latent", ["z"], extra)
    container.write(out_path, out_header, lat)
    return out_header, lat


def decode_container(model_path, latents_path, out_path) -> tuple:
    """Latent container (e.g. reducer predictions) -> physical snapshots."""
    model, record = load_model(model_path)
    spec = model.spec
    header, z = container.read_latents(latents_path)
    if z.shape[2] != spec.rank:
        raise ValueError(f"latent dimension {z.shape[2]} != model rank {spec.rank}")
    zt = torch.from_numpy(z.reshape(-1, spec.rank).astype(np.float32))
    dec = _chunked(zt, model.decode).astype(np.float64)
    lo = np.asarray(record["norm_min"])
    hi = np.asarray(record["norm_max"])
    phys = invert_norm(dec, lo, hi)
    data = phys.reshape(z.shape[0], z.shape[1], spec.in_channels, *spec.space)
    out_header = container.derived_header(
        header, "snapshots", record["source_header"]["frame"],
        list(record["channel_names"]))
    container.write(out_path, out_header, data)
    return out_header, data
