"""Convolutional autoencoders for snapshot containers.

Nonlinear drop-in for the linear compression stage of the companion
reduced-order-modeling toolkit: train on a snapshot container, exchange
latent containers with the reducer, decode its predictions back to
physical fields.
"""
from .container import ContainerError, read, read_fields, read_latents, write
from .model import Cae, build
from .specs import CaeSpec, spec_for
from .train import TrainReport, decode_container, encode_container, load_model, train

__all__ = [
    "Cae", "CaeSpec", "ContainerError", "TrainReport", "build",
    "decode_container", "encode_container", "load_model", "read",
    "read_fields", "read_latents", "spec_for", "train", "write",
]

__version__ = "0.1.0"
