"""Command line front end: train a frame autoencoder, then move snapshot
containers through it in either direction."""
from __future__ import annotations

import argparse
import sys

from .container import ContainerError
from .specs import DEFAULT_RANK, FRAMES, PROBLEMS, spec_for
from .train import decode_container, encode_container, train


def _parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="lagcae",
                                description="convolutional autoencoders for "
                                            "snapshot containers")
    sub = p.add_subparsers(dest="command", required=True)

    t = sub.add_parser("train", help="fit an autoencoder on a snapshot container")
    t.add_argument("--problem", required=True, choices=PROBLEMS)
    t.add_argument("--frame", required=True, choices=FRAMES)
    t.add_argument("--rank", type=int, default=DEFAULT_RANK)
    t.add_argument("--in", dest="infile", required=True)
    t.add_argument("--out", required=True, help="weights file (.pt)")
    t.add_argument("--epochs", type=int, default=3000)
    t.add_argument("--lr", type=float, default=1e-3)
    t.add_argument("--seed", type=int, default=0)
    t.add_argument("--batch", type=int, default=None,
                   help="samples per step (default: whole set in 1D, 32 in 2D)")
    t.add_argument("--threads", type=int, default=None)
    t.add_argument("--freeze-encoder", action="store_true",
                   help="keep the encoder at its seeded initialization and "
                        "fit only the decoder (for latents that feed a "
                        "linear forecaster)")
    t.add_argument("--select", action="store_true",
                   help="keep the checkpoint whose latent trajectories a "
                        "linear one-step map forecasts best")
    t.add_argument("--log-every", type=int, default=0)

    e = sub.add_parser("encode", help="physical container -> latent container")
    e.add_argument("--model", required=True)
    e.add_argument("--in", dest="infile", required=True)
    e.add_argument("--out", required=True)

    d = sub.add_parser("decode", help="latent container -> physical container")
    d.add_argument("--model", required=True)
    d.add_argument("--in", dest="infile", required=True)
    d.add_argument("--out", required=True)
    return p


def _run(args) -> int:
    if args.command == "train":
        spec = spec_for(args.problem, args.frame, args.rank)
        report = train(spec, args.infile, args.out, epochs=args.epochs,
                       lr=args.lr, seed=args.seed, batch=args.batch,
                       threads=args.threads,
                       freeze_encoder=args.freeze_encoder,
                       select=args.select, log_every=args.log_every)
        picked = (f", kept epoch {report.selected_epoch}"
                  if report.selected_epoch is not None else "")
        print(f"trained {args.problem}/{args.frame} rank {spec.rank}: "
              f"final loss {report.total[-1]:.6e}, "
              f"reconstruction error {report.final_recon_error:.4%}{picked}")
    elif args.command == "encode":
        header, lat = encode_container(args.model, args.infile, args.out)
        print(f"encoded {lat.shape[0]}x{lat.shape[1]} snapshots to "
              f"rank-{lat.shape[2]} latents: {args.out}")
    elif args.command == "decode":
        header, data = decode_container(args.model, args.infile, args.out)
        print(f"decoded {data.shape[0]}x{data.shape[1]} snapshots "
              f"({header['frame']} frame): {args.out}")
    return 0


def main(argv=None) -> int:
    args = _parser().parse_args(argv)
    try:
        return _run(args)
    except (ContainerError, OSError) as e:
        print(f"lagcae: {e}", file=sys.stderr)
        return 4
    except RuntimeError as e:
        print(f"lagcae: {e}", file=sys.stderr)
        return 3
    except ValueError as e:
        print(f"lagcae: {e}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
