"""refscorer command line: train a toy pair scorer, or serve one over stdio."""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from .model import DEFAULT_HPARAMS, PairScorerModel, load_pair_file, train
from .server import serve


def cmd_train(args: argparse.Namespace) -> int:
    lines = Path(args.pairs).read_text(encoding="utf-8").splitlines()
    pairs = load_pair_file(lines)
    result = train(
        pairs,
        epochs=args.epochs,
        batch_size=args.batch_size,
        lr=args.lr,
        weight_decay=args.weight_decay,
        warmup_steps=args.warmup_steps,
        seed=args.seed,
        dim=args.dim,
    )
    result.model.save(args.out)
    log = {
        "pairs": len(pairs),
        "epochs": args.epochs,
        "epoch_losses": result.epoch_losses,
        "steps": len(result.step_losses),
    }
    if args.log:
        Path(args.log).write_text(
            json.dumps({**log, "step_losses": result.step_losses}, indent=2) + "\n",
            encoding="utf-8",
        )
    print(json.dumps(log))
    return 0


def cmd_serve(args: argparse.Namespace) -> int:
    if args.weights:
        model = PairScorerModel.load(args.weights)
    else:
        model = PairScorerModel()  # untrained: every pair scores 0.5
    try:
        serve(sys.stdin, sys.stdout, model)
    except (BrokenPipeError, OSError) as exc:
        print(f"stream error: {exc}", file=sys.stderr)
        return 1
    return 0


def main(argv: list[str] | None = None) -> int:
    parser = argparse.ArgumentParser(prog="refscorer")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("train", help="fit the toy scorer on a labeled pair file")
    p.add_argument("--pairs", required=True)
    p.add_argument("--out", required=True, help="weights file (.npz)")
    p.add_argument("--log", help="optional JSON training log")
    p.add_argument("--epochs", type=int, default=DEFAULT_HPARAMS["epochs"])
    p.add_argument("--batch-size", type=int, default=DEFAULT_HPARAMS["batch_size"])
    p.add_argument("--lr", type=float, default=DEFAULT_HPARAMS["lr"])
    p.add_argument("--weight-decay", type=float, default=DEFAULT_HPARAMS["weight_decay"])
    p.add_argument("--warmup-steps", type=int, default=DEFAULT_HPARAMS["warmup_steps"])
    p.add_argument("--seed", type=int, default=DEFAULT_HPARAMS["seed"])
    p.add_argument("--dim", type=int, default=1 << 15)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("serve", help="speak lexidot-scorer/1 over stdio")
    p.add_argument("--weights", help="weights file from `refscorer train`")
    p.set_defaults(func=cmd_serve)

    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except FileNotFoundError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
