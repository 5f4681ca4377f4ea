"""Command-line entry point: ``segrestore {gen,train,eval,infer}``."""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

import numpy as np

from . import dataset, evaluation, trackgen
from .nncore import CANONICAL_DIMS, NumericalError, init_network
from .train import TrainConfig, load_model, save_model, train, write_history

log = logging.getLogger("segrestore")


class CommandError(RuntimeError):
    pass


def _positive_int(text: str) -> int:
    value = int(text)
    if value < 1:
        raise argparse.ArgumentTypeError(f"expected a positive integer, got {text}")
    return value


def _non_negative_int(text: str) -> int:
    value = int(text)
    if value < 0:
        raise argparse.ArgumentTypeError(f"expected a non-negative integer, got {text}")
    return value


def _scheme(text: str) -> dataset.Scheme:
    try:
        return dataset.Scheme(text.upper())
    except ValueError:
        raise argparse.ArgumentTypeError(f"scheme must be A or B, got {text!r}") from None


def derive_seeds(seed: int) -> dict[str, int]:
    """Independent streams for split, corruption, weight init and shuffling."""
    state = np.random.SeedSequence(seed).generate_state(4, dtype=np.uint64)
    return dict(zip(("split", "corrupt", "init", "shuffle"), (int(s) for s in state)))


def _require_file(path: Path) -> Path:
    if not path.is_file():
        raise CommandError(f"no such file: {path}")
    return path


def cmd_gen(args) -> None:
    cfg = trackgen.GenConfig(wires=args.wires, seed=args.seed)
    samples = trackgen.gen_dataset(args.n, cfg)
    trackgen.save_csv(samples, args.out)
    log.info("wrote %d tracks to %s", len(samples), args.out)


def cmd_train(args) -> None:
    samples = trackgen.load_csv(_require_file(args.data), wires=args.wires)
    seeds = derive_seeds(args.seed)
    train_set, test_set = dataset.split(samples, args.train_n, args.test_n, seeds["split"])
    if len(train_set) == 0:
        raise CommandError("training split is empty")
    spec = dataset.NormSpec(args.wires)
    pairs = dataset.normalize_pairs(dataset.build_pairs(train_set, args.scheme, seeds["corrupt"]), spec)
    cfg = TrainConfig(
        learning_rate=args.lr,
        momentum=args.momentum,
        max_epochs=args.epochs,
        target_mse=args.target_mse,
        shuffle_seed=seeds["shuffle"],
    )
    net = init_network(CANONICAL_DIMS, seeds["init"])
    log.info("training scheme %s on %d pairs", args.scheme.value, len(pairs))
    report = train(pairs, cfg, net)
    log.info("%d epochs, final mean mse %.6g, %.1f s", report.epochs_run, report.final_mse, report.wall_time)

    out_model = Path(args.out_model)
    history = Path(args.history) if args.history else out_model.parent / "history.csv"
    test_path = out_model.with_name(out_model.name + ".test.csv")
    write_history(report, history)
    trackgen.save_csv(test_set, test_path)
    save_model(net, out_model)


def cmd_eval(args) -> None:
    net = load_model(_require_file(args.model))
    test = trackgen.load_csv(_require_file(args.test), wires=args.wires)
    if len(test) == 0:
        raise CommandError(f"test file {args.test} has no samples")
    report = evaluation.evaluate(
        net, test, args.mode, args.seed, dataset.NormSpec(args.wires), args.threshold
    )
    report.extra["recovery_note"] = "fraction of |residual| <= threshold; proxy, not tracking efficiency"
    evaluation.write_report(report, args.out)
    print(f"n={report.n} mean={report.mean:.4f} std={report.std:.4f} "
          f"recovery_rate_proxy={report.recovery_rate:.4f}")


def cmd_infer(args) -> None:
    try:
        values = np.array([float(f) for f in args.input.split(",")])
    except ValueError:
        raise CommandError(f"--input must be 6 comma-separated numbers, got {args.input!r}") from None
    if values.shape != (trackgen.N_SUPERLAYERS,):
        raise CommandError(f"--input needs {trackgen.N_SUPERLAYERS} values, got {values.size}")
    zeros = np.flatnonzero(values == dataset.SENTINEL)
    if len(zeros) != 1:
        raise CommandError(f"--input must contain exactly one 0 field, found {len(zeros)}")
    k = int(zeros[0])
    filled = values.copy()
    filled[k] = 1.0  # placeholder for validation; the network sees the sentinel
    problem = trackgen.validate_sample(filled, args.wires)
    if problem:
        raise CommandError(f"--input: {problem}")
    net = load_model(_require_file(args.model))
    print(f"{evaluation.infer_missing(net, values, k, dataset.NormSpec(args.wires)):.4f}")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="segrestore", description=__doc__)
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen", help="generate synthetic tracks")
    p.add_argument("--n", type=_positive_int, required=True)
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--out", type=Path, required=True)
    p.add_argument("--wires", type=int, default=trackgen.DEFAULT_WIRES)
    p.set_defaults(func=cmd_gen)

    p = sub.add_parser("train", help="split, corrupt and train a model")
    p.add_argument("--data", type=Path, required=True)
    p.add_argument("--scheme", type=_scheme, required=True)
    p.add_argument("--train-n", type=_non_negative_int, required=True)
    p.add_argument("--test-n", type=_non_negative_int, required=True)
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--out-model", type=Path, required=True)
    p.add_argument("--history", type=Path, default=None,
                   help="training history CSV (default: history.csv next to the model)")
    defaults = TrainConfig()
    p.add_argument("--lr", type=float, default=defaults.learning_rate)
    p.add_argument("--momentum", type=float, default=defaults.momentum)
    p.add_argument("--epochs", type=_positive_int, default=defaults.max_epochs)
    p.add_argument("--target-mse", type=float, default=defaults.target_mse)
    p.add_argument("--wires", type=int, default=trackgen.DEFAULT_WIRES)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("eval", help="residuals of a model on a test file")
    p.add_argument("--model", type=Path, required=True)
    p.add_argument("--test", type=Path, required=True)
    p.add_argument("--mode", choices=[m.value for m in evaluation.Mode], default="random")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--threshold", type=float, default=evaluation.DEFAULT_THRESHOLD)
    p.add_argument("--out", type=Path, required=True)
    p.add_argument("--wires", type=int, default=trackgen.DEFAULT_WIRES)
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("infer", help="predict the single missing (0) segment of one track")
    p.add_argument("--model", type=Path, required=True)
    p.add_argument("--input", required=True)
    p.add_argument("--wires", type=int, default=trackgen.DEFAULT_WIRES)
    p.set_defaults(func=cmd_infer)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(
        level=logging.INFO if args.verbose else logging.WARNING,
        format="%(levelname)s %(name)s: %(message)s",
    )
    try:
        args.func(args)
    except CommandError as exc:
        parser.error(str(exc))
    except (OSError, ValueError, NumericalError, trackgen.TrackGenError) as exc:
        print(f"segrestore {args.command}: error: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
