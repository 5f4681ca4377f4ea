"""Train the random-index (A) and expanded (B) models on one split and compare residuals.

Writes, per scheme, the model, training history and evaluation CSVs under
--out, then prints a side-by-side table of overall and per-super-layer
residual statistics.

    python scripts/compare_schemes.py --out runs/compare --seed 7
    python scripts/compare_schemes.py --out runs/quick --epochs 100 --train-n 1000 --test-n 500
"""

import argparse
import logging
from pathlib import Path

from segrestore import dataset, evaluation, trackgen
from segrestore.cli import derive_seeds
from segrestore.nncore import CANONICAL_DIMS, init_network
from segrestore.train import TrainConfig, save_model, train, write_history


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--out", type=Path, required=True)
    parser.add_argument("--seed", type=int, default=7)
    parser.add_argument("--train-n", type=int, default=5000)
    parser.add_argument("--test-n", type=int, default=3500)
    parser.add_argument("--epochs", type=int, default=TrainConfig().max_epochs)
    parser.add_argument("--lr", type=float, default=TrainConfig().learning_rate)
    parser.add_argument("--momentum", type=float, default=TrainConfig().momentum)
    parser.add_argument("--threshold", type=float, default=evaluation.DEFAULT_THRESHOLD)
    args = parser.parse_args()
    logging.basicConfig(level=logging.INFO, format="%(asctime)s %(message)s")

    seeds = derive_seeds(args.seed)
    samples = trackgen.gen_dataset(args.train_n + args.test_n, trackgen.GenConfig(seed=args.seed))
    train_set, test_set = dataset.split(samples, args.train_n, args.test_n, seeds["split"])

    reports = {}
    for scheme in dataset.Scheme:
        out = args.out / f"scheme_{scheme.value}"
        out.mkdir(parents=True, exist_ok=True)
        pairs = dataset.normalize_pairs(dataset.build_pairs(train_set, scheme, seeds["corrupt"]))
        net = init_network(CANONICAL_DIMS, seeds["init"])
        cfg = TrainConfig(args.lr, args.momentum, args.epochs, shuffle_seed=seeds["shuffle"])
        history = train(pairs, cfg, net)
        save_model(net, out / "model.txt")
        write_history(history, out / "history.csv")
        for mode in evaluation.Mode:
            rep = evaluation.evaluate(net, test_set, mode, args.seed, threshold=args.threshold)
            evaluation.write_report(rep, out / f"eval_{mode.value}")
            reports[scheme.value, mode.value] = rep
        logging.info("scheme %s: %d pairs, %.0f s", scheme.value, len(pairs), history.wall_time)

    print(f"\n{'':24}{'scheme A':>12}{'scheme B':>12}")
    for label, key in (("std (random index)", "random"), ("std (all indices)", "all")):
        print(f"{label:24}{reports['A', key].std:12.4f}{reports['B', key].std:12.4f}")
    print(f"{'recovery (|r|<=%g)' % args.threshold:24}"
          f"{reports['A', 'random'].recovery_rate:12.4f}{reports['B', 'random'].recovery_rate:12.4f}")
    print("\nper missing super-layer (all indices): mean / std")
    for k in range(trackgen.N_SUPERLAYERS):
        a, b = reports["A", "all"].per_index[k], reports["B", "all"].per_index[k]
        print(f"  SL{k + 1}  A {a.mean:+.3f} / {a.std:.3f}   B {b.mean:+.3f} / {b.std:.3f}")


if __name__ == "__main__":
    main()
