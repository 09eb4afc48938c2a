"""Command line for the trainer: plmtune train / plmtune eval."""

import argparse
import json
import sys

from .evaluate import evaluate_classifier
from .train import FinetuneConfig, train_classifier


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(prog="plmtune")
    sub = parser.add_subparsers(dest="cmd", required=True)

    p_train = sub.add_parser("train", help="fine-tune on an export file")
    p_train.add_argument("--export", required=True)
    p_train.add_argument("--out", required=True)
    p_train.add_argument("--learning-rate", type=float, default=5e-5)
    p_train.add_argument("--batch-size", type=int, default=16)
    p_train.add_argument("--epochs", type=int, default=10)
    p_train.add_argument("--max-seq-len", type=int, default=512)
    p_train.add_argument("--seed", type=int, default=13)
    p_train.add_argument("--patience", type=int, default=3)

    p_eval = sub.add_parser("eval", help="score a saved model on an export file")
    p_eval.add_argument("--model-dir", required=True)
    p_eval.add_argument("--export", required=True)
    p_eval.add_argument("--csv-out")

    args = parser.parse_args(argv)
    if args.cmd == "train":
        config = FinetuneConfig(
            learning_rate=args.learning_rate, batch_size=args.batch_size,
            epochs=args.epochs, max_seq_len=args.max_seq_len,
            seed=args.seed, patience=args.patience,
        )
        summary = train_classifier(args.export, config, args.out)
        print(json.dumps(summary, indent=2))
        return 0
    p, r, f = evaluate_classifier(args.model_dir, args.export, csv_out=args.csv_out)
    print(f"precision={p:.4f} recall={r:.4f} f_measure={f:.4f}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
