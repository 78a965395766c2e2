"""Write a seeded synthetic corpus (unlabeled JSON Lines) for CLI experiments."""
from __future__ import annotations

import argparse

from evidencer.acquire import save_corpus
from evidencer.synthetic import SyntheticSpec, generate


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--out", required=True)
    ap.add_argument("--n-docs", type=int, default=600)
    ap.add_argument("--positive-fraction", type=float, default=0.55)
    ap.add_argument("--cue-rate", type=float, default=0.6)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()
    spec = SyntheticSpec(
        n_docs=args.n_docs, positive_fraction=args.positive_fraction, cue_rate=args.cue_rate, seed=args.seed
    )
    n = save_corpus(generate(spec), args.out)
    print(f"wrote {n} records to {args.out}")


if __name__ == "__main__":
    main()
