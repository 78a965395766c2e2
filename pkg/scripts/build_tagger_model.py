"""Train the bundled POS tagger from the fixture sentences and write it to the package data dir."""
from __future__ import annotations

import argparse
from pathlib import Path

from evidencer.lingua import load_fixture, train_tagger

DEFAULT_OUT = Path(__file__).resolve().parents[1] / "src" / "evidencer" / "data" / "tagger_model.tsv"


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--out", type=Path, default=DEFAULT_OUT)
    ap.add_argument("--iterations", type=int, default=5)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()
    model = train_tagger(load_fixture(), iterations=args.iterations, seed=args.seed)
    model.save(args.out)
    print(f"wrote {args.out}")


if __name__ == "__main__":
    main()
