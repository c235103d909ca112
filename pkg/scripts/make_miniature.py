#!/usr/bin/env python3
"""Regenerate the bundled miniature corpus fixtures under data/miniature/."""

import argparse
import json
from pathlib import Path

from sublm.miniature import DEFAULT_SEED, generate_miniature


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--seed", type=int, default=DEFAULT_SEED)
    parser.add_argument(
        "--out-dir", default=Path(__file__).resolve().parent.parent / "data" / "miniature"
    )
    args = parser.parse_args()
    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    manifest = {"seed": args.seed, "splits": {}}
    for name, corpus in generate_miniature(args.seed).items():
        corpus.save(out_dir / f"{name}.txt")
        manifest["splits"][name] = {
            "sentences": len(corpus),
            "token_count": corpus.token_count,
            "type_count": corpus.type_count,
        }
        print(f"{name}: {len(corpus)} sentences, {corpus.token_count} tokens, "
              f"{corpus.type_count} types")
    (out_dir / "manifest.json").write_text(
        json.dumps(manifest, indent=2) + "\n", encoding="utf-8"
    )


if __name__ == "__main__":
    main()
