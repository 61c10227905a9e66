"""Run the bound and identity checks over the reference corpus and print a table.

    python scripts/verify_corpus.py --horizon 500
    python scripts/verify_corpus.py --rational
"""

from __future__ import annotations

import argparse
import sys

from returnlab.harness.suite import (
    bound_checks,
    default_corpus,
    identity_checks,
    rational_checks,
    small_corpus,
)


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--horizon", type=int, default=500)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--rational", action="store_true", help="exact checks on the small corpus")
    args = ap.parse_args(argv)

    results = []
    if args.rational:
        for e in small_corpus():
            results += rational_checks(e)
    else:
        for e in default_corpus(args.horizon, args.seed):
            results += bound_checks(e) + identity_checks(e, seed=args.seed)
    width = max(len(r.graph) for r in results)
    for r in results:
        print(f"{r.graph:{width}s}  {r.check:24s}  {r.value: .4e}  {r.threshold: .4e}  "
              f"{'ok' if r.passed else 'FAIL'}")
    failed = sum(not r.passed for r in results)
    print(f"{len(results) - failed}/{len(results)} checks passed")
    return 1 if failed else 0


if __name__ == "__main__":
    sys.exit(main())
