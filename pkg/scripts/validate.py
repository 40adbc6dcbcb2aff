"""Run the nine acceptance checks and write out/validate/validate.txt.

    python scripts/validate.py [--jobs N] [--cache DIR] [--only 1 4 7]
"""

import argparse
import logging
import sys

from parcov import acceptance


def main():
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--cache", default=".cache")
    p.add_argument("--jobs", type=int, default=0)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--only", type=int, nargs="*", help="criterion numbers to run")
    p.add_argument("-v", "--verbose", action="store_true")
    args = p.parse_args()
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    ctx = acceptance.Context(cache_dir=args.cache, jobs=args.jobs, seed=args.seed)
    results = acceptance.run_all(ctx, numbers=args.only, report=lambda line: print(line, flush=True))
    print(f"{sum(r.passed for r in results)}/{len(results)} passed")
    return 0 if all(r.passed for r in results) else 1


if __name__ == "__main__":
    sys.exit(main())
