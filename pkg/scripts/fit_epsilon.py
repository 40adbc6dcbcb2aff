"""Fit the cut-off epsilon for each symmetry class to the exact zero-Lambda Sigma2.

    python scripts/fit_epsilon.py [--cache DIR]
"""

import argparse
import sys

from parcov import pipeline, theory


def main():
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--cache", default=".cache")
    args = p.parse_args()
    print("beta  fitted    reference  rel.diff")
    for beta in (1, 2, 4):
        eps = pipeline.fitted_epsilon(beta, cache_dir=args.cache).value
        ref = theory.EPSILON_DEFAULTS[beta]
        print(f"{beta:<5} {eps:.4f}    {ref:.4f}     {100 * (eps / ref - 1):+.1f}%")
    return 0


if __name__ == "__main__":
    sys.exit(main())
