"""Write the CSV bundles for fig1-fig3 and, if matplotlib is installed, PNG plots.

    python scripts/make_figures.py [--out out/figures] [--preset desk|full|smoke] [fig1 fig2 fig3]
"""

import argparse
import csv
import sys
from collections import defaultdict
from pathlib import Path

from parcov import cli


def _read(path):
    with open(path) as fh:
        return list(csv.DictReader(fh))


def _series(rows, x, y, key=("beta", "lambda")):
    out = defaultdict(lambda: ([], []))
    for row in rows:
        if row[x] in ("inf", ""):
            continue
        xs, ys = out[tuple(float(row[k]) for k in key)]
        xs.append(float(row[x]))
        ys.append(float(row[y]))
    return out


def plot_fig1(plt, out):
    data = _series(_read(out / "fig1_data.csv"), "k", "K_smoothed")
    theo = _series([r for r in _read(out / "fig1_exact.csv")], "k_or_r", "value")
    fig, axes = plt.subplots(1, 2, figsize=(10, 4))
    for ax, beta in zip(axes, (1.0, 2.0)):
        for (b, lam), (k, v) in sorted(data.items()):
            if b == beta:
                ax.plot(k, v, ".", ms=2, label=f"data L={lam:g}")
        for (b, lam), (k, v) in sorted(theo.items()):
            if b == beta:
                ax.plot(k, v, "-", lw=1)
        ax.set(xlim=(0, 3), ylim=(0, 1.2), xlabel="k", ylabel="K(k; Lambda)", title=f"beta={beta:g}")
        ax.legend(fontsize=7)
    fig.savefig(out / "fig1.png", dpi=150, bbox_inches="tight")


def plot_fig2(plt, out):
    exact = _series(_read(out / "fig2_exact.csv"), "lambda", "value", key=("beta", "k_or_r"))
    compact = _series(_read(out / "fig2_compact.csv"), "lambda", "value", key=("beta", "k_or_r"))
    data = {name: _series(_read(out / f"fig2_{name}.csv"), "lambda", "estimate", key=("beta", "r"))
            for name in ("ge", "kr")}
    fig, axes = plt.subplots(1, 3, figsize=(14, 4))
    for ax, beta in zip(axes, (1.0, 2.0, 4.0)):
        for (b, r), (lam, v) in sorted(exact.items()):
            if b == beta:
                ax.plot(lam, v, "-", label=f"exact r={r:g}")
                ax.plot(*compact[(b, r)], "--", lw=0.8)
        for name, marker in (("ge", "o"), ("kr", "s")):
            for (b, r), (lam, v) in sorted(data[name].items()):
                if b == beta:
                    ax.plot(lam, v, marker, mfc="none", ms=4)
        ax.set(xlabel="Lambda", ylabel="Sigma11", title=f"beta={beta:g}")
        ax.legend(fontsize=7)
    fig.savefig(out / "fig2.png", dpi=150, bbox_inches="tight")


def plot_fig3(plt, out):
    exact = _series(_read(out / "fig3_exact.csv"), "k_or_r", "value")
    data = _series(_read(out / "fig3_kr.csv"), "r", "estimate")
    fig, axes = plt.subplots(1, 2, figsize=(10, 4))
    for ax, beta in zip(axes, (1.0, 2.0)):
        for (b, lam), (r, v) in sorted(exact.items()):
            if b == beta:
                ax.plot(r, v, "-", label=f"exact L={lam:g}")
        for (b, lam), (r, v) in sorted(data.items()):
            if b == beta:
                ax.plot(r, v, ".", ms=3)
        ax.set(xlabel="r", ylabel="V(r; Lambda)", title=f"beta={beta:g}")
        ax.legend(fontsize=7)
    fig.savefig(out / "fig3.png", dpi=150, bbox_inches="tight")


PLOTS = {"fig1": plot_fig1, "fig2": plot_fig2, "fig3": plot_fig3}


def main():
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("figures", nargs="*", default=list(PLOTS), choices=list(PLOTS))
    p.add_argument("--out", default="out/figures")
    p.add_argument("--preset", default="desk")
    p.add_argument("--jobs", type=int, default=0)
    args = p.parse_args()
    out = Path(args.out)
    try:
        import matplotlib

        matplotlib.use("Agg")
        import matplotlib.pyplot as plt
    except ImportError:
        plt = None
    for name in args.figures:
        rc = cli.main(["figure", name, "--preset", args.preset, "--out", str(out), "--jobs", str(args.jobs)])
        if rc:
            return rc
        if plt is not None:
            PLOTS[name](plt, out)
    return 0


if __name__ == "__main__":
    sys.exit(main())
