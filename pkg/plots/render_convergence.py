#!/usr/bin/env python3
"""Detector-simulation convergence figure.

Plots the measured exponent against the block count j: the exact
typical-set exponent when the beta_exact_exponent column is present, and
the Monte-Carlo estimate -log2(beta_hat)/j where beta_hat is positive.
An optional --ref value (the exact divergence target) is drawn as a
horizontal line annotated with its value.
"""

import argparse
import math
import sys

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt

from _common import MissingColumn, PlotInputError, floats, read_columns


def render(in_path: str, out_path: str, ref: float | None = None) -> None:
    cols = read_columns(in_path, required=("j",), optional=("beta_exact_exponent", "beta_hat"))
    if "beta_exact_exponent" not in cols and "beta_hat" not in cols:
        raise MissingColumn(
            f"MissingColumn: {in_path} needs beta_exact_exponent or beta_hat"
        )
    j = floats(cols["j"])

    fig, ax = plt.subplots(figsize=(6, 4))
    plotted = False
    if "beta_exact_exponent" in cols:
        exact = floats(cols["beta_exact_exponent"])
        pts = [(a, b) for a, b in zip(j, exact) if b is not None and math.isfinite(b)]
        if pts:
            ax.plot(*zip(*pts), "o-", color="tab:blue", label="exact typical-set exponent")
            plotted = True
    if "beta_hat" in cols:
        beta = floats(cols["beta_hat"])
        pts = [(a, -math.log2(b) / a) for a, b in zip(j, beta) if b is not None and b > 0]
        if pts:
            ax.plot(*zip(*pts), "s--", color="tab:green", label="-log2(beta_hat)/j")
            plotted = True
    if not plotted:
        raise PlotInputError(f"no finite exponent points in {in_path}")
    if ref is not None:
        ax.axhline(ref, color="tab:red", ls="--", lw=1)
        ax.annotate(f"ref = {ref:g}", xy=(j[0], ref), xytext=(2, 4),
                    textcoords="offset points", color="tab:red", fontsize=8)
    ax.set_xlabel("blocks j")
    ax.set_ylabel("exponent [bits per source sample]")
    ax.legend(loc="best")
    fig.tight_layout()
    fig.savefig(out_path, dpi=150)
    plt.close(fig)


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--in", dest="in_path", required=True)
    parser.add_argument("--out", dest="out_path", required=True)
    parser.add_argument("--ref", type=float, default=None)
    args = parser.parse_args(argv)
    try:
        render(args.in_path, args.out_path, args.ref)
    except PlotInputError as exc:
        print(exc, file=sys.stderr)
        return 1
    print(f"wrote {args.out_path}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
