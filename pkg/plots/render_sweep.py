#!/usr/bin/env python3
"""Exponent-versus-bandwidth figure from a sweep CSV.

Input columns: tau, value, optionally lower_bound and upper_bound (drawn
as a shaded band).  An optional --ref value is drawn as a horizontal
line.  The script re-checks that the curve is non-decreasing and warns if
not; the numbers themselves are never recomputed here.
"""

import argparse
import sys

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt

from _common import PlotInputError, floats, read_columns


def render(in_path: str, out_path: str, ref: float | None = None) -> list[str]:
    cols = read_columns(in_path, required=("tau", "value"), optional=("lower_bound", "upper_bound"))
    tau = floats(cols["tau"])
    value = floats(cols["value"])
    notes = []
    if any(b < a - 1e-9 for a, b in zip(value, value[1:])):
        notes.append("monotonicity lint: exponent values decrease along the grid")
    else:
        notes.append("monotonicity lint: ok")

    fig, ax = plt.subplots(figsize=(6, 4))
    if "lower_bound" in cols and "upper_bound" in cols:
        lo = floats(cols["lower_bound"])
        hi = floats(cols["upper_bound"])
        ax.fill_between(tau, lo, hi, alpha=0.25, color="tab:blue", label="bounds")
    ax.plot(tau, value, "o-", color="tab:blue", label="exponent")
    if ref is not None:
        ax.axhline(ref, color="tab:red", ls="--", lw=1)
        ax.annotate(f"ref = {ref:g}", xy=(tau[0], ref), xytext=(2, 4),
                    textcoords="offset points", color="tab:red", fontsize=8)
    ax.set_xlabel("bandwidth ratio tau")
    ax.set_ylabel("type-2 error exponent [bits]")
    ax.legend(loc="lower right")
    fig.tight_layout()
    fig.savefig(out_path, dpi=150)
    plt.close(fig)
    return notes


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--in", dest="in_path", required=True)
    parser.add_argument("--out", dest="out_path", required=True)
    parser.add_argument("--ref", type=float, default=None)
    args = parser.parse_args(argv)
    try:
        notes = render(args.in_path, args.out_path, args.ref)
    except PlotInputError as exc:
        print(exc, file=sys.stderr)
        return 1
    for note in notes:
        print(note)
    print(f"wrote {args.out_path}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
