#!/usr/bin/env python3
"""End-to-end study on the symmetric binary instance.

Drives the CLI to produce every CSV for the default configuration:
channel capacity, the exponent-vs-bandwidth sweep with its bounds, the
small-block oracle at k = 1 and 2, and the detector simulation.  Outputs
land in results/ next to the repository root and feed the plotting
scripts unchanged.
"""

import pathlib
import subprocess
import sys

ROOT = pathlib.Path(__file__).resolve().parent.parent
CONFIG = ROOT / "configs" / "dsbs.json"
RESULTS = ROOT / "results"


def run(*argv: str) -> None:
    cmd = [sys.executable, "-m", "dht", *argv]
    print("+", " ".join(cmd[2:]))
    subprocess.run(cmd, check=True, cwd=ROOT)


def main() -> int:
    RESULTS.mkdir(exist_ok=True)
    run("capacity", "--channel", "bsc:0.1")
    run("sweep", "--config", str(CONFIG), "--out", str(RESULTS / "dsbs_sweep.csv"))
    for k in (1, 2):
        run(
            "oracle", "--config", str(CONFIG), "--k", str(k),
            "--out", str(RESULTS / f"dsbs_oracle_k{k}.csv"),
        )
    run(
        "simulate", "--config", str(CONFIG), "--seed", "7",
        "--out", str(RESULTS / "dsbs_simulate.csv"),
    )
    print(f"wrote CSVs to {RESULTS}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
