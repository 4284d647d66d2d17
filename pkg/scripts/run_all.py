"""Run the four studies at their default settings into one results directory.

    python scripts/run_all.py [OUT] [--jobs N] [--quick]

--quick shrinks samples and iterations for a smoke run.
"""
import argparse
import sys
from pathlib import Path

from qsnn.cli import main

QUICK = ["--samples", "3", "--iters", "30"]


def run(argv):
    print("$ qsnn " + " ".join(argv), flush=True)
    code = main(argv)
    if code:
        sys.exit(code)


if __name__ == "__main__":
    ap = argparse.ArgumentParser()
    ap.add_argument("out", nargs="?", default="results", type=Path)
    ap.add_argument("--jobs", default="1")
    ap.add_argument("--quick", action="store_true")
    args = ap.parse_args()
    extra = QUICK if args.quick else []
    for name in ("accelerate", "robustness", "verse", "label-noise"):
        flags = extra if name != "label-noise" else (["--iters", "30", "--correct-at", "10"] if args.quick else [])
        run([name, "--out", str(args.out / name), "--jobs", args.jobs] + flags)
