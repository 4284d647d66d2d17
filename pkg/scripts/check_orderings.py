"""Print the model orderings from summary CSVs written by run_all.py.

    python scripts/check_orderings.py [RESULTS] [CORRECT_AT]
"""
import sys
from pathlib import Path

import numpy as np

from qsnn.corpus import read_csv

MODELS = ("coherent_h0.1", "incoherent", "classical")


def load(folder):
    return {m: read_csv(folder / f"{m}_summary.csv") for m in MODELS if (folder / f"{m}_summary.csv").exists()}


def accelerate(folder):
    data = load(folder)
    for it in (20, 50):
        if it >= len(next(iter(data.values()))["mean_loss"]):
            continue
        row = ", ".join(f"{m} {d['mean_loss'][it]:.4f} +- {(d['ci95_hi'][it] - d['ci95_lo'][it]) / 2:.4f}"
                        for m, d in data.items())
        print(f"  loss at iteration {it}: {row}")


def robustness(folder):
    data = load(folder)
    print("  final robustness: " + ", ".join(f"{m} {d['mean_robustness'][-1]:.6f}" for m, d in data.items()
                                              if np.isfinite(d["mean_robustness"][-1])))


def verse(folder):
    for m, d in load(folder).items():
        ids = [k.removeprefix("mean_p_yes_") for k in d if k.startswith("mean_p_yes_")]
        print(f"  {m}: " + ", ".join(f"{i} {d['mean_p_yes_' + i][-1]:.4f}" for i in ids))


def label_noise(folder, correct_at=100):
    for m, d in load(folder).items():
        mean = d["mean_loss"]
        if len(mean) <= correct_at:
            continue
        final = mean[-1]
        settle = next(k for k in range(len(mean) - correct_at)
                      if np.all(np.abs(mean[correct_at + k:] - final) <= 0.05))
        print(f"  {m}: loss before/after correction {mean[correct_at - 1]:.4f}/{mean[correct_at]:.4f}, "
              f"settles within 0.05 after {settle} iterations")


if __name__ == "__main__":
    root = Path(sys.argv[1] if len(sys.argv) > 1 else "results")
    correct_at = int(sys.argv[2]) if len(sys.argv) > 2 else 100
    for name, fn in [("accelerate", accelerate), ("robustness", robustness), ("verse", verse),
                     ("label-noise", lambda f: label_noise(f, correct_at))]:
        if (root / name).is_dir():
            print(name)
            fn(root / name)
