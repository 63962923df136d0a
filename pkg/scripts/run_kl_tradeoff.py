#!/usr/bin/env python3
"""Privacy-utility tradeoff: KL to the true posterior as the level varies."""

import argparse
import json
import pathlib
import subprocess
import sys

SPEC = {
    "kind": "kl_curve",
    "prior": [6, 18],
    "n": 100,
    "successes": 38,
    "lambdas": [2, 15],
    "epsilons": [0.01, 0.0316, 0.1, 0.316, 1.0, 3.16, 10.0, 31.6, 100.0],
}


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--out-dir", default="results")
    parser.add_argument("--plot", action="store_true")
    args = parser.parse_args()

    out_dir = pathlib.Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    spec_path = out_dir / "kl_curve.json"
    csv_path = out_dir / "kl_curve.csv"
    spec_path.write_text(json.dumps(SPEC, indent=2), encoding="utf-8")
    subprocess.run(
        [sys.executable, "-m", "rdposterior.cli", "experiment",
         "--spec", str(spec_path), "--out", str(csv_path)],
        check=True,
    )
    print(f"wrote {csv_path}")

    if args.plot:
        import csv as csvmod

        import matplotlib
        matplotlib.use("Agg")
        import matplotlib.pyplot as plt

        rows = list(csvmod.DictReader(open(csv_path, encoding="utf-8")))
        fig, axes = plt.subplots(1, 2, figsize=(11, 4))
        for ax, lam in zip(axes, ("2", "15")):
            for mech in ("diffused", "concentrated", "gaussian"):
                pts = [(float(r["epsilon"]), float(r["value"]))
                       for r in rows if r["mechanism"] == mech and r["lambda"] == lam
                       and not r["value"].startswith("error")]
                ax.plot(*zip(*pts), marker="o", label=mech)
            ax.set_xscale("log")
            ax.set_xlabel("level")
            ax.set_ylabel("KL(true posterior || mechanism)")
            ax.set_title(f"order {lam}")
            ax.legend()
        fig.tight_layout()
        fig.savefig(out_dir / "kl_curve.png", dpi=120)
        print(f"wrote {out_dir / 'kl_curve.png'}")


if __name__ == "__main__":
    main()
