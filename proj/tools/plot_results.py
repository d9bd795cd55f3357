#!/usr/bin/env python3
"""Plot sparse-lpv CSV output: trajectory.csv (angles, forces) and sweep.csv (actuator bars)."""

import argparse
import csv
import sys
from pathlib import Path


def read_csv(path):
    with open(path, newline="") as f:
        return list(csv.DictReader(f))


def plot_trajectory(rows, out):
    import matplotlib.pyplot as plt

    t = [float(r["t"]) for r in rows]
    thetas = sorted(k for k in rows[0] if k.startswith("theta_"))
    forces = sorted(k for k in rows[0] if k.startswith("u_"))
    fig, axes = plt.subplots(2 if forces else 1, 1, sharex=True, squeeze=False)
    for k in thetas:
        axes[0][0].plot(t, [float(r[k]) for r in rows], label=k)
    axes[0][0].set_ylabel("angle [rad]")
    axes[0][0].legend(fontsize="small")
    if forces:
        for k in forces:
            axes[1][0].plot(t, [float(r[k]) for r in rows], label=k)
        axes[1][0].set_ylabel("force [N]")
    axes[-1][0].set_xlabel("t [s]")
    fig.savefig(out, dpi=150)


def plot_sweep(rows, out):
    import matplotlib.pyplot as plt

    done = [r for r in rows if r["u_inf"]]
    fig, ax = plt.subplots()
    width = 0.8 / max(len(done), 1)
    for j, r in enumerate(done):
        u = [float(v) for v in r["u_inf"].split(";")]
        label = f'{r["kind"]} {r["model"]} sqrt_gub={r["gamma_ub_sqrt"]}'
        ax.bar([i + 1 + (j - len(done) / 2) * width for i in range(len(u))], u, width, label=label)
    ax.set_xlabel("actuator")
    ax.set_ylabel("max |u_i| [N]")
    ax.legend(fontsize="x-small")
    fig.savefig(out, dpi=150)


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("dir", type=Path, help="output directory of a sparse-lpv run")
    args = ap.parse_args()
    found = False
    if (args.dir / "trajectory.csv").exists():
        plot_trajectory(read_csv(args.dir / "trajectory.csv"), args.dir / "trajectory.png")
        found = True
    if (args.dir / "sweep.csv").exists():
        plot_sweep(read_csv(args.dir / "sweep.csv"), args.dir / "sweep.png")
        found = True
    if not found:
        sys.exit(f"no trajectory.csv or sweep.csv in {args.dir}")


if __name__ == "__main__":
    main()
