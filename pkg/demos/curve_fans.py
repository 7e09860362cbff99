"""Horizontal integral-curve fans.

Draws two fans through one base point: curves along X1 + c2*X2 (spatial
arcs whose projections are circles of radius 1/|c2|) and along X3 + c4*X4
(transverse drift with exponentially reacting phase and drifting
frequency). CSVs land next to the figure so the raw samples can be
inspected or re-plotted.

Run:  python3 demos/curve_fans.py
"""

import math
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt

from cortico import CorticalPoint, curve_fan

OUT = Path(__file__).parent / "output"


def main():
    OUT.mkdir(exist_ok=True)
    start = CorticalPoint(0.0, 0.0, 0.0, 1.0, 0.0)

    spatial_sweep = [-0.6, -0.3, -0.15, 0.0, 0.15, 0.3, 0.6]
    spatial = curve_fan(start, 1, 2, spatial_sweep, step=1e-3, duration=4.0)

    drift_sweep = [-0.3, -0.15, 0.0, 0.15, 0.3]
    drift = curve_fan(start, 3, 4, drift_sweep, step=1e-3, duration=2.0)

    fig, (ax1, ax2) = plt.subplots(1, 2, figsize=(11, 5))
    for c2, curve in zip(spatial_sweep, spatial):
        ax1.plot(curve.states[:, 0], curve.states[:, 1], label=f"c2={c2:+.2f}")
        curve.to_csv(OUT / f"fan_x1x2_c{c2:+.2f}.csv")
    ax1.set_title("X1 + c2 X2: plane projections (circular arcs)")
    ax1.set_xlabel("x")
    ax1.set_ylabel("y")
    ax1.axis("equal")
    ax1.legend(fontsize=7)

    for c4, curve in zip(drift_sweep, drift):
        ax2.plot(curve.states[:, 1], curve.states[:, 3], label=f"c4={c4:+.2f}")
        curve.to_csv(OUT / f"fan_x3x4_c{c4:+.2f}.csv")
    ax2.set_title("X3 + c4 X4: frequency drift along the transverse axis")
    ax2.set_xlabel("y")
    ax2.set_ylabel("f")
    ax2.legend(fontsize=7)

    fig.tight_layout()
    fig.savefig(OUT / "curve_fans.png", dpi=130)
    print(f"wrote {OUT / 'curve_fans.png'} and {len(spatial) + len(drift)} CSVs")

    # sanity: the c2 = 0 member is the straight line along x
    straight = spatial[spatial_sweep.index(0.0)]
    end = straight.endpoint_state()
    print(f"straight member endpoint: x={end[0]:.6f} y={end[1]:.2e}")


if __name__ == "__main__":
    main()
