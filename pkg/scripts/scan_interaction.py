"""Print the (alpha, beta) grid where the first-moment benchmark is achievable.

    python scripts/scan_interaction.py [gamma] [n]
"""

import sys

import numpy as np

from hybridcq.sudarshan import interaction_scan


def main(gamma=1.0, n=41):
    grid, ok = interaction_scan(gamma=float(gamma), n=int(n))
    for i, j in np.argwhere(ok):
        print(f"achievable at alpha={grid[i]:.6g} beta={grid[j]:.6g}")
    print(f"{int(ok.sum())} of {ok.size} cells achievable")


if __name__ == "__main__":
    main(*sys.argv[1:3])
