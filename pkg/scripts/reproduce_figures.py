"""Write dispersion charts and CSVs for the six oscillator-pair configurations.

    python scripts/reproduce_figures.py [outdir]
"""

import sys
from pathlib import Path

from hybridcq.cli import write_csv
from hybridcq.svg import emit_figures
from hybridcq.wigner import FIGURE_CONFIGS, OscPairConfig, dispersion_series, total_uncertainty_min


def main(outdir="figures", t_max=40.0, dt=0.01):
    out = Path(outdir)
    out.mkdir(parents=True, exist_ok=True)
    for k, (W, w, g) in enumerate(FIGURE_CONFIGS, 1):
        cfg = OscPairConfig(W, w, g)
        s = dispersion_series(cfg, t_max, dt)
        stem = out / f"fig{k}_Omega{W:g}_omega{w:g}_gamma{g:g}"
        write_csv(stem.with_suffix(".csv"), s.columns())
        emit_figures(s.times, {"dqdp": s.dqdp, "dxdk": s.dxdk}, stem.with_suffix(".svg"))
        print(f"{stem.name}: min dxdk={s.dxdk.min():.4g} max dqdp={s.dqdp.max():.4g} "
              f"min total={total_uncertainty_min(s):.6g}")


if __name__ == "__main__":
    main(*sys.argv[1:2])
