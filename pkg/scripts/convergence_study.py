"""Square-count fraction and tile-count ratio of the rectangle/square Kakutani run, by decade.

Prints, per decade of tile counts, the min/max/mean of the square fraction
and of census / predicted counts.  Usage: python scripts/convergence_study.py [max_exponent]
"""

import sys

import numpy as np

from tilesplit import configs, run
from tilesplit.stats import predicted_frequencies_incommensurable, predicted_tile_counts


def main(max_exp: int = 12):
    s = configs.load("rect_square")
    target = predicted_frequencies_incommensurable(s).count_fraction[1]
    tr, _ = run(s, max_tiles=10**max_exp)
    print(f"target square fraction {target:.6f}")
    print("decade  snapshots  frac_min  frac_max  frac_mean  ratio_min  ratio_max")
    for e in range(3, max_exp):
        sel = [x for x in tr.snapshots if 10**e <= x.tiles < 10**(e + 1)]
        if not sel:
            continue
        f = np.array([x.count_fractions()[1] for x in sel])
        r = np.array([np.array(x.type_counts) / predicted_tile_counts(s, x.level) for x in sel])
        print(f"1e{e:<5} {len(sel):9d}  {f.min():.5f}   {f.max():.5f}   {f.mean():.5f}    {r.min():.4f}     {r.max():.4f}")


if __name__ == "__main__":
    main(int(sys.argv[1]) if len(sys.argv) > 1 else 12)
