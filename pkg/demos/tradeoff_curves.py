"""Write memory-rate CSVs for the private schemes and the order-ratio table.

    python3 demos/tradeoff_curves.py [outdir]
"""

import sys
from pathlib import Path

from privcache import tradeoff


def main(outdir: str = "curves") -> None:
    out = Path(outdir)
    out.mkdir(exist_ok=True)
    for n, k in [(15, 10), (10, 15)]:
        curves = {
            "schemeA": tradeoff.lce(tradeoff.scheme_a_points(n, k)).corners,
            "schemeBC": tradeoff.lce(tradeoff.scheme_bc_points(n, k)).corners,
            "man": tradeoff.man_points(n, k),
        }
        for label, points in curves.items():
            path = out / f"{label}_N{n}_K{k}.csv"
            path.write_text(tradeoff.format_csv(points) + "\n")
            print(f"wrote {path} ({len(points)} points)")

    for n, k in [(2, 4), (3, 6), (3, 2), (5, 3)]:
        rep = tradeoff.order_ratio_check(n, k)
        worst = ", ".join(f"factor {b}: {float(v):.3f}" for b, v in sorted(rep.worst().items()))
        print(f"N={n} K={k}: ok={rep.ok}  worst {worst}")


if __name__ == "__main__":
    main(*sys.argv[1:])
