#!/usr/bin/env python3
"""Regenerate every named experiment dataset (and optionally the plots).

Writes results/<name>.csv for each experiment with publication-scale
replication counts.  Pass --quick for a fast smoke pass, --plot to render
PNGs next to the CSVs, --only fig4,fig8 to restrict the set.
"""

import argparse
import pathlib
import sys

from crshare import expcli

FULL_REPLICATIONS = {
    "fig2a": 10**5, "fig2b": 10**5, "fig3": 10**6, "fig4": 20000,
    "fig5": 20000, "fig6": 20000, "fig7": 20000, "fig8": 400,
    "outage": 10**5,
}
QUICK_REPLICATIONS = {name: max(200, n // 100) for name, n in FULL_REPLICATIONS.items()}


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--out-dir", default="results")
    parser.add_argument("--seed", type=int, default=20120423)
    parser.add_argument("--quick", action="store_true")
    parser.add_argument("--plot", action="store_true")
    parser.add_argument("--only", default="",
                        help="comma list of experiment names")
    args = parser.parse_args()

    out_dir = pathlib.Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    reps = QUICK_REPLICATIONS if args.quick else FULL_REPLICATIONS
    names = [n for n in reps if not args.only or n in args.only.split(",")]

    status = 0
    for name in names:
        csv_path = out_dir / f"{name}.csv"
        config = (
            f"experiment = {name}\n"
            f"replications = {reps[name]}\n"
            f"seed = {args.seed}\n"
            f"out = {csv_path}\n"
        )
        cfg_path = out_dir / f"{name}.cfg"
        cfg_path.write_text(config)
        print(f"== {name} ({reps[name]} replications)")
        code = expcli.main(["run", str(cfg_path)])
        if code:
            print(f"   exited with {code}", file=sys.stderr)
            status = code
            continue
        if args.plot:
            expcli.main(["plot", str(csv_path)])
    return status


if __name__ == "__main__":
    sys.exit(main())
