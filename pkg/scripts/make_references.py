"""Dense collocation references for a set of presets.

Each reference is written as ``<output>/<preset>/reference_moments.txt`` and
can be passed to ``intrusive-uq run --reference`` or ``intrusive-uq compare``.
"""

from __future__ import annotations

import argparse
import sys

from intrusive_uq.harness import default_config, parse_config, preset_names, run_reference, write_outputs

QUICK = ["burgers_random_shock", "burgers_steady", "euler1d_steady_shock", "sod"]


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("presets", nargs="*", default=QUICK, help=f"presets (default: {' '.join(QUICK)})")
    parser.add_argument("--output", default="runs/references")
    parser.add_argument("--workers", type=int, default=1)
    args = parser.parse_args(argv)

    for name in args.presets:
        if name not in preset_names():
            parser.error(f"unknown preset {name!r}")
        result = run_reference(parse_config(default_config(name)), workers=args.workers)
        paths = write_outputs(result, f"{args.output}/{name}", stem="reference")
        print(f"{name}: {result.summary['quadrature_points']} points -> {paths['moments']}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
