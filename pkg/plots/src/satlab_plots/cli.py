"""satlab-plots: render figures from experiment CSVs.

    satlab-plots --kind phase --in phase_n100.csv --out phase.png
    satlab-plots --kind accuracy-alpha --in a.csv --label model-a \
                 --in b.csv --label model-b --out compare.png
"""

from __future__ import annotations

import argparse
import sys

from .render import ALPHA_C_3SAT, KINDS, FigureSpec, SchemaError, render


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="satlab-plots", description=__doc__)
    parser.add_argument("--kind", choices=KINDS, required=True)
    parser.add_argument("--in", dest="inputs", action="append", required=True,
                        help="input CSV (repeatable)")
    parser.add_argument("--label", dest="labels", action="append", default=[],
                        help="legend label per input, in order")
    parser.add_argument("--alpha-c", type=float, default=ALPHA_C_3SAT,
                        help="critical density marker (dashed line)")
    parser.add_argument("--title")
    parser.add_argument("--out", required=True)
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    spec = FigureSpec(
        kind=args.kind, inputs=args.inputs, out_path=args.out,
        labels=list(args.labels), alpha_c=args.alpha_c, title=args.title,
    )
    try:
        path = render(spec)
    except (SchemaError, OSError, ValueError) as err:
        print(f"error: {err}", file=sys.stderr)
        return 1
    print(f"wrote {path}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
