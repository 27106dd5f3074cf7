"""plot <kind> --csv <paths...> --out <file> [--format png|svg] [--threshold x]

Exit codes: 0 success, 2 schema mismatch / bad arguments.
"""

import argparse
import sys

from .render import SCHEMAS, SchemaError, load_rows, render


def build_parser():
    p = argparse.ArgumentParser(
        prog="plot", description="Render experiment-CSV figures.")
    p.add_argument("kind", choices=sorted(SCHEMAS))
    p.add_argument("--csv", nargs="+", required=True,
                   help="input CSV path(s); concatenated when several")
    p.add_argument("--out", required=True, help="output image path")
    p.add_argument("--format", choices=["png", "svg"], default="png")
    p.add_argument("--threshold", type=float,
                   help="override the horizontal/vertical overlay value")
    return p


def main(argv=None):
    try:
        args = build_parser().parse_args(argv)
    except SystemExit as e:
        return int(e.code or 0)
    try:
        rows = load_rows(args.csv, args.kind)
    except SchemaError as e:
        print(f"schema error: {e}", file=sys.stderr)
        return 2
    except OSError as e:
        print(f"cannot read input: {e}", file=sys.stderr)
        return 2
    fig = render(args.kind, rows, threshold=args.threshold)
    try:
        fig.savefig(args.out, format=args.format)
    except OSError as e:
        print(f"cannot write {args.out}: {e}", file=sys.stderr)
        return 2
    print(args.out)
    return 0


if __name__ == "__main__":
    sys.exit(main())
