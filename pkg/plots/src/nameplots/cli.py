"""plots <figure-kind> --in CSV --out PNG [--title T] [--dpi N]"""

from __future__ import annotations

import argparse
import sys

from .figures import FigureKind, FigureSpec, SchemaError, render


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="plots")
    parser.add_argument("kind", choices=[k.value for k in FigureKind])
    parser.add_argument("--in", dest="input_path", required=True, help="input CSV")
    parser.add_argument("--out", dest="output_path", required=True, help="output PNG")
    parser.add_argument("--title", default="")
    parser.add_argument("--dpi", type=int, default=150)
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        spec = FigureSpec(
            kind=FigureKind(args.kind),
            input_path=args.input_path,
            output_path=args.output_path,
            title=args.title,
            dpi=args.dpi,
        )
        out = render(spec)
    except SchemaError as exc:
        print(f"schema error: {exc}", file=sys.stderr)
        return 2
    print(out)
    return 0


if __name__ == "__main__":
    sys.exit(main())
