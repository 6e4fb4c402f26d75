"""Command line front end: plots render --kind ... --in ... --out ..."""

import argparse
import sys

from .render import KINDS, PlotSpec, render


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="plots", description="Render figures from experiment harness CSVs."
    )
    sub = parser.add_subparsers(dest="command", required=True)
    cmd = sub.add_parser("render", help="render one figure from one CSV")
    cmd.add_argument("--kind", required=True, choices=KINDS)
    cmd.add_argument("--in", dest="input_csv", required=True, metavar="CSV")
    cmd.add_argument("--out", dest="output_path", required=True, metavar="IMAGE")
    cmd.add_argument(
        "--format",
        dest="image_format",
        choices=("svg", "png"),
        help="override the format implied by the output extension",
    )
    args = parser.parse_args(argv)

    spec = PlotSpec(
        input_csv=args.input_csv,
        kind=args.kind,
        output_path=args.output_path,
        image_format=args.image_format,
    )
    try:
        out = render(spec)
    except (ValueError, OSError) as exc:
        print(f"plots: {exc}", file=sys.stderr)
        return 1
    print(out)
    return 0


if __name__ == "__main__":
    sys.exit(main())
