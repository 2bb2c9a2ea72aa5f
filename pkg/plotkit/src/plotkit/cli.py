import argparse
import json
import sys

from .plots import KINDS, PlotDataError, render

EXIT_VALIDATION = 2


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="plotkit",
                                     description="Render figures from result CSVs")
    sub = parser.add_subparsers(dest="command", required=True)
    plot = sub.add_parser("plot", help="render one figure")
    plot.add_argument("kind", choices=sorted(KINDS))
    plot.add_argument("--in", dest="csv_path", required=True,
                      help="input result CSV")
    plot.add_argument("--out", dest="img_path", required=True,
                      help="output image (.png or .svg)")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    if not args.img_path.lower().endswith((".png", ".svg")):
        print("output must end in .png or .svg", file=sys.stderr)
        return EXIT_VALIDATION
    try:
        annotations = render(args.kind, args.csv_path, args.img_path)
    except (PlotDataError, FileNotFoundError) as exc:
        print(str(exc), file=sys.stderr)
        return EXIT_VALIDATION
    json.dump({"image": args.img_path, "annotations": annotations},
              sys.stdout, indent=2, sort_keys=True)
    print()
    return 0


if __name__ == "__main__":
    sys.exit(main())
