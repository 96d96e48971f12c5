"""Command line for rendering figures from a finished run directory."""

from __future__ import annotations

import argparse
import sys

from .figures import KINDS, RenderError, render

EXIT_OK = 0
EXIT_RENDER_ERROR = 2


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="relkin-plots",
        description="Render static figures from relkin run artifacts.")
    parser.add_argument("--version", action="version",
                        version="relkin-plots 0.1.0")
    subparsers = parser.add_subparsers(dest="command", required=True)
    render_parser = subparsers.add_parser(
        "render", help="render figures from a run directory")
    render_parser.add_argument("report_dir",
                               help="run directory holding manifest.json")
    render_parser.add_argument("--kind", default="all",
                               help=f"one of {', '.join(KINDS)}, or all")
    render_parser.add_argument("--out", default=None,
                               help="output directory "
                                    "(default: <report_dir>/figures)")
    args = parser.parse_args(argv)

    try:
        written = render(args.report_dir, args.kind, args.out)
    except RenderError as exc:
        print(f"relkin-plots: {exc}", file=sys.stderr)
        return EXIT_RENDER_ERROR
    for path in written:
        print(path)
    return EXIT_OK


if __name__ == "__main__":
    raise SystemExit(main())
