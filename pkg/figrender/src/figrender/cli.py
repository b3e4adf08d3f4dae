"""`render --manifest <path> --kind <kind> --out <dir>`"""

from __future__ import annotations

import argparse
import sys

from .manifest import ChecksumMismatch, MissingArtifact
from .render import KINDS, RenderJob, render


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="render",
        description="Render figures from a spincavity run manifest (read-only).")
    parser.add_argument("--manifest", required=True, help="path to manifest.json")
    parser.add_argument("--kind", required=True, choices=KINDS)
    parser.add_argument("--out", required=True, help="output directory")
    parser.add_argument("--format", default="svg", choices=("svg", "png"))
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    job = RenderJob(manifest=args.manifest, kind=args.kind, out_dir=args.out,
                    fmt=args.format)
    try:
        written = render(job)
    except (MissingArtifact, ChecksumMismatch, ValueError, OSError) as exc:
        print(f"render error: {exc}", file=sys.stderr)
        return 1
    for path in written:
        print(path)
    return 0


if __name__ == "__main__":
    sys.exit(main())
