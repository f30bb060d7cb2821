"""render: turn experiment CSVs into figures, driven by a spec file."""

from __future__ import annotations

import argparse
import sys

from .data import SchemaError
from .figures import render
from .spec import SpecError, load_spec


def main(argv: list[str] | None = None) -> int:
    parser = argparse.ArgumentParser(
        prog="render",
        description="Render figures from experiment CSV outputs",
    )
    parser.add_argument("--spec", required=True, help="figure spec file")
    parser.add_argument("--out", default="figures", help="output directory")
    args = parser.parse_args(argv)

    try:
        spec = load_spec(args.spec)
        target = render(spec, args.out)
    except (SpecError, SchemaError, OSError) as exc:
        print(f"render error: {exc}", file=sys.stderr)
        return 2
    print(f"wrote {target}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
