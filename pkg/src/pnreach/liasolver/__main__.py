"""Entry point: ``python -m pnreach.liasolver`` or the ``pnreach-smt`` script."""

import sys

from .core import run


def main() -> int:
    try:
        return run(sys.stdin, sys.stdout)
    except (BrokenPipeError, KeyboardInterrupt):
        return 0


if __name__ == "__main__":
    sys.exit(main())
