"""Convergence-factor curves of both optimized variants for several contact resistances."""
import sys

from osmtcr.cli import main

if __name__ == "__main__":
    sys.exit(main(["factor-curve", *sys.argv[1:]]))
