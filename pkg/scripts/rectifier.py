"""Copper/alumina radial thermal rectifier in both directions."""
import sys

from osmtcr.cli import main

if __name__ == "__main__":
    sys.exit(main(["rectifier", *sys.argv[1:]]))
