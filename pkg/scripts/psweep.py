"""Iteration count versus scaled Robin parameter, with the closed-form p* marked."""
import sys

from osmtcr.cli import main

if __name__ == "__main__":
    sys.exit(main(["psweep", *sys.argv[1:]]))
