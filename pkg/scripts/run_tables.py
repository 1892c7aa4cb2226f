"""Regenerate the four iteration-count tables into ./out (or $OSMTCR_OUT)."""
import sys

from osmtcr.cli import main

if __name__ == "__main__":
    jobs = sys.argv[1] if len(sys.argv) > 1 else "1"
    for table in ("1", "2", "3", "4"):
        code = main(["table", table, "--jobs", jobs])
        if code:
            sys.exit(code)
