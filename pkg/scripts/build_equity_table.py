"""Compute the exact preflop equity table shipped with the package."""
import argparse
import logging
import sys
import time

from efgdom.poker import equity


def main(argv=None):
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--out", default=str(equity.DEFAULT_TABLE))
    parser.add_argument("--class-cache", default="equity_classes.npy")
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO, format="%(asctime)s %(message)s")
    start = time.time()

    def progress(k, n):
        if k % 2000 == 0:
            logging.info("class %d / %d (%.0fs)", k, n, time.time() - start)

    equity.build_equity_table(args.out, args.class_cache, progress)
    logging.info("wrote %s in %.0fs", args.out, time.time() - start)


if __name__ == "__main__":
    sys.exit(main())
