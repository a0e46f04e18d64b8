"""Build the initial data, run the reference simulation and all suites in one output directory.

    python scripts/reference_run.py runs/reference [--n 256]
"""

import argparse
import sys

from capssc.cli import main


def run(out: str, extra: list[str]) -> int:
    common = ["--output_dir", out, *extra]
    for argv in (["build-data"], ["simulate"], ["verify", "--suite", "all"]):
        code = main([*argv, *common])
        print(f"{argv[0]}: exit {code}", file=sys.stderr)
        if argv[0] != "verify" and code != 0:
            return code
    return code


if __name__ == "__main__":
    p = argparse.ArgumentParser()
    p.add_argument("out")
    args, rest = p.parse_known_args()
    sys.exit(run(args.out, rest))
