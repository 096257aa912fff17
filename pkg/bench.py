# Copyright lowRISC contributors.
# Licensed under the Apache License, Version 2.0, see LICENSE for details.
# SPDX-License-Identifier: Apache-2.0

import argparse
import logging
import sys

from mabfws.bfws_lib.fixtures import write_suite
from mabfws.bfws_lib.harness import (HEURISTICS, ConfigError, RunConfig, bench_suite, coverage_table, load_configs,
                                     log_level)


def main():
    argparser = argparse.ArgumentParser(description='Run planner configurations over a directory of problems')
    argparser.add_argument('directory', help="Directory with problem files (*.json)")
    argparser.add_argument('-c', '--config', help="JSON list of run configurations (default: every heuristic, "
                                                  "unbounded k)")
    argparser.add_argument('-o', '--out', help="CSV output file (default: stdout)")
    argparser.add_argument('--emit-suite', help="Write the bundled problem suite into the directory first",
                           action='store_true')
    argparser.add_argument('-v', '--verbose', help="-v for progress, -vv for protocol detail",
                           action='count', default=0)
    args = argparser.parse_args()

    try:
        logging.basicConfig(level=log_level(args.verbose), format='%(levelname)s: %(message)s')
        if args.emit_suite:
            paths = write_suite(args.directory)
            logging.info("Wrote %d bundled problems to %s", len(paths), args.directory)
        if args.config:
            configs = load_configs(args.config)
        else:
            configs = [RunConfig(heuristic=h) for h in HEURISTICS]
        if args.out:
            with open(args.out, 'w', newline='') as outfile:
                rows = bench_suite(args.directory, configs, outfile)
            print(coverage_table(rows))
        else:
            bench_suite(args.directory, configs, sys.stdout)
    except (OSError, ConfigError) as e:
        print('bench: ' + str(e), file=sys.stderr)
        sys.exit(2)


if __name__ == "__main__":
    main()
