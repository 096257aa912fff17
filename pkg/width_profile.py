# Copyright lowRISC contributors.
# Licensed under the Apache License, Version 2.0, see LICENSE for details.
# SPDX-License-Identifier: Apache-2.0

import argparse
import logging
import sys

from mabfws.bfws_lib.harness import (DEFAULT_MODE, DEFAULT_SEED, ConfigError, default_time_limit,
                                     format_width_profile, log_level, width_profile)
from mabfws.bfws_lib.ingest import ParseError, SemanticError, load_problem
from mabfws.bfws_lib.search import MODES


def main():
    argparser = argparse.ArgumentParser(
        description='Solve every single-goal split of a problem with novelty bounds 1 and 2')
    argparser.add_argument('infile', help="Problem file (JSON)")
    argparser.add_argument('--mode', help="Message delivery", choices=MODES, default=DEFAULT_MODE)
    argparser.add_argument('--seed', help="Seed for deterministic token keys", type=int, default=DEFAULT_SEED)
    argparser.add_argument('--time-limit', help="Seconds per split and bound", type=float, default=None)
    argparser.add_argument('-v', '--verbose', help="-v for progress, -vv for protocol detail",
                           action='count', default=0)
    args = argparser.parse_args()

    try:
        logging.basicConfig(level=log_level(args.verbose), format='%(levelname)s: %(message)s')
        problem = load_problem(args.infile)
        time_limit = args.time_limit if args.time_limit is not None else default_time_limit()
        if not time_limit > 0:
            raise ConfigError("time limit must be positive")
    except (OSError, ParseError, SemanticError, ConfigError) as e:
        print('width_profile: ' + str(e), file=sys.stderr)
        sys.exit(2)

    profile = width_profile(problem, args.mode, args.seed, time_limit)
    print(format_width_profile(profile))


if __name__ == "__main__":
    main()
