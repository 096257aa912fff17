# Copyright lowRISC contributors.
# Licensed under the Apache License, Version 2.0, see LICENSE for details.
# SPDX-License-Identifier: Apache-2.0

import argparse
import logging
import sys

from mabfws.bfws_lib.harness import (DEFAULT_HEURISTIC, DEFAULT_MODE, DEFAULT_SEED, HEURISTICS, ConfigError,
                                     RunConfig, default_repeats, default_time_limit, log_level, report_table,
                                     run)
from mabfws.bfws_lib.ingest import ParseError, SemanticError
from mabfws.bfws_lib.search import MODES


def main():
    argparser = argparse.ArgumentParser(description='Decentralized privacy-preserving multi-agent planner')
    argparser.add_argument('infile', help="Problem file (JSON)")
    argparser.add_argument('--heuristic', help="Evaluation function", choices=HEURISTICS, default=DEFAULT_HEURISTIC)
    argparser.add_argument('--k', help="Novelty bound: 1, 2 or unbounded", default='unbounded')
    argparser.add_argument('--mode', help="Message delivery: deterministic rounds or agent threads",
                           choices=MODES, default=DEFAULT_MODE)
    argparser.add_argument('--seed', help="Seed for deterministic token keys", type=int, default=DEFAULT_SEED)
    argparser.add_argument('--time-limit', help="Seconds per run", type=float, default=None)
    argparser.add_argument('--repeats', help="Runs to take the median of", type=int, default=None)
    argparser.add_argument('--out', help="Write the JSON run report to this file")
    argparser.add_argument('-v', '--verbose', help="-v for progress, -vv for protocol detail",
                           action='count', default=0)
    args = argparser.parse_args()

    try:
        logging.basicConfig(level=log_level(args.verbose), format='%(levelname)s: %(message)s')
        config = RunConfig(problem=args.infile, heuristic=args.heuristic, k=args.k, mode=args.mode,
                           seed=args.seed,
                           time_limit=args.time_limit if args.time_limit is not None else default_time_limit(),
                           repeats=args.repeats if args.repeats is not None else default_repeats())
        report = run(config)
    except (OSError, ParseError, SemanticError, ConfigError) as e:
        print('plan: ' + str(e), file=sys.stderr)
        sys.exit(2)

    print('problem:   ' + report.problem)
    print('config:    ' + config.run_label)
    print('solved:    ' + ('yes' if report.solved else 'no'))
    if report.solved:
        print('length:    %d' % report.plan_length)
        print('cost:      %g' % report.plan_cost)
    print('elapsed:   %g %s' % (report.elapsed, report.elapsed_unit))
    if report.timeouts:
        print('timeouts:  %d of %d' % (report.timeouts, report.repeats))
    print()
    print(report_table(report))
    if report.solved:
        print()
        for i, (agent, action) in enumerate(report.plan):
            print('%3d  %-12s %s' % (i, agent, action))

    if args.out:
        with open(args.out, 'w') as outfile:
            outfile.write(report.to_json())


if __name__ == "__main__":
    main()
