# Copyright lowRISC contributors.
# Licensed under the Apache License, Version 2.0, see LICENSE for details.
# SPDX-License-Identifier: Apache-2.0

import argparse
import logging
import sys

from mabfws.bfws_lib.harness import ConfigError, log_level, plan_cost, validate
from mabfws.bfws_lib.ingest import ParseError, SemanticError, load_plan, load_problem


def main():
    argparser = argparse.ArgumentParser(description='Check a multi-agent plan against its problem')
    argparser.add_argument('infile', help="Problem file (JSON)")
    argparser.add_argument('planfile', help="Plan file: JSON list of {agent, action}")
    argparser.add_argument('-v', '--verbose', help="Log progress", action='count', default=0)
    args = argparser.parse_args()

    try:
        logging.basicConfig(level=log_level(args.verbose), format='%(levelname)s: %(message)s')
        problem = load_problem(args.infile)
        steps = load_plan(args.planfile)
    except (OSError, ParseError, SemanticError, ConfigError) as e:
        print('validate: ' + str(e), file=sys.stderr)
        sys.exit(2)

    result = validate(problem, steps)
    if not result:
        print('invalid plan: step %d: %s' % (result.index, result.reason))
        sys.exit(1)
    print('valid plan: %d steps, cost %g' % (len(steps), plan_cost(problem, steps)))


if __name__ == "__main__":
    main()
