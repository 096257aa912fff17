from .bfws_lib import EvalVariant, Problem, RunConfig, load_problem, run, solve

__all__ = [
    'EvalVariant',
    'Problem',
    'RunConfig',
    'load_problem',
    'run',
    'solve',
]
