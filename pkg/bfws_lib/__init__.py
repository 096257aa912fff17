from .heuristics import EvalVariant
from .harness import RunConfig, run, validate
from .ingest import load_problem, problem_from_document
from .model import Problem, State
from .search import solve

__all__ = ['EvalVariant', 'Problem', 'RunConfig', 'State', 'load_problem', 'problem_from_document', 'run',
           'solve', 'validate']
