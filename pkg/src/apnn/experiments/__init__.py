from .metrics import Metrics, rel_l2, rmse
from .problems import PROBLEMS, ProblemConfig, default_penalties, make_problem, neutrality_gap

__all__ = ["Metrics", "PROBLEMS", "ProblemConfig", "default_penalties", "make_problem", "neutrality_gap",
           "rel_l2", "rmse"]
