"""Finite-difference laboratory for eigenvalue inequalities of convex solutions.

Thin wrapper over the native extension; everything heavy lives in C++.
"""

from ._core import (
    HesslabError,
    dump_fields,
    eigenvalues,
    list_problems,
    problem_summary,
    q_weight,
    r_quantity,
    run_scenario,
    sigma_k,
    version,
)

__version__ = version()

__all__ = [
    "HesslabError",
    "dump_fields",
    "eigenvalues",
    "list_problems",
    "problem_summary",
    "q_weight",
    "r_quantity",
    "run_scenario",
    "sigma_k",
    "version",
    "__version__",
]
