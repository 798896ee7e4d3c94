"""Multi-depot vehicle routing: ant colony, imperialist competitive and two-stage hybrid solvers."""
from .aco import AcoParams, PheromoneMatrix, solve_aco
from .engine import RunStats, Termination
from .hybrid import HybridParams, solve_hybrid
from .ica import IcaParams, solve_ica
from .instance import Customer, Depot, Instance, ParseError, load, make_instance, parse_cordeau, to_cordeau, validate
from .oracle import InfeasibleError, InstanceTooLarge, brute_force
from .solution import Route, Solution, Violation, check_feasible, evaluate, format_solution, parse_solution

__version__ = "0.1.0"

__all__ = [
    "AcoParams", "Customer", "Depot", "HybridParams", "IcaParams", "InfeasibleError", "Instance",
    "InstanceTooLarge", "ParseError", "PheromoneMatrix", "Route", "RunStats", "Solution", "Termination",
    "Violation", "brute_force", "check_feasible", "evaluate", "format_solution", "load", "make_instance",
    "parse_cordeau", "parse_solution", "solve_aco", "solve_hybrid", "solve_ica", "to_cordeau", "validate",
]
