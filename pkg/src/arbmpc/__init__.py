"""Low-space MPC simulator with arboricity-parameterized MIS, matching and coloring."""
from .coloring import arb_color, layered_list_color, verify_coloring
from .degred import DegredConfig, PartialSolution, degree_reduce
from .graph import Graph, estimate_arboricity, gen_bounded_arboricity, load_graph, save_graph
from .mismm import SolveConfig, derand_luby, low_arb_solve, solve, verify_mis, verify_mm
from .mpc import MemoryViolation, MpcCluster, cluster_new

__version__ = "0.1.0"

__all__ = [
    "DegredConfig", "Graph", "MemoryViolation", "MpcCluster", "PartialSolution",
    "SolveConfig", "arb_color", "cluster_new", "degree_reduce", "derand_luby",
    "estimate_arboricity", "gen_bounded_arboricity", "layered_list_color", "load_graph",
    "low_arb_solve", "save_graph", "solve", "verify_coloring", "verify_mis", "verify_mm",
]
