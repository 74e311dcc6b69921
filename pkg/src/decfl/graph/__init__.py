from .core import DegreeStats, Graph, degree_stats, diameter, is_connected
from .generators import (
    barabasi_albert,
    complete,
    config_powerlaw,
    cycle,
    er_gnp,
    generate,
    k_regular,
    path,
    star,
    torus_lattice,
)
from .io import load_edge_list, save_edge_list
from .rewire import AnnealSchedule, degree_assortativity, rewire_to_assortativity

__all__ = [
    "AnnealSchedule", "DegreeStats", "Graph",
    "barabasi_albert", "complete", "config_powerlaw", "cycle",
    "degree_assortativity", "degree_stats", "diameter", "er_gnp",
    "generate", "is_connected", "k_regular", "load_edge_list", "path",
    "rewire_to_assortativity", "save_edge_list", "star", "torus_lattice",
]
