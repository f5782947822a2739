"""MCKM: multi-prototypes sampling plus convex merging for K-Means."""

from .cm import CmConfig, MergeResult, admm_solve, convex_cluster, convex_merge, extract_clusters, gamma_path
from .dataset import Dataset, generate_synthetic, load_csv, load_iris, normalize, parse_spec, save_csv
from .graph import WeightedEdgeGraph, build_graph
from .kmeans import PrototypeSet, assign, kmeans, kmeans_cost, kmeanspp_seed, lloyd, pairwise_cost
from .metrics import ari, cost_gap, evaluate, f_star, nmi
from .mps import MpsConfig, MpsResult, check_expected_cost_bound, epsilon_from_rho, mps
from .pipeline import AlgorithmSpec, mckm, run, sweep
from .smkm import smkm

__version__ = "0.1.0"
