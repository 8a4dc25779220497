"""Directed spanning forests on planar Poisson samples.

Construction of the nearest-right-neighbor forest, path coalescence and
exit-edge statistics, the Boolean-hole variant, backward-depth censuses,
the discrete coalescing-walk lattice model with its dual, and a seeded
experiment CLI with CSV/JSON reports and figures.
"""

from .dsf import (Cell, DisjointClassCount, Forest, InvariantViolation, Path,
                  build_dsf, coalescence_point, count_disjoint_classes,
                  save_forest, trace_path)
from .lattice_dual import (CoalescenceSimResult, DualForest, LatticeForest,
                           build_dual, check_no_crossing,
                           lattice_backward_depth_census,
                           lattice_coalescence_probability_dp,
                           lattice_coalescence_simulate, sample_lattice)
from .point_process import (BooleanModel, PointSet, Window, load_point_set,
                            remove_covered, sample_boolean, sample_ppp,
                            save_point_set)
from .render import RenderSpec, render_forest, save_svg
from .seeding import derive_seed, make_rng, mix64
from .spatial_index import (HalfPlaneIndex, build_index, nearest_right,
                            nearest_right_naive)
from .statistics import (DepthCensus, EdgeBoundCheck, EtaReport, ScalingFit,
                         VerticalSegment, backward_depth, backward_depths,
                         census_bi_infinite, census_r_tilde,
                         check_edge_length_bound, count_exit_edges,
                         fit_scaling)

__version__ = "0.1.0"

__all__ = [
    "BooleanModel", "Cell", "CoalescenceSimResult", "DepthCensus",
    "DisjointClassCount", "DualForest", "EdgeBoundCheck", "EtaReport",
    "Forest", "HalfPlaneIndex", "InvariantViolation", "LatticeForest",
    "Path", "PointSet", "RenderSpec", "ScalingFit", "VerticalSegment",
    "Window", "backward_depth", "backward_depths", "build_dsf", "build_dual",
    "build_index", "census_bi_infinite", "census_r_tilde",
    "check_edge_length_bound", "check_no_crossing", "coalescence_point",
    "count_disjoint_classes", "count_exit_edges", "derive_seed",
    "fit_scaling", "lattice_backward_depth_census",
    "lattice_coalescence_probability_dp", "lattice_coalescence_simulate",
    "load_point_set", "make_rng", "mix64", "nearest_right",
    "nearest_right_naive", "remove_covered", "render_forest", "sample_boolean",
    "sample_lattice", "sample_ppp", "save_forest", "save_point_set",
    "save_svg", "trace_path",
]
