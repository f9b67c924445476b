"""Hierarchical vehicle routing with QAOA on an exact statevector simulator.

The pipeline splits a 13-location instance (12 customers, 1 depot) into
balanced clusters, routes inside each cluster with standard QAOA on an
open-path model, routes between clusters with multi-angle QAOA on a
2-vehicle model, and validates every stage against brute-force oracles.
"""

from .geometry import (
    Cluster,
    Customer,
    Dataset,
    Point,
    Terminals,
    balanced_kmeans,
    build_distance_matrix,
    centroid,
    euclidean_distance,
    inter_cluster_matrix,
    load_dataset,
    save_dataset,
    select_terminals,
)
from .qubo import (
    EdgeVarIndex,
    OtspSpec,
    QuboModel,
    VrpSpec,
    build_otsp_qubo,
    build_vrp_qubo,
    qubo_energy,
)
from .ising import IsingModel, ising_energy, qubo_to_ising
from .qsim import (
    MultiAngleLayer,
    MultiAngleParams,
    QaoaRunner,
    StandardParams,
    StateVector,
    expectation_energy,
    run_ma_qaoa,
    run_standard_qaoa,
    sample_bitstrings,
    uniform_superposition,
)
from .optim import InitConfig, OptimizationTrace, SpsaConfig, init_params, spsa_minimize
from .exact import ExactSolution, brute_force_qubo_min, enumerate_otsp_optimum, enumerate_vrp_optimum
from .postprocess import (
    EdgeSet,
    RouteSolution,
    Verdict,
    decode_edges,
    extract_best_feasible,
    verify_otsp,
    verify_vrp,
)
from .pipeline import (
    AggregateStats,
    PipelineConfig,
    RunReport,
    emit_report,
    generate_dataset,
    run_benchmark,
    run_statistics,
    solve_hierarchical,
)

__version__ = "0.1.0"
