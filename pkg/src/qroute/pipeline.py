"""End-to-end orchestration of the hierarchical solve.

One run proceeds in three stages: (1) capacity-balanced clustering of the
customers, (2) per-cluster open-path routing solved with standard QAOA and
SPSA, (3) inter-cluster routing over the depot and cluster centroids solved
with multi-angle QAOA and SPSA. Every stage is validated against the exact
enumeration oracles, and a benchmark repeats the whole run with per-run
seeds to produce aggregate statistics and plot data.

Determinism: a master seed fixes each run's seed, and each run derives the
seeds of its initializations, optimizers and samplers from its own seed, so
repeated executions are byte-identical.
"""

from __future__ import annotations

import csv
import json
import math
from collections import Counter
from concurrent.futures import ThreadPoolExecutor
from contextlib import contextmanager
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Iterator, Mapping, Sequence

import numpy as np

from . import qsim
from .exact import ExactSolution, bit_value, enumerate_otsp_optimum, enumerate_vrp_optimum
from .geometry import (
    Cluster,
    Customer,
    Dataset,
    Point,
    balanced_kmeans,
    build_distance_matrix,
    inter_cluster_matrix,
    select_terminals,
)
from .ising import qubo_to_ising
from .optim import InitConfig, SpsaConfig, init_params, spsa_minimize
from .postprocess import RouteSolution, best_feasible_otsp, best_feasible_vrp
from .qubo import (
    DEFAULT_OTSP_PENALTY,
    DEFAULT_VRP_PENALTY,
    OtspSpec,
    VrpSpec,
    build_otsp_qubo,
    build_vrp_qubo,
)

__all__ = [
    "ClusteringConfig",
    "StageConfig",
    "PipelineConfig",
    "config_from_mapping",
    "PipelineError",
    "ClusterStageResult",
    "InterStageResult",
    "RunReport",
    "AggregateStats",
    "generate_dataset",
    "solve_hierarchical",
    "run_benchmark",
    "run_statistics",
    "aggregate_stats",
    "emit_report",
]

_MATCH_TOL = 1e-6


class PipelineError(RuntimeError):
    """Failure wrapped with the pipeline stage it occurred in."""

    def __init__(self, stage: str, message: str) -> None:
        super().__init__(f"[{stage}] {message}")
        self.stage = stage


@contextmanager
def _stage(name: str) -> Iterator[None]:
    try:
        yield
    except PipelineError:
        raise
    except (ValueError, RuntimeError, ArithmeticError) as exc:
        raise PipelineError(name, str(exc)) from exc


@dataclass(frozen=True)
class ClusteringConfig:
    k: int = 3
    capacity: int = 4
    seed: int = 1


@dataclass(frozen=True)
class StageConfig:
    """One quantum stage: circuit depth, penalty weight, sampling, optimizer."""

    layers: int
    penalty: float
    shots: int = 1024
    spsa: SpsaConfig = SpsaConfig()
    init: InitConfig = InitConfig()


@dataclass(frozen=True)
class PipelineConfig:
    clustering: ClusteringConfig = ClusteringConfig()
    otsp: StageConfig = StageConfig(layers=3, penalty=DEFAULT_OTSP_PENALTY)
    vrp: StageConfig = StageConfig(layers=1, penalty=DEFAULT_VRP_PENALTY)
    runs: int = 100
    master_seed: int = 0
    workers: int = 1
    output_dir: "str | None" = None


def _spsa_from_mapping(base: SpsaConfig, data: Mapping) -> SpsaConfig:
    known = {"max_iterations", "a", "c", "alpha", "gamma_exp", "stability", "seed"}
    _reject_unknown(data, known, "spsa")
    return replace(base, **{k: data[k] for k in known if k in data})


def _init_from_mapping(base: InitConfig, data: Mapping) -> InitConfig:
    known = {"low", "high", "seed"}
    _reject_unknown(data, known, "init")
    return replace(base, **{k: data[k] for k in known if k in data})


def _stage_from_mapping(base: StageConfig, data: Mapping, name: str) -> StageConfig:
    known = {"layers", "penalty", "shots", "spsa", "init"}
    _reject_unknown(data, known, name)
    updates: dict = {k: data[k] for k in ("layers", "penalty", "shots") if k in data}
    if "spsa" in data:
        updates["spsa"] = _spsa_from_mapping(base.spsa, data["spsa"])
    if "init" in data:
        updates["init"] = _init_from_mapping(base.init, data["init"])
    return replace(base, **updates)


def _reject_unknown(data: Mapping, known: set, section: str) -> None:
    unknown = set(data) - known
    if unknown:
        raise ValueError(f"unknown {section} config keys: {sorted(unknown)}")


def config_from_mapping(data: Mapping) -> PipelineConfig:
    """Build a config from a key-value tree, overlaying the defaults."""
    base = PipelineConfig()
    known = {"clustering", "otsp", "vrp", "runs", "master_seed", "workers", "output_dir"}
    _reject_unknown(data, known, "pipeline")
    updates: dict = {
        k: data[k] for k in ("runs", "master_seed", "workers", "output_dir") if k in data
    }
    if "clustering" in data:
        sub = data["clustering"]
        _reject_unknown(sub, {"k", "capacity", "seed"}, "clustering")
        updates["clustering"] = replace(base.clustering, **sub)
    if "otsp" in data:
        updates["otsp"] = _stage_from_mapping(base.otsp, data["otsp"], "otsp")
    if "vrp" in data:
        updates["vrp"] = _stage_from_mapping(base.vrp, data["vrp"], "vrp")
    return replace(base, **updates)


@dataclass(frozen=True)
class ClusterStageResult:
    """Open-path outcome for one cluster, quantum vs oracle."""

    label: int
    members: tuple[int, ...]
    initial: int
    final: int
    bitstring: str
    distance: float
    path: tuple[int, ...]
    feasible: bool
    repaired: bool
    oracle_distance: float
    oracle_bitstring: str
    matches_oracle: bool
    objective_trace: tuple[float, ...]


@dataclass(frozen=True)
class InterStageResult:
    """Inter-cluster outcome; route nodes are 0 = depot, k = cluster label."""

    bitstring: str
    distance: float
    routes: tuple[tuple[int, ...], ...]
    feasible: bool
    repaired: bool
    oracle_distance: float
    oracle_bitstring: str
    objective_trace: tuple[float, ...]


@dataclass(frozen=True)
class RunReport:
    """Everything measured in one hierarchical run."""

    seed: int
    clusters: tuple[ClusterStageResult, ...]
    inter: InterStageResult
    total_distance: float
    total_oracle_distance: float
    approximation_ratio: float


@dataclass(frozen=True)
class AggregateStats:
    """Across-run statistics of the inter-cluster stage."""

    runs: int
    mean_distance: float
    std_distance: float
    min_distance: float
    max_distance: float
    mean_ratio: float
    modal_bitstring: str
    repair_rate: float


def generate_dataset(
    seed: "int | np.random.SeedSequence | None",
    blobs: int = 3,
    blob_size: int = 4,
    spread: float = 5.0,
    depot: Point = Point(50.0, 50.0),
    center_low: float = 15.0,
    center_high: float = 85.0,
    max_attempts: int = 100,
) -> Dataset:
    """Sample a synthetic instance of well-separated Gaussian customer blobs.

    Blob centers are uniform in the [center_low, center_high] square and are
    redrawn until all pairwise center distances exceed 4x the spread and the
    balanced clustering recovers the generating blobs exactly. Deterministic
    per seed.
    """
    if blobs * blob_size != 12:
        raise ValueError("blob count times blob size must be 12")
    rng = np.random.default_rng(seed)
    for _ in range(max_attempts):
        centers = rng.uniform(center_low, center_high, size=(blobs, 2))
        gaps = [
            float(np.linalg.norm(centers[a] - centers[b]))
            for a in range(blobs)
            for b in range(a + 1, blobs)
        ]
        offsets = rng.normal(0.0, spread, size=(blobs, blob_size, 2))
        if min(gaps) <= 4.0 * spread:
            continue
        customers = []
        next_id = 1
        for b in range(blobs):
            for s in range(blob_size):
                x, y = centers[b] + offsets[b, s]
                customers.append(Customer(next_id, Point(float(x), float(y))))
                next_id += 1
        dataset = Dataset(depot=depot, customers=tuple(customers))
        clusters = balanced_kmeans(dataset, blobs, blob_size, seed=0)
        expected = {
            frozenset(range(b * blob_size + 1, (b + 1) * blob_size + 1))
            for b in range(blobs)
        }
        if {frozenset(c.members) for c in clusters} == expected:
            return dataset
    raise RuntimeError(
        f"could not generate {blobs} separated blobs in {max_attempts} attempts"
    )


def _solve_cluster(
    cluster: Cluster,
    dataset: Dataset,
    others: Sequence[Point],
    cfg: StageConfig,
    seeds: Sequence[np.random.SeedSequence],
) -> ClusterStageResult:
    terminals = select_terminals(cluster, dataset.depot, others)
    weights = build_distance_matrix(cluster.points)
    local_initial = cluster.members.index(terminals.initial)
    local_final = cluster.members.index(terminals.final)

    model = build_otsp_qubo(
        OtspSpec(weights, local_initial, local_final), cfg.penalty
    )
    runner = qsim.QaoaRunner(qubo_to_ising(model))

    def objective(vector: np.ndarray) -> float:
        params = qsim.StandardParams.from_flat(vector)
        return runner.expectation(runner.standard_state(params))

    seed_init, seed_spsa, seed_sample = seeds
    start = init_params(2 * cfg.layers, replace(cfg.init, seed=seed_init))
    trace = spsa_minimize(objective, start, replace(cfg.spsa, seed=seed_spsa))
    state = runner.standard_state(qsim.StandardParams.from_flat(trace.best_params))
    samples = qsim.sample_bitstrings(state, cfg.shots, seed_sample)
    solution = best_feasible_otsp(samples, weights, local_initial, local_final)
    oracle = enumerate_otsp_optimum(weights, local_initial, local_final)

    path_ids = tuple(cluster.members[v] for v in solution.routes[0])
    return ClusterStageResult(
        label=cluster.label,
        members=cluster.members,
        initial=terminals.initial,
        final=terminals.final,
        bitstring=solution.bitstring,
        distance=solution.distance,
        path=path_ids,
        feasible=solution.feasible,
        repaired=solution.repaired,
        oracle_distance=oracle.energy,
        oracle_bitstring=oracle.bitstring,
        matches_oracle=abs(solution.distance - oracle.energy) <= _MATCH_TOL,
        objective_trace=tuple(trace.values),
    )


def _solve_inter(
    dataset: Dataset,
    clusters: Sequence[Cluster],
    cfg: StageConfig,
    seeds: Sequence[np.random.SeedSequence],
) -> InterStageResult:
    weights = inter_cluster_matrix(dataset.depot, [c.centroid for c in clusters])
    model = build_vrp_qubo(VrpSpec(weights), cfg.penalty)
    runner = qsim.QaoaRunner(qubo_to_ising(model))
    nqubits = runner.nqubits

    def objective(vector: np.ndarray) -> float:
        params = qsim.MultiAngleParams.from_flat(vector, nqubits, cfg.layers)
        return runner.expectation(runner.multi_angle_state(params))

    seed_init, seed_spsa, seed_sample = seeds
    dim = qsim.ma_parameter_count(nqubits, cfg.layers)
    start = init_params(dim, replace(cfg.init, seed=seed_init))
    trace = spsa_minimize(objective, start, replace(cfg.spsa, seed=seed_spsa))
    state = runner.multi_angle_state(
        qsim.MultiAngleParams.from_flat(trace.best_params, nqubits, cfg.layers)
    )
    samples = qsim.sample_bitstrings(state, cfg.shots, seed_sample)
    solution = best_feasible_vrp(samples, weights)
    oracle = enumerate_vrp_optimum(weights)

    return InterStageResult(
        bitstring=solution.bitstring,
        distance=solution.distance,
        routes=solution.routes,
        feasible=solution.feasible,
        repaired=solution.repaired,
        oracle_distance=oracle.energy,
        oracle_bitstring=oracle.bitstring,
        objective_trace=tuple(trace.values),
    )


def solve_hierarchical(
    dataset: Dataset,
    cfg: PipelineConfig = PipelineConfig(),
    seed: "int | np.random.SeedSequence" = 0,
) -> RunReport:
    """Run clustering, per-cluster open-path QAOA and inter-cluster MA-QAOA.

    The clustering seed lives in the config (the partition is an instance
    property), while ``seed`` drives this run's parameter initialization,
    SPSA perturbations and measurement sampling.
    """
    root = seed if isinstance(seed, np.random.SeedSequence) else np.random.SeedSequence(seed)
    seed_int = root.entropy if isinstance(root.entropy, int) else -1

    with _stage("clustering"):
        clusters = balanced_kmeans(
            dataset, cfg.clustering.k, cfg.clustering.capacity, cfg.clustering.seed
        )
    children = root.spawn(3 * (len(clusters) + 1))

    cluster_results = []
    for pos, cluster in enumerate(clusters):
        others = [c.centroid for c in clusters if c.label != cluster.label]
        with _stage(f"cluster {cluster.label} routing"):
            cluster_results.append(
                _solve_cluster(
                    cluster, dataset, others, cfg.otsp, children[3 * pos : 3 * pos + 3]
                )
            )

    with _stage("inter-cluster routing"):
        inter = _solve_inter(dataset, clusters, cfg.vrp, children[-3:])

    total = sum(r.distance for r in cluster_results) + inter.distance
    total_oracle = sum(r.oracle_distance for r in cluster_results) + inter.oracle_distance
    return RunReport(
        seed=seed_int,
        clusters=tuple(cluster_results),
        inter=inter,
        total_distance=total,
        total_oracle_distance=total_oracle,
        approximation_ratio=inter.oracle_distance / inter.distance,
    )


def run_benchmark(
    dataset: Dataset, cfg: PipelineConfig = PipelineConfig()
) -> tuple[list[RunReport], AggregateStats]:
    """Execute ``cfg.runs`` independent runs and aggregate them.

    Run k uses the k-th child of the master seed. Runs are independent, so
    they may execute on a thread pool; results are collected by run index,
    which keeps aggregation order-independent.
    """
    if cfg.runs < 1:
        raise ValueError("need at least one run")
    run_seeds = np.random.SeedSequence(cfg.master_seed).spawn(cfg.runs)
    if cfg.workers > 1:
        with ThreadPoolExecutor(max_workers=cfg.workers) as pool:
            reports = list(
                pool.map(lambda s: solve_hierarchical(dataset, cfg, s), run_seeds)
            )
    else:
        reports = [solve_hierarchical(dataset, cfg, s) for s in run_seeds]
    return reports, aggregate_stats(reports)


def run_statistics(
    dataset: Dataset, cfg: PipelineConfig = PipelineConfig()
) -> AggregateStats:
    """Aggregate statistics over ``cfg.runs`` seeded runs."""
    _, stats = run_benchmark(dataset, cfg)
    return stats


def aggregate_stats(reports: Sequence[RunReport]) -> AggregateStats:
    """Across-run statistics of the inter-cluster distances and ratios."""
    if not reports:
        raise ValueError("no reports to aggregate")
    distances = np.array([r.inter.distance for r in reports])
    ratios = np.array([r.approximation_ratio for r in reports])
    counts = Counter(r.inter.bitstring for r in reports)
    top = max(counts.values())
    modal = min(
        (bits for bits, c in counts.items() if c == top), key=bit_value
    )
    return AggregateStats(
        runs=len(reports),
        mean_distance=float(distances.mean()),
        std_distance=float(distances.std()),
        min_distance=float(distances.min()),
        max_distance=float(distances.max()),
        mean_ratio=float(ratios.mean()),
        modal_bitstring=modal,
        repair_rate=float(np.mean([r.inter.repaired for r in reports])),
    )


def emit_report(
    reports: Sequence[RunReport],
    stats: AggregateStats,
    out_dir: "str | Path",
) -> dict[str, Path]:
    """Write the run table, aggregate summary and optimizer traces.

    Produces ``runs.csv`` (one row per run), ``summary.json`` and
    ``traces.csv`` (per-iteration objective values for convergence plots).
    Formatting is fixed-precision, so identical inputs give identical bytes.
    """
    out = Path(out_dir)
    try:
        out.mkdir(parents=True, exist_ok=True)
        paths = {
            "runs": out / "runs.csv",
            "summary": out / "summary.json",
            "traces": out / "traces.csv",
        }
        k = len(reports[0].clusters) if reports else 0

        with open(paths["runs"], "w", encoding="utf-8", newline="") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            header = ["run"]
            header += [f"cluster{i}_distance" for i in range(1, k + 1)]
            header += ["inter_distance", "inter_oracle_distance", "ratio", "repaired"]
            header += [f"cluster{i}_bitstring" for i in range(1, k + 1)]
            header += ["inter_bitstring"]
            writer.writerow(header)
            for run_id, report in enumerate(reports):
                row: list = [run_id]
                row += [f"{c.distance:.6f}" for c in report.clusters]
                row += [
                    f"{report.inter.distance:.6f}",
                    f"{report.inter.oracle_distance:.6f}",
                    f"{report.approximation_ratio:.6f}",
                    int(report.inter.repaired),
                ]
                row += [c.bitstring for c in report.clusters]
                row += [report.inter.bitstring]
                writer.writerow(row)

        summary = {
            "runs": stats.runs,
            "inter_distance": {
                "mean": stats.mean_distance,
                "std": stats.std_distance,
                "min": stats.min_distance,
                "max": stats.max_distance,
            },
            "mean_ratio": stats.mean_ratio,
            "modal_bitstring": stats.modal_bitstring,
            "repair_rate": stats.repair_rate,
        }
        with open(paths["summary"], "w", encoding="utf-8") as fh:
            json.dump(summary, fh, indent=2, sort_keys=True)
            fh.write("\n")

        with open(paths["traces"], "w", encoding="utf-8", newline="") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(["run", "stage", "iteration", "objective"])
            for run_id, report in enumerate(reports):
                for cluster in report.clusters:
                    for it, value in enumerate(cluster.objective_trace):
                        writer.writerow(
                            [run_id, f"cluster{cluster.label}", it, f"{value:.6f}"]
                        )
                for it, value in enumerate(report.inter.objective_trace):
                    writer.writerow([run_id, "inter", it, f"{value:.6f}"])
    except OSError as exc:
        raise PipelineError("report emission", f"{out}: {exc}") from exc
    return paths
