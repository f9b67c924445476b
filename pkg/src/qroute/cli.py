"""Command-line interface: generate, solve, benchmark and exact subcommands."""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

import yaml

from .exact import brute_force_qubo_min, enumerate_otsp_optimum, enumerate_vrp_optimum
from .geometry import balanced_kmeans, build_distance_matrix, inter_cluster_matrix, load_dataset, save_dataset, select_terminals
from .ising import format_ising, qubo_to_ising
from .pipeline import (
    PipelineConfig,
    PipelineError,
    config_from_mapping,
    emit_report,
    generate_dataset,
    run_benchmark,
    solve_hierarchical,
)
from .qubo import OtspSpec, VrpSpec, build_otsp_qubo, build_vrp_qubo, format_qubo

__all__ = ["main", "build_parser"]


def _load_config(args: argparse.Namespace) -> PipelineConfig:
    """Defaults, overlaid by the config file, overlaid by CLI flags."""
    mapping: dict = {}
    if getattr(args, "config", None):
        with open(args.config, "r", encoding="utf-8") as fh:
            loaded = yaml.safe_load(fh) or {}
        if not isinstance(loaded, dict):
            raise ValueError(f"{args.config}: config must be a mapping")
        mapping = loaded
    for flag, path in [
        ("runs", ("runs",)),
        ("master_seed", ("master_seed",)),
        ("workers", ("workers",)),
        ("clustering_seed", ("clustering", "seed")),
        ("otsp_layers", ("otsp", "layers")),
        ("otsp_shots", ("otsp", "shots")),
        ("otsp_penalty", ("otsp", "penalty")),
        ("otsp_iterations", ("otsp", "spsa", "max_iterations")),
        ("vrp_layers", ("vrp", "layers")),
        ("vrp_shots", ("vrp", "shots")),
        ("vrp_penalty", ("vrp", "penalty")),
        ("vrp_iterations", ("vrp", "spsa", "max_iterations")),
    ]:
        value = getattr(args, flag, None)
        if value is None:
            continue
        node = mapping
        for key in path[:-1]:
            node = node.setdefault(key, {})
        node[path[-1]] = value
    return config_from_mapping(mapping)


def _add_config_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--config", "-c", help="YAML configuration file")
    parser.add_argument("--clustering-seed", type=int, dest="clustering_seed")
    parser.add_argument("--otsp-layers", type=int, dest="otsp_layers")
    parser.add_argument("--otsp-shots", type=int, dest="otsp_shots")
    parser.add_argument("--otsp-penalty", type=float, dest="otsp_penalty")
    parser.add_argument("--otsp-iterations", type=int, dest="otsp_iterations")
    parser.add_argument("--vrp-layers", type=int, dest="vrp_layers")
    parser.add_argument("--vrp-shots", type=int, dest="vrp_shots")
    parser.add_argument("--vrp-penalty", type=float, dest="vrp_penalty")
    parser.add_argument("--vrp-iterations", type=int, dest="vrp_iterations")


def _cmd_generate(args: argparse.Namespace) -> int:
    dataset = generate_dataset(args.seed, spread=args.spread)
    save_dataset(dataset, args.output)
    print(f"wrote {len(dataset.customers)} customers to {args.output}")
    return 0


def _cmd_solve(args: argparse.Namespace) -> int:
    cfg = _load_config(args)
    dataset = load_dataset(args.dataset)
    report = solve_hierarchical(dataset, cfg, args.seed)
    print("clusters:")
    for c in report.clusters:
        status = "optimal" if c.matches_oracle else "suboptimal"
        repaired = ", repaired" if c.repaired else ""
        print(f"  {c.label}: members {list(c.members)}, terminals {c.initial} -> {c.final}")
        print(
            f"     path {' -> '.join(map(str, c.path))}: {c.distance:.2f} km "
            f"(oracle {c.oracle_distance:.2f} km, {status}{repaired}) "
            f"bitstring {c.bitstring}"
        )
    routes = " | ".join(
        " -> ".join("D" if v == 0 else str(v) for v in route)
        for route in report.inter.routes
    )
    repaired = ", repaired" if report.inter.repaired else ""
    print("inter-cluster:")
    print(f"  routes {routes}")
    print(
        f"  quantum {report.inter.distance:.2f} km, oracle "
        f"{report.inter.oracle_distance:.2f} km, ratio "
        f"{100 * report.approximation_ratio:.2f}%{repaired} "
        f"bitstring {report.inter.bitstring}"
    )
    print(
        f"total: {report.total_distance:.2f} km "
        f"(oracle {report.total_oracle_distance:.2f} km)"
    )
    return 0


def _cmd_benchmark(args: argparse.Namespace) -> int:
    cfg = _load_config(args)
    dataset = load_dataset(args.dataset)
    reports, stats = run_benchmark(dataset, cfg)
    paths = emit_report(reports, stats, args.output_dir)
    print(
        f"{stats.runs} runs: inter-cluster mean {stats.mean_distance:.2f} km "
        f"(std {stats.std_distance:.2f}, min {stats.min_distance:.2f}, "
        f"max {stats.max_distance:.2f}), mean ratio {100 * stats.mean_ratio:.2f}%, "
        f"repair rate {100 * stats.repair_rate:.1f}%"
    )
    print(f"modal bitstring {stats.modal_bitstring}")
    for name, path in paths.items():
        print(f"{name}: {path}")
    return 0


def _cmd_exact(args: argparse.Namespace) -> int:
    cfg = _load_config(args)
    dataset = load_dataset(args.dataset)
    clusters = balanced_kmeans(
        dataset, cfg.clustering.k, cfg.clustering.capacity, cfg.clustering.seed
    )
    dump_dir = Path(args.dump_models) if args.dump_models else None
    if dump_dir is not None:
        dump_dir.mkdir(parents=True, exist_ok=True)
    total = 0.0
    print("per-cluster optimal open paths:")
    for cluster in clusters:
        others = [c.centroid for c in clusters if c.label != cluster.label]
        terminals = select_terminals(cluster, dataset.depot, others)
        weights = build_distance_matrix(cluster.points)
        li = cluster.members.index(terminals.initial)
        lf = cluster.members.index(terminals.final)
        solution = enumerate_otsp_optimum(weights, li, lf)
        model = build_otsp_qubo(OtspSpec(weights, li, lf), cfg.otsp.penalty)
        scan = brute_force_qubo_min(model)
        agree = "" if abs(scan.energy - solution.energy) <= 1e-6 else "  [scan mismatch!]"
        path_ids = [cluster.members[v] for v in solution.routes[0]]
        print(
            f"  cluster {cluster.label}: path {' -> '.join(map(str, path_ids))}, "
            f"{solution.energy:.2f} km, bitstring {solution.bitstring}{agree}"
        )
        total += solution.energy
        if dump_dir is not None:
            stem = dump_dir / f"cluster{cluster.label}"
            stem.with_suffix(".qubo.txt").write_text(format_qubo(model))
            stem.with_suffix(".ising.txt").write_text(format_ising(qubo_to_ising(model)))
    weights = inter_cluster_matrix(dataset.depot, [c.centroid for c in clusters])
    solution = enumerate_vrp_optimum(weights)
    model = build_vrp_qubo(VrpSpec(weights), cfg.vrp.penalty)
    scan = brute_force_qubo_min(model)
    agree = "" if abs(scan.energy - solution.energy) <= 1e-6 else "  [scan mismatch!]"
    routes = " | ".join(
        " -> ".join("D" if v == 0 else str(v) for v in route) for route in solution.routes
    )
    print("inter-cluster optimum:")
    print(
        f"  routes {routes}, {solution.energy:.2f} km, "
        f"bitstring {solution.bitstring}{agree}"
    )
    if dump_dir is not None:
        (dump_dir / "inter.qubo.txt").write_text(format_qubo(model))
        (dump_dir / "inter.ising.txt").write_text(format_ising(qubo_to_ising(model)))
        print(f"model dumps in {dump_dir}")
    print(f"total: {total + solution.energy:.2f} km")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="qroute",
        description="Hierarchical vehicle routing with QAOA on a statevector simulator",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_gen = sub.add_parser("generate", help="sample a synthetic dataset file")
    p_gen.add_argument("--seed", type=int, default=0)
    p_gen.add_argument("--spread", type=float, default=5.0)
    p_gen.add_argument("--output", "-o", required=True)
    p_gen.set_defaults(func=_cmd_generate)

    p_solve = sub.add_parser("solve", help="run one hierarchical solve")
    p_solve.add_argument("--dataset", "-d", required=True)
    p_solve.add_argument("--seed", type=int, default=0)
    _add_config_flags(p_solve)
    p_solve.set_defaults(func=_cmd_solve)

    p_bench = sub.add_parser("benchmark", help="repeat runs and emit statistics")
    p_bench.add_argument("--dataset", "-d", required=True)
    p_bench.add_argument("--runs", type=int)
    p_bench.add_argument("--master-seed", type=int, dest="master_seed")
    p_bench.add_argument("--workers", type=int)
    p_bench.add_argument("--output-dir", "-o", required=True)
    _add_config_flags(p_bench)
    p_bench.set_defaults(func=_cmd_benchmark)

    p_exact = sub.add_parser("exact", help="print the brute-force optima")
    p_exact.add_argument("--dataset", "-d", required=True)
    p_exact.add_argument("--dump-models", help="directory for model term dumps")
    _add_config_flags(p_exact)
    p_exact.set_defaults(func=_cmd_exact)

    return parser


def main(argv: "list[str] | None" = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except PipelineError as exc:
        print(f"error {exc}", file=sys.stderr)
        return 1
    except (ValueError, RuntimeError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
