"""Decode measured bitstrings into routes and verify routing constraints.

Measurement samples are arbitrary bitstrings, so feasibility is checked
from scratch here: degree constraints and explicit connectivity. The best
feasible sample is reported; when no sample is feasible the exact oracle
optimum is substituted and flagged as repaired, so statistics stay honest.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Iterable, Mapping

import numpy as np

from . import exact
from .qubo import EdgeVarIndex

__all__ = [
    "EdgeSet",
    "Verdict",
    "RouteSolution",
    "decode_edges",
    "encode_edges",
    "verify_otsp",
    "verify_vrp",
    "otsp_route",
    "vrp_routes",
    "edge_set_distance",
    "extract_best_feasible",
    "best_feasible_otsp",
    "best_feasible_vrp",
]


@dataclass(frozen=True)
class EdgeSet:
    """Selected directed edges over ``n`` locations."""

    n: int
    edges: frozenset[tuple[int, int]]

    def out_degree(self, node: int) -> int:
        return sum(1 for i, _ in self.edges if i == node)

    def in_degree(self, node: int) -> int:
        return sum(1 for _, j in self.edges if j == node)

    def successors(self, node: int) -> list[int]:
        return sorted(j for i, j in self.edges if i == node)


@dataclass(frozen=True)
class Verdict:
    """Feasibility flag plus one (constraint, detail) pair per violation."""

    feasible: bool
    violations: tuple[tuple[str, str], ...]


@dataclass(frozen=True)
class RouteSolution:
    """A decoded routing solution with its total distance in kilometers."""

    routes: tuple[tuple[int, ...], ...]
    distance: float
    bitstring: str
    feasible: bool
    repaired: bool


def decode_edges(bits: str, n: int) -> EdgeSet:
    """Map a bitstring to its edge set; char k = variable k (leftmost is 0)."""
    index = EdgeVarIndex(n)
    if len(bits) != index.nvars:
        raise ValueError(f"expected {index.nvars} bits for n={n}, got {len(bits)}")
    if any(ch not in "01" for ch in bits):
        raise ValueError(f"bitstring may only contain 0/1: {bits!r}")
    selected = frozenset(
        index.unindex(k) for k, ch in enumerate(bits) if ch == "1"
    )
    return EdgeSet(n=n, edges=selected)


def encode_edges(edge_set: EdgeSet) -> str:
    """Inverse of :func:`decode_edges`."""
    index = EdgeVarIndex(edge_set.n)
    chars = ["0"] * index.nvars
    for i, j in edge_set.edges:
        chars[index.index(i, j)] = "1"
    return "".join(chars)


def verify_otsp(edges: EdgeSet, initial: int, final: int) -> Verdict:
    """Check that the edges form one directed path initial -> final.

    Every non-final node must have out-degree 1 and every non-initial node
    in-degree 1; the final node emits nothing and the initial node receives
    nothing; and the edges must chain into a single path visiting all
    nodes. Node labels are local to the edge set.
    """
    violations: list[tuple[str, str]] = []
    n = edges.n
    for i in range(n):
        if i != final and edges.out_degree(i) != 1:
            violations.append(
                ("out_degree", f"node {i} has out-degree {edges.out_degree(i)}, expected 1")
            )
        if i != initial and edges.in_degree(i) != 1:
            violations.append(
                ("in_degree", f"node {i} has in-degree {edges.in_degree(i)}, expected 1")
            )
    if edges.out_degree(final) != 0:
        violations.append(
            ("final_out", f"final node {final} has outgoing edges")
        )
    if edges.in_degree(initial) != 0:
        violations.append(
            ("initial_in", f"initial node {initial} has incoming edges")
        )
    if not violations:
        path = _walk(edges, initial)
        if len(path) != n or path[-1] != final:
            violations.append(
                ("disconnected subtour", f"edges do not chain {initial} -> {final}")
            )
    return Verdict(feasible=not violations, violations=tuple(violations))


def verify_vrp(edges: EdgeSet, vehicles: int = 2) -> Verdict:
    """Check for exactly ``vehicles`` depot-anchored routes covering all customers.

    The depot is node 0. Degree requirements: each customer in/out degree 1,
    depot degree ``vehicles`` both ways; then the edge set must decompose
    into exactly ``vehicles`` closed walks through the depot that together
    visit every customer.
    """
    violations: list[tuple[str, str]] = []
    n = edges.n
    for v in range(1, n):
        if edges.in_degree(v) != 1:
            violations.append(
                ("visit", f"customer {v} has in-degree {edges.in_degree(v)}, expected 1")
            )
        if edges.out_degree(v) != 1:
            violations.append(
                ("departure", f"customer {v} has out-degree {edges.out_degree(v)}, expected 1")
            )
    if edges.out_degree(0) != vehicles:
        violations.append(
            ("depot_out", f"depot out-degree {edges.out_degree(0)}, expected {vehicles}")
        )
    if edges.in_degree(0) != vehicles:
        violations.append(
            ("depot_in", f"depot in-degree {edges.in_degree(0)}, expected {vehicles}")
        )
    if not violations:
        routes = vrp_routes(edges)
        covered = {v for route in routes for v in route[1:-1]}
        if len(routes) != vehicles or covered != set(range(1, n)):
            violations.append(
                ("customers unreachable from depot", f"covered only {sorted(covered)}")
            )
    else:
        reachable = _reachable_from_depot(edges)
        missing = sorted(set(range(1, n)) - reachable)
        if missing:
            violations.append(
                ("customers unreachable from depot", f"unreached customers {missing}")
            )
    return Verdict(feasible=not violations, violations=tuple(violations))


def _walk(edges: EdgeSet, start: int) -> list[int]:
    """Follow unique successors from ``start`` until stuck or revisiting."""
    path = [start]
    seen = {start}
    node = start
    for _ in range(edges.n):
        nxt = edges.successors(node)
        if len(nxt) != 1 or nxt[0] in seen:
            break
        node = nxt[0]
        path.append(node)
        seen.add(node)
    return path


def _reachable_from_depot(edges: EdgeSet) -> set[int]:
    frontier = [0]
    seen = {0}
    while frontier:
        node = frontier.pop()
        for nxt in edges.successors(node):
            if nxt not in seen:
                seen.add(nxt)
                frontier.append(nxt)
    return seen - {0}


def otsp_route(edges: EdgeSet, initial: int) -> tuple[int, ...]:
    """Path traced from the initial node of a feasible open-path edge set."""
    return tuple(_walk(edges, initial))


def vrp_routes(edges: EdgeSet) -> tuple[tuple[int, ...], ...]:
    """Depot-anchored closed routes of a degree-feasible edge set.

    Routes are returned sorted by their first customer. Walks that fail to
    return to the depot are dropped (callers treat that as infeasible).
    """
    routes = []
    for first in edges.successors(0):
        route = [0, first]
        node = first
        for _ in range(edges.n + 1):
            nxt = edges.successors(node)
            if len(nxt) != 1:
                break
            node = nxt[0]
            route.append(node)
            if node == 0:
                routes.append(tuple(route))
                break
    return tuple(sorted(routes, key=lambda r: r[1]))


def edge_set_distance(edges: EdgeSet, weights: np.ndarray) -> float:
    """Total weight of the selected edges (route length on feasible sets)."""
    w = np.asarray(weights, dtype=float)
    return float(sum(w[i, j] for i, j in sorted(edges.edges)))


def extract_best_feasible(
    samples: "Mapping[str, int] | Iterable[str]",
    weights: np.ndarray,
    decoder: Callable[[str], EdgeSet],
    verifier: Callable[[EdgeSet], Verdict],
    router: Callable[[EdgeSet], tuple[tuple[int, ...], ...]],
    oracle: Callable[[], exact.ExactSolution],
) -> RouteSolution:
    """Cheapest feasible decoded sample, or the oracle optimum as repair.

    Samples are scanned in ascending bit-value order so equal-distance
    feasible strings resolve deterministically. When nothing feasible was
    sampled, the exact optimum is returned with ``repaired=True``.
    """
    distinct = sorted(set(samples), key=exact.bit_value)
    if not distinct:
        raise ValueError("sample multiset is empty")
    best: tuple[float, str, EdgeSet] | None = None
    for bits in distinct:
        edge_set = decoder(bits)
        if not verifier(edge_set).feasible:
            continue
        dist = edge_set_distance(edge_set, weights)
        if best is None or dist < best[0] - 1e-9:
            best = (dist, bits, edge_set)
    if best is None:
        fallback = oracle()
        return RouteSolution(
            routes=fallback.routes,
            distance=fallback.energy,
            bitstring=fallback.bitstring,
            feasible=True,
            repaired=True,
        )
    dist, bits, edge_set = best
    return RouteSolution(
        routes=router(edge_set),
        distance=dist,
        bitstring=bits,
        feasible=True,
        repaired=False,
    )


def best_feasible_otsp(
    samples: "Mapping[str, int] | Iterable[str]",
    weights: np.ndarray,
    initial: int,
    final: int,
) -> RouteSolution:
    """Extraction wired for the open-path problem (local node indices)."""
    return extract_best_feasible(
        samples,
        weights,
        decoder=lambda bits: decode_edges(bits, 4),
        verifier=lambda edges: verify_otsp(edges, initial, final),
        router=lambda edges: (otsp_route(edges, initial),),
        oracle=lambda: exact.enumerate_otsp_optimum(weights, initial, final),
    )


def best_feasible_vrp(
    samples: "Mapping[str, int] | Iterable[str]",
    weights: np.ndarray,
    vehicles: int = 2,
) -> RouteSolution:
    """Extraction wired for the depot-anchored inter-cluster problem."""
    return extract_best_feasible(
        samples,
        weights,
        decoder=lambda bits: decode_edges(bits, 4),
        verifier=lambda edges: verify_vrp(edges, vehicles),
        router=vrp_routes,
        oracle=lambda: exact.enumerate_vrp_optimum(weights, vehicles),
    )
