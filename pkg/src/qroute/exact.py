"""Brute-force oracles: exhaustive QUBO minimization and route enumeration.

At 12 variables a full scan of all 4096 assignments is exact, instant and
dependency-free, so it stands in for a commercial solver as the reference
optimum. Ties are broken toward the assignment whose variables, read as an
integer with variable 0 in the lowest bit, is smallest.
"""

from __future__ import annotations

from dataclasses import dataclass
from itertools import permutations
from typing import Sequence

import numpy as np

from .qubo import QuboModel, EdgeVarIndex

__all__ = [
    "MAX_BRUTE_FORCE_VARS",
    "ExactSolution",
    "brute_force_qubo_min",
    "enumerate_otsp_optimum",
    "enumerate_vrp_optimum",
]

MAX_BRUTE_FORCE_VARS = 24
_TIE_TOL = 1e-9


@dataclass(frozen=True)
class ExactSolution:
    """Optimal assignment with its energy (kilometers for routing models).

    ``routes`` holds ordered node sequences when the solution came from a
    route enumerator; the raw QUBO scan leaves it empty.
    """

    bitstring: str
    energy: float
    routes: tuple[tuple[int, ...], ...] = ()


def _bitstring_from_int(m: int, nvars: int) -> str:
    return "".join("1" if (m >> k) & 1 else "0" for k in range(nvars))


def bit_value(bits: str) -> int:
    """Integer value of a bitstring with variable 0 in the lowest bit."""
    return int(bits[::-1], 2) if bits else 0


def brute_force_qubo_min(model: QuboModel) -> ExactSolution:
    """Scan all 2^nvars assignments and return the minimum-energy one."""
    nv = model.nvars
    if nv > MAX_BRUTE_FORCE_VARS:
        raise ValueError(
            f"brute force supports at most {MAX_BRUTE_FORCE_VARS} variables, got {nv}"
        )
    best_value = np.inf
    best_m = -1
    chunk = 1 << min(nv, 16)
    var_positions = np.arange(nv)
    for start in range(0, 1 << nv, chunk):
        codes = np.arange(start, start + chunk, dtype=np.int64)
        bits = ((codes[:, None] >> var_positions[None, :]) & 1).astype(float)
        energies = (bits @ model.q * bits).sum(axis=1) + bits @ model.g + model.c
        chunk_min = float(energies.min())
        if chunk_min < best_value - _TIE_TOL:
            best_value = chunk_min
            near = np.flatnonzero(energies <= chunk_min + _TIE_TOL)
            best_m = int(codes[near[0]])
    return ExactSolution(
        bitstring=_bitstring_from_int(best_m, nv), energy=best_value
    )


def _encode_edges(edges: Sequence[tuple[int, int]], n: int) -> str:
    index = EdgeVarIndex(n)
    chars = ["0"] * index.nvars
    for i, j in edges:
        chars[index.index(i, j)] = "1"
    return "".join(chars)


def _path_edges(path: Sequence[int]) -> list[tuple[int, int]]:
    return [(path[t], path[t + 1]) for t in range(len(path) - 1)]


def enumerate_otsp_optimum(
    weights: np.ndarray, initial: int, final: int
) -> ExactSolution:
    """Shortest directed Hamiltonian path from ``initial`` to ``final``.

    Enumerates every ordering of the interior nodes (two on 4 nodes); exact
    ties keep the lexicographically first path.
    """
    w = np.asarray(weights, dtype=float)
    n = w.shape[0]
    if w.shape != (n, n) or n < 2:
        raise ValueError("weights must be a square matrix over >= 2 nodes")
    if initial == final or not (0 <= initial < n and 0 <= final < n):
        raise ValueError("terminals must be distinct in-range node indices")
    middles = [v for v in range(n) if v not in (initial, final)]
    best: tuple[float, tuple[int, ...]] | None = None
    for order in permutations(middles):
        path = (initial, *order, final)
        dist = float(sum(w[i, j] for i, j in _path_edges(path)))
        if best is None or dist < best[0] - _TIE_TOL:
            best = (dist, path)
    assert best is not None
    dist, path = best
    return ExactSolution(
        bitstring=_encode_edges(_path_edges(path), n),
        energy=dist,
        routes=(path,),
    )


def enumerate_vrp_optimum(weights: np.ndarray, vehicles: int = 2) -> ExactSolution:
    """Best split of 3 customers into 2 non-empty depot-anchored routes.

    All partitions and interior orderings are enumerated. Ties (route
    reversals under symmetric weights) resolve to the encoding with the
    smallest bit value, matching the brute-force scan.
    """
    if vehicles != 2:
        raise ValueError("only the 2-vehicle configuration is supported")
    w = np.asarray(weights, dtype=float)
    if w.shape != (4, 4):
        raise ValueError("expected a 4x4 weight matrix with the depot at index 0")
    customers = (1, 2, 3)
    candidates: list[tuple[float, int, tuple[tuple[int, ...], ...]]] = []
    for singleton in customers:
        rest = tuple(c for c in customers if c != singleton)
        for order in permutations(rest):
            route_a = (0, singleton, 0)
            route_b = (0, *order, 0)
            routes = tuple(sorted((route_a, route_b), key=lambda r: r[1]))
            edges = [e for route in routes for e in _path_edges(route)]
            dist = float(sum(w[i, j] for i, j in edges))
            bits = _encode_edges(edges, 4)
            candidates.append((dist, bit_value(bits), routes))
    best_dist = min(c[0] for c in candidates)
    near = [c for c in candidates if c[0] <= best_dist + _TIE_TOL]
    near.sort(key=lambda c: c[1])
    dist, _, routes = near[0]
    edges = [e for route in routes for e in _path_edges(route)]
    return ExactSolution(
        bitstring=_encode_edges(edges, 4), energy=dist, routes=routes
    )
