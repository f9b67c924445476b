"""QUBO construction for the two routing subproblems.

Both subproblems live on 4 locations and use one binary variable per
directed edge, n(n-1) = 12 variables in total:

* open-path routing inside a cluster (fixed initial and final node,
  every node visited once, no return edge), and
* depot-anchored routing between clusters (2 vehicles, 3 customer
  locations, each vehicle starts and ends at the depot).

Hard routing constraints are folded into the objective as quadratic
penalties weighted by ``penalty``, which must exceed every distance entry
so that violating a constraint always costs more than any detour saves.
A model stores its quadratic part strictly upper-triangular, so the energy
of a binary assignment x is exactly ``x^T Q x + g^T x + c``.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterator, Sequence

import numpy as np

__all__ = [
    "DEFAULT_OTSP_PENALTY",
    "DEFAULT_VRP_PENALTY",
    "EdgeVarIndex",
    "QuboModel",
    "OtspSpec",
    "VrpSpec",
    "build_otsp_qubo",
    "build_vrp_qubo",
    "qubo_energy",
    "format_qubo",
]

DEFAULT_OTSP_PENALTY = 50.0
DEFAULT_VRP_PENALTY = 100.0


class EdgeVarIndex:
    """Bijection between ordered pairs (i, j), i != j, and variable indices.

    Variable ``index(i, j) = i*(n-1) + (j if j < i else j-1)`` occupies
    character ``index(i, j)`` of a bitstring, counting from the left, i.e.
    bit position 0 is the leftmost character.
    """

    def __init__(self, n: int) -> None:
        if n < 2:
            raise ValueError("edge variables need at least 2 locations")
        self.n = n

    @property
    def nvars(self) -> int:
        return self.n * (self.n - 1)

    def index(self, i: int, j: int) -> int:
        if not (0 <= i < self.n and 0 <= j < self.n) or i == j:
            raise ValueError(f"invalid edge ({i}, {j}) for n={self.n}")
        return i * (self.n - 1) + (j if j < i else j - 1)

    def unindex(self, k: int) -> tuple[int, int]:
        if not 0 <= k < self.nvars:
            raise ValueError(f"variable index {k} out of range")
        i, r = divmod(k, self.n - 1)
        return i, r if r < i else r + 1

    def pairs(self) -> Iterator[tuple[int, int]]:
        """All ordered pairs in ascending variable-index order."""
        for k in range(self.nvars):
            yield self.unindex(k)

    def __eq__(self, other: object) -> bool:
        return isinstance(other, EdgeVarIndex) and other.n == self.n

    def __repr__(self) -> str:
        return f"EdgeVarIndex(n={self.n})"


@dataclass(frozen=True, eq=False)
class QuboModel:
    """Quadratic binary model ``x^T Q x + g^T x + c`` with edge-variable map.

    ``q`` is strictly upper-triangular; linear contributions (including any
    folded diagonal) live in ``g``. ``penalty`` records the constraint
    weight the model was built with.
    """

    q: np.ndarray
    g: np.ndarray
    c: float
    index: EdgeVarIndex
    penalty: float

    def __post_init__(self) -> None:
        if self.q.shape != (self.nvars, self.nvars) or self.g.shape != (self.nvars,):
            raise ValueError("coefficient shapes do not match the variable count")
        if np.any(np.tril(self.q) != 0.0):
            raise ValueError("quadratic matrix must be strictly upper-triangular")

    @property
    def nvars(self) -> int:
        return self.index.nvars


@dataclass(frozen=True, eq=False)
class OtspSpec:
    """Open-path instance: 4x4 weights plus local initial/final indices."""

    weights: np.ndarray
    initial: int
    final: int

    def __post_init__(self) -> None:
        if self.initial == self.final:
            raise ValueError("initial and final node must differ")


@dataclass(frozen=True, eq=False)
class VrpSpec:
    """Inter-cluster instance: weights over [depot, c1, c2, c3], 2 vehicles."""

    weights: np.ndarray
    vehicles: int = 2


def _checked_weights(weights: np.ndarray, n: int, penalty: float) -> np.ndarray:
    w = np.asarray(weights, dtype=float)
    if w.shape != (n, n):
        raise ValueError(f"expected a {n}x{n} weight matrix, got {w.shape}")
    if not np.all(np.isfinite(w)):
        raise ValueError("weights must be finite")
    if np.any(w < 0) or np.any(np.diag(w) != 0):
        raise ValueError("weights must be non-negative with a zero diagonal")
    if penalty <= w.max():
        raise ValueError(
            f"penalty {penalty} must exceed the largest weight {w.max():.4f}"
        )
    return w


def _add_exactly(
    q: np.ndarray, g: np.ndarray, variables: Sequence[int], target: int, weight: float
) -> float:
    """Add ``weight * (target - sum(x_v))^2`` and return its constant part.

    Expansion for binary x (x^2 = x): the constant is ``weight*target^2``,
    each variable gains ``weight*(1 - 2*target)``, and each unordered pair
    gains ``2*weight``.
    """
    for v in variables:
        g[v] += weight * (1 - 2 * target)
    ordered = sorted(variables)
    for a_pos, u in enumerate(ordered):
        for v in ordered[a_pos + 1 :]:
            q[u, v] += 2 * weight
    return weight * target * target


def build_otsp_qubo(spec: OtspSpec, penalty: float = DEFAULT_OTSP_PENALTY) -> QuboModel:
    """Encode an open-path instance over 12 edge variables.

    The energy of any binary assignment is the selected edge length plus
    penalty terms that vanish exactly on directed Hamiltonian paths from
    ``initial`` to ``final``:

    * every node except ``final`` has exactly one outgoing edge,
    * every node except ``initial`` has exactly one incoming edge,
    * edges leaving ``final`` or entering ``initial`` carry a flat linear
      penalty (they are forbidden outright),
    * each opposite edge pair x_ij * x_ji is penalized, which excludes the
      only degree-feasible disconnected configuration on 4 nodes.
    """
    n = 4
    w = _checked_weights(spec.weights, n, penalty)
    if not (0 <= spec.initial < n and 0 <= spec.final < n):
        raise ValueError("initial/final must be local indices 0..3")
    index = EdgeVarIndex(n)
    q = np.zeros((index.nvars, index.nvars))
    g = np.zeros(index.nvars)
    c = 0.0

    # Travel objective over all directed edges.
    for i, j in index.pairs():
        g[index.index(i, j)] += w[i, j]

    # Outgoing degree: one per node, final excluded.
    for i in range(n):
        if i == spec.final:
            continue
        out_vars = [index.index(i, j) for j in range(n) if j != i]
        c += _add_exactly(q, g, out_vars, 1, penalty)

    # Incoming degree: one per node, initial excluded.
    for j in range(n):
        if j == spec.initial:
            continue
        in_vars = [index.index(i, j) for i in range(n) if i != j]
        c += _add_exactly(q, g, in_vars, 1, penalty)

    # Forbidden edges: nothing leaves the final node, nothing enters the
    # initial node. Kept as linear penalties so all 12 variables remain.
    for j in range(n):
        if j != spec.final:
            g[index.index(spec.final, j)] += penalty
        if j != spec.initial:
            g[index.index(j, spec.initial)] += penalty

    # Two-cycle exclusion on every unordered pair.
    for i in range(n):
        for j in range(i + 1, n):
            a, b = index.index(i, j), index.index(j, i)
            q[min(a, b), max(a, b)] += penalty

    return QuboModel(q=q, g=g, c=c, index=index, penalty=penalty)


def build_vrp_qubo(spec: VrpSpec, penalty: float = DEFAULT_VRP_PENALTY) -> QuboModel:
    """Encode the 2-vehicle inter-cluster instance over 12 edge variables.

    Location 0 is the depot; 1..3 are cluster representatives. Penalty
    terms vanish exactly on pairs of depot-anchored routes covering all
    customers:

    * each customer has exactly one incoming and one outgoing edge,
    * the depot has exactly 2 outgoing and 2 incoming edges (one per
      vehicle),
    * opposite edges between two customers are penalized; depot two-cycles
      are legitimate single-stop routes and stay allowed.
    """
    if spec.vehicles != 2:
        raise ValueError("only the 2-vehicle configuration is supported")
    n = 4
    w = _checked_weights(spec.weights, n, penalty)
    index = EdgeVarIndex(n)
    q = np.zeros((index.nvars, index.nvars))
    g = np.zeros(index.nvars)
    c = 0.0

    for i, j in index.pairs():
        g[index.index(i, j)] += w[i, j]

    customers = range(1, n)

    # Each customer is visited exactly once and departed exactly once.
    for j in customers:
        in_vars = [index.index(i, j) for i in range(n) if i != j]
        c += _add_exactly(q, g, in_vars, 1, penalty)
    for i in customers:
        out_vars = [index.index(i, j) for j in range(n) if j != i]
        c += _add_exactly(q, g, out_vars, 1, penalty)

    # Depot degree equals the vehicle count in both directions.
    depot_out = [index.index(0, j) for j in customers]
    depot_in = [index.index(i, 0) for i in customers]
    c += _add_exactly(q, g, depot_out, spec.vehicles, penalty)
    c += _add_exactly(q, g, depot_in, spec.vehicles, penalty)

    # Customer-customer two-cycles are disconnected from the depot.
    for i in customers:
        for j in customers:
            if i < j:
                a, b = index.index(i, j), index.index(j, i)
                q[min(a, b), max(a, b)] += penalty

    return QuboModel(q=q, g=g, c=c, index=index, penalty=penalty)


def _as_bit_array(bits: "str | Sequence[int]", nvars: int) -> np.ndarray:
    if isinstance(bits, str):
        values = [ch for ch in bits]
        if any(ch not in "01" for ch in values):
            raise ValueError(f"bitstring may only contain 0/1: {bits!r}")
        arr = np.array([int(ch) for ch in values], dtype=float)
    else:
        arr = np.asarray(list(bits), dtype=float)
        if not np.all((arr == 0) | (arr == 1)):
            raise ValueError("bits must be 0 or 1")
    if arr.size != nvars:
        raise ValueError(f"expected {nvars} bits, got {arr.size}")
    return arr


def qubo_energy(model: QuboModel, bits: "str | Sequence[int]") -> float:
    """Exact energy ``x^T Q x + g^T x + c`` of one binary assignment."""
    x = _as_bit_array(bits, model.nvars)
    return float(x @ model.q @ x + model.g @ x + model.c)


def format_qubo(model: QuboModel) -> str:
    """Textual model dump, one term per line, for diffing implementations."""
    lines = []
    for k in range(model.nvars):
        i, j = model.index.unindex(k)
        lines.append(f"x{k} = edge {i}->{j}")
    nz = np.argwhere(model.q != 0.0)
    for i, j in nz:
        lines.append(f"Q[{i},{j}] = {model.q[i, j]!r}")
    for i, value in enumerate(model.g):
        if value != 0.0:
            lines.append(f"g[{i}] = {value!r}")
    lines.append(f"c = {model.c!r}")
    return "\n".join(lines) + "\n"
