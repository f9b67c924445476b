"""QUBO to Ising transformation with exact energy equivalence.

A spin model over s in {-1, +1} with couplings I (strictly upper
triangular), fields h and offset d has energy

    -sum_{i<j} I_ij s_i s_j + sum_i h_i s_i + d

and reproduces the source QUBO exactly under s = 2x - 1.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .qubo import QuboModel

__all__ = ["IsingModel", "qubo_to_ising", "ising_energy", "format_ising"]


@dataclass(frozen=True, eq=False)
class IsingModel:
    couplings: np.ndarray
    fields: np.ndarray
    offset: float

    def __post_init__(self) -> None:
        n = self.fields.shape[0]
        if self.couplings.shape != (n, n):
            raise ValueError("couplings shape does not match the field count")
        if np.any(np.tril(self.couplings) != 0.0):
            raise ValueError("couplings must be strictly upper-triangular")

    @property
    def nspins(self) -> int:
        return int(self.fields.shape[0])


def qubo_to_ising(model: QuboModel) -> IsingModel:
    """Transform a QUBO under x = (s + 1) / 2.

    With Q strictly upper-triangular: I_ij = -Q_ij / 4,
    h_i = g_i / 2 + (row_i(Q) + col_i(Q)) / 4, and
    d = c + sum(g) / 2 + sum(Q) / 4.
    """
    q, g = model.q, model.g
    couplings = -q / 4.0
    fields = g / 2.0 + q.sum(axis=1) / 4.0 + q.sum(axis=0) / 4.0
    offset = float(model.c + g.sum() / 2.0 + q.sum() / 4.0)
    return IsingModel(couplings=couplings, fields=fields, offset=offset)


def ising_energy(model: IsingModel, spins: Sequence[int]) -> float:
    s = np.asarray(list(spins), dtype=float)
    if s.shape != (model.nspins,):
        raise ValueError(f"expected {model.nspins} spins, got {s.shape}")
    if not np.all(np.abs(s) == 1.0):
        raise ValueError("spin values must be -1 or +1")
    return float(-(s @ model.couplings @ s) + model.fields @ s + model.offset)


def format_ising(model: IsingModel) -> str:
    """Textual dump mirroring the QUBO dump: I, h and d, one term per line."""
    lines = []
    nz = np.argwhere(model.couplings != 0.0)
    for i, j in nz:
        lines.append(f"I[{i},{j}] = {model.couplings[i, j]!r}")
    for i, value in enumerate(model.fields):
        if value != 0.0:
            lines.append(f"h[{i}] = {value!r}")
    lines.append(f"d = {model.offset!r}")
    return "\n".join(lines) + "\n"
