"""Exact statevector simulation of QAOA circuits for diagonal cost models.

Basis convention
----------------
Basis index z of an n-qubit register is read as the n-character bitstring
``format(z, f"0{n}b")``; character b (counting from the left) is the value
of qubit/variable b. Spin values are ``s_b = 2*bit_b - 1``.

Cost layers are diagonal: they multiply the amplitude of basis state z by
``exp(-1j * gamma * E(z))`` with

    E(z) = -sum_{i<j} I_ij s_i s_j - sum_i h_i s_i,

dropping the constant model offset (a global phase). The offset is
reinstated by :func:`expectation_energy`, which therefore returns the
probability-weighted classical energy on the QUBO scale. Mixer layers apply
``exp(+1j * beta * X)`` to each qubit, i.e. the single-qubit matrix
``[[cos b, i sin b], [i sin b, cos b]]``.

Multi-angle layers give every coupling term, every field term and every
mixer qubit its own angle. Pair angles are ordered lexicographically over
(i, j) with i < j; angles attached to zero couplings are retained as inert
parameters so the per-layer parameter count is always C(n, 2) + 2n.
"""

from __future__ import annotations

import math
from collections import Counter
from dataclasses import dataclass
from functools import lru_cache
from itertools import combinations
from typing import Sequence

import numpy as np

from .ising import IsingModel

__all__ = [
    "MAX_QUBITS",
    "StateVector",
    "StandardParams",
    "MultiAngleLayer",
    "MultiAngleParams",
    "ma_parameter_count",
    "uniform_superposition",
    "basis_state",
    "apply_cost_layer",
    "apply_ma_cost_layer",
    "apply_mixer_layer",
    "apply_ma_mixer_layer",
    "run_standard_qaoa",
    "run_ma_qaoa",
    "expectation_energy",
    "sample_bitstrings",
    "QaoaRunner",
]

MAX_QUBITS = 16


@dataclass(eq=False)
class StateVector:
    """2^n complex amplitudes; see the module docstring for the basis order."""

    amplitudes: np.ndarray

    @property
    def nqubits(self) -> int:
        n = int(self.amplitudes.shape[0]).bit_length() - 1
        if 1 << n != self.amplitudes.shape[0]:
            raise ValueError("amplitude count must be a power of two")
        return n

    def probabilities(self) -> np.ndarray:
        return np.abs(self.amplitudes) ** 2


@dataclass(frozen=True)
class StandardParams:
    """Per-layer scalar angles; flat layout is all gammas then all betas."""

    gammas: tuple[float, ...]
    betas: tuple[float, ...]

    def __post_init__(self) -> None:
        if len(self.gammas) != len(self.betas):
            raise ValueError("gammas and betas must have the same length")

    @property
    def p(self) -> int:
        return len(self.gammas)

    @classmethod
    def from_flat(cls, vector: Sequence[float]) -> "StandardParams":
        v = tuple(float(x) for x in vector)
        if len(v) % 2 != 0:
            raise ValueError("flat standard parameters must have even length")
        half = len(v) // 2
        return cls(gammas=v[:half], betas=v[half:])

    def to_flat(self) -> np.ndarray:
        return np.array(self.gammas + self.betas, dtype=float)


@dataclass(frozen=True)
class MultiAngleLayer:
    """One multi-angle layer: C(n,2) pair angles, n field and n mixer angles."""

    pair_gammas: tuple[float, ...]
    field_gammas: tuple[float, ...]
    mixer_betas: tuple[float, ...]

    def __post_init__(self) -> None:
        n = len(self.field_gammas)
        if len(self.mixer_betas) != n:
            raise ValueError("field and mixer angle counts must match")
        if len(self.pair_gammas) != n * (n - 1) // 2:
            raise ValueError(
                f"expected {n * (n - 1) // 2} pair angles for {n} qubits, "
                f"got {len(self.pair_gammas)}"
            )

    @property
    def nqubits(self) -> int:
        return len(self.field_gammas)


@dataclass(frozen=True)
class MultiAngleParams:
    layers: tuple[MultiAngleLayer, ...]

    def __post_init__(self) -> None:
        if not self.layers:
            raise ValueError("need at least one layer")
        if len({layer.nqubits for layer in self.layers}) != 1:
            raise ValueError("all layers must address the same qubit count")

    @property
    def p(self) -> int:
        return len(self.layers)

    @property
    def nqubits(self) -> int:
        return self.layers[0].nqubits

    @classmethod
    def from_flat(cls, vector: Sequence[float], nqubits: int, layers: int = 1) -> "MultiAngleParams":
        """Split a flat vector into layers of [pair, field, mixer] blocks."""
        v = [float(x) for x in vector]
        npairs = nqubits * (nqubits - 1) // 2
        per_layer = npairs + 2 * nqubits
        if len(v) != layers * per_layer:
            raise ValueError(
                f"expected {layers * per_layer} parameters, got {len(v)}"
            )
        built = []
        for ell in range(layers):
            base = ell * per_layer
            built.append(
                MultiAngleLayer(
                    pair_gammas=tuple(v[base : base + npairs]),
                    field_gammas=tuple(v[base + npairs : base + npairs + nqubits]),
                    mixer_betas=tuple(
                        v[base + npairs + nqubits : base + per_layer]
                    ),
                )
            )
        return cls(layers=tuple(built))

    def to_flat(self) -> np.ndarray:
        flat: list[float] = []
        for layer in self.layers:
            flat.extend(layer.pair_gammas)
            flat.extend(layer.field_gammas)
            flat.extend(layer.mixer_betas)
        return np.array(flat, dtype=float)


def ma_parameter_count(nqubits: int, layers: int = 1) -> int:
    """Parameters per multi-angle circuit: layers * (C(n,2) + 2n)."""
    return layers * (nqubits * (nqubits - 1) // 2 + 2 * nqubits)


def _check_nqubits(nqubits: int) -> None:
    if not 1 <= nqubits <= MAX_QUBITS:
        raise ValueError(f"qubit count must be in 1..{MAX_QUBITS}, got {nqubits}")


@lru_cache(maxsize=8)
def _spin_table(nqubits: int) -> np.ndarray:
    """(n, 2^n) array of spin values; row b holds s_b over all basis states."""
    shifts = (nqubits - 1 - np.arange(nqubits))[:, None]
    bits = (np.arange(1 << nqubits)[None, :] >> shifts) & 1
    table = bits.astype(float) * 2.0 - 1.0
    table.setflags(write=False)
    return table


@lru_cache(maxsize=8)
def _pair_list(nqubits: int) -> tuple[tuple[int, int], ...]:
    return tuple(combinations(range(nqubits), 2))


@lru_cache(maxsize=4)
def _pair_table(nqubits: int) -> np.ndarray:
    """(C(n,2), 2^n) array of spin products s_i * s_j, pairs in lex order."""
    spins = _spin_table(nqubits)
    pairs = _pair_list(nqubits)
    table = spins[[i for i, _ in pairs]] * spins[[j for _, j in pairs]]
    table.setflags(write=False)
    return table


def _pair_coefficients(model: IsingModel) -> np.ndarray:
    """Cost-phase pair coefficients (-I_ij) aligned with the lex pair order."""
    pairs = _pair_list(model.nspins)
    return np.array([-model.couplings[i, j] for i, j in pairs])


def _cost_phase_table(model: IsingModel) -> np.ndarray:
    """E(z) per basis state, offset dropped (see module docstring)."""
    n = model.nspins
    _check_nqubits(n)
    return _pair_coefficients(model) @ _pair_table(n) - model.fields @ _spin_table(n)


def _classical_energy_table(model: IsingModel) -> np.ndarray:
    """Classical (QUBO-scale) energy per basis state, offset included."""
    n = model.nspins
    _check_nqubits(n)
    return (
        _pair_coefficients(model) @ _pair_table(n)
        + model.fields @ _spin_table(n)
        + model.offset
    )


def _rotate_qubits(amps: np.ndarray, nqubits: int, betas: Sequence[float]) -> np.ndarray:
    """Apply exp(+1j*beta_b*X) to each qubit b of a working copy."""
    out = amps
    for b in range(nqubits):
        beta = float(betas[b])
        if beta == 0.0:
            continue
        cos_b, sin_b = math.cos(beta), math.sin(beta)
        view = out.reshape(1 << b, 2, -1)
        top = view[:, 0, :].copy()
        view[:, 0, :] = cos_b * top + 1j * sin_b * view[:, 1, :]
        view[:, 1, :] = 1j * sin_b * top + cos_b * view[:, 1, :]
    return out


def uniform_superposition(nqubits: int) -> StateVector:
    """All 2^n amplitudes equal to 2^(-n/2) with zero phase."""
    _check_nqubits(nqubits)
    value = 2.0 ** (-nqubits / 2.0)
    return StateVector(np.full(1 << nqubits, value, dtype=complex))


def basis_state(bits: str) -> StateVector:
    """Computational basis state for a bitstring (leftmost char = qubit 0)."""
    _check_nqubits(len(bits))
    amps = np.zeros(1 << len(bits), dtype=complex)
    amps[int(bits, 2)] = 1.0
    return StateVector(amps)


def _require_match(state: StateVector, model: IsingModel) -> None:
    if state.nqubits != model.nspins:
        raise ValueError(
            f"state has {state.nqubits} qubits but the model has "
            f"{model.nspins} spins"
        )


def apply_cost_layer(state: StateVector, model: IsingModel, gamma: float) -> StateVector:
    """Multiply each amplitude by exp(-1j*gamma*E(z)); probabilities unchanged."""
    _require_match(state, model)
    table = _cost_phase_table(model)
    return StateVector(state.amplitudes * np.exp(-1j * gamma * table))


def apply_ma_cost_layer(
    state: StateVector,
    model: IsingModel,
    pair_gammas: Sequence[float],
    field_gammas: Sequence[float],
) -> StateVector:
    """Cost layer with one angle per coupling term and per field term."""
    _require_match(state, model)
    n = model.nspins
    npairs = n * (n - 1) // 2
    pg = np.asarray(list(pair_gammas), dtype=float)
    fg = np.asarray(list(field_gammas), dtype=float)
    if pg.shape != (npairs,) or fg.shape != (n,):
        raise ValueError(
            f"expected {npairs} pair angles and {n} field angles, "
            f"got {pg.shape} and {fg.shape}"
        )
    exponent = (pg * _pair_coefficients(model)) @ _pair_table(n)
    exponent += (fg * -model.fields) @ _spin_table(n)
    return StateVector(state.amplitudes * np.exp(-1j * exponent))


def apply_mixer_layer(state: StateVector, beta: float) -> StateVector:
    """Apply the same X rotation exp(+1j*beta*X) to every qubit."""
    n = state.nqubits
    return StateVector(_rotate_qubits(state.amplitudes.copy(), n, [beta] * n))


def apply_ma_mixer_layer(state: StateVector, betas: Sequence[float]) -> StateVector:
    """Apply a per-qubit X rotation, one angle per qubit."""
    n = state.nqubits
    b = np.asarray(list(betas), dtype=float)
    if b.shape != (n,):
        raise ValueError(f"expected {n} mixer angles, got {b.shape}")
    return StateVector(_rotate_qubits(state.amplitudes.copy(), n, b))


class QaoaRunner:
    """Caches the diagonal tables of one model for repeated evaluation.

    Optimization loops evaluate the same model hundreds of times; caching
    the per-basis-state phase and energy tables keeps each evaluation down
    to a few vectorized operations.
    """

    def __init__(self, model: IsingModel) -> None:
        _check_nqubits(model.nspins)
        self.model = model
        self.nqubits = model.nspins
        self._phase = _cost_phase_table(model)
        self._energy = _classical_energy_table(model)
        self._pair_coeff = _pair_coefficients(model)

    def standard_state(self, params: StandardParams) -> StateVector:
        n = self.nqubits
        amps = uniform_superposition(n).amplitudes
        for gamma, beta in zip(params.gammas, params.betas):
            amps *= np.exp(-1j * gamma * self._phase)
            amps = _rotate_qubits(amps, n, [beta] * n)
        return StateVector(amps)

    def multi_angle_state(self, params: MultiAngleParams) -> StateVector:
        n = self.nqubits
        if params.nqubits != n:
            raise ValueError("parameter layers do not match the model size")
        amps = uniform_superposition(n).amplitudes
        pair_table = _pair_table(n)
        spin_table = _spin_table(n)
        for layer in params.layers:
            pg = np.asarray(layer.pair_gammas, dtype=float)
            fg = np.asarray(layer.field_gammas, dtype=float)
            exponent = (pg * self._pair_coeff) @ pair_table
            exponent += (fg * -self.model.fields) @ spin_table
            amps *= np.exp(-1j * exponent)
            amps = _rotate_qubits(amps, n, layer.mixer_betas)
        return StateVector(amps)

    def expectation(self, state: StateVector) -> float:
        if state.nqubits != self.nqubits:
            raise ValueError("state size does not match the model")
        return float(state.probabilities() @ self._energy)


def run_standard_qaoa(model: IsingModel, params: StandardParams) -> StateVector:
    """Uniform superposition followed by p cost/mixer alternations."""
    return QaoaRunner(model).standard_state(params)


def run_ma_qaoa(model: IsingModel, params: MultiAngleParams) -> StateVector:
    """Uniform superposition followed by per-layer multi-angle cost/mixer."""
    return QaoaRunner(model).multi_angle_state(params)


def expectation_energy(state: StateVector, model: IsingModel) -> float:
    """Probability-weighted classical energy, model offset included."""
    _require_match(state, model)
    return float(state.probabilities() @ _classical_energy_table(model))


def sample_bitstrings(
    state: StateVector, shots: int, seed: "int | np.random.SeedSequence | None" = None
) -> Counter:
    """Draw ``shots`` independent measurements; deterministic per seed."""
    if shots < 1:
        raise ValueError("shots must be at least 1")
    n = state.nqubits
    probs = state.probabilities()
    total = probs.sum()
    if not math.isfinite(total) or total <= 0:
        raise ValueError("state has no probability mass")
    probs = probs / total
    rng = np.random.default_rng(seed)
    drawn = rng.choice(probs.size, size=shots, p=probs)
    width = f"0{n}b"
    return Counter(format(int(z), width) for z in drawn)
