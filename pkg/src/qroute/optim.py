"""Derivative-free parameter optimization for variational circuits.

The workhorse is SPSA: per iteration it perturbs all parameters at once
with a random +-1 vector and estimates the gradient from just two objective
evaluations, independent of dimension. A minimizer here is any callable
``(objective, init) -> OptimizationTrace``; :func:`make_spsa` and
:func:`make_cobyla` both produce one, so they are interchangeable in the
pipeline (COBYLA is a secondary slot backed by scipy).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Protocol, Sequence

import numpy as np
from scipy import optimize as _scipy_optimize

__all__ = [
    "SpsaConfig",
    "InitConfig",
    "OptimizationTrace",
    "NonFiniteObjectiveError",
    "init_params",
    "spsa_minimize",
    "cobyla_minimize",
    "make_spsa",
    "make_cobyla",
    "Minimizer",
]

Objective = Callable[[np.ndarray], float]


class Minimizer(Protocol):
    def __call__(self, objective: Objective, init: np.ndarray) -> "OptimizationTrace": ...


@dataclass(frozen=True)
class SpsaConfig:
    """Gain schedule and budget for SPSA.

    ``a`` is the learning rate, ``c`` the perturbation magnitude. The decay
    schedule is the standard one: a_k = a / (k + 1 + stability)^alpha and
    c_k = c / (k + 1)^gamma_exp, with stability defaulting to 10% of the
    iteration budget.
    """

    max_iterations: int = 200
    a: float = 0.05
    c: float = 0.1
    alpha: float = 0.602
    gamma_exp: float = 0.101
    stability: float = 20.0
    seed: "int | np.random.SeedSequence | None" = None

    def __post_init__(self) -> None:
        if self.a <= 0 or self.c <= 0:
            raise ValueError("learning rate and perturbation must be positive")
        if self.max_iterations < 1:
            raise ValueError("need at least one iteration")


@dataclass(frozen=True)
class InitConfig:
    """Uniform parameter initialization interval."""

    low: float = -0.1
    high: float = 0.1
    seed: "int | np.random.SeedSequence | None" = None

    def __post_init__(self) -> None:
        if not self.low < self.high:
            raise ValueError("low must be strictly below high")


@dataclass
class OptimizationTrace:
    """Per-iteration record of a minimization run.

    ``values[k]`` is the better of the two probe evaluations of iteration k;
    ``best_value`` is the minimum over every evaluation made, attained at
    ``best_params``.
    """

    values: list[float] = field(default_factory=list)
    best_params: np.ndarray | None = None
    best_value: float = math.inf
    n_evaluations: int = 0


class NonFiniteObjectiveError(RuntimeError):
    """Objective returned NaN or infinity; carries the offending parameters."""

    def __init__(self, params: np.ndarray, value: float) -> None:
        super().__init__(f"objective returned non-finite value {value!r}")
        self.params = np.asarray(params).copy()
        self.value = value


def init_params(dim: int, cfg: InitConfig = InitConfig()) -> np.ndarray:
    """Draw ``dim`` independent uniform values in [low, high]."""
    if dim < 1:
        raise ValueError("parameter dimension must be at least 1")
    rng = np.random.default_rng(cfg.seed)
    return rng.uniform(cfg.low, cfg.high, size=dim)


def spsa_minimize(
    objective: Objective, init: Sequence[float], cfg: SpsaConfig = SpsaConfig()
) -> OptimizationTrace:
    """Minimize with simultaneous-perturbation gradient estimates.

    Each iteration evaluates the objective exactly twice, at theta +- c_k *
    delta with delta a fair +-1 vector, forms the gradient estimate
    ``(f_plus - f_minus) / (2 c_k) * delta`` (the elementwise reciprocal of
    delta is delta itself) and steps by -a_k times it. The trace keeps the
    best parameters observed across all evaluations, not the final iterate,
    because individual iterates are noisy.
    """
    theta = np.asarray(init, dtype=float).copy()
    if theta.ndim != 1 or theta.size < 1:
        raise ValueError("init must be a non-empty 1-d parameter vector")
    rng = np.random.default_rng(cfg.seed)
    trace = OptimizationTrace()

    def evaluate(params: np.ndarray) -> float:
        value = float(objective(params))
        trace.n_evaluations += 1
        if not math.isfinite(value):
            raise NonFiniteObjectiveError(params, value)
        if value < trace.best_value:
            trace.best_value = value
            trace.best_params = params.copy()
        return value

    evaluate(theta)
    for k in range(cfg.max_iterations):
        a_k = cfg.a / (k + 1 + cfg.stability) ** cfg.alpha
        c_k = cfg.c / (k + 1) ** cfg.gamma_exp
        delta = rng.integers(0, 2, size=theta.size).astype(float) * 2.0 - 1.0
        f_plus = evaluate(theta + c_k * delta)
        f_minus = evaluate(theta - c_k * delta)
        trace.values.append(min(f_plus, f_minus))
        gradient = (f_plus - f_minus) / (2.0 * c_k) * delta
        theta = theta - a_k * gradient
    return trace


def cobyla_minimize(
    objective: Objective,
    init: Sequence[float],
    max_iterations: int = 1000,
    tol: float = 1e-6,
) -> OptimizationTrace:
    """Secondary minimizer slot: scipy's COBYLA behind the same interface."""
    theta = np.asarray(init, dtype=float).copy()
    if theta.ndim != 1 or theta.size < 1:
        raise ValueError("init must be a non-empty 1-d parameter vector")
    trace = OptimizationTrace()

    def wrapped(params: np.ndarray) -> float:
        value = float(objective(params))
        trace.n_evaluations += 1
        if not math.isfinite(value):
            raise NonFiniteObjectiveError(params, value)
        trace.values.append(value)
        if value < trace.best_value:
            trace.best_value = value
            trace.best_params = np.asarray(params, dtype=float).copy()
        return value

    _scipy_optimize.minimize(
        wrapped, theta, method="COBYLA", tol=tol, options={"maxiter": max_iterations}
    )
    return trace


def make_spsa(cfg: SpsaConfig = SpsaConfig()) -> Minimizer:
    """Bind a config into a ``(objective, init) -> trace`` minimizer."""

    def minimizer(objective: Objective, init: np.ndarray) -> OptimizationTrace:
        return spsa_minimize(objective, init, cfg)

    return minimizer


def make_cobyla(max_iterations: int = 1000, tol: float = 1e-6) -> Minimizer:
    def minimizer(objective: Objective, init: np.ndarray) -> OptimizationTrace:
        return cobyla_minimize(objective, init, max_iterations, tol)

    return minimizer
