"""Randomized test for whether a known eigenvector spans the unique leading eigenspace.

Given a symmetric operator A and a unit eigenvector v of A, the detector
runs the power iteration from a random start q and watches two statistics:
the Rayleigh quotient q^T A q and the alignment (v^T q)^2.  If the Rayleigh
quotient ever exceeds |v^T A v| in magnitude, some other eigenvalue
dominates and H0 is accepted.  If the alignment reaches 1 - epsilon first,
H0 is rejected in favor of H1 ("span(v) is the unique leading eigenspace").
A false rejection requires the random start to be nearly orthogonal to the
true leading eigenvector, which happens with probability at most
3 sqrt(n * epsilon).
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from typing import Callable, Optional, Union

import numpy as np

__all__ = [
    "DetectorDecision",
    "DetectorConfig",
    "DetectorOutcome",
    "EigenvectorMismatchError",
    "power_iteration_detect",
    "default_epsilon",
    "pi_epsilon_bound",
]

Operator = Union[np.ndarray, Callable[[np.ndarray], np.ndarray]]


class EigenvectorMismatchError(ValueError):
    """The supplied v is not (numerically) a unit eigenvector of the operator."""


class DetectorDecision(enum.Enum):
    ACCEPT_H0 = "accept_h0"
    REJECT_H0_ACCEPT_H1 = "reject_h0_accept_h1"
    INCONCLUSIVE = "inconclusive"


@dataclass(frozen=True)
class DetectorConfig:
    """Detector parameters.

    Attributes:
        epsilon: alignment tolerance in (0, 1); rejection fires once
            (v^T q)^2 >= 1 - epsilon.
        max_iter: iteration cap; ``None`` selects
            max(10_000, ceil(50 * ln(1/epsilon))).  The bare algorithm need
            not terminate on degenerate pairs, so the cap turns those runs
            into an explicit third verdict instead of a hang.
        seed: seed for the random unit-sphere initialization.
        eigres_tol: relative residual allowed when checking that v really
            is an eigenvector.
    """

    epsilon: float
    max_iter: Optional[int] = None
    seed: int = 0
    eigres_tol: float = 1e-8

    def __post_init__(self) -> None:
        if not 0.0 < self.epsilon < 1.0:
            raise ValueError("epsilon must lie in (0, 1)")
        if self.max_iter is None:
            cap = max(10_000, math.ceil(50.0 * math.log(1.0 / self.epsilon)))
            object.__setattr__(self, "max_iter", cap)
        if self.max_iter < 1:
            raise ValueError("max_iter must be positive")
        if self.eigres_tol <= 0.0:
            raise ValueError("eigres_tol must be positive")


@dataclass(frozen=True)
class DetectorOutcome:
    """Decision plus the statistics at exit.

    ``iterations`` counts power-iteration updates performed before the
    decision (the start vector is iteration 0).  ``lam`` is v^T A v.
    """

    decision: DetectorDecision
    iterations: int
    final_alignment: float
    final_rayleigh: float
    lam: float


def _as_matvec(op: Operator) -> Callable[[np.ndarray], np.ndarray]:
    if callable(op):
        return op
    mat = np.asarray(op, dtype=float)
    if mat.ndim != 2 or mat.shape[0] != mat.shape[1]:
        raise ValueError("operator matrix must be square")
    return lambda x: mat @ x


def power_iteration_detect(op: Operator, v: np.ndarray, config: DetectorConfig) -> DetectorOutcome:
    """Decide whether span(v) is the unique leading eigenspace of ``op``.

    ``op`` is a symmetric operator given as a square ndarray or as a
    matvec callable.  One operator application per loop iteration: the
    product A q is used both for the Rayleigh quotient and for the update.

    Raises:
        EigenvectorMismatchError: v is not unit-norm within 1e-10, or its
            eigenvector residual exceeds ``config.eigres_tol``.
    """
    matvec = _as_matvec(op)
    v = np.asarray(v, dtype=float)
    if v.ndim != 1:
        raise ValueError("v must be a vector")
    n = v.size
    if abs(np.linalg.norm(v) - 1.0) > 1e-10:
        raise EigenvectorMismatchError("v must have unit norm")
    av = matvec(v)
    lam = float(v @ av)
    residual = float(np.linalg.norm(av - lam * v))
    if residual > config.eigres_tol * max(abs(lam), float(np.linalg.norm(av))):
        raise EigenvectorMismatchError(
            f"v is not an eigenvector: residual {residual:.3e} with eigenvalue {lam:.6e}"
        )
    abs_lam = abs(lam)

    rng = np.random.default_rng(config.seed)
    q = rng.standard_normal(n)
    q /= np.linalg.norm(q)

    align = rayleigh = math.nan
    for j in range(config.max_iter + 1):
        aq = matvec(q)
        rayleigh = float(q @ aq)
        align = float(v @ q) ** 2
        if abs(rayleigh) > abs_lam:
            return DetectorOutcome(DetectorDecision.ACCEPT_H0, j, align, rayleigh, lam)
        if align >= 1.0 - config.epsilon:
            return DetectorOutcome(DetectorDecision.REJECT_H0_ACCEPT_H1, j, align, rayleigh, lam)
        if j == config.max_iter:
            break
        norm_aq = float(np.linalg.norm(aq))
        if norm_aq <= 1e-300:
            # q is a null direction.  If lam == 0 as well, eigenvalue 0 is
            # shared by v and q, so it cannot be uniquely dominant.
            if abs_lam == 0.0:
                return DetectorOutcome(DetectorDecision.ACCEPT_H0, j, align, rayleigh, lam)
            return DetectorOutcome(DetectorDecision.INCONCLUSIVE, j, align, rayleigh, lam)
        q = aq / norm_aq
    return DetectorOutcome(DetectorDecision.INCONCLUSIVE, config.max_iter, align, rayleigh, lam)


def default_epsilon(n: int, c: float = 1.0) -> float:
    """Dimension-calibrated tolerance n^-(2c+1).

    Clamped below by n^-1 e^-2n, the validity floor of the
    3 sqrt(n * epsilon) false-rejection bound.
    """
    if n < 2:
        raise ValueError("n must be at least 2")
    if c <= 0.0:
        raise ValueError("c must be positive")
    return max(float(n) ** -(2.0 * c + 1.0), math.exp(-2.0 * n) / n)


def pi_epsilon_bound(n: int, epsilon: float) -> float:
    """Upper bound 3 sqrt(n * epsilon) on the false-rejection probability.

    Valid for epsilon >= n^-1 e^-2n; smaller epsilon is rejected.
    """
    if n < 1:
        raise ValueError("n must be positive")
    if epsilon < math.exp(-2.0 * n) / n:
        raise ValueError("epsilon below the validity floor n^-1 e^-2n")
    return 3.0 * math.sqrt(n * epsilon)
