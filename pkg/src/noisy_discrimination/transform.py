"""Detector noise transforms and cost functionals.

A noisy detection stage is a column-stochastic confusion matrix q applied
after an ideal measurement.  The noise can be absorbed on either side of
the trace pairing:

* push it into the measurement: ``effective_povm`` builds the operators
  actually realized, ``Pi~_i = sum_j q(i|j) Pi_j``;
* push it into the costs: ``modified_costs`` builds ``C~ = q^T C``, whose
  risk operators describe the same average cost with the ideal POVM.

``noisy_cost_equivalence_check`` evaluates both routes so tests can pin
them against each other.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import (
    ConfusionMatrix,
    CostMatrix,
    Ensemble,
    Povm,
)
from .errors import InvalidInput, NumericalFailure

# average_cost discards an imaginary residue quietly below this level and
# refuses to above it; in between the result is still trustworthy.
_IMAG_HARD_LIMIT = 1e-8


@dataclass(frozen=True)
class RiskOperators:
    """The operators W_i = sum_k C_ik p_k rho_k, one per outcome.

    ``provenance`` records whether the generating costs were the bare ones
    ("ideal") or already noise-modified ("modified").
    """

    operators: np.ndarray  # (n, dim, dim)
    provenance: str = "ideal"

    def __post_init__(self):
        arr = np.asarray(self.operators, dtype=np.complex128)
        if arr.ndim != 3 or arr.shape[1] != arr.shape[2]:
            raise InvalidInput(f"risk operators must be (n, d, d), got {arr.shape}")
        arr = np.ascontiguousarray(arr)
        arr.setflags(write=False)
        object.__setattr__(self, "operators", arr)
        if self.provenance not in ("ideal", "modified"):
            raise InvalidInput(f"unknown provenance {self.provenance!r}")

    @property
    def dim(self) -> int:
        return self.operators.shape[1]

    @property
    def size(self) -> int:
        return self.operators.shape[0]


@dataclass(frozen=True)
class LagrangeOperator:
    """Gamma = sum_i W_i Pi_i as computed (one-sided), plus its Hermiticity residual.

    At an optimum Gamma is Hermitian; away from one the residual measures
    how far the stationarity conditions are from holding.
    """

    matrix: np.ndarray
    hermiticity_residual: float

    def __post_init__(self):
        arr = np.asarray(self.matrix, dtype=np.complex128)
        arr.setflags(write=False)
        object.__setattr__(self, "matrix", arr)

    def symmetrized(self) -> np.ndarray:
        return (self.matrix + self.matrix.conj().T) / 2.0


def effective_povm(q: ConfusionMatrix, povm: Povm) -> Povm:
    """Noisy measurement operators Pi~_i = sum_j q(i|j) Pi_j.

    The result is again a POVM: the map is affine-stochastic, so positivity
    and completeness survive.
    """
    if q.size != povm.size:
        raise InvalidInput(
            f"confusion is {q.size}x{q.size} but POVM has {povm.size} operators"
        )
    ops = np.einsum("ij,jab->iab", q.entries, povm.operators)
    return Povm(ops)


def modified_costs(costs: CostMatrix, q: ConfusionMatrix) -> CostMatrix:
    """Noise-modified cost matrix C~_jk = sum_i C_ik q(i|j) (= q^T C)."""
    if q.size != costs.n_outcomes:
        raise InvalidInput(
            f"confusion is {q.size}x{q.size} but cost matrix has "
            f"{costs.n_outcomes} outcome rows"
        )
    return CostMatrix(q.entries.T @ costs.entries)


def risk_operators(
    costs: CostMatrix, ensemble: Ensemble, provenance: str = "ideal"
) -> RiskOperators:
    """W_i = sum_k C_ik p_k rho_k for each outcome row i."""
    if costs.n_states != ensemble.size:
        raise InvalidInput(
            f"cost matrix has {costs.n_states} state columns for an ensemble "
            f"of {ensemble.size}"
        )
    weighted = ensemble.priors[:, None, None] * ensemble.stacked()
    w = np.einsum("ik,kab->iab", costs.entries, weighted)
    w = (w + np.transpose(w, (0, 2, 1)).conj()) / 2.0  # exact up to rounding anyway
    return RiskOperators(w, provenance)


def average_cost(povm: Povm, w: RiskOperators) -> float:
    """Average cost sum_i Tr(W_i Pi_i) of a strategy.

    Raises NumericalFailure if the imaginary residue of the trace reaches
    1e-8; below that it is discarded.
    """
    if povm.size != w.size or povm.dim != w.dim:
        raise InvalidInput(
            f"POVM ({povm.size} ops, dim {povm.dim}) does not match risk "
            f"operators ({w.size} ops, dim {w.dim})"
        )
    total = np.einsum("iab,iba->", w.operators, povm.operators)
    if abs(total.imag) >= _IMAG_HARD_LIMIT:
        raise NumericalFailure(
            f"average cost has imaginary residue {total.imag:.3e}"
        )
    return float(total.real)


def lagrange_operator(povm: Povm, w: RiskOperators) -> LagrangeOperator:
    """One-sided Lagrange operator sum_i W_i Pi_i with its Hermiticity residual."""
    if povm.size != w.size or povm.dim != w.dim:
        raise InvalidInput("POVM does not match risk operators")
    gamma = np.einsum("iab,ibc->ac", w.operators, povm.operators)
    residual = float(np.abs(gamma - gamma.conj().T).max())
    return LagrangeOperator(gamma, residual)


def noisy_cost_equivalence_check(
    costs: CostMatrix, q: ConfusionMatrix, ensemble: Ensemble, povm: Povm
) -> tuple[float, float, float]:
    """Evaluate the noisy average cost along both routes.

    Returns ``(lhs, rhs, difference)`` where lhs pairs the ideal risk
    operators with the effective POVM and rhs pairs the modified risk
    operators with the ideal POVM.  The two agree up to rounding.
    """
    lhs = average_cost(effective_povm(q, povm), risk_operators(costs, ensemble))
    rhs = average_cost(
        povm, risk_operators(modified_costs(costs, q), ensemble, "modified")
    )
    return lhs, rhs, lhs - rhs
