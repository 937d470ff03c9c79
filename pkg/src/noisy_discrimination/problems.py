"""Ready-made discrimination problems and seeded random generators.

The trine builders reproduce the symmetric three-state qubit family used
throughout the docs and tests; the random generators produce seeded
ensembles, confusion matrices and POVMs for property-style tests.
"""

from __future__ import annotations

import numpy as np

from .core import (
    ConfusionMatrix,
    CostMatrix,
    DensityMatrix,
    Ensemble,
    Povm,
    pure_state_density,
)
from .errors import InvalidInput

SQRT3 = np.sqrt(3.0)


def trine_states() -> list[DensityMatrix]:
    """Three symmetric qubit states 120 degrees apart in the x-z plane."""
    return [
        pure_state_density([-1.0, 0.0]),
        pure_state_density([0.5, SQRT3 / 2.0]),
        pure_state_density([0.5, -SQRT3 / 2.0]),
    ]


def trine_ensemble() -> Ensemble:
    return Ensemble(np.full(3, 1.0 / 3.0), tuple(trine_states()))


def trine_povm() -> Povm:
    """The symmetric measurement (2/3)|psi_i><psi_i|, optimal at zero noise."""
    return Povm(np.stack([(2.0 / 3.0) * s.matrix for s in trine_states()]))


def trine_leak_confusion(q: float) -> ConfusionMatrix:
    """Confusion where outcome 1 leaks symmetrically into outcomes 2 and 3.

    Column 0 is (1-2q, q, q); the other columns are noiseless.
    """
    if not 0.0 <= q <= 0.5:
        raise InvalidInput(f"leak probability must lie in [0, 1/2], got {q}")
    entries = np.eye(3)
    entries[:, 0] = (1.0 - 2.0 * q, q, q)
    return ConfusionMatrix(entries)


def minimum_error_costs(n_outcomes: int, n_states: int | None = None) -> CostMatrix:
    """Cost -1 for a correct identification, 0 otherwise.

    With more outcomes than states the extra rows are all-zero (those
    outcomes are never rewarded).
    """
    m = n_outcomes if n_states is None else n_states
    entries = np.zeros((n_outcomes, m))
    for i in range(min(n_outcomes, m)):
        entries[i, i] = -1.0
    return CostMatrix(entries)


def identity_confusion(n: int) -> ConfusionMatrix:
    return ConfusionMatrix(np.eye(n))


def random_pure_state(dim: int, rng: np.random.Generator) -> DensityMatrix:
    vec = rng.normal(size=dim) + 1j * rng.normal(size=dim)
    return pure_state_density(vec)


def random_density_matrix(
    dim: int, rng: np.random.Generator, rank: int | None = None
) -> DensityMatrix:
    """Random mixed state A A^dag / Tr(A A^dag) with Ginibre factor A."""
    r = dim if rank is None else rank
    a = rng.normal(size=(dim, r)) + 1j * rng.normal(size=(dim, r))
    rho = a @ a.conj().T
    rho /= np.trace(rho).real
    return DensityMatrix((rho + rho.conj().T) / 2.0)


def random_priors(m: int, rng: np.random.Generator) -> np.ndarray:
    return rng.dirichlet(np.ones(m))

def random_ensemble(
    dim: int, m: int, rng: np.random.Generator, pure: bool = False
) -> Ensemble:
    if pure:
        states = tuple(random_pure_state(dim, rng) for _ in range(m))
    else:
        states = tuple(random_density_matrix(dim, rng) for _ in range(m))
    return Ensemble(random_priors(m, rng), states)


def random_stochastic_matrix(n: int, rng: np.random.Generator) -> ConfusionMatrix:
    """Columns drawn independently from a flat Dirichlet."""
    cols = rng.dirichlet(np.ones(n), size=n)  # row per column, transpose below
    return ConfusionMatrix(cols.T)


def random_cost_matrix(
    n: int, m: int, rng: np.random.Generator, low: float = -1.0, high: float = 0.5
) -> CostMatrix:
    return CostMatrix(rng.uniform(low, high, size=(n, m)))


def random_unitary(dim: int, rng: np.random.Generator) -> np.ndarray:
    z = rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim))
    qmat, r = np.linalg.qr(z)
    # fix the phase convention so the distribution is Haar
    return qmat * (np.diagonal(r) / np.abs(np.diagonal(r)))


def random_povm(dim: int, n: int, rng: np.random.Generator) -> Povm:
    """Random POVM: Gaussian A_i A_i^dag blocks squeezed to completeness."""
    a = rng.normal(size=(n, dim, dim)) + 1j * rng.normal(size=(n, dim, dim))
    blocks = a @ np.transpose(a, (0, 2, 1)).conj()
    s = blocks.sum(axis=0)
    w, v = np.linalg.eigh((s + s.conj().T) / 2.0)
    t = (v / np.sqrt(w)) @ v.conj().T
    ops = t @ blocks @ t
    ops = (ops + np.transpose(ops, (0, 2, 1)).conj()) / 2.0
    return Povm(ops)


def orthogonal_ensemble(
    dim: int,
    ranks: list[int],
    rng: np.random.Generator,
    priors: np.ndarray | None = None,
) -> Ensemble:
    """States with mutually orthogonal supports of the given ranks.

    ``sum(ranks)`` must not exceed ``dim``; each state is a random mixture
    on its own block of a Haar-random basis.
    """
    if sum(ranks) > dim:
        raise InvalidInput(f"ranks {ranks} do not fit in dimension {dim}")
    basis = random_unitary(dim, rng)
    states = []
    offset = 0
    for r in ranks:
        cols = basis[:, offset : offset + r]
        weights = rng.dirichlet(np.ones(r)) if r > 1 else np.ones(1)
        rho = (cols * weights) @ cols.conj().T
        states.append(DensityMatrix((rho + rho.conj().T) / 2.0))
        offset += r
    m = len(ranks)
    p = random_priors(m, rng) if priors is None else np.asarray(priors, dtype=float)
    return Ensemble(p, tuple(states))


def support_projectors(ensemble: Ensemble, cutoff: float = 1e-10) -> Povm:
    """Projectors onto each state's support; the last one absorbs any leftover.

    Only meaningful when the supports are mutually orthogonal, otherwise the
    result will not be a valid POVM.
    """
    dim = ensemble.dim
    projectors = []
    for state in ensemble.states:
        w, v = np.linalg.eigh(state.matrix)
        keep = v[:, w > cutoff]
        projectors.append(keep @ keep.conj().T)
    total = np.sum(projectors, axis=0)
    projectors[-1] = projectors[-1] + np.eye(dim) - total
    ops = np.stack(projectors)
    return Povm((ops + np.transpose(ops, (0, 2, 1)).conj()) / 2.0)
