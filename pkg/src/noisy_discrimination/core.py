"""Domain types and dense Hermitian linear algebra.

Everything downstream (noise transforms, solvers, oracles) works with the
types defined here: density matrices, ensembles with priors, POVMs, cost
matrices and column-stochastic confusion matrices.  Types are immutable
containers around read-only complex128/float64 arrays.  Construction only
checks structure (shapes, finiteness); the physical invariants are checked
by :func:`validate`, which reports residuals instead of raising, so that
deliberately broken objects can be inspected in tests and error paths.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import InvalidInput


@dataclass(frozen=True)
class ToleranceProfile:
    """Numerical tolerances used by validation and certification.

    ``psd_floor`` is a magnitude: eigenvalues down to ``-psd_floor`` still
    count as positive semidefinite.
    """

    hermiticity: float = 1e-12
    psd_floor: float = 1e-10
    completeness: float = 1e-10
    trace: float = 1e-10
    prior_sum: float = 1e-12
    column_sum: float = 1e-12
    certification: float = 1e-8


DEFAULT_TOL = ToleranceProfile()

# Degenerate eigenvalues are grouped at this spacing before the lexicographic
# tie-break in hermitian_eigendecomposition.
_EIG_TIE_TOL = 1e-12


def _readonly(values, dtype, name: str) -> np.ndarray:
    arr = np.array(values, dtype=dtype)
    if not np.all(np.isfinite(arr)):
        raise InvalidInput(f"{name} contains non-finite entries")
    arr.setflags(write=False)
    return arr


def _require_square(arr: np.ndarray, name: str) -> None:
    if arr.ndim != 2 or arr.shape[0] != arr.shape[1]:
        raise InvalidInput(f"{name} must be a square matrix, got shape {arr.shape}")


@dataclass(frozen=True)
class DensityMatrix:
    """A quantum state as a dim x dim complex matrix."""

    matrix: np.ndarray

    def __post_init__(self):
        arr = _readonly(self.matrix, np.complex128, "density matrix")
        _require_square(arr, "density matrix")
        object.__setattr__(self, "matrix", arr)

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]


@dataclass(frozen=True)
class Ensemble:
    """States with prior probabilities; priors[k] goes with states[k]."""

    priors: np.ndarray
    states: tuple[DensityMatrix, ...]

    def __post_init__(self):
        priors = _readonly(self.priors, np.float64, "priors")
        if priors.ndim != 1:
            raise InvalidInput("priors must be a 1-d sequence")
        states = tuple(self.states)
        if len(states) != priors.shape[0]:
            raise InvalidInput(
                f"{priors.shape[0]} priors for {len(states)} states"
            )
        if not states:
            raise InvalidInput("ensemble needs at least one state")
        dims = {s.dim for s in states}
        if len(dims) != 1:
            raise InvalidInput(f"states have mixed dimensions {sorted(dims)}")
        object.__setattr__(self, "priors", priors)
        object.__setattr__(self, "states", states)

    @property
    def dim(self) -> int:
        return self.states[0].dim

    @property
    def size(self) -> int:
        return len(self.states)

    def stacked(self) -> np.ndarray:
        """States as one (m, dim, dim) array."""
        return np.stack([s.matrix for s in self.states])


@dataclass(frozen=True)
class Povm:
    """Measurement operators as one (n, dim, dim) stack."""

    operators: np.ndarray

    def __post_init__(self):
        arr = np.asarray(self.operators)
        if arr.ndim == 3:
            ops = _readonly(arr, np.complex128, "POVM operators")
        else:
            # accept a list of 2-d matrices
            mats = [np.asarray(m) for m in self.operators]
            if not mats:
                raise InvalidInput("POVM needs at least one operator")
            ops = _readonly(np.stack(mats), np.complex128, "POVM operators")
        if ops.ndim != 3 or ops.shape[1] != ops.shape[2]:
            raise InvalidInput(f"POVM operators must be square, got shape {ops.shape}")
        object.__setattr__(self, "operators", ops)

    @property
    def dim(self) -> int:
        return self.operators.shape[1]

    @property
    def size(self) -> int:
        return self.operators.shape[0]

    def __iter__(self):
        return iter(self.operators)


@dataclass(frozen=True)
class CostMatrix:
    """entries[i, k] is the cost of declaring outcome i on state k."""

    entries: np.ndarray

    def __post_init__(self):
        arr = _readonly(self.entries, np.float64, "cost matrix")
        if arr.ndim != 2:
            raise InvalidInput("cost matrix must be 2-d")
        object.__setattr__(self, "entries", arr)

    @property
    def n_outcomes(self) -> int:
        return self.entries.shape[0]

    @property
    def n_states(self) -> int:
        return self.entries.shape[1]


@dataclass(frozen=True)
class ConfusionMatrix:
    """entries[i, j] is the probability of observing outcome i when the
    ideal measurement produced outcome j.  Columns are probability vectors."""

    entries: np.ndarray

    def __post_init__(self):
        arr = _readonly(self.entries, np.float64, "confusion matrix")
        _require_square(arr, "confusion matrix")
        object.__setattr__(self, "entries", arr)

    @property
    def size(self) -> int:
        return self.entries.shape[0]


@dataclass(frozen=True)
class Violation:
    location: str
    message: str
    residual: float


@dataclass(frozen=True)
class ValidationReport:
    ok: bool
    violations: tuple[Violation, ...]

    def describe(self) -> str:
        if self.ok:
            return "ok"
        return "; ".join(f"{v.location}: {v.message}" for v in self.violations)


def pure_state_density(amplitudes) -> DensityMatrix:
    """Normalized projector |psi><psi| from a complex amplitude vector.

    Parameters
    ----------
    amplitudes : sequence of complex
        Any nonzero vector; it is normalized internally, so a global phase
        or scale has no effect.

    Raises
    ------
    InvalidInput
        If the vector is zero (nothing to normalize).
    """
    vec = np.asarray(amplitudes, dtype=np.complex128).reshape(-1)
    if vec.size == 0:
        raise InvalidInput("empty amplitude vector")
    if not np.all(np.isfinite(vec)):
        raise InvalidInput("amplitudes contain non-finite entries")
    norm = np.linalg.norm(vec)
    if norm == 0.0:
        raise InvalidInput("zero amplitude vector cannot be normalized")
    psi = vec / norm
    rho = np.outer(psi, psi.conj())
    return DensityMatrix(rho)


def hermitian_eigendecomposition(
    matrix: np.ndarray, tol: ToleranceProfile = DEFAULT_TOL
) -> tuple[np.ndarray, np.ndarray]:
    """Eigenvalues and eigenvectors of a Hermitian matrix, deterministically ordered.

    Eigenvalues come back sorted in descending order.  Each eigenvector is
    phase-normalized so its first component of appreciable magnitude is
    positive real, and exactly degenerate eigenvalues are ordered by the
    lexicographic order of the normalized eigenvectors, so repeated calls
    (and calls on reconstructed matrices) agree.

    Returns
    -------
    (eigenvalues, eigenvectors)
        ``eigenvalues`` has shape (d,), ``eigenvectors`` shape (d, d) with
        eigenvectors in columns; ``matrix ~= V diag(w) V^dag``.
    """
    a = np.asarray(matrix, dtype=np.complex128)
    _require_square(a, "matrix")
    herm_residual = float(np.abs(a - a.conj().T).max()) if a.size else 0.0
    if herm_residual > tol.hermiticity:
        raise InvalidInput(
            f"matrix is not Hermitian (residual {herm_residual:.3e})"
        )
    w, v = np.linalg.eigh((a + a.conj().T) / 2.0)
    order = np.argsort(-w, kind="stable")
    w = w[order]
    v = v[:, order]

    d = w.shape[0]
    for i in range(d):
        col = v[:, i]
        nz = np.flatnonzero(np.abs(col) > 1e-12)
        if nz.size:
            pivot = col[nz[0]]
            v[:, i] = col * (pivot.conj() / abs(pivot))

    # reorder inside degenerate groups by lexicographic (re, im) component order
    i = 0
    while i < d:
        j = i + 1
        while j < d and w[i] - w[j] <= _EIG_TIE_TOL:
            j += 1
        if j - i > 1:
            block = sorted(
                range(i, j),
                key=lambda k: tuple(
                    x for c in v[:, k] for x in (c.real, c.imag)
                ),
            )
            v[:, i:j] = v[:, block]
        i = j
    return w, v


def _herm_residual(a: np.ndarray) -> float:
    return float(np.abs(a - a.conj().T).max())


def _min_eigenvalue(a: np.ndarray) -> float:
    return float(np.linalg.eigvalsh((a + a.conj().T) / 2.0)[0])


def _check_operator(ops, arr: np.ndarray, loc: str, tol: ToleranceProfile,
                    trace_target: float | None) -> None:
    herm = _herm_residual(arr)
    if herm > tol.hermiticity:
        ops.append(Violation(loc, "not Hermitian", herm))
    low = _min_eigenvalue(arr)
    if low < -tol.psd_floor:
        ops.append(Violation(loc, "not positive semidefinite", -low))
    if trace_target is not None:
        tr = abs(float(np.trace(arr).real) - trace_target)
        if tr > tol.trace:
            ops.append(Violation(loc, f"trace differs from {trace_target}", tr))


def validate(obj, tol: ToleranceProfile = DEFAULT_TOL) -> ValidationReport:
    """Check the physical invariants of a domain object.

    Reports every violated invariant together with the measured residual;
    never raises.  Supported types: DensityMatrix, Ensemble, Povm,
    ConfusionMatrix, CostMatrix (the latter has no invariants beyond
    structure, so it always validates).
    """
    violations: list[Violation] = []
    if isinstance(obj, DensityMatrix):
        _check_operator(violations, obj.matrix, "matrix", tol, trace_target=1.0)
    elif isinstance(obj, Ensemble):
        total = float(obj.priors.sum())
        if abs(total - 1.0) > tol.prior_sum:
            violations.append(Violation("priors", "do not sum to 1", abs(total - 1.0)))
        neg = float(obj.priors.min())
        if neg < 0.0:
            violations.append(Violation("priors", "negative prior", -neg))
        for k, state in enumerate(obj.states):
            _check_operator(
                violations, state.matrix, f"states[{k}]", tol, trace_target=1.0
            )
    elif isinstance(obj, Povm):
        for i in range(obj.size):
            _check_operator(
                violations, obj.operators[i], f"operators[{i}]", tol, trace_target=None
            )
        total = obj.operators.sum(axis=0)
        residual = float(np.abs(total - np.eye(obj.dim)).max())
        if residual > tol.completeness:
            violations.append(Violation("operators", "do not sum to identity", residual))
    elif isinstance(obj, ConfusionMatrix):
        entries = obj.entries
        low = float(entries.min())
        if low < -tol.column_sum:
            violations.append(Violation("entries", "entry below 0", -low))
        high = float(entries.max())
        if high > 1.0 + tol.column_sum:
            violations.append(Violation("entries", "entry above 1", high - 1.0))
        sums = entries.sum(axis=0)
        for j in np.flatnonzero(np.abs(sums - 1.0) > tol.column_sum):
            violations.append(
                Violation(f"columns[{j}]", "does not sum to 1", abs(float(sums[j]) - 1.0))
            )
    elif isinstance(obj, CostMatrix):
        pass
    else:
        raise InvalidInput(f"validate does not handle {type(obj).__name__}")
    return ValidationReport(ok=not violations, violations=tuple(violations))


def require_valid(obj, name: str, tol: ToleranceProfile = DEFAULT_TOL) -> None:
    """Raise InvalidInput listing all violations if ``obj`` fails validate()."""
    report = validate(obj, tol)
    if not report.ok:
        raise InvalidInput(f"{name} invalid: {report.describe()}")
