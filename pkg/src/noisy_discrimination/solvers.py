"""Optimal measurement solvers and the optimality certificate.

Strategies are returned as :class:`SolveResult`: the ideal POVM to aim
for, its achieved average cost under the noise-modified risk operators,
the Lagrange operator and a certificate of the stationarity conditions

    (W_i - Gamma) Pi_i = 0   and   W_i - Gamma >= 0   for all i,

which are necessary and sufficient for global optimality, so every solver
here can prove its own answer.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, replace

import numpy as np

from .core import (
    ConfusionMatrix,
    CostMatrix,
    DEFAULT_TOL,
    Ensemble,
    Povm,
    ToleranceProfile,
    hermitian_eigendecomposition,
    require_valid,
)
from .errors import ConvergenceFailure, InvalidInput, NumericalFailure
from .transform import (
    LagrangeOperator,
    RiskOperators,
    average_cost,
    lagrange_operator,
    modified_costs,
    risk_operators,
)

CLOSED_FORM_TWO_STATE = "closed_form_two_state"
MIRROR_SYMMETRIC = "mirror_symmetric"
ITERATIVE = "iterative"
GUESS_ONLY = "guess_only"
FIXED = "fixed"  # emitted by evaluate_povm, never by an optimizing solver

_INV_PHI = (math.sqrt(5.0) - 1.0) / 2.0


@dataclass(frozen=True)
class CertificateReport:
    """Residuals of the optimality conditions for a (POVM, risks) pair.

    ``min_eig_gap`` is the smallest eigenvalue over all W_i - Gamma; it must
    not dip below -tol.  ``stationarity_residual`` is the largest entry of
    any (W_i - Gamma) Pi_i.  ``passed`` is judged at ``tol``.
    """

    gamma_hermiticity_residual: float
    min_eig_gap: float
    stationarity_residual: float
    passed: bool
    tol: float


@dataclass(frozen=True)
class MirrorParams:
    """Parameters of the mirror-symmetric measurement family.

    Pi_1 = a |0><0|, Pi_{2,3} = b (cos t |0> +- sin t |1>)(...)^dag with
    t in [pi/4, pi/2]; completeness fixes a = 1 - cot^2 t, b = 1/(2 sin^2 t).
    """

    theta: float
    a: float
    b: float

    @classmethod
    def from_theta(cls, theta: float) -> "MirrorParams":
        if not (math.pi / 4 - 1e-12) <= theta <= (math.pi / 2 + 1e-12):
            raise InvalidInput(f"theta {theta} outside [pi/4, pi/2]")
        c = 1.0 / math.tan(theta) if theta < math.pi / 2 else 0.0
        # snap the boundaries so a comes out exactly 0 or 1
        if abs(c - 1.0) < 1e-12:
            c = 1.0
        elif abs(c) < 1e-15:
            c = 0.0
        return cls(theta=theta, a=1.0 - c * c, b=(1.0 + c * c) / 2.0)


@dataclass(frozen=True)
class SolveResult:
    """A measurement strategy with its proof of (sub)optimality.

    ``assignment`` maps each ideal-outcome slot j to the confusion column it
    is wired to; ``inference_map`` maps each observed outcome to the cost row
    used when it fires.  Both are identity unless an assignment search chose
    otherwise.  ``cost`` always equals ``average_cost(povm, w)`` for the risk
    operators the strategy was solved against.
    """

    povm: Povm
    cost: float
    gamma: LagrangeOperator
    certificate: CertificateReport
    strategy_kind: str
    assignment: tuple[int, ...]
    inference_map: tuple[int, ...]
    mirror: MirrorParams | None = None
    iterations: int | None = None


def certify(povm: Povm, w: RiskOperators, tol: float = 1e-8) -> CertificateReport:
    """Measure how far a strategy is from satisfying the optimality conditions.

    Gamma is computed one-sided, its Hermiticity residual reported, and the
    symmetrized (Gamma + Gamma^dag)/2 used for the eigenvalue and
    stationarity checks.
    """
    gam = lagrange_operator(povm, w)
    gamma_s = gam.symmetrized()
    diffs = w.operators - gamma_s
    min_gap = min(
        float(np.linalg.eigvalsh((d + d.conj().T) / 2.0)[0]) for d in diffs
    )
    stationarity = float(
        max(np.abs(d @ p).max() for d, p in zip(diffs, povm.operators))
    )
    passed = (
        gam.hermiticity_residual < tol
        and min_gap > -tol
        and stationarity < tol
    )
    return CertificateReport(
        gamma_hermiticity_residual=gam.hermiticity_residual,
        min_eig_gap=min_gap,
        stationarity_residual=stationarity,
        passed=passed,
        tol=tol,
    )


def _result(povm, w, kind, tol, assignment=None, inference=None, mirror=None,
            iterations=None, cost=None):
    n = w.size
    if cost is None:
        cost = average_cost(povm, w)
    return SolveResult(
        povm=povm,
        cost=cost,
        gamma=lagrange_operator(povm, w),
        certificate=certify(povm, w, tol),
        strategy_kind=kind,
        assignment=tuple(range(n)) if assignment is None else tuple(assignment),
        inference_map=tuple(range(n)) if inference is None else tuple(inference),
        mirror=mirror,
        iterations=iterations,
    )


def helstrom_two_state(
    w0: np.ndarray,
    w1: np.ndarray,
    tol: float = 1e-8,
    provenance: str = "ideal",
) -> SolveResult:
    """Closed-form optimal two-outcome measurement for risk operators (w0, w1).

    Pi_0 projects onto the strictly negative eigenspace of w0 - w1;
    eigenvectors with zero eigenvalue go to Pi_1.  The cost is
    Tr(w1) + Tr((w0 - w1) Pi_0).
    """
    a0 = np.asarray(w0, dtype=np.complex128)
    a1 = np.asarray(w1, dtype=np.complex128)
    if a0.shape != a1.shape or a0.ndim != 2 or a0.shape[0] != a0.shape[1]:
        raise InvalidInput(f"risk operators must be square and matched, got "
                           f"{a0.shape} and {a1.shape}")
    for name, a in (("w0", a0), ("w1", a1)):
        residual = float(np.abs(a - a.conj().T).max())
        if residual > 1e-12:
            raise InvalidInput(f"{name} is not Hermitian (residual {residual:.3e})")
    diff = (a0 - a1 + (a0 - a1).conj().T) / 2.0
    evals, evecs = hermitian_eigendecomposition(diff)
    threshold = 1e-12 * max(1.0, float(np.abs(evals).max(initial=0.0)))
    neg = evecs[:, evals < -threshold]
    dim = a0.shape[0]
    pi0 = neg @ neg.conj().T if neg.size else np.zeros((dim, dim), dtype=np.complex128)
    pi0 = (pi0 + pi0.conj().T) / 2.0
    pi1 = np.eye(dim) - pi0
    povm = Povm(np.stack([pi0, pi1]))
    w = RiskOperators(np.stack([a0, a1]), provenance)
    cost = float(np.trace(a1).real + np.trace(diff @ pi0).real)
    return _result(povm, w, CLOSED_FORM_TWO_STATE, tol, cost=cost)


def guess_only(
    costs: CostMatrix,
    q: ConfusionMatrix,
    ensemble: Ensemble,
    priors: np.ndarray | None = None,
    tol: float = 1e-8,
) -> SolveResult:
    """The no-measurement strategy: always declare the cheapest outcome.

    Picks the outcome row i* minimizing sum_k C_ik p_k (ties to the lowest
    index) and pairs the trivial POVM (identity in slot i*) with the constant
    inference map g(i) = i*, which makes the detector noise irrelevant.
    """
    p = ensemble.priors if priors is None else np.asarray(priors, dtype=float)
    if p.shape != (costs.n_states,):
        raise InvalidInput(
            f"{p.shape[0]} priors for a cost matrix with {costs.n_states} states"
        )
    if q.size != costs.n_outcomes:
        raise InvalidInput("confusion size does not match cost outcome rows")
    per_guess = costs.entries @ p
    star = int(np.argmin(per_guess))
    n, dim = costs.n_outcomes, ensemble.dim
    ops = np.zeros((n, dim, dim), dtype=np.complex128)
    ops[star] = np.eye(dim)
    povm = Povm(ops)
    inference = (star,) * n
    relabeled, _ = apply_assignment(costs, q, tuple(range(n)), inference)
    w = risk_operators(modified_costs(relabeled, q), ensemble, "modified")
    return _result(povm, w, GUESS_ONLY, tol, inference=inference)


def two_state_noisy(
    ensemble: Ensemble,
    costs: CostMatrix,
    q: ConfusionMatrix,
    tol: float = 1e-8,
) -> SolveResult:
    """Optimal two-state strategy under confusion noise.

    The modified risk difference is (q00 + q11 - 1)(W_0 - W_1), so the ideal
    projectors survive when q00 + q11 > 1, swap labels when q00 + q11 < 1,
    and carry no information at q00 + q11 = 1, where guessing from the priors
    is optimal.
    """
    if ensemble.size != 2:
        raise InvalidInput(f"two-state solver got {ensemble.size} states")
    if costs.entries.shape != (2, 2) or q.size != 2:
        raise InvalidInput("two-state solver needs 2x2 cost and confusion matrices")
    require_valid(ensemble, "ensemble")
    require_valid(q, "confusion matrix")
    s = float(q.entries[0, 0] + q.entries[1, 1] - 1.0)
    if abs(s) <= 1e-12:
        return guess_only(costs, q, ensemble, tol=tol)
    w = risk_operators(modified_costs(costs, q), ensemble, "modified")
    return helstrom_two_state(w.operators[0], w.operators[1], tol, "modified")


_REFLECT = np.diag([1.0, -1.0])


def is_mirror_symmetric(ensemble: Ensemble, atol: float = 1e-10) -> bool:
    """True for qubit triples with rho_1 = |0><0| and rho_2, rho_3 mirror images."""
    if ensemble.dim != 2 or ensemble.size != 3:
        return False
    rho1, rho2, rho3 = (s.matrix for s in ensemble.states)
    axis = np.abs(rho1 - np.diag([1.0, 0.0])).max()
    pair = np.abs(rho3 - _REFLECT @ rho2 @ _REFLECT).max()
    return bool(axis <= atol and pair <= atol)


def _mirror_povm(theta: float) -> tuple[Povm, MirrorParams]:
    params = MirrorParams.from_theta(theta)
    ct, st = math.cos(theta), math.sin(theta)
    plus = np.array([ct, st], dtype=np.complex128)
    minus = np.array([ct, -st], dtype=np.complex128)
    ops = np.stack([
        params.a * np.diag([1.0, 0.0]).astype(np.complex128),
        params.b * np.outer(plus, plus.conj()),
        params.b * np.outer(minus, minus.conj()),
    ])
    return Povm(ops), params


def _mirror_quadratic(w: RiskOperators) -> tuple[float, float, float]:
    # family cost in c = cot(theta):  f(c) = alpha c^2 + beta c + gamma
    w1, w2, w3 = w.operators
    t1 = float(w1[0, 0].real)
    alpha = (float(w2[0, 0].real) + float(w3[0, 0].real)) / 2.0 - t1
    beta = float(w2[0, 1].real) - float(w3[0, 1].real)
    gamma = t1 + (float(w2[1, 1].real) + float(w3[1, 1].real)) / 2.0
    return alpha, beta, gamma


def _golden_section(fn, lo: float, hi: float, width: float) -> float:
    """Plain golden-section minimization down to the requested bracket width."""
    a, b = lo, hi
    c = b - _INV_PHI * (b - a)
    d = a + _INV_PHI * (b - a)
    fc, fd = fn(c), fn(d)
    while b - a > width:
        if fc <= fd:
            b, d, fd = d, c, fc
            c = b - _INV_PHI * (b - a)
            fc = fn(c)
        else:
            a, c, fc = c, d, fd
            d = a + _INV_PHI * (b - a)
            fd = fn(d)
    return (a + b) / 2.0


def mirror_symmetric_solve(
    ensemble: Ensemble,
    costs: CostMatrix,
    q: ConfusionMatrix,
    tol: float = 1e-8,
    profile: ToleranceProfile = DEFAULT_TOL,
) -> SolveResult:
    """Optimize over the mirror-symmetric three-outcome family.

    Scans 200 points of theta in [pi/4, pi/2] to check unimodality (falling
    back to a fine grid around the best point if it ever fails), refines by
    golden-section search, then polishes with the exact vertex of the family
    cost, which is a quadratic in cot(theta).  The boundary two-outcome
    strategy (theta = pi/4, a = 0) and plain guessing are evaluated as well
    and the cheapest strategy wins.  The certificate is reported but not
    required to pass: for ensembles outside the family's reach the best
    family member may still be beatable.
    """
    if not is_mirror_symmetric(ensemble):
        raise InvalidInput(
            "ensemble is not mirror-symmetric about |0>; use iterative_solve"
        )
    if costs.entries.shape != (3, 3) or q.size != 3:
        raise InvalidInput("mirror solver needs 3x3 cost and confusion matrices")
    require_valid(ensemble, "ensemble")
    require_valid(q, "confusion matrix")
    w = risk_operators(modified_costs(costs, q), ensemble, "modified")
    alpha, beta, gamma = _mirror_quadratic(w)

    def family_cost(theta: float) -> float:
        c = 1.0 / math.tan(theta) if theta < math.pi / 2 else 0.0
        return (alpha * c + beta) * c + gamma

    lo, hi = math.pi / 4, math.pi / 2
    thetas = np.linspace(lo, hi, 200)
    values = np.array([family_cost(t) for t in thetas])
    interior = (values[1:-1] < values[:-2] - 1e-13) & (values[1:-1] < values[2:] - 1e-13)
    if int(interior.sum()) > 1:
        # not unimodal: fall back to a fine grid and refine around its best point
        thetas = np.linspace(lo, hi, 2000)
        values = np.array([family_cost(t) for t in thetas])
    k = int(np.argmin(values))
    bracket = (thetas[max(k - 1, 0)], thetas[min(k + 1, len(thetas) - 1)])
    theta_golden = _golden_section(family_cost, bracket[0], bracket[1], 1e-9)

    candidates = [theta_golden, lo, hi]
    if alpha > 1e-15:
        vertex_c = min(max(-beta / (2.0 * alpha), 0.0), 1.0)
        candidates.insert(0, math.pi / 2 - math.atan(vertex_c))
    best_theta = min(candidates, key=family_cost)
    if abs(best_theta - math.pi / 4) < 1e-13:
        best_theta = math.pi / 4  # snap so a comes out exactly 0

    povm, params = _mirror_povm(best_theta)
    mirror_result = _result(povm, w, MIRROR_SYMMETRIC, tol, mirror=params)
    guess_result = guess_only(costs, q, ensemble, tol=tol)
    if guess_result.cost < mirror_result.cost:
        return guess_result
    return mirror_result


_KERNEL_LADDER = (1e-9, 1e-7, 1e-5, 1e-3, 1e-1)
_ROUND_LADDER = (1e-6, 1e-4, 1e-2, 0.05, 0.1, 0.2)


def _squeeze(blocks: np.ndarray):
    """Restore completeness: Pi_i = S^{-1/2} B_i S^{-1/2}.  None if the
    blocks do not jointly span the space."""
    s = blocks.sum(axis=0)
    s = (s + s.conj().T) / 2.0
    evals, evecs = np.linalg.eigh(s)
    if evals[0] <= 1e-12 * max(float(evals[-1]), 1.0):
        return None
    t = (evecs / np.sqrt(evals)) @ evecs.conj().T
    out = t @ blocks @ t
    return (out + np.transpose(out, (0, 2, 1)).conj()) / 2.0


def _polish_candidates(w: RiskOperators, p: np.ndarray):
    """Rounded variants of the iterate that excise its slow modes.

    Two constructions, each over a ladder of cutoffs:

    * kernel rounding: at an optimum every Pi_i lives in ker(W_i - Gamma),
      so project onto the near-kernels of the estimated Gamma;
    * eigenvalue rounding: drop small POVM eigenvalues (weight the fixed
      point only removes at a (1 - gap)^k crawl) and re-squeeze.

    Candidates are suggestions only; the caller keeps one iff its
    certificate passes or it strictly improves the cost.
    """
    n, dim = w.size, w.dim
    gamma = np.einsum("iab,ibc->ac", w.operators, p)
    gamma = (gamma + gamma.conj().T) / 2.0
    scale = max(1.0, float(np.abs(w.operators).max()))
    for kappa in _KERNEL_LADDER:
        blocks = np.zeros((n, dim, dim), dtype=np.complex128)
        for i in range(n):
            evals, evecs = np.linalg.eigh(w.operators[i] - gamma)
            keep = evecs[:, evals < kappa * scale]
            if keep.shape[1]:
                blocks[i] = keep @ keep.conj().T
        cand = _squeeze(blocks)
        if cand is not None:
            yield cand
    for kappa in _ROUND_LADDER:
        blocks = np.zeros((n, dim, dim), dtype=np.complex128)
        dropped = False
        for i in range(n):
            evals, evecs = np.linalg.eigh(p[i])
            keep = evals >= kappa
            dropped = dropped or not bool(keep.all())
            blocks[i] = (evecs[:, keep] * evals[keep]) @ evecs[:, keep].conj().T
        if not dropped:
            continue
        cand = _squeeze(blocks)
        if cand is not None:
            yield cand


def _extrapolated_candidate(snaps: list[np.ndarray]):
    """Limit estimate from equally spaced iterates (reduced-rank style).

    During a slow crawl the iterate moves along a few geometric modes.  The
    affine combination of snapshots whose successive differences nearly
    cancel estimates the limit; unlike entrywise Aitken it also handles a
    rotating pair of modes.  The estimate is clipped back to positive
    operators and re-squeezed to completeness.  None if the combination is
    unavailable or cannot form a POVM.
    """
    xs = np.array([s.ravel() for s in snaps])
    u = np.diff(xs, axis=0)
    gram = (u @ u.conj().T).real
    try:
        qv = np.linalg.solve(gram, np.ones(gram.shape[0]))
    except np.linalg.LinAlgError:
        return None
    total = qv.sum()
    if not np.isfinite(total) or abs(total) < 1e-300:
        return None
    coeff = qv / total
    x = (coeff[:, None] * xs[:-1]).sum(axis=0).reshape(snaps[0].shape)
    x = (x + np.transpose(x, (0, 2, 1)).conj()) / 2.0
    blocks = np.empty_like(x)
    for i in range(x.shape[0]):
        evals, evecs = np.linalg.eigh(x[i])
        blocks[i] = (evecs * np.clip(evals, 0.0, None)) @ evecs.conj().T
    return _squeeze(blocks)


def iterative_solve(
    w: RiskOperators,
    tol: float = 1e-8,
    max_iter: int = 10000,
) -> SolveResult:
    """General fixed-point solver for arbitrary risk operators.

    Works on the shifted operators G_i = lambda I - W_i (lambda large enough
    that every G_i is positive definite) and repeats

        Pi_i  <-  S^{-1/2} G_i Pi_i G_i S^{-1/2},   S = sum_j G_j Pi_j G_j,

    from the uniform start Pi_i = I/n, which preserves POVM structure at
    every step.  Iteration stops as soon as the certificate passes at
    ``tol``; the per-step cost improvement only decides when it is worth
    checking.  Near-degenerate problems get rounded restart candidates (see
    _polish_candidates) instead of waiting out their slow modes.
    Deterministic: no randomness anywhere.

    Raises
    ------
    ConvergenceFailure
        If ``max_iter`` steps pass without certification; carries the best
        iterate and its residuals in ``best``.
    """
    n, dim = w.size, w.dim
    if n < 1:
        raise InvalidInput("need at least one risk operator")
    if not tol > 0.0:
        raise InvalidInput(f"tolerance must be positive, got {tol}")
    if max_iter < 1:
        raise InvalidInput(f"max_iter must be at least 1, got {max_iter}")
    shift = max(
        float(np.linalg.eigvalsh((m + m.conj().T) / 2.0)[-1]) for m in w.operators
    ) + 1.0
    g = shift * np.eye(dim) - w.operators
    p = np.broadcast_to(np.eye(dim, dtype=np.complex128) / n, (n, dim, dim)).copy()

    best_cost = math.inf
    best_p = p
    prev_cost = math.inf
    reinjections = 0
    stall_mute = 0
    snaps: list[np.ndarray] = []
    for step in range(1, max_iter + 1):
        m = g @ p @ g
        s = m.sum(axis=0)
        s = (s + s.conj().T) / 2.0
        evals, evecs = np.linalg.eigh(s)
        if evals[0] <= 1e-15 * evals[-1]:
            raise NumericalFailure(
                f"scale matrix became singular at step {step} "
                f"(eigenvalues {evals[0]:.3e} .. {evals[-1]:.3e})"
            )
        t = (evecs / np.sqrt(evals)) @ evecs.conj().T
        p = t @ m @ t
        p = (p + np.transpose(p, (0, 2, 1)).conj()) / 2.0
        cost = float(np.einsum("iab,iba->", w.operators, p).real)
        if cost < best_cost:
            best_cost, best_p = cost, p
        improvement = prev_cost - cost
        prev_cost = cost
        stalled = improvement < tol / 10.0 and step >= stall_mute
        if step % 20 == 0:
            snaps.append(p)
            if len(snaps) > 4:
                del snaps[0]
        if not (step == 1 or step % 20 == 0 or stalled or step == max_iter):
            continue
        report = certify(Povm(p), w, tol)
        # full polishing only at sparse instants; in between a cheap
        # certificate check decides whether we are already done
        polish = (
            report.passed or stalled or step == 1
            or step % 100 == 0 or step == max_iter
        )
        if not polish:
            continue
        certified = [(cost, p)] if report.passed else []
        adopt = None
        adopt_cost = cost
        candidates = list(_polish_candidates(w, p))
        if len(snaps) >= 3:
            extrapolated = _extrapolated_candidate(snaps)
            if extrapolated is not None:
                candidates.append(extrapolated)
        loose = max(100.0 * tol, 1e-6)
        for cand in candidates:
            cand_cost = float(np.einsum("iab,iba->", w.operators, cand).real)
            cand_report = certify(Povm(cand), w, tol)
            if cand_report.passed:
                certified.append((cand_cost, cand))
            elif cand_cost < adopt_cost:
                # an exactly-zero operator is absorbing under the update
                # (G 0 G = 0), so a candidate that kills one must at least
                # loosely satisfy the optimality conditions; a transient
                # rounding that guessed the wrong support fails that test,
                # while a genuinely dying operator passes it and saves the
                # (1 - gap)^k wait for its weight to decay
                # gap is the support-correctness signal: rounding away a
                # direction the optimum needs leaves a strongly negative
                # eigenvalue; hermiticity and small stationarity error are
                # weight imprecision the iteration cleans up on its own
                zero_free = all(np.abs(cand[i]).max() > 0.0 for i in range(n))
                sound = (
                    cand_report.min_eig_gap > -loose
                    and cand_report.stationarity_residual < loose
                )
                if zero_free or sound:
                    adopt, adopt_cost = cand, cand_cost
        if certified:
            # prefer the cheapest certified point; polish usually lands on
            # the optimum exactly while the live iterate is merely within
            # tolerance
            final_cost, final_p = min(certified, key=lambda pair: pair[0])
            return _result(
                Povm(final_p), w, ITERATIVE, tol,
                iterations=step, cost=final_cost,
            )
        if adopt is not None:
            # restart from the rounded iterate: its slow mode is gone and
            # the remaining error contracts at the fast rate
            p = adopt
            prev_cost = adopt_cost
            snaps.clear()
            if adopt_cost < best_cost:
                best_cost, best_p = adopt_cost, adopt
        elif (
            reinjections < 10
            and report.min_eig_gap < -tol
            and report.stationarity_residual < -report.min_eig_gap / 10.0
        ):
            # the iterate sits at a stationary point that is not optimal:
            # a beneficial direction carries no weight, and the update can
            # never create weight from nothing.  Plant a seed along the
            # most negative eigendirection of W_i - Gamma and resume.
            gamma = np.einsum("iab,ibc->ac", w.operators, p)
            gamma = (gamma + gamma.conj().T) / 2.0
            target, direction, lowest = 0, None, 0.0
            for i in range(n):
                d_evals, d_evecs = np.linalg.eigh(w.operators[i] - gamma)
                if d_evals[0] < lowest:
                    target, direction, lowest = i, d_evecs[:, 0], d_evals[0]
            if direction is not None:
                seeded = p.copy()
                seeded[target] += 0.05 * np.outer(direction, direction.conj())
                seeded = _squeeze(seeded)
                if seeded is not None:
                    p = seeded
                    prev_cost = math.inf
                    snaps.clear()
                    reinjections += 1
        if stalled:
            stall_mute = step + 100
    povm = Povm(best_p)
    failed = _result(povm, w, ITERATIVE, tol, iterations=max_iter, cost=best_cost)
    report = failed.certificate
    raise ConvergenceFailure(
        f"no certificate after {max_iter} steps (gamma hermiticity "
        f"{report.gamma_hermiticity_residual:.3e}, min eigenvalue gap "
        f"{report.min_eig_gap:.3e}, stationarity "
        f"{report.stationarity_residual:.3e})",
        best=failed,
    )


def apply_assignment(
    costs: CostMatrix,
    q: ConfusionMatrix,
    assignment: tuple[int, ...],
    inference_map: tuple[int, ...],
) -> tuple[CostMatrix, ConfusionMatrix]:
    """Rewire a problem: permute confusion columns by ``assignment`` and
    replace cost row i by row ``inference_map[i]``."""
    n = costs.n_outcomes
    if sorted(assignment) != list(range(q.size)):
        raise InvalidInput(f"assignment {assignment} is not a permutation")
    if len(inference_map) != n or any(not 0 <= gi < n for gi in inference_map):
        raise InvalidInput(f"inference map {inference_map} does not index cost rows")
    relabeled = CostMatrix(costs.entries[list(inference_map), :])
    rewired = ConfusionMatrix(q.entries[:, list(assignment)])
    return relabeled, rewired


def evaluate_povm(
    povm: Povm,
    ensemble: Ensemble,
    costs: CostMatrix,
    q: ConfusionMatrix,
    tol: float = 1e-8,
) -> SolveResult:
    """Score a fixed candidate POVM against a problem (no optimization).

    The candidate is deliberately not validated: scoring a slightly broken
    POVM is exactly how certification failures get diagnosed.
    """
    if povm.dim != ensemble.dim:
        raise InvalidInput(
            f"POVM dimension {povm.dim} does not match states of dimension "
            f"{ensemble.dim}"
        )
    if povm.size != costs.n_outcomes or povm.size != q.size:
        raise InvalidInput(
            f"POVM has {povm.size} outcomes but the problem expects "
            f"{costs.n_outcomes}"
        )
    w = risk_operators(modified_costs(costs, q), ensemble, "modified")
    return _result(povm, w, FIXED, tol)


def _solve_induced(ensemble, costs, q, solver, tol, max_iter):
    if solver == "two_state" or (
        solver == "auto" and ensemble.size == 2 and costs.n_outcomes == 2
    ):
        return two_state_noisy(ensemble, costs, q, tol)
    w = risk_operators(modified_costs(costs, q), ensemble, "modified")
    return iterative_solve(w, tol, max_iter)


def assignment_search(
    ensemble: Ensemble,
    costs: CostMatrix,
    q: ConfusionMatrix,
    solver="auto",
    tol: float = 1e-8,
    max_iter: int = 10000,
) -> SolveResult:
    """Exhaust outcome relabelings and return the globally cheapest strategy.

    Enumerates every permutation of the confusion columns (which detector
    channel each ideal outcome drives) together with every inference map
    (which cost row an observed outcome is billed as), solves each induced
    problem, and keeps the lowest cost; ties break to the lexicographically
    first (assignment, inference) pair.

    ``solver`` is "auto" (closed form for two states, iterative otherwise),
    "two_state", "iterative", or a callable ``(ensemble, costs, q) ->
    SolveResult`` for scoring a fixed strategy.  For the optimizing solvers
    the optimal cost of an induced problem does not depend on the column
    permutation (it merely relabels the optimizer's operators), so each
    inference map is solved once and reused; a callable is invoked for every
    pair since its answer may depend on the wiring.
    """
    n, m_states = costs.n_outcomes, ensemble.size
    if n > 6 or m_states > 6:
        raise InvalidInput(
            f"{n} outcomes x {m_states} states is past the n, m <= 6 search guard"
        )
    if q.size != n:
        raise InvalidInput("confusion size does not match cost outcome rows")
    builtin = isinstance(solver, str)
    if builtin and solver not in ("auto", "two_state", "iterative"):
        raise InvalidInput(f"unknown solver choice {solver!r}")

    cache: dict[tuple[int, ...], SolveResult] = {}
    best: SolveResult | None = None
    best_key: tuple[int, ...] | None = None
    for sigma in itertools.permutations(range(n)):
        for g in itertools.product(range(n), repeat=n):
            relabeled, rewired = apply_assignment(costs, q, sigma, g)
            if builtin:
                if g not in cache:
                    cache[g] = _solve_induced(
                        ensemble, relabeled, rewired, solver, tol, max_iter
                    )
                res = cache[g]
            else:
                res = solver(ensemble, relabeled, rewired)
            if best is None or res.cost < best.cost:
                best, best_key = res, (sigma, g)
    assert best is not None and best_key is not None
    return replace(best, assignment=best_key[0], inference_map=best_key[1])


def dispatch_solve(
    ensemble: Ensemble,
    costs: CostMatrix,
    q: ConfusionMatrix,
    tol: float = 1e-9,
    max_iter: int = 10000,
    search_assignments: bool = False,
) -> SolveResult:
    """Route a problem to the cheapest applicable solver.

    Two states with two outcomes go to the closed form; mirror-symmetric
    qubit triples go to the parametric family (falling back to the iterative
    solver if the family's best member fails to certify); everything else is
    iterated.  With ``search_assignments`` the whole dispatch runs inside the
    relabeling search instead.
    """
    if search_assignments:
        return assignment_search(ensemble, costs, q, "auto", tol, max_iter)
    if ensemble.size == 2 and costs.n_outcomes == 2:
        return two_state_noisy(ensemble, costs, q, tol)
    if costs.n_outcomes == 3 and costs.n_states == 3 and is_mirror_symmetric(ensemble):
        res = mirror_symmetric_solve(ensemble, costs, q, tol)
        if res.certificate.passed:
            return res
    w = risk_operators(modified_costs(costs, q), ensemble, "modified")
    return iterative_solve(w, tol, max_iter)
