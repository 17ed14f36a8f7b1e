"""CHSH construction for two identical subsystems and classical realizability.

A two-level pair state built from an even ground state and an odd first
excited state, probed with an odd two-valued observable, has correlations
E(t, s) = -alpha^2 cos(omega (t-s)) with alpha the single off-diagonal
matrix element.  At the right four measurement times the CHSH combination
reaches -2 sqrt(2) alpha^2, beyond the classical bound 2 once
alpha^2 > sqrt(2)/2.  Realizability of a general correlation matrix is
decided exactly by linear feasibility over the sixteen deterministic
atoms, cross-checkable against the eight sign-variant CHSH inequalities
(necessary always; sufficient for vanishing marginals).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from itertools import product

import numpy as np

from .correlators import Observable
from .errors import ParameterError
from .spectral import EigenSystem, quadrature

__all__ = [
    "ClassicalModel",
    "ChshReport",
    "RealizabilityResult",
    "ArrangementDistribution",
    "alpha",
    "paper_times",
    "chsh_correlations",
    "chsh_value",
    "chsh_inequalities",
    "classical_realizability",
    "product_classical_model",
    "run_chsh",
]

_ATOMS: tuple[tuple[int, int, int, int], ...] = tuple(product((-1, 1), repeat=4))
# sign patterns (e11, e12, e21, e22) with an odd number of -1 entries
_CHSH_PATTERNS: tuple[tuple[int, int, int, int], ...] = tuple(
    p for p in product((-1, 1), repeat=4) if p[0] * p[1] * p[2] * p[3] == -1
)
_FEAS_TOL = 1e-9
_PIVOT_TOL = 1e-12


@dataclass(frozen=True)
class ClassicalModel:
    """Joint distribution over the 16 outcomes (s1, s2, t1, t2) in {-1,1}^4."""

    atoms: tuple[float, ...]

    def __post_init__(self):
        if len(self.atoms) != 16:
            raise ParameterError("a classical model has exactly 16 atoms")
        if any(p < -1e-15 for p in self.atoms):
            raise ParameterError("atom probabilities must be non-negative")
        if abs(math.fsum(self.atoms) - 1.0) > 1e-12:
            raise ParameterError("atom probabilities must sum to one")

    def correlation(self, i: int, j: int) -> float:
        """<sigma_i tau_j> with i, j in {1, 2}."""
        return math.fsum(
            p * a[i - 1] * a[2 + j - 1] for p, a in zip(self.atoms, _ATOMS)
        )

    def marginal(self, which: str, i: int) -> float:
        pos = (i - 1) if which == "sigma" else (2 + i - 1)
        return math.fsum(p * a[pos] for p, a in zip(self.atoms, _ATOMS))

    def correlations(self) -> np.ndarray:
        return np.array(
            [[self.correlation(1, 1), self.correlation(1, 2)],
             [self.correlation(2, 1), self.correlation(2, 2)]]
        )


def alpha(es: EigenSystem, f: Observable) -> float:
    """Off-diagonal element of f between the even ground and odd first state.

    Requires the parity pattern (even, odd) and an odd bounded observable;
    also verifies that both diagonal elements vanish, which is what makes
    the pair behave like a spin with zero marginals.
    """
    if es.k < 2:
        raise ParameterError("need at least two eigenstates")
    psi0, psi1 = es.eigenfunctions[0], es.eigenfunctions[1]
    _require_parity(psi0, "even")
    _require_parity(psi1, "odd")
    fvals = f(es.grid.points)
    if f.kind == "position" or not f.is_bounded:
        raise ParameterError("alpha needs a bounded observable (|f| <= 1)")
    if f.kind not in ("sign", "tabulated"):
        raise ParameterError("alpha needs an odd observable (sign or odd tabulated)")
    if f.kind == "tabulated":
        odd_dev = float(np.max(np.abs(fvals + fvals[::-1])))
        if odd_dev > 1e-8:
            raise ParameterError(f"tabulated observable not odd (dev {odd_dev:.2e})")
    for psi in (psi0, psi1):
        diag = quadrature(psi.values * fvals, psi.values, grid=es.grid)
        if abs(diag) > 1e-8:
            raise ParameterError(f"diagonal element {diag:.2e} does not vanish")
    return quadrature(psi0.values * fvals, psi1.values, grid=es.grid)


def _require_parity(psi, parity: str) -> None:
    if psi.parity == parity:
        return
    if not psi.grid.symmetric:
        raise ParameterError("parity check needs a symmetric grid")
    v = psi.values
    target = v[::-1] if parity == "even" else -v[::-1]
    if np.max(np.abs(v - target)) > 1e-6 * max(1.0, float(np.max(np.abs(v)))):
        raise ParameterError(f"eigenfunction is not {parity}")


def paper_times(omega: float) -> tuple[float, float, float, float]:
    """The four measurement times (t1, t2, s1, s2) scaled by the splitting."""
    if not omega > 0:
        raise ParameterError("omega must be positive")
    return (0.0, math.pi / (2 * omega), math.pi / (4 * omega), 3 * math.pi / (4 * omega))


def chsh_correlations(alpha_value: float, omega: float, times) -> np.ndarray:
    """E[i][j] = -alpha^2 cos(omega (t_i - s_j)) for the singlet-like pair."""
    if not omega > 0:
        raise ParameterError("omega must be positive")
    t1, t2, s1, s2 = (float(v) for v in times)
    a2 = alpha_value * alpha_value
    return np.array(
        [[-a2 * math.cos(omega * (t - s)) for s in (s1, s2)] for t in (t1, t2)]
    )


def chsh_value(E) -> float:
    """S = E11 + E22 + E21 - E12."""
    E = np.asarray(E, dtype=float)
    if E.shape != (2, 2):
        raise ParameterError("correlation matrix must be 2x2")
    if np.max(np.abs(E)) > 1.0 + 1e-9:
        raise ParameterError("correlations must lie in [-1, 1]")
    return float(E[0, 0] + E[1, 1] + E[1, 0] - E[0, 1])


def chsh_inequalities(E) -> list[tuple[tuple[int, int, int, int], float]]:
    """All eight sign-variant combinations, each classically bounded by 2."""
    E = np.asarray(E, dtype=float)
    flat = E.reshape(4)
    return [(pat, float(np.dot(pat, flat))) for pat in _CHSH_PATTERNS]


# --------------------------------------------------------------------------
# linear feasibility over the sixteen atoms
# --------------------------------------------------------------------------

def _phase_one_simplex(A: np.ndarray, b: np.ndarray) -> tuple[float, np.ndarray, np.ndarray]:
    """Minimize the artificial-variable sum for A x = b, x >= 0.

    Dense tableau with Bland's rule; returns (residual, x, y) where y are
    the dual prices of the artificial phase (a Farkas certificate when
    the residual stays positive).
    """
    m, n = A.shape
    A = A.copy()
    b = b.copy()
    flip = b < 0
    A[flip] *= -1.0
    b[flip] *= -1.0
    tab = np.zeros((m + 1, n + m + 1))
    tab[:m, :n] = A
    tab[:m, n : n + m] = np.eye(m)
    tab[:m, -1] = b
    tab[m, :] = -tab[:m, :].sum(axis=0)  # phase-one reduced costs
    tab[m, n : n + m] = 0.0
    basis = list(range(n, n + m))
    for _ in range(10000):
        enter = -1
        for j in range(n + m):
            if tab[m, j] < -_PIVOT_TOL:
                enter = j
                break
        if enter < 0:
            break
        ratio = np.inf
        leave = -1
        for i in range(m):
            if tab[i, enter] > _PIVOT_TOL:
                r = tab[i, -1] / tab[i, enter]
                if r < ratio - _PIVOT_TOL or (
                    abs(r - ratio) <= _PIVOT_TOL
                    and (leave < 0 or basis[i] < basis[leave])
                ):
                    ratio = r
                    leave = i
        if leave < 0:
            break  # unbounded cannot happen for this phase; defensive
        piv = tab[leave, enter]
        tab[leave] /= piv
        for i in range(m + 1):
            if i != leave and tab[i, enter] != 0.0:
                tab[i] -= tab[i, enter] * tab[leave]
        basis[leave] = enter
    residual = -tab[m, -1]
    x = np.zeros(n)
    for i, col in enumerate(basis):
        if col < n:
            x[col] = tab[i, -1]
    y = -tab[m, n : n + m].copy()
    y[flip] *= -1.0
    return float(residual), x, y


@dataclass(frozen=True)
class RealizabilityResult:
    feasible: bool
    model: ClassicalModel | None
    violated: tuple[tuple[int, int, int, int], float] | None
    certificate: np.ndarray | None


def classical_realizability(E, marginals=(0.0, 0.0, 0.0, 0.0)) -> RealizabilityResult:
    """Does a joint distribution reproduce the 4 correlations and 4 marginals?

    Exact linear feasibility over the 16 atoms (phase-one simplex); when
    infeasible, the most violated of the eight CHSH combinations is
    returned as witness (for zero marginals one always exists), otherwise
    the dual certificate of the simplex.
    """
    E = np.asarray(E, dtype=float)
    marg = np.asarray(marginals, dtype=float)
    if E.shape != (2, 2) or marg.shape != (4,):
        raise ParameterError("need a 2x2 correlation matrix and 4 marginals")
    if np.max(np.abs(E)) > 1.0 + 1e-12 or np.max(np.abs(marg)) > 1.0 + 1e-12:
        raise ParameterError("correlations and marginals must lie in [-1, 1]")
    rows = [np.ones(16)]
    rhs = [1.0]
    for pos in range(4):  # <sigma_1>, <sigma_2>, <tau_1>, <tau_2>
        rows.append(np.array([a[pos] for a in _ATOMS], dtype=float))
        rhs.append(float(marg[pos]))
    for i in (0, 1):
        for j in (0, 1):
            rows.append(np.array([a[i] * a[2 + j] for a in _ATOMS], dtype=float))
            rhs.append(float(E[i, j]))
    residual, x, y = _phase_one_simplex(np.vstack(rows), np.asarray(rhs))
    if residual <= _FEAS_TOL:
        atoms = np.clip(x, 0.0, None)
        atoms = atoms / math.fsum(atoms)
        return RealizabilityResult(True, ClassicalModel(tuple(atoms)), None, None)
    pattern, value = max(chsh_inequalities(E), key=lambda pv: pv[1])
    if value > 2.0:
        return RealizabilityResult(False, None, (pattern, value), None)
    return RealizabilityResult(False, None, None, y)


# --------------------------------------------------------------------------
# product classical models for disjoint arrangements
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class ArrangementDistribution:
    """Finite distribution over the joint outcomes of one arrangement."""

    observables: tuple[str, ...]
    outcomes: tuple[tuple[float, ...], ...]
    probabilities: tuple[float, ...]

    def __post_init__(self):
        if len(self.outcomes) != len(self.probabilities):
            raise ParameterError("outcome/probability length mismatch")
        if not self.outcomes:
            raise ParameterError("arrangement needs at least one outcome")
        if len(set(self.observables)) != len(self.observables):
            raise ParameterError("duplicate observable labels in one arrangement")
        if any(p < 0 for p in self.probabilities):
            raise ParameterError("probabilities must be non-negative")
        if abs(math.fsum(self.probabilities) - 1.0) > 1e-12:
            raise ParameterError("probabilities must sum to one")
        for out in self.outcomes:
            if len(out) != len(self.observables):
                raise ParameterError("outcome arity does not match observables")


@dataclass(frozen=True)
class ProductModel:
    observables: tuple[str, ...]
    outcomes: tuple[tuple[float, ...], ...]
    probabilities: tuple[float, ...]


def product_classical_model(distributions) -> ProductModel:
    """Joint model for pairwise disjoint arrangements as a product measure.

    Disjointness is what makes the product well defined: every observable
    belongs to exactly one arrangement, so its marginal is recovered
    exactly.  Overlapping arrangements are rejected; that is precisely
    where a single product construction stops working.
    """
    distributions = list(distributions)
    if not distributions:
        raise ParameterError("need at least one arrangement")
    seen: set[str] = set()
    for d in distributions:
        overlap = seen.intersection(d.observables)
        if overlap:
            raise ParameterError(
                f"arrangements share observables {sorted(overlap)}; "
                f"compatibility is not transitive across them"
            )
        seen.update(d.observables)
    labels: tuple[str, ...] = ()
    outcomes: list[tuple[float, ...]] = [()]
    probs: list[float] = [1.0]
    for d in distributions:
        labels = labels + d.observables
        outcomes = [
            prev + out for prev in outcomes for out in d.outcomes
        ]
        probs = [
            p_prev * p for p_prev in probs for p in d.probabilities
        ]
    model = ProductModel(labels, tuple(outcomes), tuple(probs))
    # verify every input marginal is recovered
    offset = 0
    for d in distributions:
        k = len(d.observables)
        acc: dict[tuple[float, ...], float] = {}
        for out, p in zip(model.outcomes, model.probabilities):
            key = out[offset : offset + k]
            acc[key] = acc.get(key, 0.0) + p
        for out, p in zip(d.outcomes, d.probabilities):
            if abs(acc.get(out, 0.0) - p) > 1e-12:
                raise ParameterError(
                    f"marginal mismatch for arrangement {d.observables}"
                )
        offset += k
    return model


# --------------------------------------------------------------------------
# full report
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class ChshReport:
    """Everything the CHSH run produces, serializable as one record."""

    alpha: float
    omega: float
    times: tuple[float, float, float, float]
    correlations: tuple[tuple[float, float], tuple[float, float]]
    marginals: tuple[float, float, float, float]
    S: float
    classical_feasible: bool

    def __post_init__(self):
        if abs(self.alpha) > 1.0 + 1e-9:
            raise ParameterError("alpha must lie in [-1, 1]")
        E = np.asarray(self.correlations)
        if np.max(np.abs(E)) > 1.0 + 1e-9:
            raise ParameterError("correlations must lie in [-1, 1]")
        if np.max(np.abs(self.marginals)) > 1.0 + 1e-9:
            raise ParameterError("marginals must lie in [-1, 1]")
        expected = E[0, 0] + E[1, 1] + E[1, 0] - E[0, 1]
        if self.S != float(expected):
            raise ParameterError("S must equal E11 + E22 + E21 - E12 as computed")


def run_chsh(
    es: EigenSystem, f: Observable, times=None
) -> ChshReport:
    """Compute alpha, the correlation matrix at the four times, S, and the
    realizability verdict for the antisymmetric two-subsystem state."""
    omega = float(es.energies[1] - es.energies[0])
    if not omega > 0:
        raise ParameterError("level splitting must be positive")
    if times is None:
        times = paper_times(omega)
    a = alpha(es, f)
    E = chsh_correlations(a, omega, times)
    fvals = f(es.grid.points)
    diag0 = quadrature(es.eigenfunctions[0].values * fvals, es.eigenfunctions[0].values, grid=es.grid)
    diag1 = quadrature(es.eigenfunctions[1].values * fvals, es.eigenfunctions[1].values, grid=es.grid)
    marginal = 0.5 * (diag0 + diag1)
    marginals = (marginal, marginal, marginal, marginal)
    S = chsh_value(E)
    verdict = classical_realizability(E, marginals)
    return ChshReport(
        alpha=float(a),
        omega=omega,
        times=tuple(float(t) for t in times),
        correlations=((float(E[0, 0]), float(E[0, 1])), (float(E[1, 0]), float(E[1, 1]))),
        marginals=marginals,
        S=S,
        classical_feasible=verdict.feasible,
    )
