"""Stationary states of composite non-interacting systems.

A composite state is a normalized sum of product terms, one eigenfunction
factor per cluster, with all terms sharing the same total energy.  Only
real coefficients are admitted: that keeps the probability-current
velocity field identically zero and is all the worked systems need.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from itertools import combinations

import numpy as np

from .errors import DomainError, InconsistentStateError, ParameterError
from .spectral import EigenSystem

__all__ = [
    "CompositeState",
    "build_composite_state",
    "density",
    "is_product",
    "marginal_density",
]

ENERGY_TOL = 1e-6
_RANK_TOL = 1e-12


@dataclass(frozen=True)
class CompositeState:
    """Sum of product eigenfunction terms with a shared total energy."""

    clusters: tuple[EigenSystem, ...]
    terms: tuple[tuple[float, tuple[int, ...]], ...]
    energy: float

    @property
    def n_clusters(self) -> int:
        return len(self.clusters)

    @property
    def coefficients(self) -> np.ndarray:
        return np.array([c for c, _ in self.terms])

    @property
    def indices(self) -> list[tuple[int, ...]]:
        return [idx for _, idx in self.terms]


def build_composite_state(
    clusters,
    terms,
    energy_tol: float = ENERGY_TOL,
) -> CompositeState:
    """Validate and normalize a composite stationary state.

    ``terms`` is a list of (coefficient, index tuple) pairs; coefficients
    are renormalized so their squares sum to one, and every term must
    carry the same total energy (sum of its per-cluster eigenvalues).
    """
    clusters = tuple(clusters)
    if not clusters:
        raise ParameterError("at least one cluster is required")
    if not terms:
        raise ParameterError("at least one term is required")
    coeffs = []
    index_rows = []
    for c, idx in terms:
        if isinstance(c, complex):
            if c.imag != 0.0:
                raise ParameterError("complex coefficients are not supported")
            c = c.real
        coeffs.append(float(c))
        idx = tuple(int(i) for i in idx)
        if len(idx) != len(clusters):
            raise ParameterError(
                f"index tuple {idx} does not match {len(clusters)} clusters"
            )
        for i, k in enumerate(idx):
            if not 0 <= k < clusters[i].k:
                raise ParameterError(
                    f"cluster {i} has no eigenstate {k} (only {clusters[i].k} solved)"
                )
        index_rows.append(idx)
    if len(set(index_rows)) != len(index_rows):
        raise ParameterError("duplicate index tuples across terms")
    coeffs = np.array(coeffs)
    norm = float(np.sum(coeffs**2))
    if norm <= 0.0:
        raise ParameterError("coefficients must not all vanish")
    coeffs = coeffs / math.sqrt(norm)
    term_energies = [
        sum(clusters[i].energies[k] for i, k in enumerate(idx)) for idx in index_rows
    ]
    energy = term_energies[0]
    for idx, e in zip(index_rows, term_energies):
        if abs(e - energy) > energy_tol:
            raise InconsistentStateError(
                f"term {idx} has energy {e!r}, expected {energy!r} "
                f"(all terms must share the total energy)"
            )
    return CompositeState(
        clusters,
        tuple((float(c), idx) for c, idx in zip(coeffs, index_rows)),
        float(energy),
    )


def _amplitude(state: CompositeState, points: np.ndarray) -> np.ndarray:
    """Wavefunction value at configuration points, shape (..., n_clusters)."""
    pts = np.asarray(points, dtype=float)
    if pts.shape[-1] != state.n_clusters:
        raise ParameterError(
            f"points must have last dimension {state.n_clusters}, got {pts.shape}"
        )
    for i, es in enumerate(state.clusters):
        xi = pts[..., i]
        if np.any(xi < es.grid.x_min) or np.any(xi > es.grid.x_max):
            raise DomainError(f"cluster {i} point outside grid")
    amp = np.zeros(pts.shape[:-1])
    for c, idx in state.terms:
        term = np.full(pts.shape[:-1], c)
        for i, k in enumerate(idx):
            f = state.clusters[i].eigenfunctions[k]
            term = term * f(pts[..., i])
        amp += term
    return amp


def density(state: CompositeState, points) -> np.ndarray:
    """|psi|^2 at per-cluster position tuples (linear interpolation)."""
    amp = _amplitude(state, points)
    return amp * amp


def marginal_density(state: CompositeState, cluster: int) -> np.ndarray:
    """Single-cluster marginal of |psi|^2 on that cluster's grid.

    Integrating out the other clusters leaves, by orthonormality, only
    term pairs that agree on every other cluster index.
    """
    if not 0 <= cluster < state.n_clusters:
        raise ParameterError(f"no cluster {cluster}")
    es = state.clusters[cluster]
    out = np.zeros(es.grid.n)
    for (cs, idx_s), (cp, idx_p) in (
        (a, b) for a in state.terms for b in state.terms
    ):
        if any(
            idx_s[i] != idx_p[i] for i in range(state.n_clusters) if i != cluster
        ):
            continue
        out += (
            cs
            * cp
            * es.eigenfunctions[idx_s[cluster]].values
            * es.eigenfunctions[idx_p[cluster]].values
        )
    return out


def is_product(state: CompositeState) -> bool:
    """True iff the coefficient tensor factorizes over the clusters.

    Single-term states are products by construction.  Otherwise the dense
    coefficient tensor is formed over the observed index ranges and every
    mode unfolding is tested for vanishing 2x2 minors.
    """
    if len(state.terms) == 1:
        return True
    observed = [sorted({idx[i] for idx in state.indices}) for i in range(state.n_clusters)]
    shape = tuple(len(o) for o in observed)
    lookup = [{k: pos for pos, k in enumerate(obs)} for obs in observed]
    tensor = np.zeros(shape)
    for c, idx in state.terms:
        tensor[tuple(lookup[i][k] for i, k in enumerate(idx))] = c
    for mode in range(state.n_clusters):
        mat = np.moveaxis(tensor, mode, 0).reshape(shape[mode], -1)
        for (r1, r2) in combinations(range(mat.shape[0]), 2):
            minors = np.outer(mat[r1], mat[r2])
            if np.max(np.abs(minors - minors.T)) > _RANK_TOL:
                return False
    return True
