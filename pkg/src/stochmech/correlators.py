"""Multi-time position correlations under three theories.

* Quantum mechanics: Heisenberg-picture expectation on the composite
  stationary state; a finite double sum over terms with trigonometric
  time dependence.
* Bohm mechanics: trajectories of a real stationary state are constant,
  so every multi-time correlation equals the equal-time one.
* Nelson stochastic mechanics: the unique stationary Markov process has
  correlations generated by a positivity-preserving semigroup exp(-tT);
  conjugating by multiplication with |psi| turns T into the Hamiltonian
  with Dirichlet conditions on the nodal set, so two-time correlations
  reduce to sums of decaying exponentials with spectral rates.
"""

from __future__ import annotations

import math
import threading
from dataclasses import dataclass, field

import numpy as np
from scipy.interpolate import CubicSpline

from .channels import Channel, decompose
from .errors import (
    CompatibilityError,
    NumericError,
    ParameterError,
    SingularPointError,
    UnsupportedStateError,
)
from .spectral import (
    Grid,
    find_nodes,
    interval_dirichlet_modes,
    nodal_intervals,
    quadrature,
)
from .states import CompositeState, _amplitude

__all__ = [
    "Observable",
    "CorrelationSeries",
    "TrigDecomposition",
    "ModeExpansion",
    "CompareResult",
    "qm_multitime_correlation",
    "qm_two_time_series",
    "bohm_multitime_correlation",
    "bohm_velocity_field",
    "nelson_mode_expansion",
    "nelson_semigroup_correlation",
    "nelson_two_time_series",
    "compare_theories",
]

MODE_CAP = 200
DEFICIT_TOL = 1e-6
_IMAG_TOL = 1e-10


@dataclass(frozen=True)
class Observable:
    """Bounded-or-position function of one cluster coordinate.

    kinds: "position" (f(x) = x, unbounded), "sign", "indicator" of [a, b],
    and "tabulated" samples interpolated linearly.
    """

    kind: str
    cluster: int = 0
    a: float = 0.0
    b: float = 0.0
    samples: np.ndarray | None = None
    grid: Grid | None = None

    def __post_init__(self):
        if self.kind not in ("position", "sign", "indicator", "tabulated"):
            raise ParameterError(f"unknown observable kind {self.kind!r}")
        if self.cluster < 0:
            raise ParameterError("cluster index must be non-negative")
        if self.kind == "indicator" and not self.a < self.b:
            raise ParameterError("indicator needs a < b")
        if self.kind == "tabulated":
            if self.samples is None or self.grid is None:
                raise ParameterError("tabulated observable needs samples and grid")
            vals = np.array(self.samples, dtype=float)
            if not np.all(np.isfinite(vals)):
                raise ParameterError("tabulated observable must be finite")
            vals.setflags(write=False)
            object.__setattr__(self, "samples", vals)

    def __call__(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        if self.kind == "position":
            return x.copy()
        if self.kind == "sign":
            return np.sign(x)
        if self.kind == "indicator":
            return ((x >= self.a) & (x <= self.b)).astype(float)
        return np.interp(x, self.grid.points, self.samples)

    @property
    def is_bounded(self) -> bool:
        if self.kind == "position":
            return False
        if self.kind == "tabulated":
            return bool(np.max(np.abs(self.samples)) <= 1.0 + 1e-12)
        return True

    def key(self) -> tuple:
        if self.kind == "tabulated":
            return (self.kind, self.cluster, self.samples.tobytes(), self.grid)
        return (self.kind, self.cluster, self.a, self.b)


@dataclass(frozen=True)
class CorrelationSeries:
    """Correlation values over a strictly increasing list of time lags."""

    lags: tuple[float, ...]
    values: tuple[float, ...]
    method: str
    stderr: tuple[float, ...] | None = None

    def __post_init__(self):
        if self.method not in ("qm", "bohm", "nelson_spectral", "nelson_mc"):
            raise ParameterError(f"unknown method {self.method!r}")
        if len(self.lags) != len(self.values):
            raise ParameterError("lag/value length mismatch")
        if len(self.lags) == 0:
            raise ParameterError("series must hold at least one lag")
        if np.any(np.diff(self.lags) <= 0):
            raise ParameterError("lags must increase strictly")
        if (self.stderr is not None) != (self.method == "nelson_mc"):
            raise ParameterError("stderr is present exactly for nelson_mc series")
        if self.stderr is not None:
            if len(self.stderr) != len(self.lags):
                raise ParameterError("stderr length mismatch")
            if any(s < 0 for s in self.stderr):
                raise ParameterError("stderr entries must be non-negative")


@dataclass(frozen=True)
class TrigDecomposition:
    """Cosine decomposition sum_m C_m cos(w_m * lag) of a QM series."""

    frequencies: tuple[float, ...]
    coefficients: tuple[float, ...]

    def __call__(self, lag) -> np.ndarray:
        lag = np.asarray(lag, dtype=float)
        out = np.zeros_like(lag)
        for w, c in zip(self.frequencies, self.coefficients):
            out = out + c * np.cos(w * lag)
        return out


@dataclass(frozen=True)
class ModeExpansion:
    """Spectral data of the Nelson semigroup for one observable pair.

    value(t) = sum_n coefficients[n] * exp(-rates[n] * |t|); the rate-0
    sector is always present (the semigroup fixes constants), and
    ``weight`` holds the |psi| samples per channel realizing the unitary
    map onto the Dirichlet-restricted picture.
    """

    rates: tuple[float, ...]
    coefficients: tuple[float, ...]
    f_overlaps: tuple[float, ...]
    g_overlaps: tuple[float, ...]
    weight: tuple[np.ndarray, ...]
    truncation_tail: float

    def __post_init__(self):
        r = np.asarray(self.rates)
        if r.size == 0:
            raise ParameterError("mode expansion must hold at least one mode")
        if np.any(r < -1e-9):
            raise ParameterError("rates must be non-negative")
        if np.any(np.diff(r) < 0):
            raise ParameterError("rates must be non-decreasing")
        if abs(r[0]) > 1e-9:
            raise ParameterError("rate-0 sector missing from the expansion")
        if not (
            len(self.rates)
            == len(self.coefficients)
            == len(self.f_overlaps)
            == len(self.g_overlaps)
        ):
            raise ParameterError("mode arrays must share one length")

    def __call__(self, t) -> np.ndarray:
        tt = np.abs(np.asarray(t, dtype=float))
        rates = np.asarray(self.rates)
        coeffs = np.asarray(self.coefficients)
        return np.exp(-np.outer(tt, rates)) @ coeffs if tt.ndim else float(
            np.exp(-tt * rates) @ coeffs
        )


# --------------------------------------------------------------------------
# quantum backend
# --------------------------------------------------------------------------

def _matrix_elements(state: CompositeState, obs: Observable) -> np.ndarray:
    """M[s, p] = <psi_{k(i,s)} | f | psi_{k(i,p)}> on the observable's cluster."""
    es = state.clusters[obs.cluster]
    fvals = obs(es.grid.points)
    n_terms = len(state.terms)
    funcs = [es.eigenfunctions[idx[obs.cluster]].values for _, idx in state.terms]
    m = np.empty((n_terms, n_terms))
    for s in range(n_terms):
        for p in range(s, n_terms):
            m[s, p] = m[p, s] = float(es.grid.simpson @ (funcs[s] * fvals * funcs[p]))
    return m


def _check_distinct_clusters(observables) -> None:
    clusters = [o.cluster for o in observables]
    if len(set(clusters)) != len(clusters):
        raise CompatibilityError(
            "two observables address one cluster: positions of a single "
            "cluster at different times do not commute"
        )


def qm_multitime_correlation(state: CompositeState, observables, times) -> float:
    """Heisenberg-picture expectation of the product of the observables.

    The double sum over state terms carries phase factors with the
    per-cluster eigenvalue differences; clusters without an observable
    contribute Kronecker deltas through orthonormality.  The imaginary
    part must cancel for real coefficients and is asserted to.
    """
    observables = list(observables)
    times = [float(t) for t in times]
    if len(observables) != len(times):
        raise ParameterError("need one time per observable")
    if not observables:
        raise ParameterError("need at least one observable")
    _check_distinct_clusters(observables)
    for o in observables:
        if not 0 <= o.cluster < state.n_clusters:
            raise ParameterError(f"no cluster {o.cluster}")
    mats = {o.cluster: _matrix_elements(state, o) for o in observables}
    t_of = {o.cluster: t for o, t in zip(observables, times)}
    observed = set(mats)
    n_terms = len(state.terms)
    total = 0.0 + 0.0j
    for s in range(n_terms):
        cs, idx_s = state.terms[s]
        for p in range(n_terms):
            cp, idx_p = state.terms[p]
            if any(
                idx_s[i] != idx_p[i]
                for i in range(state.n_clusters)
                if i not in observed
            ):
                continue
            factor = cs * cp + 0.0j
            for i in observed:
                es = state.clusters[i]
                dlam = es.energies[idx_s[i]] - es.energies[idx_p[i]]
                factor *= mats[i][s, p] * np.exp(1j * dlam * t_of[i])
            total += factor
    if abs(total.imag) > _IMAG_TOL:
        raise NumericError(f"imaginary part {total.imag:.3e} did not cancel")
    return float(total.real)


def qm_two_time_series(
    state: CompositeState, f: Observable, g: Observable, lags
) -> tuple[CorrelationSeries, TrigDecomposition]:
    """Two-time series over lags plus its cosine decomposition.

    With all terms at one total energy the dependence is on the lag
    t_1 - t_2 alone, through frequencies that are eigenvalue differences
    on the first observable's cluster.
    """
    _check_distinct_clusters([f, g])
    lags = [float(t) for t in lags]
    if not lags:
        raise ParameterError("need at least one lag")
    mf = _matrix_elements(state, f)
    mg = _matrix_elements(state, g)
    es_f = state.clusters[f.cluster]
    n_terms = len(state.terms)
    buckets: dict[float, float] = {}
    for s in range(n_terms):
        cs, idx_s = state.terms[s]
        for p in range(n_terms):
            cp, idx_p = state.terms[p]
            if any(
                idx_s[i] != idx_p[i]
                for i in range(state.n_clusters)
                if i not in (f.cluster, g.cluster)
            ):
                continue
            b = cs * cp * mf[s, p] * mg[s, p]
            w = round(
                abs(es_f.energies[idx_s[f.cluster]] - es_f.energies[idx_p[f.cluster]]), 9
            )
            buckets[w] = buckets.get(w, 0.0) + b
    freqs = tuple(sorted(buckets))
    decomp = TrigDecomposition(freqs, tuple(buckets[w] for w in freqs))
    values = decomp(np.asarray(lags))
    series = CorrelationSeries(tuple(lags), tuple(float(v) for v in values), "qm")
    return series, decomp


# --------------------------------------------------------------------------
# Bohm backend
# --------------------------------------------------------------------------

def bohm_multitime_correlation(state: CompositeState, observables, times) -> float:
    """Multi-time correlation under Bohm dynamics.

    Real stationary states have vanishing velocity field, so trajectories
    are constant and the joint distribution at any times equals the one
    at time zero; the times argument is ignored by construction.
    """
    observables = list(observables)
    if len(observables) != len(list(times)):
        raise ParameterError("need one time per observable")
    return qm_multitime_correlation(state, observables, [0.0] * len(observables))


def bohm_velocity_field(state: CompositeState, points) -> np.ndarray:
    """Velocity field Im d/dx_i log psi at configuration points.

    Identically zero for the real states this package builds; computed by
    centered differences so the claim is testable rather than assumed.
    """
    pts = np.asarray(points, dtype=float)
    amp = _amplitude(state, pts)
    scale = sum(
        abs(c) * np.prod([
            float(np.max(np.abs(state.clusters[i].eigenfunctions[k].values)))
            for i, k in enumerate(idx)
        ])
        for c, idx in state.terms
    )
    if np.any(np.abs(amp) <= 1e-8 * scale):
        raise SingularPointError("velocity field evaluated at a nodal point")
    out = np.zeros(pts.shape)
    for i in range(state.n_clusters):
        delta = state.clusters[i].grid.h / 2.0
        up = pts.copy()
        up[..., i] += delta
        dn = pts.copy()
        dn[..., i] -= delta
        deriv = (_amplitude(state, up) - _amplitude(state, dn)) / (2.0 * delta)
        ratio = deriv.astype(complex) / amp.astype(complex)
        out[..., i] = ratio.imag
    return out


# --------------------------------------------------------------------------
# Nelson spectral backend
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class _ChannelModes:
    rates: np.ndarray
    f_overlaps: np.ndarray
    g_overlaps: np.ndarray
    weight: np.ndarray
    deficit: float


def _channel_autocorrelation_modes(
    channel: Channel,
    f_fn,
    g_fn,
    deficit_tol: float = DEFICIT_TOL,
    cap: int = MODE_CAP,
) -> _ChannelModes:
    """Expansion of E[f(u(t)) g(u(0))] for one stationary 1D channel.

    Multiplying by |psi| maps the generator onto the channel Hamiltonian
    with Dirichlet conditions at the nodes of the state factor, so each
    nodal subinterval is diagonalized independently; the per-interval
    restriction of |psi| itself is kept as the exact rate-0 mode and the
    finite-difference modes above it are orthogonalized against it.
    """
    psi = channel.factor
    grid = psi.grid
    spline = CubicSpline(grid.points, psi.values)
    nodes = find_nodes(psi)
    intervals = nodal_intervals(grid, nodes)
    per_cap = max(2, cap // len(intervals))
    h_target = grid.h / 2.0

    n_modes = min(24, per_cap)
    while True:
        pieces = []  # (h, weight_interior, modes_matrix, energies)
        for a, b in intervals:
            modes = interval_dirichlet_modes(channel.potential, a, b, h_target, n_modes)
            w = np.abs(spline(modes.points[1:-1]))
            pieces.append((modes.h, w, modes.values[1:-1, :], modes.energies))
        result = _assemble_channel_modes(pieces, intervals, f_fn, g_fn, psi)
        if result.deficit <= deficit_tol or n_modes >= per_cap:
            return result
        n_modes = min(per_cap, n_modes * 4)


def _assemble_channel_modes(pieces, intervals, f_fn, g_fn, psi) -> _ChannelModes:
    # Global h-dot normalization of |psi| over the partitioned grid makes
    # the constant observable map to exactly 1.
    total = math.fsum(h * float(w @ w) for h, w, _, _ in pieces)
    scale = math.sqrt(total)

    rates_all: list[float] = []
    f_all: list[float] = []
    g_all: list[float] = []
    deficit_num_f = 0.0
    deficit_num_g = 0.0
    norm_f = 0.0
    norm_g = 0.0
    for (h, w_raw, mat, energies), (a, b) in zip(pieces, intervals):
        w = w_raw / scale
        ground = w / math.sqrt(h * float(w @ w))
        basis = [ground]
        rates = [0.0]
        e0 = float(energies[0])
        for j in range(1, energies.size):
            v = mat[:, j]
            v = v - (h * float(ground @ v)) * ground
            nrm = math.sqrt(h * float(v @ v))
            if nrm < 1e-12:
                continue
            basis.append(v / nrm)
            rates.append(float(energies[j]) - e0)
        xs_interior = np.linspace(a, b, w.size + 2)[1:-1]
        wf = f_fn(xs_interior) * w
        wg = g_fn(xs_interior) * w
        norm_f += h * float(wf @ wf)
        norm_g += h * float(wg @ wg)
        cov_f = 0.0
        cov_g = 0.0
        for vec, rate in zip(basis, rates):
            of = h * float(vec @ wf)
            og = h * float(vec @ wg)
            rates_all.append(rate)
            f_all.append(of)
            g_all.append(og)
            cov_f += of * of
            cov_g += og * og
        deficit_num_f += max(0.0, h * float(wf @ wf) - cov_f)
        deficit_num_g += max(0.0, h * float(wg @ wg) - cov_g)

    deficit = 0.0
    if norm_f > 0:
        deficit = max(deficit, deficit_num_f / norm_f)
    if norm_g > 0:
        deficit = max(deficit, deficit_num_g / norm_g)
    order = np.argsort(rates_all, kind="stable")
    return _ChannelModes(
        rates=np.asarray(rates_all)[order],
        f_overlaps=np.asarray(f_all)[order],
        g_overlaps=np.asarray(g_all)[order],
        weight=np.abs(psi.values),
        deficit=float(deficit),
    )


def _channel_mean(channel: Channel, fn) -> float:
    psi = channel.factor
    return quadrature(fn(psi.grid.points), psi.values, psi.values, grid=psi.grid)


def _rotated_kind(state: CompositeState, obs: Observable) -> tuple[str, float]:
    """Classify an observable on the rotated two-cluster family.

    Rotated channels mix the cluster coordinates, so only functions that
    survive the mixing are exactly expandable: constants (trivially) and
    the coordinate itself (linear in the channel coordinates).
    """
    vals = obs(state.clusters[obs.cluster].grid.points)
    if float(np.max(vals) - np.min(vals)) == 0.0:
        return "const", float(vals[0])
    if obs.kind == "position":
        return "position", 0.0
    raise UnsupportedStateError(
        "rotated two-cluster states support position and constant "
        "observables only; use the Monte Carlo backend otherwise"
    )


_expansion_cache: dict[tuple, tuple[CompositeState, ModeExpansion]] = {}
_cache_lock = threading.Lock()


def nelson_mode_expansion(
    state: CompositeState, f: Observable, g: Observable
) -> ModeExpansion:
    """Decay rates and overlap coefficients of the Nelson correlator.

    Supported states are those with a channel decomposition: products of
    1D clusters, and real two-term exchange superpositions of identical
    harmonic clusters (position observables only in the rotated case).
    Expansions are cached per (state, f, g).
    """
    key = (id(state), f.key(), g.key())
    with _cache_lock:
        hit = _expansion_cache.get(key)
    if hit is not None and hit[0] is state:
        return hit[1]
    expansion = _build_expansion(state, f, g)
    with _cache_lock:
        _expansion_cache[key] = (state, expansion)
    return expansion


def _build_expansion(state: CompositeState, f: Observable, g: Observable) -> ModeExpansion:
    for o in (f, g):
        if not 0 <= o.cluster < state.n_clusters:
            raise ParameterError(f"no cluster {o.cluster}")
    dec = decompose(state)
    rotated = not np.allclose(dec.rotation, np.eye(dec.n_channels))
    modes: list[tuple[float, float, float, float]] = []  # rate, coeff, f_ov, g_ov
    tail = 0.0
    if not rotated:
        if f.cluster == g.cluster:
            ch = dec.channels[f.cluster]
            cm = _channel_autocorrelation_modes(ch, f, g)
            tail = cm.deficit
            for r, of, og in zip(cm.rates, cm.f_overlaps, cm.g_overlaps):
                modes.append((float(r), float(of * og), float(of), float(og)))
            weight = (cm.weight,)
        else:
            mean_f = _channel_mean(dec.channels[f.cluster], f)
            mean_g = _channel_mean(dec.channels[g.cluster], g)
            modes.append((0.0, mean_f * mean_g, mean_f, mean_g))
            weight = (
                np.abs(dec.channels[f.cluster].factor.values),
                np.abs(dec.channels[g.cluster].factor.values),
            )
    else:
        kind_f, const_f = _rotated_kind(state, f)
        kind_g, const_g = _rotated_kind(state, g)
        weight = tuple(np.abs(ch.factor.values) for ch in dec.channels)
        if kind_f == "const" and kind_g == "const":
            modes.append((0.0, const_f * const_g, const_f, const_g))
        else:
            R = dec.rotation
            means = [
                _channel_mean(ch, lambda x: np.asarray(x, dtype=float))
                for ch in dec.channels
            ]
            cluster_mean = lambda j: sum(
                R[j, c] * means[c] for c in range(dec.n_channels)
            )
            if "const" in (kind_f, kind_g):
                # one side constant: the correlation is a time-independent mean
                coeff = (
                    const_f * cluster_mean(g.cluster)
                    if kind_f == "const"
                    else const_g * cluster_mean(f.cluster)
                )
                modes.append((0.0, float(coeff), float(coeff), 1.0))
            else:
                chan_modes = []
                for ch in dec.channels:
                    cm = _channel_autocorrelation_modes(ch, lambda x: x, lambda x: x)
                    chan_modes.append(cm)
                    tail = max(tail, cm.deficit)
                fi, gj = f.cluster, g.cluster
                for c, cm in enumerate(chan_modes):
                    wgt = R[fi, c] * R[gj, c]
                    for r, of, og in zip(cm.rates, cm.f_overlaps, cm.g_overlaps):
                        modes.append((float(r), float(wgt * of * og), float(of), float(og)))
                cross = sum(
                    R[fi, c] * R[gj, cp] * means[c] * means[cp]
                    for c in range(dec.n_channels)
                    for cp in range(dec.n_channels)
                    if c != cp
                )
                modes.append((0.0, float(cross), float(cross), 1.0))
    modes.sort(key=lambda m: m[0])
    if abs(modes[0][0]) > 1e-9:
        modes.insert(0, (0.0, 0.0, 0.0, 0.0))
    rates = tuple(max(0.0, m[0]) for m in modes)
    return ModeExpansion(
        rates=rates,
        coefficients=tuple(m[1] for m in modes),
        f_overlaps=tuple(m[2] for m in modes),
        g_overlaps=tuple(m[3] for m in modes),
        weight=weight,
        truncation_tail=tail,
    )


def nelson_semigroup_correlation(
    state: CompositeState, f: Observable, g: Observable, t: float
) -> float:
    """E[f(t) g(0)] under the stationary Nelson process, spectrally.

    Negative lags are folded by time-reflection symmetry of the process.
    """
    return float(nelson_mode_expansion(state, f, g)(abs(float(t))))


def nelson_two_time_series(
    state: CompositeState, f: Observable, g: Observable, lags
) -> CorrelationSeries:
    lags = [float(t) for t in lags]
    exp = nelson_mode_expansion(state, f, g)
    vals = [float(exp(abs(t))) for t in lags]
    return CorrelationSeries(tuple(lags), tuple(vals), "nelson_spectral")


# --------------------------------------------------------------------------
# comparison
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class CompareResult:
    qm: CorrelationSeries
    bohm: CorrelationSeries
    nelson: CorrelationSeries | None
    equal_time_max_dev: float
    max_abs_dev_qm_bohm: float
    max_abs_dev_qm_nelson: float | None
    nelson_warning: str | None = None


def compare_theories(
    state: CompositeState, f: Observable, g: Observable, lags
) -> CompareResult:
    """QM, Bohm, and spectral Nelson series side by side.

    Raises NumericError when the three theories fail to agree at equal
    times within 1e-6 (they must: the stationary density is shared).
    """
    lags = [float(t) for t in lags]
    qm, _ = qm_two_time_series(state, f, g, lags)
    bohm_value = bohm_multitime_correlation(state, [f, g], [0.0, 0.0])
    bohm = CorrelationSeries(
        tuple(lags), tuple(bohm_value for _ in lags), "bohm"
    )
    qm0 = qm_multitime_correlation(state, [f, g], [0.0, 0.0])
    nelson = None
    warning = None
    nelson_dev = None
    equal_dev = abs(qm0 - bohm_value)
    try:
        expansion = nelson_mode_expansion(state, f, g)
    except UnsupportedStateError as exc:
        warning = str(exc)
    else:
        nelson = CorrelationSeries(
            tuple(lags),
            tuple(float(expansion(abs(t))) for t in lags),
            "nelson_spectral",
        )
        equal_dev = max(equal_dev, abs(float(expansion(0.0)) - qm0))
        nelson_dev = float(
            np.max(np.abs(np.asarray(nelson.values) - np.asarray(qm.values)))
        )
    if equal_dev > 1e-6:
        raise NumericError(
            f"theories disagree at equal times by {equal_dev:.3e}"
        )
    return CompareResult(
        qm=qm,
        bohm=bohm,
        nelson=nelson,
        equal_time_max_dev=float(equal_dev),
        max_abs_dev_qm_bohm=float(
            np.max(np.abs(np.asarray(bohm.values) - np.asarray(qm.values)))
        ),
        max_abs_dev_qm_nelson=nelson_dev,
        nelson_warning=warning,
    )
