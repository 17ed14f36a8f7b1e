"""1D Schrödinger eigenproblems on uniform grids.

Analytic eigensystems for the harmonic oscillator and the infinite well,
a second-order finite-difference solver for general bounded-below
potentials (double wells, tabulated data), node location, and
node-restricted eigensystems where the operator carries Dirichlet
conditions on the zeros of a given eigenfunction.  Everything is real:
eigenfunctions are sampled on uniform grids and inner products are
composite-Simpson quadratures.

Units are hbar = m = 1 throughout.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence, Union

import numpy as np
from scipy.interpolate import CubicSpline
from scipy.linalg import eigh_tridiagonal

from .errors import (
    DomainTruncationError,
    GridMismatchError,
    NodeDetectionError,
    NumericError,
    ParameterError,
)

__all__ = [
    "Grid",
    "HarmonicPotential",
    "InfiniteWellPotential",
    "DoubleWellPotential",
    "TabulatedPotential",
    "Potential",
    "Wavefunction",
    "EigenSystem",
    "quadrature",
    "simpson_weights",
    "harmonic_eigensystem",
    "box_eigensystem",
    "solve_eigensystem",
    "find_nodes",
    "dirichlet_restricted_eigensystem",
    "default_grid",
]

# Default discretization for unbounded potentials: ten Gaussian length
# scales on each side, 2000 points.
DEFAULT_SPAN_SIGMAS = 10.0
DEFAULT_GRID_POINTS = 2000
BOX_DEFAULT_POINTS = 2001  # odd count puts x = 0 on a Simpson panel boundary

_ORTHO_TOL = 1e-6
_NORM_TOL = 1e-8
_PARITY_TOL = 1e-10
_SIGN_SCALE = 1e-12


@dataclass(frozen=True)
class Grid:
    """Uniform grid of n points on [x_min, x_max]."""

    x_min: float
    x_max: float
    n: int

    def __post_init__(self):
        if self.n < 3:
            raise ParameterError(f"grid needs at least 3 points, got n={self.n}")
        if not (self.x_min < self.x_max):
            raise ParameterError(
                f"grid requires x_min < x_max, got [{self.x_min}, {self.x_max}]"
            )
        pts = np.linspace(self.x_min, self.x_max, self.n)
        pts.setflags(write=False)
        object.__setattr__(self, "_points", pts)
        w = simpson_weights(self.n, self.h)
        w.setflags(write=False)
        object.__setattr__(self, "_weights", w)

    @property
    def h(self) -> float:
        return (self.x_max - self.x_min) / (self.n - 1)

    @property
    def points(self) -> np.ndarray:
        return self._points

    @property
    def simpson(self) -> np.ndarray:
        """Composite-Simpson quadrature weights for this grid."""
        return self._weights

    @property
    def symmetric(self) -> bool:
        return abs(self.x_min + self.x_max) <= 1e-12 * (self.x_max - self.x_min)


def simpson_weights(n: int, h: float) -> np.ndarray:
    """Composite Simpson weights for n uniform points with spacing h.

    With an odd number of segments the last interval is handled by the
    trapezoid rule appended to Simpson on the leading even block.
    """
    if n < 3:
        raise ParameterError("Simpson weights need n >= 3")
    w = np.zeros(n)
    m = n if (n - 1) % 2 == 0 else n - 1
    w[0:m:2] += h / 3.0
    w[1:m:2] += 4.0 * h / 3.0
    w[2:m - 1:2] += h / 3.0  # interior panel joints count twice
    if m != n:
        w[n - 2] += h / 2.0
        w[n - 1] += h / 2.0
    return w


def _as_samples(obj, grid: Grid | None) -> tuple[np.ndarray, Grid | None]:
    if isinstance(obj, Wavefunction):
        return obj.values, obj.grid
    return np.asarray(obj, dtype=float), grid


def quadrature(f, g=None, weight=None, grid: Grid | None = None) -> float:
    """Composite-Simpson value of the inner product integral of f*g*weight.

    Each argument may be a Wavefunction or a plain sample array; all must
    live on the same grid.  f alone integrates f itself.
    """
    resolved: Grid | None = grid
    arrays = []
    for obj in (f, g, weight):
        if obj is None:
            continue
        vals, g_of = _as_samples(obj, None)
        arrays.append(vals)
        if g_of is not None:
            if resolved is not None and g_of != resolved:
                raise GridMismatchError("samples live on different grids")
            resolved = g_of
    if resolved is None:
        raise GridMismatchError("no grid given and none of the inputs carries one")
    for vals in arrays:
        if vals.shape != (resolved.n,):
            raise GridMismatchError(
                f"sample length {vals.shape} does not match grid size {resolved.n}"
            )
    prod = arrays[0].copy()
    for vals in arrays[1:]:
        prod *= vals
    return float(resolved.simpson @ prod)


@dataclass(frozen=True)
class Wavefunction:
    """Real wavefunction sampled on a grid, unit L2 norm under Simpson."""

    grid: Grid
    values: np.ndarray
    parity: str | None = None  # "even", "odd" or None

    def __post_init__(self):
        vals = np.array(self.values, dtype=float)
        if vals.shape != (self.grid.n,):
            raise ParameterError("wavefunction samples do not match the grid")
        if not np.all(np.isfinite(vals)):
            raise ParameterError("wavefunction samples must be finite")
        vals.setflags(write=False)
        object.__setattr__(self, "values", vals)
        norm = float(self.grid.simpson @ (vals * vals))
        if abs(norm - 1.0) > _NORM_TOL:
            raise ParameterError(f"wavefunction not normalized: <f,f> = {norm!r}")
        if self.parity not in (None, "even", "odd"):
            raise ParameterError(f"unknown parity {self.parity!r}")
        if self.parity is not None and self.grid.symmetric:
            mirrored = vals[::-1]
            target = mirrored if self.parity == "even" else -mirrored
            tol = _PARITY_TOL * max(1.0, float(np.max(np.abs(vals))))
            if np.max(np.abs(vals - target)) > tol:
                raise ParameterError(f"declared parity {self.parity} violated")

    @classmethod
    def normalized(cls, grid: Grid, values, parity: str | None = None) -> "Wavefunction":
        vals = np.asarray(values, dtype=float)
        norm2 = float(grid.simpson @ (vals * vals))
        if norm2 <= 0.0 or not math.isfinite(norm2):
            raise ParameterError("cannot normalize samples with non-positive norm")
        return cls(grid, vals / math.sqrt(norm2), parity)

    def __call__(self, x) -> np.ndarray:
        return np.interp(x, self.grid.points, self.values)


# --------------------------------------------------------------------------
# potentials
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class HarmonicPotential:
    """V(x) = omega^2 x^2 / 2."""

    omega: float

    def __post_init__(self):
        if not self.omega > 0:
            raise ParameterError(f"harmonic potential needs omega > 0, got {self.omega}")

    def sample(self, x: np.ndarray) -> np.ndarray:
        return 0.5 * self.omega**2 * np.asarray(x, dtype=float) ** 2

    @property
    def symmetric(self) -> bool:
        return True


@dataclass(frozen=True)
class InfiniteWellPotential:
    """Hard-wall box on [-L, L]; V = 0 inside, infinite outside."""

    half_width: float

    def __post_init__(self):
        if not self.half_width > 0:
            raise ParameterError("infinite well needs half_width > 0")

    def sample(self, x: np.ndarray) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        L = self.half_width
        if np.any(x < -L - 1e-12) or np.any(x > L + 1e-12):
            raise ParameterError("infinite well sampled outside [-L, L]")
        return np.zeros_like(x)

    @property
    def symmetric(self) -> bool:
        return True


@dataclass(frozen=True)
class DoubleWellPotential:
    """Quartic double well V(x) = h (x^2 - w^2)^2 / w^4, minima at +/- w."""

    barrier_height: float
    well_separation: float

    def __post_init__(self):
        if not (self.barrier_height > 0 and self.well_separation > 0):
            raise ParameterError("double well needs positive height and separation")

    def sample(self, x: np.ndarray) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        w = self.well_separation
        return self.barrier_height * (x * x - w * w) ** 2 / w**4

    @property
    def symmetric(self) -> bool:
        return True

    @property
    def well_frequency(self) -> float:
        """Curvature frequency at each minimum, sqrt(V'')."""
        return math.sqrt(8.0 * self.barrier_height) / self.well_separation


@dataclass(frozen=True)
class TabulatedPotential:
    """Potential given by finite samples on a grid, linearly interpolated."""

    grid: Grid
    values: np.ndarray

    def __post_init__(self):
        vals = np.array(self.values, dtype=float)
        if vals.shape != (self.grid.n,):
            raise ParameterError("tabulated potential samples do not match the grid")
        if not np.all(np.isfinite(vals)):
            raise ParameterError("tabulated potential must be finite")
        vals.setflags(write=False)
        object.__setattr__(self, "values", vals)

    def sample(self, x: np.ndarray) -> np.ndarray:
        return np.interp(np.asarray(x, dtype=float), self.grid.points, self.values)

    @property
    def symmetric(self) -> bool:
        if not self.grid.symmetric:
            return False
        scale = max(1.0, float(np.max(np.abs(self.values))))
        return bool(np.max(np.abs(self.values - self.values[::-1])) <= 1e-9 * scale)


Potential = Union[
    HarmonicPotential, InfiniteWellPotential, DoubleWellPotential, TabulatedPotential
]


def default_grid(potential: Potential, n: int | None = None) -> Grid:
    """A grid wide enough that bound-state tails are negligible."""
    if isinstance(potential, HarmonicPotential):
        span = DEFAULT_SPAN_SIGMAS / math.sqrt(potential.omega)
        return Grid(-span, span, n or DEFAULT_GRID_POINTS)
    if isinstance(potential, InfiniteWellPotential):
        L = potential.half_width
        return Grid(-L, L, n or BOX_DEFAULT_POINTS)
    if isinstance(potential, DoubleWellPotential):
        pad = max(2.0 / math.sqrt(potential.well_frequency) * 4.0, 1.0)
        span = potential.well_separation + pad
        return Grid(-span, span, n or DEFAULT_GRID_POINTS)
    if isinstance(potential, TabulatedPotential):
        if n is None or n == potential.grid.n:
            return potential.grid
        return Grid(potential.grid.x_min, potential.grid.x_max, n)
    raise ParameterError(f"unknown potential {potential!r}")


# --------------------------------------------------------------------------
# eigensystems
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class EigenSystem:
    """Ordered low-lying spectrum of a 1D Schrödinger operator on a grid.

    ``boundary`` is "whole_line" for the plain operator and
    "dirichlet_at_nodes" when the functions additionally vanish on the
    recorded node set of a reference state.  Node-restricted spectra may
    carry degenerate pairs; whole-line spectra must be strictly ordered.
    """

    grid: Grid
    energies: tuple[float, ...]
    eigenfunctions: tuple[Wavefunction, ...]
    boundary: str = "whole_line"
    nodes: tuple[float, ...] = ()
    potential: Potential | None = None

    def __post_init__(self):
        if self.boundary not in ("whole_line", "dirichlet_at_nodes"):
            raise ParameterError(f"unknown boundary tag {self.boundary!r}")
        if len(self.energies) != len(self.eigenfunctions):
            raise ParameterError("energy / eigenfunction count mismatch")
        if not self.energies:
            raise ParameterError("eigensystem must hold at least one state")
        diffs = np.diff(self.energies)
        if self.boundary == "whole_line":
            if np.any(diffs <= 0):
                raise ParameterError("whole-line energies must increase strictly")
        elif np.any(diffs < -1e-9 * max(1.0, abs(self.energies[-1]))):
            raise ParameterError("energies must be non-decreasing")
        for f in self.eigenfunctions:
            if f.grid != self.grid:
                raise GridMismatchError("eigenfunction grid differs from system grid")
        gram = self.gram()
        k = len(self.energies)
        if np.max(np.abs(np.diag(gram) - 1.0)) > _NORM_TOL:
            raise ParameterError("eigenfunctions are not unit-normalized")
        off = gram - np.diag(np.diag(gram))
        if k > 1 and np.max(np.abs(off)) > _ORTHO_TOL:
            raise ParameterError(
                f"eigenfunctions not orthogonal: max overlap {np.max(np.abs(off)):.3e}"
            )

    def gram(self) -> np.ndarray:
        """Matrix of pairwise Simpson inner products."""
        mat = np.vstack([f.values for f in self.eigenfunctions])
        return (mat * self.grid.simpson) @ mat.T

    @property
    def k(self) -> int:
        return len(self.energies)


def _hermite_functions(omega: float, n_modes: int, x: np.ndarray) -> np.ndarray:
    """Normalized oscillator eigenfunctions via the stable three-term recurrence."""
    u = math.sqrt(omega) * np.asarray(x, dtype=float)
    out = np.empty((n_modes, u.size))
    phi_prev = (omega / math.pi) ** 0.25 * np.exp(-0.5 * u * u)
    out[0] = phi_prev
    if n_modes == 1:
        return out
    phi = math.sqrt(2.0) * u * phi_prev
    out[1] = phi
    for n in range(1, n_modes - 1):
        phi, phi_prev = (
            math.sqrt(2.0 / (n + 1)) * u * phi - math.sqrt(n / (n + 1)) * phi_prev,
            phi,
        )
        out[n + 1] = phi
    return out


def harmonic_eigensystem(omega: float, k: int, grid: Grid | None = None) -> EigenSystem:
    """Analytic oscillator eigensystem sampled on the grid.

    Energies are (n + 1/2) omega exactly; eigenfunctions are renormalized
    on the grid after sampling.  Raises DomainTruncationError when the
    grid clips more than 1e-10 of any requested state's probability mass.
    """
    if not omega > 0:
        raise ParameterError("omega must be positive")
    if k < 1:
        raise ParameterError("k must be at least 1")
    pot = HarmonicPotential(omega)
    if grid is None:
        grid = default_grid(pot)
    reach = 8.0 / math.sqrt(omega)
    if grid.x_min > -reach or grid.x_max < reach:
        raise ParameterError(
            f"grid [{grid.x_min}, {grid.x_max}] narrower than +/-{reach:.3f}"
        )
    raw = _hermite_functions(omega, k, grid.points)
    funcs = []
    for n in range(k):
        inside = float(grid.simpson @ (raw[n] * raw[n]))
        if 1.0 - inside > 1e-10:
            raise DomainTruncationError(
                f"mode {n}: tail mass {1.0 - inside:.2e} outside the grid"
            )
        funcs.append(
            Wavefunction.normalized(grid, raw[n], parity="even" if n % 2 == 0 else "odd")
        )
    energies = tuple((n + 0.5) * omega for n in range(k))
    return EigenSystem(grid, energies, tuple(funcs), potential=pot)


def box_eigensystem(L: float, k: int, grid: Grid | None = None) -> EigenSystem:
    """Infinite-well eigensystem on [-L, L] with Dirichlet walls.

    E_n = pi^2 (n+1)^2 / (8 L^2); even modes are cosines, odd modes sines,
    zero outside the well.
    """
    if not L > 0:
        raise ParameterError("half-width L must be positive")
    if k < 1:
        raise ParameterError("k must be at least 1")
    pot = InfiniteWellPotential(L)
    if grid is None:
        grid = default_grid(pot)
    if grid.x_min > -L + 1e-12 or grid.x_max < L - 1e-12:
        raise ParameterError("grid must cover the well [-L, L]")
    inside = (grid.points >= -L) & (grid.points <= L)
    pts_inside = int(np.count_nonzero(inside))
    if k + 1 > pts_inside // 8:
        raise ParameterError(
            f"k={k} exceeds the mode count resolvable on {pts_inside} points"
        )
    x = grid.points
    funcs = []
    energies = []
    for n in range(k):
        arg = (n + 1) * math.pi * x / (2.0 * L)
        vals = np.where(inside, np.cos(arg) if n % 2 == 0 else np.sin(arg), 0.0)
        funcs.append(
            Wavefunction.normalized(grid, vals, parity="even" if n % 2 == 0 else "odd")
        )
        energies.append(math.pi**2 * (n + 1) ** 2 / (8.0 * L**2))
    return EigenSystem(grid, tuple(energies), tuple(funcs), potential=pot)


def _fix_sign(values: np.ndarray) -> np.ndarray:
    """Orient so the last value exceeding noise level is positive.

    Matches the textbook convention for the analytic families (positive
    leading Hermite coefficient, sin/cos positive near the right wall),
    which keeps overlap coefficients reproducible across solvers.
    """
    scale = float(np.max(np.abs(values)))
    if scale == 0.0:
        return values
    idx = np.nonzero(np.abs(values) > _SIGN_SCALE * scale)[0]
    if idx.size and values[idx[-1]] < 0:
        return -values
    return values


def _solve_interior(
    v_diag: np.ndarray, h: float, k: int
) -> tuple[np.ndarray, np.ndarray]:
    """Lowest k eigenpairs of the Dirichlet finite-difference operator.

    ``v_diag`` holds potential samples at the interior points; the kinetic
    part is the standard second-order central-difference stencil.
    """
    m = v_diag.size
    if k > m:
        raise ParameterError(f"k={k} exceeds the {m} interior grid points")
    diag = 1.0 / h**2 + v_diag
    off = np.full(m - 1, -0.5 / h**2)
    try:
        energies, vecs = eigh_tridiagonal(diag, off, select="i", select_range=(0, k - 1))
    except np.linalg.LinAlgError as exc:  # pragma: no cover - LAPACK failure
        raise NumericError(f"tridiagonal eigensolver failed: {exc}") from exc
    if not np.all(np.isfinite(energies)):
        raise NumericError("eigensolver returned non-finite energies")
    return energies, vecs


def solve_eigensystem(potential: Potential, grid: Grid, k: int) -> EigenSystem:
    """Finite-difference solve of -(1/2) d^2/dx^2 + V with Dirichlet endpoints.

    Second-order central differences on the uniform grid; the symmetric
    tridiagonal problem is solved for the k lowest pairs, eigenfunctions
    are Simpson-normalized and sign-fixed.
    """
    if k < 1:
        raise ParameterError("k must be at least 1")
    if k > grid.n - 2:
        raise ParameterError(f"k={k} too large for a grid with n={grid.n}")
    v = potential.sample(grid.points)
    if not np.all(np.isfinite(v[1:-1])):
        raise ParameterError("potential must be finite on the grid interior")
    energies, vecs = _solve_interior(v[1:-1], grid.h, k)
    funcs = []
    for i in range(k):
        full = np.zeros(grid.n)
        full[1:-1] = vecs[:, i]
        funcs.append(Wavefunction.normalized(grid, _fix_sign(full)))
    return EigenSystem(grid, tuple(float(e) for e in energies), tuple(funcs), potential=potential)


# --------------------------------------------------------------------------
# nodes and node-restricted spectra
# --------------------------------------------------------------------------

def find_nodes(f: Wavefunction, tol: float = 1e-9) -> list[float]:
    """Interior zero crossings by sign change plus linear interpolation.

    Samples below ``tol`` relative to max|f| count as dead; endpoints are
    never reported and reported nodes are at least 2h apart.
    """
    x = f.grid.points
    v = f.values
    h = f.grid.h
    scale = float(np.max(np.abs(v)))
    if scale == 0.0:
        return []
    live = np.nonzero(np.abs(v) > tol * scale)[0]
    if live.size < 2:
        return []
    nodes: list[float] = []
    for a, b in zip(live[:-1], live[1:]):
        va, vb = v[a], v[b]
        if va * vb >= 0.0:
            continue
        # linear interpolation between the two flanking live samples
        xn = x[a] - va * (x[b] - x[a]) / (vb - va)
        if xn <= x[0] + h or xn >= x[-1] - h:
            continue
        if nodes and xn - nodes[-1] < 2.0 * h:
            continue
        nodes.append(float(xn))
    return nodes


def _check_sign_stability(f: Wavefunction, nodes: Sequence[float], tol: float) -> None:
    """Each internodal segment must carry one clean dominant sign."""
    x = f.grid.points
    v = f.values
    scale = float(np.max(np.abs(v)))
    edges = [x[0]] + list(nodes) + [x[-1]]
    for a, b in zip(edges[:-1], edges[1:]):
        sel = (x > a) & (x < b)
        seg = v[sel]
        live = seg[np.abs(seg) > tol * scale]
        if live.size == 0 or float(np.max(np.abs(seg))) < 10.0 * tol * scale:
            raise NodeDetectionError(
                f"no stable sign pattern on ({a:.4g}, {b:.4g})"
            )
        if np.any(live > 0) and np.any(live < 0):
            raise NodeDetectionError(
                f"sign fluctuates beyond noise level on ({a:.4g}, {b:.4g})"
            )


@dataclass(frozen=True)
class IntervalModes:
    """Low-lying Dirichlet spectrum of one nodal subinterval.

    ``values`` has one column per mode, sampled on ``points`` (interval
    endpoints included, held at zero); columns are orthonormal under the
    h-weighted dot product.
    """

    a: float
    b: float
    points: np.ndarray
    h: float
    energies: np.ndarray
    values: np.ndarray


def interval_dirichlet_modes(
    potential: Potential, a: float, b: float, h_target: float, n_modes: int
) -> IntervalModes:
    """Solve the Dirichlet problem on [a, b] with spacing close to h_target."""
    span = b - a
    n = max(51, int(round(span / h_target)) + 1)
    pts = np.linspace(a, b, n)
    h = pts[1] - pts[0]
    v = potential.sample(pts)
    k = min(n_modes, n - 2)
    energies, vecs = _solve_interior(v[1:-1], h, k)
    full = np.zeros((n, k))
    full[1:-1, :] = vecs / math.sqrt(h)  # unit norm under sum * h
    for i in range(k):
        full[:, i] = _fix_sign(full[:, i])
    return IntervalModes(a, b, pts, float(h), energies, full)


def nodal_intervals(grid: Grid, nodes: Sequence[float]) -> list[tuple[float, float]]:
    edges = [grid.x_min] + list(nodes) + [grid.x_max]
    return list(zip(edges[:-1], edges[1:]))


def _resample_to_grid(modes: IntervalModes, col: int, grid: Grid) -> np.ndarray:
    spline = CubicSpline(modes.points, modes.values[:, col])
    out = np.zeros(grid.n)
    sel = (grid.points > modes.a) & (grid.points < modes.b)
    out[sel] = spline(grid.points[sel])
    return out


def dirichlet_restricted_eigensystem(
    potential: Potential,
    state: Wavefunction,
    grid: Grid,
    k: int,
    tol: float = 1e-9,
    refine: int = 2,
) -> EigenSystem:
    """Spectrum of the operator restricted by Dirichlet conditions at the
    nodes of ``state``.

    Each nodal subinterval is solved independently with Dirichlet
    conditions at its ends and the spectra are merged in increasing
    order.  For a symmetric potential with a single central node the
    eigenfunctions are exposed as even/odd continuations of the half-line
    solutions (even first within each degenerate pair), which is the
    basis needed to expand even functions of the coordinate.
    """
    if k < 1:
        raise ParameterError("k must be at least 1")
    nodes = find_nodes(state, tol)
    if not nodes:
        es = solve_eigensystem(potential, grid, k)
        return EigenSystem(
            grid, es.energies, es.eigenfunctions,
            boundary="dirichlet_at_nodes", nodes=(), potential=potential,
        )
    _check_sign_stability(state, nodes, tol)
    h_target = grid.h / refine
    symmetric_single = (
        len(nodes) == 1
        and grid.symmetric
        and abs(nodes[0]) < 2.0 * grid.h
        and getattr(potential, "symmetric", False)
    )
    if symmetric_single:
        z = nodes[0]
        half = interval_dirichlet_modes(potential, z, grid.x_max, h_target, (k + 1) // 2)
        spline_cols = [CubicSpline(half.points, half.values[:, j]) for j in range(half.energies.size)]
        x = grid.points
        funcs: list[Wavefunction] = []
        energies: list[float] = []
        right = x >= z
        for j in range(half.energies.size):
            vals_r = np.zeros(grid.n)
            vals_r[right] = spline_cols[j](x[right])
            vals_r[x > half.b] = 0.0
            mirrored = np.zeros(grid.n)
            mirrored[~right] = spline_cols[j](2.0 * z - x[~right])
            even = vals_r + mirrored
            odd = vals_r - mirrored
            parity_even = "even" if abs(z) < 1e-12 else None
            parity_odd = "odd" if abs(z) < 1e-12 else None
            for vals, par in ((even, parity_even), (odd, parity_odd)):
                if len(energies) >= k:
                    break
                energies.append(float(half.energies[j]))
                funcs.append(Wavefunction.normalized(grid, vals, parity=par))
        return EigenSystem(
            grid, tuple(energies), tuple(funcs),
            boundary="dirichlet_at_nodes", nodes=tuple(nodes), potential=potential,
        )
    merged: list[tuple[float, int, np.ndarray]] = []
    for iv, (a, b) in enumerate(nodal_intervals(grid, nodes)):
        modes = interval_dirichlet_modes(potential, a, b, h_target, k)
        for j in range(modes.energies.size):
            merged.append((float(modes.energies[j]), iv, _resample_to_grid(modes, j, grid)))
    merged.sort(key=lambda item: (item[0], item[1]))
    merged = merged[:k]
    energies = [e for e, _, _ in merged]
    funcs = [Wavefunction.normalized(grid, vals) for _, _, vals in merged]
    return EigenSystem(
        grid, tuple(energies), tuple(funcs),
        boundary="dirichlet_at_nodes", nodes=tuple(nodes), potential=potential,
    )
