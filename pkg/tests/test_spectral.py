import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st_

from stochmech import (
    DomainTruncationError,
    DoubleWellPotential,
    EigenSystem,
    Grid,
    GridMismatchError,
    HarmonicPotential,
    NodeDetectionError,
    ParameterError,
    TabulatedPotential,
    Wavefunction,
    box_eigensystem,
    dirichlet_restricted_eigensystem,
    find_nodes,
    harmonic_eigensystem,
    quadrature,
    solve_eigensystem,
)
from stochmech.spectral import simpson_weights


# --------------------------------------------------------------------------
# grids and quadrature
# --------------------------------------------------------------------------

def test_grid_invariants():
    g = Grid(-1.0, 1.0, 5)
    assert g.h == pytest.approx(0.5)
    assert g.symmetric
    with pytest.raises(ParameterError):
        Grid(-1.0, 1.0, 2)
    with pytest.raises(ParameterError):
        Grid(1.0, -1.0, 10)


@pytest.mark.parametrize("n", [5, 6, 101, 100])
def test_simpson_exact_on_cubics(n):
    # composite Simpson integrates cubics exactly on full panels; the odd
    # segment count falls back to a trapezoid on the last interval only
    g = Grid(0.0, 2.0, n)
    w = simpson_weights(n, g.h)
    exact = 2.0**4 / 4.0
    err = abs(w @ g.points**3 - exact)
    if (n - 1) % 2 == 0:
        assert err < 1e-12
    else:
        # trapezoid on the last interval: |err| <= h^3/12 * max|f''| there
        assert err <= g.h**3 / 12.0 * 12.0 + 1e-12


def test_quadrature_norm_and_orthogonality(harmonic_es):
    psi0, psi1 = harmonic_es.eigenfunctions[:2]
    assert quadrature(psi0, psi0) == pytest.approx(1.0, abs=1e-10)
    assert quadrature(psi0, psi1) == pytest.approx(0.0, abs=1e-10)


def test_quadrature_sign_kernel_box(box_es):
    f = np.sign(box_es.grid.points)
    prod = box_es.eigenfunctions[0].values * box_es.eigenfunctions[1].values
    val = quadrature(f, prod, grid=box_es.grid)
    assert val == pytest.approx(8.0 / (3.0 * math.pi), abs=1e-8)


def test_quadrature_grid_mismatch(harmonic_es, box_es):
    with pytest.raises(GridMismatchError):
        quadrature(harmonic_es.eigenfunctions[0], box_es.eigenfunctions[0])
    with pytest.raises(GridMismatchError):
        quadrature(np.ones(7), grid=None)


def test_quadrature_with_weight(harmonic_es):
    es2 = harmonic_eigensystem(2.0, 1)
    psi0 = es2.eigenfunctions[0]
    x2 = es2.grid.points**2
    assert quadrature(psi0, psi0, x2) == pytest.approx(0.25, abs=1e-10)


# --------------------------------------------------------------------------
# wavefunctions
# --------------------------------------------------------------------------

def test_wavefunction_requires_normalization(harmonic_es):
    g = harmonic_es.grid
    with pytest.raises(ParameterError):
        Wavefunction(g, 2.0 * harmonic_es.eigenfunctions[0].values)


def test_wavefunction_parity_enforced(harmonic_es):
    g = harmonic_es.grid
    with pytest.raises(ParameterError):
        Wavefunction(g, harmonic_es.eigenfunctions[1].values, parity="even")


# --------------------------------------------------------------------------
# analytic families
# --------------------------------------------------------------------------

def test_harmonic_energies_exact(harmonic_es):
    assert harmonic_es.energies == (0.5, 1.5, 2.5, 3.5)
    es = harmonic_eigensystem(2.0, 3)
    assert es.energies == (1.0, 3.0, 5.0)


def test_harmonic_first_excited_closed_form(harmonic_es):
    x = harmonic_es.grid.points
    expected = (4.0 / math.pi) ** 0.25 * x * np.exp(-0.5 * x * x)
    assert np.max(np.abs(harmonic_es.eigenfunctions[1].values - expected)) < 1e-12
    assert harmonic_es.eigenfunctions[1].parity == "odd"


def test_harmonic_grid_preconditions():
    with pytest.raises(ParameterError):
        harmonic_eigensystem(1.0, 2, Grid(-5.0, 5.0, 500))
    with pytest.raises(DomainTruncationError):
        harmonic_eigensystem(1.0, 40, Grid(-8.05, 8.05, 1700))


def test_box_energies_and_values(box_es):
    assert box_es.energies[0] == pytest.approx(math.pi**2 / 8.0, rel=1e-12)
    assert box_es.energies[1] == pytest.approx(math.pi**2 / 2.0, rel=1e-12)
    assert box_es.eigenfunctions[0](0.0) == pytest.approx(1.0, abs=1e-12)
    assert [f.parity for f in box_es.eigenfunctions] == ["even", "odd"]


def test_box_mode_count_limit():
    with pytest.raises(ParameterError):
        box_eigensystem(1.0, 400, Grid(-1.0, 1.0, 801))


# --------------------------------------------------------------------------
# finite-difference solver
# --------------------------------------------------------------------------

def test_solver_harmonic_against_analytic():
    es = solve_eigensystem(HarmonicPotential(1.0), Grid(-10.0, 10.0, 2000), 4)
    for n, e in enumerate(es.energies):
        assert e == pytest.approx(n + 0.5, abs=1e-4)


def test_solver_box_as_tabulated_zero():
    grid = Grid(-1.0, 1.0, 2001)
    pot = TabulatedPotential(grid, np.zeros(grid.n))
    es = solve_eigensystem(pot, grid, 2)
    assert es.energies[0] == pytest.approx(math.pi**2 / 8.0, abs=1e-3)
    assert es.energies[1] == pytest.approx(math.pi**2 / 2.0, abs=1e-3)


def test_solver_sign_convention_matches_analytic(harmonic_es):
    es = solve_eigensystem(HarmonicPotential(1.0), harmonic_es.grid, 3)
    for numeric, analytic in zip(es.eigenfunctions, harmonic_es.eigenfunctions):
        overlap = quadrature(numeric, analytic)
        assert overlap > 0.999


def test_solver_parameter_errors():
    with pytest.raises(ParameterError):
        solve_eigensystem(HarmonicPotential(1.0), Grid(-10.0, 10.0, 50), 49)
    with pytest.raises(ParameterError):
        solve_eigensystem(HarmonicPotential(1.0), Grid(-10.0, 10.0, 2000), 0)


@settings(max_examples=10, deadline=None)
@given(omega=st_.floats(min_value=0.5, max_value=3.0))
def test_solver_orthonormality_property(omega):
    es = solve_eigensystem(HarmonicPotential(omega), Grid(-12.0, 12.0, 900), 5)
    gram = es.gram()
    assert np.max(np.abs(gram - np.eye(5))) < 1e-6


def test_grid_refinement_second_order():
    coarse = solve_eigensystem(HarmonicPotential(1.0), Grid(-10.0, 10.0, 1000), 4)
    fine = solve_eigensystem(HarmonicPotential(1.0), Grid(-10.0, 10.0, 1999), 4)
    for ec, ef in zip(coarse.energies, fine.energies):
        assert abs(ec - ef) < 4e-4


def test_sturm_node_counts():
    es = harmonic_eigensystem(1.0, 7)
    for n in range(7):
        assert len(find_nodes(es.eigenfunctions[n])) == n
    fd = solve_eigensystem(HarmonicPotential(1.0), Grid(-10.0, 10.0, 2000), 7)
    for n in range(7):
        assert len(find_nodes(fd.eigenfunctions[n])) == n


# --------------------------------------------------------------------------
# nodes
# --------------------------------------------------------------------------

def test_find_nodes_examples(harmonic_es):
    h = harmonic_es.grid.h
    assert find_nodes(harmonic_es.eigenfunctions[0]) == []
    nodes1 = find_nodes(harmonic_es.eigenfunctions[1])
    assert len(nodes1) == 1 and abs(nodes1[0]) < h
    nodes2 = find_nodes(harmonic_es.eigenfunctions[2])
    assert len(nodes2) == 2
    for found, expected in zip(nodes2, (-1 / math.sqrt(2), 1 / math.sqrt(2))):
        assert abs(found - expected) < h


def test_find_nodes_ignores_noise_below_tolerance(harmonic_es):
    g = harmonic_es.grid
    vals = harmonic_es.eigenfunctions[0].values.copy()
    # inject sub-threshold wiggles around the far tail
    vals[:3] = np.array([1e-14, -1e-14, 1e-14])
    f = Wavefunction.normalized(g, vals)
    assert find_nodes(f) == []


# --------------------------------------------------------------------------
# node-restricted spectra
# --------------------------------------------------------------------------

def test_dirichlet_doubles_odd_levels(harmonic_es):
    dr = dirichlet_restricted_eigensystem(
        HarmonicPotential(1.0), harmonic_es.eigenfunctions[1], harmonic_es.grid, 4
    )
    assert dr.boundary == "dirichlet_at_nodes"
    assert len(dr.nodes) == 1
    for e, expected in zip(dr.energies, (1.5, 1.5, 3.5, 3.5)):
        assert e == pytest.approx(expected, abs=1e-3)


def test_dirichlet_nodeless_matches_unrestricted(harmonic_es):
    dr = dirichlet_restricted_eigensystem(
        HarmonicPotential(1.0), harmonic_es.eigenfunctions[0], harmonic_es.grid, 3
    )
    fd = solve_eigensystem(HarmonicPotential(1.0), harmonic_es.grid, 3)
    assert dr.nodes == ()
    assert np.allclose(dr.energies, fd.energies, atol=1e-12)


def test_dirichlet_even_sector_ground_is_abs_psi1(harmonic_es):
    dr = dirichlet_restricted_eigensystem(
        HarmonicPotential(1.0), harmonic_es.eigenfunctions[1], harmonic_es.grid, 2
    )
    target = np.abs(harmonic_es.eigenfunctions[1].values)
    dev = dr.eigenfunctions[0].values - target
    assert math.sqrt(quadrature(dev, dev, grid=harmonic_es.grid)) < 1e-4
    assert dr.eigenfunctions[0].parity == "even"
    assert dr.eigenfunctions[1].parity == "odd"


def test_dirichlet_rejects_unstable_sign_pattern():
    g = Grid(-1.0, 1.0, 401)
    # sign-fluctuating noise above the dead threshold across a wide band:
    # spurious crossings whose flanks never rise above noise level
    vals = np.exp(-8.0 * g.points**2)
    band = np.abs(g.points) < 0.2
    vals[band] = 5e-9 * (-1.0) ** np.arange(int(np.count_nonzero(band)))
    f = Wavefunction.normalized(g, vals)
    with pytest.raises(NodeDetectionError):
        dirichlet_restricted_eigensystem(TabulatedPotential(g, np.zeros(g.n)), f, g, 2)


def test_double_well_doublet_structure():
    pot = DoubleWellPotential(barrier_height=30.0, well_separation=1.0)
    es = solve_eigensystem(pot, Grid(-3.0, 3.0, 2000), 2)
    gap = es.energies[1] - es.energies[0]
    assert 0 < gap < 0.05  # near-degenerate tunneling doublet
    assert es.eigenfunctions[0].values @ es.grid.simpson == pytest.approx(
        quadrature(es.eigenfunctions[0], np.ones(es.grid.n)), abs=1e-12
    )


def test_eigensystem_rejects_unsorted_energies(harmonic_es):
    with pytest.raises(ParameterError):
        EigenSystem(
            harmonic_es.grid,
            (1.5, 0.5),
            (harmonic_es.eigenfunctions[1], harmonic_es.eigenfunctions[0]),
        )
