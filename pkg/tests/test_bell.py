import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st_

from stochmech import (
    ChshReport,
    ClassicalModel,
    DoubleWellPotential,
    Grid,
    Observable,
    ParameterError,
    alpha,
    chsh_correlations,
    chsh_inequalities,
    chsh_value,
    classical_realizability,
    harmonic_eigensystem,
    paper_times,
    product_classical_model,
    qm_multitime_correlation,
    run_chsh,
    solve_eigensystem,
)
from stochmech.bell import ArrangementDistribution

SQRT2 = math.sqrt(2.0)


@pytest.fixture(scope="module")
def harmonic_sym():
    # odd point count: mirror-symmetric Simpson weights, so odd integrands
    # such as the diagonal elements of sign(x) cancel exactly
    return harmonic_eigensystem(1.0, 2, Grid(-10.0, 10.0, 2001))


# --------------------------------------------------------------------------
# alpha
# --------------------------------------------------------------------------

def test_alpha_box_closed_form(box_es):
    a = alpha(box_es, Observable("sign", 0))
    assert a == pytest.approx(8.0 / (3.0 * math.pi), abs=1e-8)


def test_alpha_harmonic_gaussian_overlap(harmonic_sym):
    a = alpha(harmonic_sym, Observable("sign", 0))
    assert a == pytest.approx(math.sqrt(2.0 / math.pi), abs=1e-8)
    assert a * a < SQRT2 / 2.0  # below the violation threshold


def test_alpha_double_well_approaches_one():
    pot = DoubleWellPotential(barrier_height=30.0, well_separation=1.0)
    es = solve_eigensystem(pot, Grid(-3.0, 3.0, 2001), 2)
    a = alpha(es, Observable("sign", 0))
    assert a > 0.99


def test_alpha_rejects_bad_observables(box_es):
    with pytest.raises(ParameterError):
        alpha(box_es, Observable("position", 0))
    even = Observable(
        "tabulated", 0, samples=np.cos(box_es.grid.points), grid=box_es.grid
    )
    with pytest.raises(ParameterError):
        alpha(box_es, even)


def test_alpha_accepts_odd_tabulated(box_es):
    x = box_es.grid.points
    f = Observable("tabulated", 0, samples=np.clip(3.0 * x, -1, 1), grid=box_es.grid)
    val = alpha(box_es, f)
    assert -1.0 <= val <= 1.0


# --------------------------------------------------------------------------
# correlations and S
# --------------------------------------------------------------------------

def test_paper_times_pattern_alpha_one():
    E = chsh_correlations(1.0, 1.0, paper_times(1.0))
    v = SQRT2 / 2.0
    assert E == pytest.approx(np.array([[-v, v], [-v, -v]]), abs=1e-12)
    assert chsh_value(E) == pytest.approx(-2.0 * SQRT2, abs=1e-12)


def test_equal_times_give_minus_alpha_squared():
    E = chsh_correlations(0.7, 2.0, (1.0, 1.0, 1.0, 1.0))
    assert E == pytest.approx(np.full((2, 2), -0.49), abs=1e-12)


def test_s_for_both_alpha_readings():
    S_paper = chsh_value(chsh_correlations(math.sqrt(8.0 / (3.0 * math.pi)), 1.0, paper_times(1.0)))
    assert S_paper == pytest.approx(-2.0 * SQRT2 * 8.0 / (3.0 * math.pi), abs=1e-12)
    assert S_paper == pytest.approx(-2.4005, abs=1e-3)
    S_quad = chsh_value(chsh_correlations(8.0 / (3.0 * math.pi), 1.0, paper_times(1.0)))
    assert S_quad == pytest.approx(-2.0379, abs=1e-4)
    assert S_paper < -2.0 and S_quad < -2.0


def test_correlations_match_qm_backend(box_singlet_state, box_es):
    a = alpha(box_es, Observable("sign", 0))
    omega = box_es.energies[1] - box_es.energies[0]
    f = Observable("sign", 0)
    g = Observable("sign", 1)
    rng = np.random.default_rng(42)
    for _ in range(20):
        t1, t2, s1, s2 = rng.uniform(0.0, 4.0 / omega, size=4)
        E = chsh_correlations(a, omega, (t1, t2, s1, s2))
        for i, t in enumerate((t1, t2)):
            for j, s in enumerate((s1, s2)):
                direct = qm_multitime_correlation(box_singlet_state, [f, g], [t, s])
                assert E[i, j] == pytest.approx(direct, abs=1e-8)


# --------------------------------------------------------------------------
# realizability
# --------------------------------------------------------------------------

def test_zero_matrix_feasible_uniformish():
    r = classical_realizability(np.zeros((2, 2)))
    assert r.feasible
    assert r.model.correlations() == pytest.approx(np.zeros((2, 2)), abs=1e-12)


def test_paper_matrix_infeasible_with_witness():
    E = chsh_correlations(1.0, 1.0, paper_times(1.0))
    r = classical_realizability(E)
    assert not r.feasible
    pattern, value = r.violated
    assert value == pytest.approx(2.0 * SQRT2, abs=1e-12)


def test_alpha_squared_070_feasible():
    E = chsh_correlations(math.sqrt(0.70), 1.0, paper_times(1.0))
    assert abs(chsh_value(E)) == pytest.approx(1.9799, abs=1e-4)
    assert classical_realizability(E).feasible


def test_threshold_sharp_at_sqrt2_over_2():
    for delta, expected_feasible in ((-1e-3, True), (1e-3, False)):
        a2 = SQRT2 / 2.0 + delta
        E = chsh_correlations(math.sqrt(a2), 1.0, paper_times(1.0))
        assert classical_realizability(E).feasible is expected_feasible


def test_realizability_with_marginals_round_trip():
    rng = np.random.default_rng(7)
    atoms = rng.dirichlet(np.ones(16))
    model = ClassicalModel(tuple(atoms))
    E = model.correlations()
    marg = (
        model.marginal("sigma", 1),
        model.marginal("sigma", 2),
        model.marginal("tau", 1),
        model.marginal("tau", 2),
    )
    r = classical_realizability(E, marg)
    assert r.feasible
    back = r.model
    assert back.correlations() == pytest.approx(E, abs=1e-9)
    for which, i, target in (
        ("sigma", 1, marg[0]), ("sigma", 2, marg[1]),
        ("tau", 1, marg[2]), ("tau", 2, marg[3]),
    ):
        assert back.marginal(which, i) == pytest.approx(target, abs=1e-9)


def test_realizability_input_validation():
    with pytest.raises(ParameterError):
        classical_realizability(np.array([[1.5, 0.0], [0.0, 0.0]]))


def test_infeasible_with_marginals_yields_certificate():
    # perfect correlations with contradictory marginals: no CHSH witness,
    # the dual certificate takes over
    E = np.array([[1.0, 1.0], [1.0, 1.0]])
    marg = (1.0, 1.0, 1.0, -1.0)
    r = classical_realizability(E, marg)
    assert not r.feasible
    assert r.violated is None
    assert r.certificate is not None


@settings(max_examples=50, deadline=None)
@given(raw=st_.lists(st_.floats(min_value=0.0, max_value=1.0), min_size=16, max_size=16))
def test_classical_models_respect_chsh_bound(raw):
    total = sum(raw)
    if total <= 0.0:
        return
    model = ClassicalModel(tuple(v / total for v in raw))
    assert abs(chsh_value(model.correlations())) <= 2.0 + 1e-12


@settings(max_examples=100, deadline=None)
@given(
    e=st_.lists(
        st_.floats(min_value=-1.0, max_value=1.0), min_size=4, max_size=4
    )
)
def test_lp_matches_inequalities_zero_marginals(e):
    E = np.array(e).reshape(2, 2)
    lp = classical_realizability(E).feasible
    by_inequalities = all(v <= 2.0 + 1e-12 for _, v in chsh_inequalities(E))
    assert lp == by_inequalities


# --------------------------------------------------------------------------
# product models for disjoint arrangements
# --------------------------------------------------------------------------

def test_product_model_two_binary_arrangements():
    d1 = ArrangementDistribution(("A",), ((0.0,), (1.0,)), (0.3, 0.7))
    d2 = ArrangementDistribution(("B",), ((0.0,), (1.0,)), (0.5, 0.5))
    model = product_classical_model([d1, d2])
    assert model.probabilities == pytest.approx((0.15, 0.15, 0.35, 0.35))


def test_product_model_rejects_overlap():
    d1 = ArrangementDistribution(("A", "B"), ((0.0, 0.0),), (1.0,))
    d2 = ArrangementDistribution(("B",), ((0.0,), (1.0,)), (0.5, 0.5))
    with pytest.raises(ParameterError):
        product_classical_model([d1, d2])


def test_product_model_from_binned_positions(ground_product_state):
    # equal-time position marginals of the two clusters, coarsely binned:
    # two disjoint single-time arrangements always admit a product model
    edges = np.linspace(-4.0, 4.0, 9)
    dists = []
    for c, label in ((0, "x1@t"), (1, "x2@s")):
        es = ground_product_state.clusters[c]
        psi = es.eigenfunctions[0].values ** 2
        masses = []
        for lo, hi in zip(edges[:-1], edges[1:]):
            sel = (es.grid.points >= lo) & (es.grid.points < hi)
            masses.append(float(np.trapezoid(psi[sel], es.grid.points[sel])))
        masses = np.array(masses)
        masses /= masses.sum()
        dists.append(
            ArrangementDistribution(
                (label,),
                tuple((0.5 * (lo + hi),) for lo, hi in zip(edges[:-1], edges[1:])),
                tuple(masses),
            )
        )
    model = product_classical_model(dists)
    assert math.fsum(model.probabilities) == pytest.approx(1.0, abs=1e-12)
    assert len(model.outcomes) == 64


@settings(max_examples=30, deadline=None)
@given(
    p=st_.lists(st_.floats(min_value=0.01, max_value=1.0), min_size=2, max_size=4),
    q=st_.lists(st_.floats(min_value=0.01, max_value=1.0), min_size=2, max_size=3),
)
def test_product_model_marginals_exact(p, q):
    p = [v / sum(p) for v in p]
    q = [v / sum(q) for v in q]
    # fsum-normalize to meet the distribution tolerance exactly
    p[-1] = 1.0 - math.fsum(p[:-1])
    q[-1] = 1.0 - math.fsum(q[:-1])
    d1 = ArrangementDistribution(("A",), tuple((float(i),) for i in range(len(p))), tuple(p))
    d2 = ArrangementDistribution(("B",), tuple((float(i),) for i in range(len(q))), tuple(q))
    model = product_classical_model([d1, d2])
    assert len(model.probabilities) == len(p) * len(q)


# --------------------------------------------------------------------------
# report
# --------------------------------------------------------------------------

def test_run_chsh_box(box_es):
    report = run_chsh(box_es, Observable("sign", 0))
    assert report.alpha == pytest.approx(8.0 / (3.0 * math.pi), abs=1e-8)
    assert report.S == pytest.approx(-2.0379, abs=1e-4)
    assert not report.classical_feasible
    assert np.max(np.abs(report.marginals)) < 1e-12


def test_run_chsh_harmonic_no_violation(harmonic_sym):
    report = run_chsh(harmonic_sym, Observable("sign", 0))
    assert report.alpha**2 == pytest.approx(2.0 / math.pi, abs=1e-8)
    assert report.classical_feasible
    assert report.S > -2.0


def test_chsh_report_validation():
    with pytest.raises(ParameterError):
        ChshReport(
            alpha=1.5, omega=1.0, times=(0, 1, 2, 3),
            correlations=((0, 0), (0, 0)), marginals=(0, 0, 0, 0),
            S=0.0, classical_feasible=True,
        )
    with pytest.raises(ParameterError):
        ChshReport(
            alpha=0.5, omega=1.0, times=(0, 1, 2, 3),
            correlations=((0.1, 0.2), (0.3, 0.4)), marginals=(0, 0, 0, 0),
            S=0.9, classical_feasible=True,  # wrong combination
        )
