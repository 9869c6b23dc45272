"""Root equation, barrier ODE integration, and smooth-fit residuals."""
import json
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from divbarrier import (G_of_b, LambdaQuad, ModelParams, SingularSystem,
                        check_boundary_conditions, coefficients, F0_from_b0,
                        integrate_boundary, root_bracket, solve_b0)

from . import refs
from .conftest import QUAD_CAPPED, QUAD_UNCAPPED, random_quad

# frozen by refs.grid_scan_bracket (1e6-point sign scan on the open interval)
SCAN_BRACKET_CAPPED = (0.20332138391826654, 0.20332168383034369)
SCAN_BRACKET_UNCAPPED = (0.76455296599043565, 0.7645534896428996)


def test_root_bracket_closed_forms():
    lo, hi = root_bracket(QUAD_CAPPED)
    assert lo == pytest.approx(2.0 * math.log(1.5) / 5.0, abs=1e-16)
    assert hi == pytest.approx(math.log(4.0) / 3.0, abs=1e-16)
    lo, hi = root_bracket(QUAD_UNCAPPED)
    assert lo == pytest.approx(math.log(9.0) / 4.0, abs=1e-16)
    assert hi == pytest.approx(math.log(25.0) / 3.0, abs=1e-16)


def test_g_orientation_vs_reference():
    """Shipped G is the sign-flipped reference mixture: same root, G' < 0."""
    rng = np.random.default_rng(5)
    for _ in range(50):
        lam = random_quad(rng)
        rho = rng.uniform(0.0, 1.0)
        b = rng.uniform(0.01, 2.0)
        want = -refs.G_reference(b, lam.lambda1, lam.lambda2,
                                 lam.lambda3, lam.lambda4, rho)
        assert G_of_b(b, lam, rho) == pytest.approx(want, rel=1e-13, abs=1e-13)


def test_solve_b0_capped_regime():
    b0 = solve_b0(QUAD_CAPPED, 0.3)
    assert b0 == pytest.approx(0.20332162497745287, abs=1e-14)
    lo, hi = SCAN_BRACKET_CAPPED
    assert lo < b0 < hi
    assert abs(G_of_b(b0, QUAD_CAPPED, 0.3)) < 1e-11


def test_solve_b0_uncapped_regime():
    b0 = solve_b0(QUAD_UNCAPPED, 0.5)
    assert b0 == pytest.approx(0.7645532817156542, abs=1e-14)
    lo, hi = SCAN_BRACKET_UNCAPPED
    assert lo < b0 < hi


def test_solve_b0_collapses_to_classical():
    # rho = 1: only the first root pair matters and the root is explicit
    lam = QUAD_CAPPED
    b1 = solve_b0(lam, 1.0)
    want1 = math.log((lam.lambda1 / lam.lambda2) ** 2) / (lam.lambda2
                                                          - lam.lambda1)
    assert b1 == pytest.approx(want1, abs=1e-12)
    # rho = 0: same closed form on the second pair
    b0 = solve_b0(lam, 0.0)
    want0 = math.log((lam.lambda3 / lam.lambda4) ** 2) / (lam.lambda4
                                                          - lam.lambda3)
    assert b0 == pytest.approx(want0, abs=1e-12)


def test_fd_slope_negative_at_root():
    rng = np.random.default_rng(11)
    for _ in range(25):
        lam = random_quad(rng)
        rho = rng.uniform(0.05, 0.95)
        b0 = solve_b0(lam, rho)
        h = 1e-6 * max(1.0, b0)
        slope = (G_of_b(b0 + h, lam, rho) - G_of_b(b0 - h, lam, rho)) / (2 * h)
        assert slope < 0.0


@given(st.integers(0, 2**31 - 1))
@settings(max_examples=60)
def test_root_strictly_bracketed(seed):
    rng = np.random.default_rng(seed)
    lam = random_quad(rng)
    rho = rng.uniform(0.0, 1.0)
    # endpoints arrive in root-pair order; they may be reversed or negative
    lo, hi = sorted(root_bracket(lam))
    b0 = solve_b0(lam, rho)
    assert lo <= b0 <= hi
    if 0.0 < rho < 1.0:
        assert lo < b0 < hi
    assert abs(G_of_b(b0, lam, rho)) < 1e-9


def test_f0_consistency():
    from divbarrier.boundary import F0_forms

    for lam, rho in ((QUAD_CAPPED, 0.3), (QUAD_UNCAPPED, 0.5)):
        b0 = solve_b0(lam, rho)
        # the root equation is exactly the agreement of the two F0 forms
        form_rho, form_alt = F0_forms(b0, lam, rho)
        assert form_rho == pytest.approx(form_alt, rel=1e-10)
        F0 = F0_from_b0(b0, lam, rho)
        assert F0 == form_rho
        assert F0 < 0.0


def test_coefficients_satisfy_their_defining_system():
    lam, rho, q = QUAD_CAPPED, 0.3, 5.0
    b0 = solve_b0(lam, rho)
    F0 = F0_from_b0(b0, lam, rho)
    A = np.array(coefficients(0.0, b0, F0, lam, rho, q))
    l = lam.as_array()
    eb = np.exp(l * b0)
    # first-order fit splits across pairs as rho*c(0) and (1-rho)*c(0)
    assert (l * A * eb)[:2].sum() == pytest.approx(rho, rel=1e-12)
    assert (l * A * eb)[2:].sum() == pytest.approx(1.0 - rho, rel=1e-12)
    # second-order fit splits as +F and -F, cancelling in total
    assert (l * l * A * eb)[:2].sum() == pytest.approx(F0, rel=1e-12)
    assert (l * l * A * eb)[2:].sum() == pytest.approx(-F0, rel=1e-12)
    assert abs((l * l * A * eb).sum()) < 1e-12
    # both pair sums vanish at m = 0 (corner condition)
    assert abs(A[0] + A[1]) < 1e-13
    assert abs(A[2] + A[3]) < 1e-13


def test_integrate_capped(sol_capped):
    sol = sol_capped
    assert sol.terminated_by == "m_bar"
    assert sol.b0 == pytest.approx(0.20332162497745287, abs=1e-13)
    assert sol.F0 == pytest.approx(-0.16870523442205124, abs=1e-12)
    assert sol.m_star == pytest.approx(0.17264218828603717, rel=1e-10)
    # the cap extends the boundary constantly out to m* = b(m_bar)
    assert sol.m_grid[-1] == pytest.approx(sol.m_star, rel=1e-12)
    tail = sol.b[sol.m_grid >= 0.1 - 1e-12]
    assert np.all(tail == tail[0])
    assert np.all(np.diff(sol.b) <= 1e-14)
    assert sol.det_min > 1.0


def test_integrate_uncapped(sol_uncapped):
    sol = sol_uncapped
    assert sol.terminated_by == "diagonal"
    assert sol.b0 == pytest.approx(0.7645532817156542, abs=1e-13)
    assert sol.m_star == pytest.approx(0.6986968366318759, rel=1e-8)
    assert sol.b[-1] - sol.m_grid[-1] == pytest.approx(0.0, abs=1e-5)
    assert np.all(np.diff(sol.b) <= 1e-14)
    assert np.all(sol.A3 <= 0.0)


def test_classical_boundary_constant(sol_classical):
    sol = sol_classical
    lam = sol.lam
    want = math.log((lam.lambda1 / lam.lambda2) ** 2) / (lam.lambda2
                                                         - lam.lambda1)
    assert sol.b0 == pytest.approx(want, abs=1e-12)
    assert float(np.ptp(sol.b)) == 0.0


def test_interpolators_clamp(sol_capped):
    sol = sol_capped
    assert sol.b_of(-1.0) == sol.b[0]
    assert sol.b_of(sol.m_star + 5.0) == sol.b[-1]
    m = np.array([0.0, 0.05, sol.m_star])
    out = sol.b_of(m)
    assert out.shape == (3,)
    A = sol.A_of(0.0)
    assert len(A) == 4 and A[0] == sol.A1[0]


def test_boundary_conditions_residuals(sol_capped, sol_uncapped):
    for sol in (sol_capped, sol_uncapped):
        rep = check_boundary_conditions(sol)
        # the fits are algebraic identities of the coefficient construction
        assert rep.fit_first < 1e-12
        assert rep.fit_second < 1e-12
        assert rep.zero_sum_12 < 1e-12
        assert rep.zero_sum_34 < 1e-12
        # the derivative conditions carry the finite-difference order
        assert rep.deriv_12 < 1e-5
        assert rep.deriv_34 < 1e-5


def test_csv_roundtrip(tmp_path, sol_capped):
    p = tmp_path / "boundary.csv"
    sol_capped.write_csv(p, config_hash="cafe01234567", version="0.0-test")
    lines = p.read_text().splitlines()
    assert lines[0] == "# version=0.0-test config_hash=cafe01234567"
    assert lines[1] == "m,b,F,A1,A2,A3,A4"
    data = np.loadtxt(p, delimiter=",", skiprows=2)
    # 17 significant digits round-trip bit-exactly
    assert np.array_equal(data[:, 0], sol_capped.m_grid)
    assert np.array_equal(data[:, 1], sol_capped.b)
    assert np.array_equal(data[:, 6], sol_capped.A4)

    jp = tmp_path / "boundary.json"
    sol_capped.write_json_header(jp, config_hash="cafe01234567")
    head = json.loads(jp.read_text())
    assert head["b0"] == sol_capped.b0
    assert head["terminated_by"] == "m_bar"
    assert head["m_bar"] == 0.1


def test_infinite_cap_serializes_as_null(tmp_path, sol_uncapped):
    jp = tmp_path / "boundary.json"
    sol_uncapped.write_json_header(jp)
    assert json.loads(jp.read_text())["m_bar"] is None


def test_singular_cutoff_carries_partial():
    params = ModelParams.from_lambda(QUAD_CAPPED, sigma=1.0, rho=0.3, q=5.0,
                                     m_bar=0.1)
    with pytest.raises(SingularSystem) as ei:
        integrate_boundary(params, step=1e-3, det_floor=1e3)
    err = ei.value
    assert err.partial is not None
    assert err.partial.terminated_by == "singular"
    assert err.partial.singular_at == pytest.approx(err.m)
    assert len(err.partial.m_grid) >= 1


def test_step_controls_derivative_residual():
    """Halving the step shrinks the coefficient-derivative residuals."""
    params = ModelParams.from_lambda(QUAD_CAPPED, sigma=1.0, rho=0.3, q=5.0,
                                     m_bar=0.1)
    r1 = check_boundary_conditions(integrate_boundary(params, step=2e-4))
    r2 = check_boundary_conditions(integrate_boundary(params, step=1e-4))
    assert r2.deriv_12 < r1.deriv_12
    assert r2.deriv_34 < r1.deriv_34
