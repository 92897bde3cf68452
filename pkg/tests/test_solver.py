"""Field evaluation, elimination of unknowns, residual diagnostics and the global relations."""
import math

import numpy as np
import pytest

from elastoutm.errors import DeterminantNearZero, DomainError, GridTooCoarse
from elastoutm.solver import (
    FieldGrid, ProblemSpec, QuadConfig, bc_residual, eliminate_unknowns, evaluate_grid, evaluate_prop2, evaluate_uv,
    global_relation_check, inner_integrals, normal_load_problem, pde_residual,
)
from elastoutm.spectral import MaterialParams, coeffs
from elastoutm.transforms import BoundaryForcing

P = MaterialParams(2.0, 1.0)
SMOOTH = normal_load_problem(P, 1.0, mollifier=0.1, rise=0.05)


@pytest.fixture(scope="module")
def smooth_row():
    """One row of the smoothed problem at y = 0.5 across x, two times."""
    xs = np.array([-3.0, -0.5, 0.0, 0.5, 3.0])
    return evaluate_grid(SMOOTH, xs, [0.5], [0.5, 1.0], QuadConfig(conj_symmetry=False))


# ----------------------------------------------------------------- elimination

def test_eliminated_unknowns_solve_their_systems():
    rng = np.random.default_rng(3)
    k, l = 1.3, np.array([0.4 - 0.9j, -2.0 + 0.3j, 3.1])
    n = [rng.normal(size=3) + 1j * rng.normal(size=3) for _ in range(4)]
    U1, U2, V1, V2 = eliminate_unknowns(P, k, l, n)
    c = coeffs(P, k, l)
    assert np.allclose(c.C1 * V2 + c.C2 * U2, -n[2]) and np.allclose(c.C3 * V2 + c.C4 * U2, -n[3])
    assert np.allclose(c.D1 * V1 + c.D2 * U1, -n[0]) and np.allclose(c.D3 * V1 + c.D4 * U1, -n[1])


def test_elimination_refuses_vanishing_determinant():
    with pytest.raises(DeterminantNearZero):
        eliminate_unknowns(P, 1.0, np.array([1j]), [np.ones(1)] * 4)


# ----------------------------------------------------------------- evaluation

def test_zero_load_gives_zero_field():
    g = evaluate_grid(ProblemSpec(P), [0.0, 1.0], [0.5], [1.0])
    assert not np.any(g.u) and not np.any(g.v) and g.meta["converged"]
    assert evaluate_prop2(P, 0.0, 0.5, 0.5, 1.0) == (0.0, 0.0)


def test_domain_checks():
    with pytest.raises(DomainError):
        evaluate_grid(SMOOTH, [0.0], [-0.1], [1.0])
    with pytest.raises(DomainError):
        evaluate_grid(SMOOTH, [0.0], [0.0], [1.0])  # below y_min without opting in
    with pytest.raises(ValueError):
        ProblemSpec(P, normalization="other")


def test_linearity_in_load_amplitude():
    a = inner_integrals(normal_load_problem(P, 1.0, mollifier=0.1), 1.0, [0.5], [1.0])[0]
    b = inner_integrals(normal_load_problem(P, 2.5, mollifier=0.1), 1.0, [0.5], [1.0])[0]
    assert np.allclose(b, 2.5 * a, rtol=1e-9, atol=0)


def test_symmetry_reality_and_causality(smooth_row):
    g = smooth_row
    peak = np.max(np.abs(g.v))
    # normal load symmetric in x: u odd, v even
    assert np.max(np.abs(g.u + g.u[..., ::-1])) < 1e-5 * peak
    assert np.max(np.abs(g.v - g.v[..., ::-1])) < 1e-5 * peak
    assert abs(g.u[0, 0, 2]) < 1e-5 * peak
    assert g.imag_residual < 1e-6
    # x = +-3 at t = 0.5 lies outside the P-wave front (cp t = 1): zero to quadrature accuracy
    assert np.max(np.abs(g.v[0, 0, [0, -1]])) < 100 * QuadConfig().tol * peak


def test_closed_form_matches_general_path():
    q = QuadConfig(tol=1e-7)
    a = np.array(evaluate_prop2(P, 1.0, 0.5, 0.5, 1.0, q))
    b = np.array(evaluate_uv(normal_load_problem(P, 1.0), 0.5, 0.5, 1.0, q))
    assert np.max(np.abs(a - b)) <= 1e-4 * np.max(np.abs(a))


# ----------------------------------------------------------------- residuals

def _plane_p_wave(h, dt):
    """Plane P-wave along (cos a, sin a): satisfies the field equations exactly."""
    a = 0.6
    n = np.array([math.cos(a), math.sin(a)])
    x = np.arange(-20, 21) * h
    y = 1.0 + np.arange(0, 41) * h
    t = np.array([1.0 - dt, 1.0, 1.0 + dt])
    T, Y, X = np.meshgrid(t, y, x, indexing="ij")
    phase = np.sin(3 * (n[0] * X + n[1] * Y - P.cp * T))
    return FieldGrid(x, y, t, n[0] * phase, n[1] * phase)


def test_pde_residual_second_order_on_exact_wave():
    r1 = pde_residual(P, _plane_p_wave(0.02, 0.005))["relative"]
    r2 = pde_residual(P, _plane_p_wave(0.01, 0.0025))["relative"]
    assert r1 < 1e-2 and 3.5 < r1 / r2 < 4.5


def test_residuals_of_zero_field():
    z = np.zeros((3, 3, 4))
    g = FieldGrid(np.arange(4.0), np.arange(3.0), np.arange(3.0), z, z.copy())
    assert pde_residual(P, g)["relative"] == 0.0
    assert bc_residual(P, BoundaryForcing(), g) == 0.0
    loaded = BoundaryForcing("normal", 1.0, mollifier=0.5)
    assert bc_residual(P, loaded, g, t_index=1) == pytest.approx(1.0)
    with pytest.raises(GridTooCoarse):
        pde_residual(P, FieldGrid(g.x, g.y, np.array([0.0, 1.0, 3.0]), z, z))


def _traction_free_field(hy):
    """u = sin(ax) f(y), v = cos(ax) g(y) with f'(0) = a g(0), g'(0) = -r a f(0): zero surface traction."""
    a, r = 1.0, P.lam / (P.lam + 2 * P.mu)
    x = np.arange(-200, 201) * 0.005
    y = np.arange(5) * hy
    X, Y = np.meshgrid(x, y)
    u = np.sin(a * X) * (1 + (a - 3) * Y + np.sin(3 * Y))
    v = np.cos(a * X) * (1 - (r * a + 3) * Y + np.sin(3 * Y))
    return FieldGrid(x, y, np.array([0.0]), u[None], v[None])


@pytest.mark.parametrize("order, ratio", [(2, 4.0), (4, 16.0)])
def test_bc_residual_stencil_order(order, ratio):
    r1, r2 = (bc_residual(P, BoundaryForcing(), _traction_free_field(hy), order=order) for hy in (0.1, 0.05))
    assert 0.8 * ratio < r1 / r2 < 1.25 * ratio


# ----------------------------------------------------------------- global relations

def test_global_relation_zero_problem_and_negative_control():
    x = np.linspace(-2, 2, 41)
    y = np.linspace(0, 2, 21)
    z = np.zeros((1, 21, 41))
    field = FieldGrid(x, y, np.array([0.5]), z, z.copy())
    s, w = np.polynomial.legendre.leggauss(8)
    traces = FieldGrid(x, np.array([0.0]), 0.25 * (s + 1), np.zeros((8, 1, 41)), np.zeros((8, 1, 41)),
                       meta={"weights": 0.25 * w})
    assert global_relation_check(ProblemSpec(P), field, traces, 1.0, -0.5j, 0.5)["relative"] == 0.0
    # a loaded problem with a zero field violates the relations at order one
    r = global_relation_check(SMOOTH, field, traces, 1.0, -0.5j, 0.5)["relative"]
    assert r > 0.5
    with pytest.raises(DomainError):
        global_relation_check(SMOOTH, field, traces, 1.0, 0.5j, 0.5)


def test_field_grid_csv_round_trip(tmp_path):
    rng = np.random.default_rng(0)
    g = FieldGrid(np.array([0.0, 1.0]), np.array([0.5]), np.array([0.0, 0.5, 1.0]), rng.normal(size=(3, 1, 2)),
                  rng.normal(size=(3, 1, 2)), 1e-9, {"mode": "general"})
    g.to_csv(tmp_path / "f.csv")
    b = FieldGrid.from_csv(tmp_path / "f.csv")
    assert np.allclose(b.u, g.u, rtol=1e-11) and np.allclose(b.v, g.v, rtol=1e-11)
    assert b.meta["mode"] == "general" and b.imag_residual == 1e-9


# ----------------------------------------------------------------- real-axis tail and surface evaluation

def test_static_tail_integral_matches_fourier_quadrature():
    from scipy.integrate import quad

    from elastoutm.solver import _Ctx, _static_amplitudes, _static_model, _static_model_integral
    from elastoutm.transforms import KnownTransforms
    for k in (0.3, 2.5):
        ctx = _Ctx(SMOOTH, k, np.array([1.0]), KnownTransforms(SMOOTH.forcing, SMOOTH.initial, P))
        amps = _static_amplitudes(ctx)
        ys = np.array([0.3, 1.2])
        exact = _static_model_integral(ctx, ys, amps)
        for yi, y in enumerate(ys):
            f = lambda l: _static_model(ctx, np.array([l]), amps)[1][0, 0].real  # noqa: E731
            ref = 2 * quad(f, 0, np.inf, weight="cos", wvar=y)[0]
            assert abs(exact[1, 0, yi] - ref) < 1e-9 * abs(ref)


def test_near_surface_inner_integral_is_truncation_independent():
    vals = [inner_integrals(SMOOTH, 3.0, [0.2, 0.25], [0.5], QuadConfig(L_l=LL))[0] for LL in (200.0, 600.0)]
    assert np.max(np.abs(vals[0] - vals[1])) <= 1e-5 * np.max(np.abs(vals[1]))


def test_surface_layer_converges_at_large_k():
    q = QuadConfig(y_min=0.0)
    for k in (35.0, 60.0):
        _, diag = inner_integrals(SMOOTH, k, [0.0, 1 / 64], [1.0], q)
        assert diag["converged"]
