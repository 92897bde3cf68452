"""Contour construction, exclusion certificates and adaptive Gauss–Kronrod quadrature."""
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from elastoutm.contour import (
    Arc, Segment, adaptive_pieces, build_gamma_k, build_low_path, integrate_path, integrate_real_line,
    singular_points, verify_certificate,
)
from elastoutm.errors import CertificateViolation, ToleranceNotMet
from elastoutm.solver import QuadConfig, inner_integrals, normal_load_problem
from elastoutm.spectral import MaterialParams

P = MaterialParams(2.0, 1.0)


# ----------------------------------------------------------------- paths

def test_gamma_k_height_and_clearance():
    path = build_gamma_k(P, 1.0, 0.25)
    assert path.meta["height"] >= 1.0 + 0.25 - 1e-12
    for entry in path.exclusion_certificate:
        assert entry.status == "below" and entry.distance >= 0.25 - 1e-12
    # branch points of both maps are below the path
    for z in (1j * math.sqrt(3) / 2, -1j * math.sqrt(3) / 2, math.sqrt(3), -math.sqrt(3)):
        assert path.is_below(z) and path.distance(z) > 0.25 - 1e-12
    assert verify_certificate(path, P, 1.0) >= -1e-12


def test_gamma_k_scales_with_k():
    a, b = build_gamma_k(P, 1.0, 0.25, L=100), build_gamma_k(P, 2.0, 0.25, L=100)
    assert b.meta["height"] == pytest.approx(2 * a.meta["height"])
    pa = [e.point for e in a.exclusion_certificate]
    pb = [e.point for e in b.exclusion_certificate]
    assert np.allclose(2 * np.array(pa), np.array(pb))


def test_gamma_k_rejects_bad_input():
    with pytest.raises(ValueError):
        build_gamma_k(P, 0.0, 0.25)
    with pytest.raises(ValueError):
        build_gamma_k(P, 1.0, 0.0)


@settings(max_examples=25, deadline=None)
@given(st.floats(0.05, 40), st.sampled_from([0, 1, 2]), st.floats(0.01, 0.5))
def test_low_paths_certify(k, family, clearance):
    path = build_low_path(P, k, family, clearance)
    assert verify_certificate(path, P, k) >= -1e-9 * k


def test_tampered_certificate_is_caught():
    path = build_gamma_k(P, 1.0, 0.25)
    flat = type(path)(tuple(Segment(a.a, a.b) for a in path.segments), 5.0, path.exclusion_certificate,
                      kind="trapezoid", meta=path.meta)
    with pytest.raises(CertificateViolation):
        verify_certificate(flat, P, 1.0)


def test_singular_points_include_pole_and_zeros():
    kinds = " ".join(kind for _, kind in singular_points(P, 1.0))
    assert "pole" in kinds and "delta1-zero" in kinds and "delta2-zero" in kinds


# ----------------------------------------------------------------- quadrature

def test_zero_integrand():
    path = build_gamma_k(P, 1.0, 0.25)
    res = integrate_path(lambda l: np.zeros(l.shape, dtype=complex), path)
    assert res.value == 0 and res.error_estimate == 0


def test_residue_theorem_closed_loop():
    path = build_gamma_k(P, 1.0, 0.25, L=30)
    z0 = 0.3 + 0.2j  # below the flat top
    lower = [Arc(0j, 30.0, 0.0, -math.pi / 2), Arc(0j, 30.0, -math.pi / 2, -math.pi)]
    res = adaptive_pieces(lambda l: 1 / (l - z0), list(path.pieces()) + lower, tol=1e-12)
    assert abs(res.value - (-2j * math.pi)) < 1e-10  # clockwise around z0


def test_gaussian_real_line():
    res = integrate_real_line(lambda l: np.exp(-l * l), 10.0, tol=1e-10, decay=("exp", 20.0))
    assert abs(res.value - math.sqrt(math.pi)) < 1e-8
    assert res.truncation_bound < 1e-40


@settings(max_examples=20, deadline=None)
@given(st.floats(0.2, 3), st.floats(0, 5))
def test_even_integrand_is_twice_half_line(a, b):
    f = lambda l: np.cos(b * l) / (1 + (l / a) ** 2) ** 2  # noqa: E731
    full = integrate_real_line(f, 20.0, tol=1e-11).value
    half = adaptive_pieces(f, [Segment(0j, 20 + 0j)], tol=1e-11).value
    assert abs(full - 2 * half) <= 1e-9 * max(1.0, abs(full))


def test_vector_valued_integrand():
    ys = np.array([0.5, 1.0, 2.0])
    res = integrate_real_line(lambda l: np.exp(-np.multiply.outer(l * l, ys)), 12.0, tol=1e-11)
    assert np.allclose(res.value, np.sqrt(np.pi / ys), rtol=1e-9)


def test_factored_integrand_matches_plain():
    ys = np.array([0.2, 0.7])

    def plain(l):
        return np.stack([np.cos(l), np.sin(l) * l], axis=1)[:, :, None] * np.exp(-np.multiply.outer(l * l, ys))[:, None, :]

    def fac(l):
        return np.stack([np.cos(l), np.sin(l) * l], axis=1), np.exp(-np.multiply.outer(l * l, ys))

    fac.factored = True
    pieces = [Segment(-8 + 0j, 8 + 0j)]
    a = adaptive_pieces(plain, pieces, tol=1e-12).value
    b = adaptive_pieces(fac, pieces, tol=1e-12).value
    assert np.allclose(a, b, rtol=1e-13, atol=1e-15)


def test_budget_exhaustion_raises():
    with pytest.raises(ToleranceNotMet):
        adaptive_pieces(lambda l: np.sin(200 * l), [Segment(0j, 50 + 0j)], tol=1e-14, max_panels=20)


# ----------------------------------------------------------------- deformation and truncation on the solver integrand

def test_inner_integral_invariant_under_clearance():
    prob = normal_load_problem(P)
    vals = []
    for c in (0.25, 0.5):
        q = QuadConfig(tol=1e-10, floor=1e-3, clearance=c, path_mode="admissible")
        vals.append(inner_integrals(prob, 1.0, [0.5], [1.0], q, mode="prop2", sigma0=1.0)[0])
    assert np.max(np.abs(vals[0] - vals[1])) <= 1e-6 * np.max(np.abs(vals[0]))


def test_inner_integral_L_refinement():
    prob = normal_load_problem(P)
    L = QuadConfig().l_truncation(1.0, 0.2) - 4.0
    vals = [inner_integrals(prob, 1.0, [0.2], [1.0], QuadConfig(tol=1e-9, floor=1e-3, L_l=LL), mode="prop2",
                            sigma0=1.0)[0] for LL in (L, 2 * L)]
    assert np.max(np.abs(vals[0] - vals[1])) <= 1e-4 * np.max(np.abs(vals[1]))
