"""Branches, coefficient maps, determinants and their zeros."""
import cmath
import math

import mpmath as mp
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from elastoutm.errors import BranchPointHit, OnBranchCut, ZeroArgument
from elastoutm.spectral import (
    MaterialParams, coeffs, continuation_check, delta, delta_scale, delta_zeros, l12, l21, l_map_12,
    l_map_21, omega, rationalized_zeros, sqrt_branch, sqrt_kl,
)

P = MaterialParams(2.0, 1.0)


def mp_continue(square, start_l, end_l, start_value, n=20000):
    """Continue sqrt(square(l)) along the straight segment start_l -> end_l in 50-digit arithmetic."""
    mp.mp.dps = 50
    prev = mp.mpc(start_value)
    a, b = mp.mpc(start_l), mp.mpc(end_l)
    for s in range(1, n + 1):
        # geometric approach so steps shrink near the end point
        z = b + (a - b) * (mp.mpf(10) ** (-14 * mp.mpf(s) / n) if s < n else 0)
        r = mp.sqrt(square(z))
        prev = r if abs(r - prev) <= abs(r + prev) else -r
    return complex(prev)


# ----------------------------------------------------------------- material

def test_material_validation():
    with pytest.raises(ValueError):
        MaterialParams(1.0, 0.0)
    with pytest.raises(ValueError):
        MaterialParams(-3.0, 1.0)
    assert P.cp == 2.0 and P.cs == 1.0
    assert MaterialParams(1.0, 1.0).poisson == pytest.approx(0.25)


# ----------------------------------------------------------------- sqrt branch

def test_sqrt_asymptotics_and_real_axis():
    v = sqrt_branch(1.0, 1e6).value
    assert abs(v / 1e6 - 1) < 1e-11
    assert sqrt_branch(1.0, 0.0).value == pytest.approx(1.0)
    assert sqrt_branch(1.0, 1e-12).value == pytest.approx(1.0)


def test_sqrt_branch_point_raises():
    with pytest.raises(BranchPointHit):
        sqrt_branch(1.0, 1j)
    with pytest.raises(BranchPointHit):
        sqrt_branch(0.0, 0.0)
    assert sqrt_branch(1.0, 0.5j).on_cut
    assert not sqrt_branch(1.0, 0.5 + 0.5j).on_cut


def test_sqrt_matches_continuation_oracle():
    l = 1 + 1j
    far = 1e6 * cmath.exp(1j * math.pi / 4)
    ref = mp_continue(lambda z: 4 + z * z, far, l, far)
    assert abs(complex(sqrt_kl(2.0, l)) - ref) < 1e-12 * abs(ref)


def test_continuation_check_all_maps():
    assert np.max(continuation_check(P, 1.0, n_rays=8, n_steps=2000)) < 1e-10


def test_omega_examples():
    assert complex(omega(2, MaterialParams(2.0, 1.0), 1.0, 0.0)) == pytest.approx(1.0)
    assert complex(omega(1, P, 1.0, 0.0)) == pytest.approx(2.0)
    # l = 3i lies above the cut [-i, i]; continue from +i*infinity side
    far = 1e6 * cmath.exp(1j * (math.pi / 2 - 1e-3))
    ref = 2 * mp_continue(lambda z: 1 + z * z, far, 3j + 1e-12, far)
    assert abs(complex(omega(1, P, 1.0, 3j)) - ref) < 1e-9 * abs(ref)


@settings(max_examples=100, deadline=None)
@given(st.floats(0.1, 5), st.floats(-5, 5), st.floats(-5, 5))
def test_omega_odd_under_l_reflection(k, a, b):
    l = complex(a, b)
    if abs(a) < 1e-3:  # keep off the vertical cut
        l += 0.01
    w = complex(omega(1, P, k, l))
    assert abs(complex(omega(1, P, k, -l)) + w) <= 1e-10 * abs(w)


# ----------------------------------------------------------------- l-maps

def test_lmap_asymptotics():
    assert complex(l21(P, 1.0, 1e6)) / -2e6 == pytest.approx(1.0, rel=1e-10)
    assert complex(l12(P, 1.0, 1e6)) / -5e5 == pytest.approx(1.0, rel=1e-10)


def test_lmap_identity_at_2i():
    m = l_map_21(P, 1.0, 2j)
    assert abs(complex(omega(2, P, 1.0, m)) + complex(omega(1, P, 1.0, 2j))) < 1e-12


def test_lmap_checks():
    with pytest.raises(ZeroArgument):
        l_map_12(P, 1.0, 0)
    with pytest.raises(OnBranchCut):
        l_map_12(P, 1.0, 1.0)
    with pytest.raises(OnBranchCut):
        l_map_21(P, 1.0, 0.5j)
    with pytest.raises(BranchPointHit):
        l_map_21(P, 1.0, 1j * math.sqrt(3) / 2)


@settings(max_examples=100, deadline=None)
@given(st.floats(0.2, 4), st.floats(-6, 6), st.floats(-6, 6))
def test_lmap_frequency_identities(k, a, b):
    l = complex(a, b)
    if min(abs(l.imag), abs(l.real)) < 1e-2:
        l += 0.05 + 0.05j
    w1, w2 = complex(omega(1, P, k, l)), complex(omega(2, P, k, l))
    assert abs(complex(omega(2, P, k, l21(P, k, l))) + w1) <= 1e-10 * abs(w1)
    assert abs(complex(omega(1, P, k, l12(P, k, l))) + w2) <= 1e-10 * abs(w2)


# ----------------------------------------------------------------- coefficients

def test_coeff_examples():
    c = coeffs(P, 1.0, 1j)
    assert complex(c.C4) == pytest.approx(-2.0)
    c0 = coeffs(P, 0.0, 0.7 + 0.2j)
    for name in ("C2", "C3", "D2", "D3"):
        assert complex(getattr(c0, name)) == 0


def test_coeff_tuple_arbitrary_precision():
    mp.mp.dps = 40
    lam, mu, k, l = mp.mpf(2), mp.mpf(1), mp.mpf(1), mp.mpc(1, 1)
    lp2 = lam + 2 * mu
    far = mp.mpc(1e6, 1e6)
    # continue both maps from their normalisation at infinity along the ray through 1+i
    m12 = mp_continue(lambda z: z * z * mu / lp2 - (lam + mu) / lp2 * k * k, far, l, -far * mp.sqrt(mu / lp2))
    m21 = mp_continue(lambda z: z * z * lp2 / mu + (lam + mu) / mu * k * k, far, l, -far * mp.sqrt(lp2 / mu))
    m12, m21 = mp.mpc(m12), mp.mpc(m21)
    ref = [lam * k**2 + m12**2 * lp2, 2 * mu * k * m12, 2 * mu * k * l, -mu * (k**2 - l**2),
           lam * k**2 + l**2 * lp2, -2 * mu * k * l, -2 * mu * k * m21, -mu * (k**2 - m21**2)]
    got = coeffs(P, 1.0, 1 + 1j)
    for g, r in zip(got, ref):
        assert abs(complex(g) - complex(r)) < 1e-12 * max(1.0, abs(complex(r)))


# ----------------------------------------------------------------- determinants

def test_delta_examples():
    assert abs(complex(delta(2, P, 1.0, 1j))) < 1e-12 * float(delta_scale(2, P, 1.0, 1j))
    # k^2 = l^2: the first term of Delta_1 vanishes
    assert complex(delta(1, P, 1.0, 1.0)) == pytest.approx(complex(-4 * l12(P, 1.0, 1.0)))
    c = coeffs(P, 1.0, 0.5 + 0.5j)
    full = complex(c.C1 * c.C4 - c.C2 * c.C3)
    assert abs(complex(delta(1, P, 1.0, 0.5 + 0.5j)) - full) < 1e-12 * abs(full)


@settings(max_examples=60, deadline=None)
@given(st.floats(0.1, 1.5), st.floats(0.2, 3), st.floats(-4, 4), st.floats(-4, 4), st.floats(0.2, 3))
def test_delta_equals_coefficient_determinant(lam_over_mu, mu, a, b, k):
    p = MaterialParams(lam_over_mu * mu, mu)
    l = complex(a, b) + 0.013
    c = coeffs(p, k, l)
    for j, full in ((1, c.C1 * c.C4 - c.C2 * c.C3), (2, c.D1 * c.D4 - c.D2 * c.D3)):
        scale = float(delta_scale(j, p, k, l))
        assert abs(complex(delta(j, p, k, l)) - complex(full)) <= 1e-12 * scale


# ----------------------------------------------------------------- zeros

def test_delta2_zero_set_contains_ik():
    for p in (P, MaterialParams(1.0, 1.0), MaterialParams(0.5, 2.0)):
        zs = delta_zeros(2, p).ratios
        assert any(abs(z - 1j) < 1e-9 for z in zs) and any(abs(z + 1j) < 1e-9 for z in zs)


def test_zero_sets_are_zeros_and_symmetric():
    for j in (1, 2):
        zs = delta_zeros(j, P)
        assert max(zs.residuals) < 1e-10
        for z in zs.ratios:
            assert any(abs(w + z) < 1e-9 for w in zs.ratios)


def test_rationalized_roots_cover_principal_zeros():
    for j in (1, 2):
        roots = rationalized_zeros(j, P)
        assert len(roots) == 8
        principal = [r.ratio for r in roots if r.principal]
        for z in delta_zeros(j, P).ratios:
            assert any(abs(z - r) < 1e-8 for r in principal)
