"""End-to-end acceptance checks, one test per criterion.

Each test records a pass/fail line (printed in the terminal summary) before
asserting.  The shared field computations are module fixtures, so the
whole file takes roughly half an hour on one core.
"""
import math
import re
import time

import numpy as np
import pytest

from elastoutm.cli import main
from elastoutm.fdtd import FdtdConfig, run
from elastoutm.laplace import delta_p, laplace_trace, main_path_trace, rayleigh_zeros, solve_volterra
from elastoutm.solver import (
    FieldGrid, QuadConfig, bc_residual, evaluate_grid, evaluate_prop2, global_relation_check, ic_residual,
    normal_load_problem, pde_residual,
)
from elastoutm.spectral import MaterialParams, coeffs, delta, delta_scale, l12, l21, omega, sqrt_kl
from elastoutm.transforms import BoundaryForcing, InitialData, TimeProfile

P = MaterialParams(2.0, 1.0)
H = 1 / 64
EPS, RISE = 0.1, 0.05
XS = np.arange(-128, 129) * H                      # [-2, 2]
YS = 0.2 + np.arange(116) * H                      # [0.2, 2.0]
DT = 1 / 128
TS = np.array([0, DT, 2 * DT, 0.5 - DT, 0.5, 0.5 + DT, 1 - 2 * DT, 1 - DT, 1.0])
SURFACE = QuadConfig(y_min=0.0)


def mollified(**kw):
    return normal_load_problem(P, 1.0, mollifier=EPS, rise=RISE, **kw)


def rel_l2(a, b):
    return float(np.linalg.norm(a - b) / np.linalg.norm(b))


# ----------------------------------------------------------------- 1. determinant zeros

LISTED = {
    1: [complex(s1 * 1.624, s2 * 0.126) for s1 in (1, -1) for s2 in (1, -1)] + [0.357j, -0.357j, 1.056j, -1.056j],
    2: [complex(s1 * 0.295, s2 * 0.442) for s1 in (1, -1) for s2 in (1, -1)] + [0.885j, -0.885j, 1j, -1j],
}


def _parse(token):
    token = token.strip()
    m = re.fullmatch(r"([+-][\d.]+)([+-][\d.]+)i", token)
    if m:
        return complex(float(m.group(1)), float(m.group(2)))
    if token.endswith("i"):
        return complex(0, float(token[:-1]))
    return complex(float(token))


def test_criterion_1_zero_listing(capsys, record):
    t0 = time.time()
    assert main(["zeros", "--lambda", "2", "--mu", "1"]) == 0
    seconds = time.time() - t0
    out = capsys.readouterr().out.splitlines()
    reported = {}
    for j in (1, 2):
        start = out.index(f"Delta_{j} rationalised zeros (both sheets):") + 1
        rows = []
        for line in out[start:]:
            if not line.startswith("  "):
                break
            rows.append(_parse(line.split("[")[0]))
        reported[j] = rows
    misses = []
    for j, listed in LISTED.items():
        for z in listed:
            d = min(max(abs((z - w).real), abs((z - w).imag)) for w in reported[j])
            if d > 5e-3:
                misses.append(f"Delta_{j} {z:.3f} (nearest off by {d:.3f})")
    ok = not misses and seconds < 10
    record(1, ok, f"{16 - len(misses)}/16 listed zeros within 5e-3, {seconds:.1f} s"
           + (f"; missed: {', '.join(misses)}" if misses else ""))
    assert ok


# ----------------------------------------------------------------- 2. branches and maps

def _off_cut_points(rng, n):
    pts = []
    while len(pts) < n:
        k = rng.uniform(0.2, 4.0)
        l = complex(rng.uniform(-6, 6), rng.uniform(-6, 6))
        if min(abs(l.real), abs(l.imag)) > 0.05:
            pts.append((k, l))
    return pts


def test_criterion_2_branch_identities(record):
    t0 = time.time()
    worst = 0.0
    for k, l in _off_cut_points(np.random.default_rng(2), 100):
        w1, w2 = complex(omega(1, P, k, l)), complex(omega(2, P, k, l))
        for j, w in ((1, w1), (2, w2)):
            worst = max(worst, abs(complex(omega(j, P, k, -l)) + w) / abs(w))
        worst = max(worst, abs(complex(omega(2, P, k, l21(P, k, l))) + w1) / abs(w1))
        worst = max(worst, abs(complex(omega(1, P, k, l12(P, k, l))) + w2) / abs(w2))
    a12, a21 = math.sqrt(P.mu / (P.lam + 2 * P.mu)), math.sqrt((P.lam + 2 * P.mu) / P.mu)
    asym = 0.0
    for k in (0.3, 1.0, 3.0):
        for th in np.linspace(0, 2 * np.pi, 16, endpoint=False) + 0.1:
            l = 1e4 * max(1.0, k) * complex(math.cos(th), math.sin(th))
            asym = max(asym, abs(complex(sqrt_kl(k, l)) / l - 1),
                       abs(complex(l12(P, k, l)) / (-a12 * l) - 1), abs(complex(l21(P, k, l)) / (-a21 * l) - 1))
    seconds = time.time() - t0
    ok = worst < 1e-10 and asym < 1e-6 and seconds < 5
    record(2, ok, f"identities max rel {worst:.1e} (100 points), asymptotics max {asym:.1e}, {seconds:.1f} s")
    assert ok


# ----------------------------------------------------------------- 3. determinant identity

def test_criterion_3_determinant_identity(record):
    t0 = time.time()
    rng = np.random.default_rng(3)
    worst = 0.0
    for k, l in _off_cut_points(rng, 1000):
        c = coeffs(P, k, l)
        for j, full in ((1, c.C1 * c.C4 - c.C2 * c.C3), (2, c.D1 * c.D4 - c.D2 * c.D3)):
            worst = max(worst, abs(complex(delta(j, P, k, l)) - complex(full)) / float(delta_scale(j, P, k, l)))
    at_ik = max(abs(complex(delta(2, P, k, 1j * k))) / float(delta_scale(2, P, k, 1j * k)) for k in (0.3, 1.0, 3.0))
    seconds = time.time() - t0
    ok = worst < 1e-12 and at_ik < 1e-12 and seconds < 5
    record(3, ok, f"reduced vs full determinant max rel {worst:.1e} (1000 points), "
                  f"Delta_2(k, ik) {at_ik:.1e}, {seconds:.1f} s")
    assert ok


# ----------------------------------------------------------------- 4. contour invariance

def test_criterion_4_clearance_invariance(record):
    c = QuadConfig().clearance
    vals, secs = [], []
    for cl in (c, 2 * c):
        t0 = time.time()
        vals.append(np.array(evaluate_prop2(P, 1.0, 0.5, 0.5, 1.0, QuadConfig(path_mode="hybrid", clearance=cl))))
        secs.append(time.time() - t0)
    d = float(np.max(np.abs(vals[0] - vals[1])) / np.max(np.abs(vals[1])))
    ok = d < 1e-4 and max(secs) < 300
    record(4, ok, f"clearance {c} vs {2 * c}: rel diff {d:.1e}, (u, v) = ({vals[0][0]:.6f}, {vals[0][1]:.6f}), "
                  f"max {max(secs):.0f} s/point")
    assert ok


# ----------------------------------------------------------------- 5. residuals

@pytest.fixture(scope="module")
def interior():
    t0 = time.time()
    g = evaluate_grid(mollified(), XS, YS, TS)
    g.meta["seconds"] = time.time() - t0
    return g


def _surface_strip(problem):
    return evaluate_grid(problem, XS, np.arange(5) * H, [0.5, 1.0], SURFACE)


def test_criterion_5_residuals(interior, record):
    t0 = time.time()
    strip = _surface_strip(mollified())
    prob = mollified()
    pde = pde_residual(P, interior)["relative"]
    peak = float(max(np.max(np.abs(interior.u)), np.max(np.abs(interior.v))))
    ic = ic_residual(prob, FieldGrid(XS, YS, TS[:3], interior.u[:3], interior.v[:3]), peak)
    bc4 = bc_residual(P, prob.forcing, strip, order=4)
    bc2 = bc_residual(P, prob.forcing, strip, order=2)
    controls = {}
    for name, kw in (("verbatim normalization", {"normalization": "paper-final-verbatim"}),
                     ("printed denominators", {"denominators": "printed"})):
        wrong = mollified(**kw)
        controls[name] = bc_residual(P, wrong.forcing, _surface_strip(wrong), order=4)
    seconds = interior.meta["seconds"] + time.time() - t0
    ok = (pde < 0.02 and bc4 < 0.02 and ic < 1e-3 and all(v > 0.2 for v in controls.values())
          and seconds < 7200)
    record(5, ok, f"PDE {pde:.2%}, BC {bc4:.2%} (2nd-order stencil {bc2:.2%}), IC {ic:.1e} of peak {peak:.3f}; "
                  + ", ".join(f"{k} BC {v:.0%}" for k, v in controls.items()) + f"; {seconds / 60:.0f} min")
    assert ok


# ----------------------------------------------------------------- 6. finite-difference oracle

def test_criterion_6_fdtd_agreement(interior, record):
    t0 = time.time()
    forcing = BoundaryForcing("normal", 1.0, TimeProfile("smoothed", RISE), mollifier=EPS)
    fd = run(FdtdConfig(P, 3.5, 3.5, 1 / 256), forcing, xs=XS, ys=YS, ts=[0.5, 1.0])
    diffs = []
    for i, ti in enumerate((4, 8)):
        num = np.sum((fd.u[i] - interior.u[ti]) ** 2 + (fd.v[i] - interior.v[ti]) ** 2)
        diffs.append(math.sqrt(num / np.sum(interior.u[ti] ** 2 + interior.v[ti] ** 2)))
    # reported trend: mollified fields approach the exact line-load field as the width halves
    probe = dict(xs=[-1.0, -0.5, 0.0, 0.5, 1.0], ys=[0.5, 1.0], ts=[1.0])
    exact = evaluate_grid(normal_load_problem(P, 1.0, rise=RISE), **probe)
    trend = []
    for e in (0.2, 0.1, 0.05):
        g = evaluate_grid(normal_load_problem(P, 1.0, mollifier=e, rise=RISE), **probe)
        trend.append(rel_l2(np.concatenate([g.u, g.v]), np.concatenate([exact.u, exact.v])))
    g2 = evaluate_grid(normal_load_problem(P, 2.0, mollifier=EPS, rise=RISE), **probe)
    g1 = evaluate_grid(mollified(), **probe)
    lin = rel_l2(np.concatenate([g2.u, g2.v]), 2 * np.concatenate([g1.u, g1.v]))
    seconds = time.time() - t0
    ok = max(diffs) < 0.05 and seconds < 3600
    record(6, ok, f"rel L2 main vs FDTD(h=1/256): t=0.5 {diffs[0]:.2%}, t=1 {diffs[1]:.2%}; "
                  f"mollified vs exact load at eps 0.2/0.1/0.05: " + "/".join(f"{d:.2%}" for d in trend)
                  + f"; linearity {lin:.1e}; {seconds / 60:.0f} min")
    assert ok


# ----------------------------------------------------------------- 7. three boundary traces

def test_criterion_7_boundary_traces(record):
    t0 = time.time()
    forcing = BoundaryForcing("normal", 1.0)
    t = np.linspace(0.0, 2.0, 201)
    worst_lap = worst_main = 0.0
    parts = []
    for k in (0.5, 1.0, 2.0):
        a = solve_volterra(P, forcing, InitialData(), k, t)
        b = laplace_trace(P, forcing, k, t)
        c = main_path_trace(P, forcing, k, t, quad=SURFACE)
        va, vb, vc = (np.concatenate([tr.u, tr.v]) for tr in (a, b, c))
        d_lap, d_main = rel_l2(va, vb), rel_l2(va, vc)
        worst_lap, worst_main = max(worst_lap, d_lap), max(worst_main, d_main)
        parts.append(f"k={k:g}: {d_lap:.1e}/{d_main:.1e}")
    seconds = time.time() - t0
    ok = worst_lap < 0.02 and worst_main < 0.05 and seconds < 600
    record(7, ok, "Volterra vs Laplace / vs main path " + ", ".join(parts) + f"; {seconds:.0f} s")
    assert ok


# ----------------------------------------------------------------- 8. Rayleigh consistency

def _classical_rayleigh(lam, mu):
    """Real root in (0, 1) of the Rayleigh cubic in eta = (c/cs)^2 that solves the unsquared equation."""
    r = (lam + 2 * mu) / mu
    for eta in sorted(z.real for z in np.roots([1, -8, 24 - 16 / r, -16 * (1 - 1 / r)])
                      if abs(z.imag) < 1e-12 and 0 < z.real < 1):
        if abs((2 - eta) ** 2 - 4 * math.sqrt(1 - eta / r) * math.sqrt(1 - eta)) < 1e-9:
            return math.sqrt(eta)
    raise AssertionError("no admissible classical root")


def test_criterion_8_rayleigh(record):
    t0 = time.time()
    parts, ok = [], True
    for lam, mu in ((2.0, 1.0), (1.0, 1.0)):
        p = MaterialParams(lam, mu)
        rep = rayleigh_zeros(p)
        classical = _classical_rayleigh(lam, mu)
        err = abs(rep.speed_ratio / classical - 1)
        on_zero = abs(complex(delta_p(p, 1.0, 1e-9 + 1j * rep.speed_ratio * p.cs)))
        ok &= err < 5e-4 and on_zero < 1e-6
        parts.append(f"nu={p.poisson:.3f}: c_R/cs {rep.speed_ratio:.6f} vs {classical:.6f} (rel {err:.0e})")
    unit = rayleigh_zeros(MaterialParams(1.0, 1.0))
    ok &= unit.pole_free and unit.nominal_pole_free and unit.rhp_zero_count == 0
    seconds = time.time() - t0
    ok &= seconds < 10
    record(8, ok, "; ".join(parts) + f"; mu/lam=1 pole-free: {unit.pole_free and unit.rhp_zero_count == 0}"
                                     f"; {seconds:.1f} s")
    assert ok


# ----------------------------------------------------------------- 9. global relation

def _relation_inputs(problem):
    """Field at t = 0.5 on a grid from the surface, and surface traces at Gauss nodes in [0, 0.5]."""
    field = evaluate_grid(problem, XS, np.arange(103) * H, [0.5], SURFACE)
    a, wa = np.polynomial.legendre.leggauss(4)
    b, wb = np.polynomial.legendre.leggauss(8)
    s = np.concatenate([0.5 * RISE * (a + 1), RISE + 0.5 * (0.5 - RISE) * (b + 1)])
    w = np.concatenate([0.5 * RISE * wa, 0.5 * (0.5 - RISE) * wb])
    traces = evaluate_grid(problem, XS, [0.0], s, SURFACE)
    traces.meta["weights"] = w
    return field, traces


def _scaled(g, factor):
    return FieldGrid(g.x, g.y, g.t, factor * g.u, factor * g.v, meta=dict(g.meta))


def test_criterion_9_global_relation(record):
    t0 = time.time()
    prob = mollified()
    field, traces = _relation_inputs(prob)
    r = global_relation_check(prob, field, traces, 1.0, -0.5j, 0.5)["relative"]
    # manufactured controls: the sign-flipped solution still satisfies the field equations and the
    # zero initial state but carries minus the prescribed surface traction; the zero field carries none
    flip = global_relation_check(prob, _scaled(field, -1), _scaled(traces, -1), 1.0, -0.5j, 0.5)["relative"]
    zero = global_relation_check(prob, _scaled(field, 0), _scaled(traces, 0), 1.0, -0.5j, 0.5)["relative"]
    seconds = time.time() - t0
    ok = r < 0.05 and flip > 0.5 and zero > 0.5 and seconds < 600
    record(9, ok, f"relation residual {r:.1e} at (1, -0.5i, 0.5); BC-violating controls: sign-flipped {flip:.0%}, "
                  f"zero field {zero:.0%}; {seconds:.0f} s")
    assert ok
