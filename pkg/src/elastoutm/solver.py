"""Field evaluation from the spectral representation, and residual diagnostics.

The displacement is

    u = pref * int dk e^{ikx} [ sum_j int_{path_j} dl e^{ily} w_u^{(j)}(k,l,t)
                                + int_R dl e^{ily} w_u^{(R)}(k,l,t) ]

with ``pref = 1/(4 pi^2)`` in the Fourier-consistent convention.  The family
weights ``w^{(j)}`` carry the eliminated unknowns, each over its own
determinant (j=1: U2, V2 over Delta_1; j=2: U1, V1 over Delta_2); the
real-axis weight carries the parity combinations of N_P, N_Q.

For every outer node k the inner integrals are computed for all requested
(y, t) at once (vector-valued adaptive quadrature); the x-dependence is a
final sum over k-nodes.
"""
from __future__ import annotations

import json
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field, replace

import numpy as np

from . import __version__
from .contour import (Segment, adaptive_pieces, build_gamma_k, build_low_path, growth_exponent)
from .errors import DeterminantNearZero, DomainError, GridTooCoarse, ToleranceNotMet
from .spectral import MaterialParams, coeffs, delta, delta_scale, l12, l21, omega_sq
from .transforms import (BoundaryForcing, InitialData, KnownTransforms, TimeProfile, g_tilde, kernel_K,
                         kernel_S)

NORMALIZATIONS = ("fourier-consistent", "paper-final-verbatim")
DENOMINATORS = ("per-unknown", "printed")
_GL16_X, _GL16_W = np.polynomial.legendre.leggauss(16)


@dataclass(frozen=True)
class ProblemSpec:
    """Material, data and representation conventions.

    ``normalization``: ``fourier-consistent`` carries 1/(4 pi^2);
    ``paper-final-verbatim`` omits it.  ``denominators``: ``per-unknown``
    gives each eliminated unknown its own determinant; ``printed`` puts every
    u-term over Delta_1 and every v-term over Delta_2 and halves the v
    coefficients of U1 and U2 (kept as a negative control).
    """

    params: MaterialParams
    initial: InitialData = field(default_factory=InitialData)
    forcing: BoundaryForcing = field(default_factory=BoundaryForcing)
    normalization: str = "fourier-consistent"
    denominators: str = "per-unknown"

    def __post_init__(self):
        if self.normalization not in NORMALIZATIONS:
            raise ValueError(f"normalization must be one of {NORMALIZATIONS}")
        if self.denominators not in DENOMINATORS:
            raise ValueError(f"denominators must be one of {DENOMINATORS}")

    @property
    def prefactor(self):
        return 1 / (4 * math.pi**2) if self.normalization == "fourier-consistent" else 1.0

    @property
    def is_zero(self):
        return self.forcing.is_zero and self.initial.is_zero


@dataclass(frozen=True)
class QuadConfig:
    """Truncations and tolerances of the double integrals.

    ``path_mode``: ``low`` (cut-hugging paths plus loops), ``admissible``
    (the trapezoid for every k) or ``hybrid`` (trapezoid while its growth
    exponent stays below ``max_growth``, low paths beyond).
    ``floor`` is the absolute scale below which the per-k inner tolerance
    stops being relative.  ``conj_symmetry`` evaluates k > 0 only and uses
    I(-k) = conj(I(k)), valid because every supported data type is real.
    """

    tol: float = 1e-6
    floor: float = 0.1
    L_l: float | None = None
    L_k: float | None = None
    clearance: float = 0.05
    path_mode: str = "low"
    max_growth: float = 9.0
    k_panel: float = 2.0
    k_notch: float = 1e-4
    y_min: float = 1e-2
    max_panel: float = 1.0
    max_panels: int = 60000
    conj_symmetry: bool = True

    def __post_init__(self):
        if self.path_mode not in ("low", "admissible", "hybrid"):
            raise ValueError("path_mode must be low, admissible or hybrid")
        if not (self.tol > 0 and self.clearance > 0 and self.k_panel > 0):
            raise ValueError("tol, clearance and k_panel must be positive")

    def l_truncation(self, k, y_lo):
        if self.L_l is not None:
            return self.L_l + 4 * abs(k)
        base = max(50.0, 40.0 / y_lo) if y_lo > 0 else 400.0
        return base + 4 * abs(k)

    def k_truncation(self, forcing: BoundaryForcing, ys, xs):
        if self.L_k is not None:
            return self.L_k
        eps = forcing.mollifier
        if eps > 0:  # Gaussian factor exp(-eps^2 k^2/2) below 1e-9
            return min(max(50.0, math.sqrt(2 * math.log(1e9)) / eps), 400.0)
        yx = max(min(ys), max(abs(x) for x in xs) + 1e-2)
        return max(50.0, 40.0 / yx)


@dataclass
class FieldGrid:
    """u, v on a tensor grid; arrays indexed [t, y, x]."""

    x: np.ndarray
    y: np.ndarray
    t: np.ndarray
    u: np.ndarray
    v: np.ndarray
    imag_residual: float = 0.0
    meta: dict = field(default_factory=dict)

    def at(self, ti):
        return self.u[ti], self.v[ti]

    def to_csv(self, path):
        T, Y, X = np.meshgrid(self.t, self.y, self.x, indexing="ij")
        data = np.column_stack([X.ravel(), Y.ravel(), T.ravel(), self.u.ravel(), self.v.ravel()])
        np.savetxt(path, data, delimiter=",", header="x,y,t,u,v", comments="", fmt="%.12e")
        meta = dict(self.meta)
        meta["imag_residual"] = self.imag_residual
        meta["shape"] = [len(self.t), len(self.y), len(self.x)]
        with open(str(path) + ".json", "w") as fh:
            json.dump(meta, fh, indent=2, sort_keys=True, default=str)

    @classmethod
    def from_csv(cls, path):
        d = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
        x, y, t = (np.unique(d[:, i]) for i in range(3))
        shape = (len(t), len(y), len(x))
        meta = {}
        if os.path.exists(str(path) + ".json"):
            with open(str(path) + ".json") as fh:
                meta = json.load(fh)
        return cls(x, y, t, d[:, 3].reshape(shape), d[:, 4].reshape(shape), meta.get("imag_residual", 0.0), meta)


# --------------------------------------------------------------------------- elimination

def eliminate_unknowns(params: MaterialParams, k: float, l, n_values, check: bool = True):
    """N-only parts of the eliminated unknowns (U1, U2, V1, V2).

    ``n_values = (N_P(k,-l), N_Q(k,l21), N_P(k,l12), N_Q(k,-l))``; extra
    trailing axes (e.g. time) broadcast.
    """
    np_m, nq_21, np_12, nq_m = (np.asarray(a, dtype=complex) for a in n_values)
    l = np.asarray(l, dtype=complex)
    c = coeffs(params, k, l)
    d1 = delta(1, params, k, l)
    d2 = delta(2, params, k, l)
    if check:
        for j, d in ((1, d1), (2, d2)):
            sc = delta_scale(j, params, k, l)
            if np.any(np.abs(d) <= 1e-12 * np.maximum(sc, 1e-300)):
                raise DeterminantNearZero(f"Delta_{j} vanishes at a requested point")
    ex = (...,) + (None,) * (np_m.ndim - l.ndim)
    C1, C2, C3, C4, D1, D2, D3, D4 = (a[ex] for a in c)
    d1, d2 = d1[ex], d2[ex]
    V1 = (-D4 * np_m + D2 * nq_21) / d2
    U1 = (D3 * np_m - D1 * nq_21) / d2
    V2 = (-C4 * np_12 + C2 * nq_m) / d1
    U2 = (C3 * np_12 - C1 * nq_m) / d1
    return U1, U2, V1, V2


# --------------------------------------------------------------------------- weights

@dataclass
class _Ctx:
    problem: ProblemSpec
    k: float
    times: np.ndarray
    known: KnownTransforms
    mode: str = "general"  # or "prop2"
    sigma0: float = 0.0

    @property
    def printed(self):
        return self.problem.denominators == "printed"


def _family_weights(ctx: _Ctx, fam: int, l):
    p = ctx.problem.params
    lam, mu = p.lam, p.mu
    lp2 = lam + 2 * mu
    k = ctx.k
    l = np.asarray(l, dtype=complex)
    ks = k * k + l * l
    le = l[:, None]
    kse = ks[:, None]
    if ctx.mode == "prop2":
        return _prop2_family(ctx, fam, l)
    c = coeffs(p, k, l)
    d1 = delta(1, p, k, l)[:, None]
    d2 = delta(2, p, k, l)[:, None]
    if fam == 2:
        m = l21(p, k, l)
        NPm, _ = ctx.known.npq_times(k, -l, ctx.times, which="P")
        _, NQ21 = ctx.known.npq_times(k, m, ctx.times, which="Q")
        D1, D2, D3, D4 = (a[:, None] for a in c[4:])
        V1 = (-D4 * NPm + D2 * NQ21) / d2
        U1 = (D3 * NPm - D1 * NQ21) / d2
        wu = 2 * (lam * k**3 + k * le * le * lp2) * V1 / kse
        wv = 4 * mu * k * le * le * U1 / kse
        if ctx.printed:
            wu = wu * d2 / d1
            wv = 0.5 * wv
        return wu, wv
    m = l12(p, k, l)
    NP12, _ = ctx.known.npq_times(k, m, ctx.times, which="P")
    _, NQm = ctx.known.npq_times(k, -l, ctx.times, which="Q")
    C1, C2, C3, C4 = (a[:, None] for a in c[:4])
    V2 = (-C4 * NP12 + C2 * NQm) / d1
    U2 = (C3 * NP12 - C1 * NQm) / d1
    wu = -4 * mu * k * le * le * V2 / kse
    wv = 2 * mu * (k**3 - k * le * le) * U2 / kse
    if ctx.printed:
        wv = 0.5 * wv * d1 / d2
    return wu, wv


def _prop2_family(ctx: _Ctx, fam: int, l):
    """Closed-form weights for the suddenly applied normal line load."""
    p = ctx.problem.params
    lam, mu = p.lam, p.mu
    lp2 = lam + 2 * mu
    k = ctx.k
    s0c = ctx.sigma0 * lp2 / (lam + mu)
    le = l[:, None]
    kse = (k * k + l * l)[:, None]
    t = ctx.times[None, :]
    d1 = delta(1, p, k, l)[:, None]
    d2 = delta(2, p, k, l)[:, None]
    if fam == 2:
        w1 = omega_sq(1, p, k, l)[:, None]
        K1 = kernel_K(w1, t)
        m = l21(p, k, l)[:, None]
        D1 = lam * k * k + le * le * lp2
        wu = -s0c * 2 * (lam * k**3 * le + k * le**3 * lp2) * (w1 * K1) / (kse * d2)
        wv = -s0c * 4 * mu * k * k * le * le * (2 * mu * le * m + D1) * K1 / (kse * d2)
        if ctx.printed:
            wu = wu * d2 / d1
            wv = 0.5 * wv
        return wu, wv
    w2 = omega_sq(2, p, k, l)[:, None]
    K2 = kernel_K(w2, t)
    m = l12(p, k, l)[:, None]
    wu = -s0c * 4 * mu * k * le * le * m * (w2 * K2) / (kse * d1)
    wv = s0c * 2 * mu**2 * k * k * (k * k - le * le) * (k * k - le * le - 2 * le * m) * K2 / (kse * d1)
    if ctx.printed:
        wv = wv * d1 / d2
    return wu, wv


def _real_weights(ctx: _Ctx, l):
    p = ctx.problem.params
    k = ctx.k
    l = np.asarray(l, dtype=complex)
    le = l[:, None]
    kse = (k * k + l * l)[:, None]
    if ctx.mode == "prop2":
        lam, mu = p.lam, p.mu
        s0c = ctx.sigma0 * (lam + 2 * mu) / (lam + mu)
        t = ctx.times[None, :]
        K1 = kernel_K(omega_sq(1, p, k, l)[:, None], t)
        K2 = kernel_K(omega_sq(2, p, k, l)[:, None], t)
        wv = -2 * s0c * (le * le * K1 + k * k * K2) / kse
        return np.zeros_like(wv), wv
    NP, NQ = ctx.known.npq_times(k, l, ctx.times)
    NPm, NQm = ctx.known.npq_times(k, -l, ctx.times)
    wu = (k * (NP + NPm) + le * (NQ - NQm)) / kse
    wv = (le * (NP - NPm) - k * (NQ + NQm)) / kse
    return wu, wv


def _static_amplitudes(ctx: _Ctx):
    """g~_1(k, t), g~_2(k, t) at the output times (the quasi-static part of every Duhamel term)."""
    if ctx.mode == "prop2":
        p = ctx.problem.params
        g2 = np.where(ctx.times > 0, ctx.sigma0 / (p.lam + p.mu), 0.0)
        return np.zeros_like(g2, dtype=complex), g2.astype(complex)
    f = ctx.problem.forcing
    if f.is_zero:
        z = np.zeros(ctx.times.shape, dtype=complex)
        return z, z
    g1 = np.asarray(g_tilde(f, ctx.problem.params, 1, ctx.k, ctx.times), dtype=complex) * (ctx.times > 0)
    g2 = np.asarray(g_tilde(f, ctx.problem.params, 2, ctx.k, ctx.times), dtype=complex) * (ctx.times > 0)
    return g1, g2


def _static_model(ctx: _Ctx, l, amps):
    """Large-|l| part of the real-axis weights with every Duhamel term replaced by g~(k,t)/omega^2.

    With ``kappa = max(|k|, 1)`` in place of ``|k|`` in the double pole the
    model keeps the 1/l^2 tail of the true weights but stays bounded as k -> 0.
    """
    p = ctx.problem.params
    r = p.mu / (p.lam + 2 * p.mu)
    k = ctx.k
    kap = max(abs(k), 1.0)
    l = np.asarray(l, dtype=complex)[:, None]
    S2 = (l * l + kap * kap) ** 2
    g1, g2 = (a[None, :] for a in amps)
    mu_ = -2 * g1 * (r * k * k + l * l) / S2
    mv_ = -2 * g2 * (l * l + k * k / r) / S2
    return mu_, mv_


def _static_model_integral(ctx: _Ctx, ys, amps):
    """Exact real-line integral of ``_static_model`` times exp(i l y), shape (2, n_t, n_y)."""
    p = ctx.problem.params
    r = p.mu / (p.lam + 2 * p.mu)
    k = ctx.k
    kap = max(abs(k), 1.0)
    y = np.abs(np.asarray(ys, dtype=float))[None, :]
    e = np.exp(-kap * y)
    I0 = math.pi * (1 + kap * y) * e / (2 * kap**3)   # int e^{ily} / (l^2+kap^2)^2
    I2 = math.pi * (1 - kap * y) * e / (2 * kap)      # int e^{ily} l^2 / (l^2+kap^2)^2
    g1, g2 = (a[:, None] for a in amps)
    return np.stack([-2 * g1 * (r * k * k * I0 + I2), -2 * g2 * (I2 + k * k / r * I0)])


def _vector_integrand(weight_fn, ys):
    """Integrand ``(u, v)-weights (x) exp(i l y)`` in the factored form of the quadrature."""
    ys = np.asarray(ys, dtype=float)

    def f(l):
        wu, wv = weight_fn(l)
        return np.stack([wu, wv], axis=1), np.exp(1j * np.multiply.outer(l, ys))

    f.factored = True
    return f


# --------------------------------------------------------------------------- inner integrals

def _paths_for_k(problem: ProblemSpec, k: float, quad: QuadConfig, y_lo: float, t_hi: float, L: float):
    """List of (path, families) covering the contour part for this k."""
    p = problem.params
    printed = problem.denominators == "printed"
    if quad.path_mode in ("admissible", "hybrid"):
        trap = build_gamma_k(p, k, quad.clearance, L=L)
        if quad.path_mode == "admissible" or growth_exponent(p, trap, y_lo, t_hi) <= quad.max_growth:
            return [(trap, (1, 2))]
    # loop radius keeping c_p t |Im omega| = O(1) on the loops around l = ik
    rmax = max(1e-6 * abs(k), 0.5 / ((p.cp * max(t_hi, 1e-6)) ** 2 * abs(k)))
    if printed:
        return [(build_low_path(p, k, 0, quad.clearance, L=L, max_loop_radius=rmax), (1, 2))]
    return [(build_low_path(p, k, 1, quad.clearance, L=L, max_loop_radius=rmax), (1,)),
            (build_low_path(p, k, 2, quad.clearance, L=L, max_loop_radius=rmax), (2,))]


def inner_integrals(problem: ProblemSpec, k: float, ys, times, quad: QuadConfig = QuadConfig(),
                    mode: str = "general", sigma0: float = 0.0):
    """l-integrals for one k: arrays (2, n_t, n_y) for (u, v) and a diagnostics dict."""
    ys = np.atleast_1d(np.asarray(ys, dtype=float))
    times = np.atleast_1d(np.asarray(times, dtype=float))
    ctx = _Ctx(problem, k, times, KnownTransforms(problem.forcing, problem.initial, problem.params), mode, sigma0)
    y_lo = float(np.min(ys))
    L = quad.l_truncation(k, y_lo)
    total = np.zeros((2, len(times), len(ys)), dtype=complex)
    diag = {"panels": 0, "error": 0.0, "paths": [], "converged": True, "L_l": L}
    max_panel = min(quad.max_panel, math.pi / max(1e-9, float(np.max(ys))) / 2)

    def run(pieces, fn):
        res = adaptive_pieces(_vector_integrand(fn, ys), pieces, quad.tol, quad.floor, max_panel,
                              quad.max_panels, raise_on_fail=False)
        diag["panels"] += res.panels_used
        diag["error"] += res.error_estimate
        diag["converged"] &= res.converged
        return res.value

    for path, fams in _paths_for_k(problem, k, quad, y_lo, float(np.max(times)), L):
        diag["paths"].append(path.kind)

        def fn(l, fams=fams):
            acc = None
            for fam in fams:
                wu, wv = _family_weights(ctx, fam, l)
                acc = (wu, wv) if acc is None else (acc[0] + wu, acc[1] + wv)
            return acc

        total += run(path.pieces(), fn)
    # the real-axis weights decay only like 1/l^2; their quasi-static part is
    # subtracted and integrated in closed form so the truncation at +-L leaves
    # an O(L^-3) tail instead of an O(L^-1 y^-1) ripple at wavenumber L
    amps = _static_amplitudes(ctx)

    def real_fn(l):
        wu, wv = _real_weights(ctx, l)
        mu_, mv_ = _static_model(ctx, l, amps)
        return wu - mu_, wv - mv_

    ak = abs(k)
    edges = sorted({-L, -ak, 0.0, ak, L})
    total += run([Segment(complex(a), complex(b)) for a, b in zip(edges[:-1], edges[1:])], real_fn)
    total += _static_model_integral(ctx, ys, amps)
    return total, diag


def _k_nodes(L_k: float, panel: float, notch: float):
    n = max(1, int(math.ceil(L_k / panel)))
    edges = np.linspace(0.0, L_k, n + 1)
    ks, ws = [], []
    for a, b in zip(edges[:-1], edges[1:]):
        ks.append(0.5 * (a + b) + 0.5 * (b - a) * _GL16_X)
        ws.append(0.5 * (b - a) * _GL16_W)
    ks, ws = np.concatenate(ks), np.concatenate(ws)
    keep = ks > notch
    ks, ws = ks[keep], ws[keep]
    return np.concatenate([-ks[::-1], ks]), np.concatenate([ws[::-1], ws])


def _threads():
    n = int(os.environ.get("SOLVER_THREADS", "0") or 0)
    return n if n > 0 else (os.cpu_count() or 1)


def evaluate_grid(problem: ProblemSpec, xs, ys, ts, quad: QuadConfig = QuadConfig(), mode: str = "general",
                  sigma0: float = 0.0, strict: bool = False) -> FieldGrid:
    """u, v on the tensor grid xs x ys x ts.

    ``mode="prop2"`` uses the closed-form weights of the suddenly applied
    normal line load of strength ``sigma0`` (``problem.forcing`` is then
    ignored).  With ``strict`` a non-converged inner quadrature raises
    :class:`ToleranceNotMet` (the grid is attached to the exception).
    """
    xs = np.atleast_1d(np.asarray(xs, dtype=float))
    ys = np.atleast_1d(np.asarray(ys, dtype=float))
    ts = np.atleast_1d(np.asarray(ts, dtype=float))
    if np.any(ys < 0) or np.any(ts < 0):
        raise DomainError("need y >= 0 and t >= 0")
    if np.any(ys < quad.y_min) and quad.y_min > 0:
        raise DomainError(f"y below y_min={quad.y_min}; lower quad.y_min to opt in")
    shape = (len(ts), len(ys), len(xs))
    meta = {"normalization": problem.normalization, "denominators": problem.denominators, "mode": mode,
            "quad": asdict(quad), "version": __version__}
    zero = (problem.is_zero if mode == "general" else sigma0 == 0)
    if zero:
        meta.update(k_nodes=0, converged=True)
        return FieldGrid(xs, ys, ts, np.zeros(shape), np.zeros(shape), 0.0, meta)
    L_k = quad.k_truncation(problem.forcing if mode == "general" else BoundaryForcing(), ys, xs)
    kn, kw = _k_nodes(L_k, quad.k_panel, quad.k_notch)
    if quad.conj_symmetry:
        half = kn > 0
        kn, kw = kn[half], kw[half]

    def one(k):
        return inner_integrals(problem, float(k), ys, ts, quad, mode, sigma0)

    nthreads = _threads()
    if nthreads > 1:
        with ThreadPoolExecutor(nthreads) as ex:
            results = list(ex.map(one, kn))
    else:
        results = [one(k) for k in kn]
    acc = np.zeros((2,) + shape, dtype=complex)
    phase = np.exp(1j * np.outer(kn, xs))  # (nk, nx)
    err, panels, conv, kinds = 0.0, 0, True, set()
    for i, (val, diag) in enumerate(results):
        term = kw[i] * val[..., None] * phase[i][None, None, None, :]
        acc += 2 * term.real if quad.conj_symmetry else term
        err += kw[i] * diag["error"] * (2 if quad.conj_symmetry else 1)
        panels += diag["panels"]
        conv &= diag["converged"]
        kinds.update(diag["paths"])
    acc *= problem.prefactor
    scale = float(np.max(np.abs(acc.real))) if acc.size else 0.0
    imag = float(np.max(np.abs(acc.imag))) / scale if scale > 0 else float(np.max(np.abs(acc.imag)))
    meta.update(k_nodes=len(kn) * (2 if quad.conj_symmetry else 1), L_k=L_k, panels=panels, error_estimate=err * problem.prefactor,
                converged=bool(conv), path_kinds=sorted(kinds))
    grid = FieldGrid(xs, ys, ts, acc[0].real.copy(), acc[1].real.copy(), imag, meta)
    if strict and not conv:
        raise ToleranceNotMet("inner quadrature did not converge for some k-nodes", grid)
    return grid


def evaluate_uv(problem: ProblemSpec, x: float, y: float, t: float, quad: QuadConfig = QuadConfig()):
    """(u, v) at one point."""
    g = evaluate_grid(problem, [x], [y], [t], quad)
    return float(g.u[0, 0, 0]), float(g.v[0, 0, 0])


def evaluate_prop2(params: MaterialParams, sigma0: float, x: float, y: float, t: float,
                   quad: QuadConfig = QuadConfig(), normalization: str = "fourier-consistent",
                   printed: bool = False):
    """(u, v) for the suddenly applied normal line load from its closed-form integrands.

    ``printed=True`` evaluates the determinants/coefficients exactly as
    displayed in the original closed form (kept as a diagnostic).
    """
    prob = ProblemSpec(params, normalization=normalization, denominators="printed" if printed else "per-unknown")
    g = evaluate_grid(prob, [x], [y], [t], quad, mode="prop2", sigma0=sigma0)
    return float(g.u[0, 0, 0]), float(g.v[0, 0, 0])


def normal_load_problem(params: MaterialParams, sigma0: float = 1.0, mollifier: float = 0.0, rise: float = 0.0,
                        **kw) -> ProblemSpec:
    prof = TimeProfile("smoothed", rise) if rise > 0 else TimeProfile("heaviside")
    return ProblemSpec(params, forcing=BoundaryForcing("normal", sigma0, prof, mollifier=mollifier), **kw)


# --------------------------------------------------------------------------- residuals

def _uniform(a):
    d = np.diff(a)
    return len(a) >= 3 and np.allclose(d, d[0], rtol=1e-9, atol=1e-14)


def pde_residual(params: MaterialParams, grid: FieldGrid):
    """Relative Lame–Navier residual on interior nodes of every time triple."""
    if not (_uniform(grid.x) and _uniform(grid.y)):
        raise GridTooCoarse("need uniform x, y grids with at least 3 nodes")
    hx, hy = grid.x[1] - grid.x[0], grid.y[1] - grid.y[0]
    lam, mu = params.lam, params.mu
    num = den = 0.0
    used = []
    for i in range(1, len(grid.t) - 1):
        dtm, dtp = grid.t[i] - grid.t[i - 1], grid.t[i + 1] - grid.t[i]
        if not np.isclose(dtm, dtp, rtol=1e-9):
            continue
        dt = dtm
        used.append(float(grid.t[i]))
        out = []
        for f in (grid.u, grid.v):
            ftt = (f[i + 1] - 2 * f[i] + f[i - 1])[1:-1, 1:-1] / dt**2
            c = f[i]
            fxx = (c[1:-1, 2:] - 2 * c[1:-1, 1:-1] + c[1:-1, :-2]) / hx**2
            fyy = (c[2:, 1:-1] - 2 * c[1:-1, 1:-1] + c[:-2, 1:-1]) / hy**2
            fxy = (c[2:, 2:] - c[2:, :-2] - c[:-2, 2:] + c[:-2, :-2]) / (4 * hx * hy)
            out.append((ftt, fxx, fyy, fxy))
        (utt, uxx, uyy, uxy), (vtt, vxx, vyy, vxy) = out
        ru = utt - ((lam + 2 * mu) * uxx + mu * uyy + (lam + mu) * vxy)
        rv = vtt - (mu * vxx + (lam + 2 * mu) * vyy + (lam + mu) * uxy)
        num += np.sum(ru**2 + rv**2)
        den += np.sum(utt**2 + vtt**2)
    if not used:
        raise GridTooCoarse("need three equally spaced time levels")
    return {"relative": float(math.sqrt(num / den)) if den > 0 else float(math.sqrt(num)), "times": used}


def bc_residual(params: MaterialParams, forcing: BoundaryForcing, grid: FieldGrid, t_index=None, order: int = 2):
    """Stress-condition residual at the lowest layer y = grid.y[0] (expected 0).

    ``order=2`` uses one-sided second-order y-derivatives from the first three
    layers and centred second-order x-derivatives; ``order=4`` uses five layers
    and fourth-order stencils in both directions (second order at the two x
    ends).  Relative to the norm of the data g1, g2 on the same nodes.
    """
    if order not in (2, 4):
        raise ValueError("order must be 2 or 4")
    m = order + 1
    if len(grid.y) < m or not _uniform(grid.y[:m]) or not _uniform(grid.x):
        raise GridTooCoarse(f"need {m} uniform y-layers and a uniform x grid")
    hx, hy = grid.x[1] - grid.x[0], grid.y[1] - grid.y[0]
    lam, mu = params.lam, params.mu
    x = grid.x
    wy = np.array([-3, 4, -1]) / 2 if order == 2 else np.array([-25, 48, -36, 16, -3]) / 12

    def dx(f):
        d = np.gradient(f, hx, edge_order=2)
        if order == 4 and len(f) >= 5:
            d[2:-2] = (f[:-4] - 8 * f[1:-3] + 8 * f[3:-1] - f[4:]) / (12 * hx)
        return d

    idx = range(len(grid.t)) if t_index is None else [t_index]
    num = den = 0.0
    for i in idx:
        t = grid.t[i]
        u, v = grid.u[i], grid.v[i]
        uy = np.tensordot(wy, u[:m], axes=1) / hy
        vy = np.tensordot(wy, v[:m], axes=1) / hy
        ux, vx = dx(u[0]), dx(v[0])
        g1, g2 = boundary_data(params, forcing, x, t)
        r1 = uy + vx - g1
        r2 = vy + lam / (lam + 2 * mu) * ux - g2
        num += np.sum(r1**2 + r2**2)
        den += np.sum(g1**2 + g2**2)
    return float(math.sqrt(num / den)) if den > 0 else float(math.sqrt(num))


def boundary_data(params: MaterialParams, forcing: BoundaryForcing, x, t):
    """Point values g1(x,t), g2(x,t) of mollified line loads (zero otherwise)."""
    x = np.asarray(x, dtype=float)
    z = np.zeros_like(x)
    if forcing.is_zero:
        return z, z
    if forcing.kind == "sampled":
        s = forcing.sampled
        it = int(np.argmin(np.abs(s.t - t)))
        return np.interp(x, s.x, s.g1[it]), np.interp(x, s.x, s.g2[it])
    if forcing.mollifier <= 0:
        raise DomainError("point values of an exact line load are not defined")
    e = forcing.mollifier
    if forcing.kind == "moving":
        shape = np.exp(-0.5 * ((x - forcing.speed * t) / e) ** 2) / (e * math.sqrt(2 * math.pi))
        amp = forcing.sigma0 / (params.lam + params.mu)
        return z, amp * shape * (t >= 0)
    shape = np.exp(-0.5 * (x / e) ** 2) / (e * math.sqrt(2 * math.pi)) * float(forcing.profile(t))
    if forcing.kind == "tangential":
        return forcing.sigma0 / params.mu * shape, z
    return z, forcing.sigma0 / (params.lam + params.mu) * shape


def ic_residual(problem: ProblemSpec, grid: FieldGrid, peak: float):
    """max |field - data| at t=0 and |d/dt field - velocity data| (2nd-order one-sided), over ``peak``."""
    if len(grid.t) < 3 or abs(grid.t[0]) > 0 or not _uniform(grid.t[:3]):
        raise GridTooCoarse("need t = 0, dt, 2 dt")
    dt = grid.t[1] - grid.t[0]
    X, Y = np.meshgrid(grid.x, grid.y)
    d = problem.initial
    worst = 0.0
    for f, n0, n1 in ((grid.u, "u0", "u1"), (grid.v, "v0", "v1")):
        f0 = d.field_values(n0, X, Y)
        f1 = d.field_values(n1, X, Y)
        ft = (-3 * f[0] + 4 * f[1] - f[2]) / (2 * dt)
        worst = max(worst, float(np.max(np.abs(f[0] - f0))), float(np.max(np.abs(ft - f1))) * dt)
    return worst / peak if peak > 0 else worst


def residuals(problem: ProblemSpec, grid: FieldGrid, surface: FieldGrid | None = None,
              initial: FieldGrid | None = None, bc_order: int = 2):
    """Report of PDE (interior of ``grid``), BC (``surface``: the first
    ``bc_order + 1`` layers starting at y=0) and IC (``initial``: t = 0, dt,
    2dt) residuals."""
    rep = {"pde": pde_residual(problem.params, grid)["relative"]}
    peak = float(max(np.max(np.abs(grid.u)), np.max(np.abs(grid.v))))
    rep["peak"] = peak
    if surface is not None:
        rep["bc"] = bc_residual(problem.params, problem.forcing, surface, order=bc_order)
    if initial is not None:
        rep["ic"] = ic_residual(problem, initial, peak)
    return rep


def global_relation_check(problem: ProblemSpec, field_grid: FieldGrid, traces: FieldGrid, k: float, l: complex,
                          t: float):
    """Relative residual of the two global relations at (k, l, t).

    ``field_grid`` holds u, v at the single time ``t`` on a uniform grid
    starting at y = 0 that covers the support; ``traces`` holds the
    surface values (y = 0) at Gauss–Legendre nodes in [0, t] (its
    ``meta['weights']`` gives the weights).
    """
    l = complex(l)
    if l.imag > 1e-14:
        raise DomainError("global relations hold for Im l <= 0")
    if not (_uniform(field_grid.x) and _uniform(field_grid.y)):
        raise GridTooCoarse("need a uniform grid")
    p = problem.params
    x, y = field_grid.x, field_grid.y
    hx, hy = x[1] - x[0], y[1] - y[0]
    wx = np.full(len(x), hx)
    wx[[0, -1]] *= 0.5
    wy = np.full(len(y), hy)
    wy[[0, -1]] *= 0.5
    ex = np.exp(-1j * k * x) * wx
    ey = np.exp(-1j * l * y) * wy
    ti = int(np.argmin(np.abs(field_grid.t - t)))
    uh = ey @ field_grid.u[ti] @ ex
    vh = ey @ field_grid.v[ti] @ ex
    # surface transforms at the trace times
    s = traces.t
    ws = np.asarray(traces.meta["weights"], dtype=float)
    xs = traces.x
    wxs = np.full(len(xs), xs[1] - xs[0])
    wxs[[0, -1]] *= 0.5
    exs = np.exp(-1j * k * xs) * wxs
    ut = traces.u[:, 0, :] @ exs
    vt = traces.v[:, 0, :] @ exs
    lam, mu = p.lam, p.mu

    def big(j, f):
        w2 = omega_sq(j, p, k, l)
        return -1j * np.sum(kernel_S(w2, t - s) * f * ws)

    U1, U2, V1, V2 = big(1, ut), big(2, ut), big(1, vt), big(2, vt)
    NP, NQ = KnownTransforms(problem.forcing, problem.initial, p).npq(k, np.array([l]), t)
    NP, NQ = complex(NP[0]), complex(NQ[0])
    lhs1, lhs2 = k * uh + l * vh, l * uh - k * vh
    rhs1 = (lam * k * k + l * l * (lam + 2 * mu)) * V1 + 2 * mu * k * l * U1 + NP
    rhs2 = -mu * (k * k - l * l) * U2 - 2 * mu * k * l * V2 + NQ
    r = math.hypot(abs(lhs1 - rhs1), abs(lhs2 - rhs2))
    sc = max(math.hypot(abs(lhs1), abs(lhs2)), math.hypot(abs(rhs1), abs(rhs2)), abs(NP) + abs(NQ), 1e-300)
    return {"relative": r / sc, "lhs": (lhs1, lhs2), "rhs": (rhs1, rhs2), "N": (NP, NQ)}
