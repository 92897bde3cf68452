"""Boundary traces through the Volterra system and the Laplace transform in time.

With h~(k,t) = (u~(k,0,t), v~(k,0,t)) the surface displacement transform,

    h~ = K[N] * g~ + K[M] * h~ + K[H],      * = convolution in t,

where ``K[f](k,t) = (1/2 pi) int_{gamma_k2} f(k,l,t) dl / (l (k^2+l^2)^{1/2})``.
The kernels carry ``exp(i omega_j t)``, which grows without bound along any
path running to infinity in the lower half l-plane; ``gamma_k2`` is therefore
a closed curve encircling the omega-cut [-ik, ik] (and the pole l = 0),
counter-clockwise.  Any such curve gives the same value.

The Laplace transform of the system has a closed-form 2x2 solution whose
common denominator is the Rayleigh function; :func:`rayleigh_zeros` locates
its zeros and :func:`invert_laplace` returns to the time domain along a
parabolic Bromwich contour.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.optimize import brentq

from .errors import DivergentIntegral, RayleighPole, RootSearchIncomplete, StepUnstable, ToleranceNotMet
from .spectral import MaterialParams, omega, sqrt_kl
from .transforms import BoundaryForcing, InitialData, initial_transforms

_GL8_X, _GL8_W = np.polynomial.legendre.leggauss(8)


# --------------------------------------------------------------------------- data types

@dataclass(frozen=True)
class BoundaryTrace:
    """Surface displacement transforms u~(k,0,t), v~(k,0,t) on a time grid."""

    k: float
    t: np.ndarray
    u: np.ndarray
    v: np.ndarray
    meta: dict | None = None

    def to_csv(self, path):
        data = np.column_stack([np.full(len(self.t), self.k), self.t, self.u.real, self.u.imag,
                                self.v.real, self.v.imag])
        np.savetxt(path, data, delimiter=",", header="k,t,re_u,im_u,re_v,im_v", comments="", fmt="%.12e")

    @classmethod
    def from_csv(cls, path):
        d = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
        return cls(float(d[0, 0]), d[:, 1], d[:, 2] + 1j * d[:, 3], d[:, 4] + 1j * d[:, 5])


def w_root(c2: float, k: float, p):
    """(p^2 + c2 k^2)^{1/2} with the cut on the segment [-i k sqrt(c2), i k sqrt(c2)].

    Written as ``p sqrt(1 + c2 k^2/p^2)`` so that ``Re w > 0`` whenever ``Re p > 0``
    and ``w ~ p`` at infinity.
    """
    p = np.asarray(p, dtype=complex)
    return p * np.sqrt(1 + c2 * k * k / (p * p))


@dataclass(frozen=True)
class LaplacePoint:
    p: complex
    w1: complex
    w2: complex
    delta: complex


def laplace_point(params: MaterialParams, k: float, p: complex) -> LaplacePoint:
    lam, mu = params.lam, params.mu
    w1 = complex(w_root(lam + 2 * mu, k, p))
    w2 = complex(w_root(mu, k, p))
    return LaplacePoint(complex(p), w1, w2, complex(delta_p(params, k, p)))


def delta_p(params: MaterialParams, k: float, p):
    """The Laplace-domain determinant (vanishes exactly at Rayleigh-wave poles)."""
    lam, mu = params.lam, params.mu
    p = np.asarray(p, dtype=complex)
    w1 = w_root(lam + 2 * mu, k, p)
    w2 = w_root(mu, k, p)
    q = p * p + 2 * mu * k * k
    return q * q / (w1 * w1 * w2 * w2) - 4 * math.sqrt(mu / (lam + 2 * mu)) * mu * k * k / (w1 * w2)


# --------------------------------------------------------------------------- kernels

def kernels(params: MaterialParams, k: float, l, t, data: InitialData = InitialData()):
    """(N, M, H) at (k, l, t); ``l`` and ``t`` broadcast, leading axes are the matrix indices."""
    lam, mu = params.lam, params.mu
    lp2 = lam + 2 * mu
    l = np.asarray(l, dtype=complex)
    t = np.asarray(t, dtype=float)
    w1 = omega(1, params, k, l)
    w2 = omega(2, params, k, l)
    e1 = np.exp(1j * w1 * t)
    e2 = np.exp(1j * w2 * t)
    sm, sl = math.sqrt(mu), math.sqrt(lp2)
    N = np.array([[1j * sm * l * e2, -1j * sm * lp2 / mu * k * e2],
                  [1j * mu / sl * k * e1 + 0 * l, 1j * sl * l * e1]])
    M = np.array([[sm * k * k * e2 + 0 * l, 2 * sm * k * l * e2],
                  [-2 * mu / sl * k * l * e1, -lam / sl * k * k * e1 + 0 * l]])
    if data.is_zero:
        H = np.zeros((2,) + np.broadcast(l, t).shape, dtype=complex)
    else:
        P0, P1, Q0, Q1 = initial_transforms(data, k, l)
        H = np.array([1j * e1 / lp2 * (1j * w1 * P0 + P1), 1j * e2 / mu * (1j * w2 * Q0 + Q1)])
    return N, M, H


# --------------------------------------------------------------------------- gamma_k2

@dataclass(frozen=True)
class GammaK2:
    """Contour for the K operator.

    ``ellipse`` (default) and ``rectangle`` are closed, counter-clockwise and
    enclose the omega-cut [-ik, ik]; ``rectangle`` has its bottom at depth
    ``2|k|`` and width ``8|k|``.  ``line`` is the open horizontal line
    ``Im l = -2|k|`` truncated at ``|Re l| = L``; it is provided to detect
    (and refuse) integrands that do not decay.
    """

    k: float
    kind: str = "ellipse"
    n: int = 512
    L: float = 200.0

    def __post_init__(self):
        if self.kind not in ("ellipse", "rectangle", "line"):
            raise ValueError("kind must be ellipse, rectangle or line")
        if self.n < 16 or self.n % 2:
            raise ValueError("n must be an even integer >= 16")

    @property
    def closed(self):
        return self.kind != "line"

    @property
    def scale(self):
        return max(abs(self.k), 0.25)

    def nodes(self, n: int | None = None):
        """Quadrature nodes and complex weights (dl) along the contour."""
        n = n or self.n
        s = self.scale
        if self.kind == "ellipse":
            a, b = 0.5 * s, 1.25 * s
            th = 2 * np.pi * np.arange(n) / n
            l = a * np.cos(th) + 1j * b * np.sin(th)
            dl = (-a * np.sin(th) + 1j * b * np.cos(th)) * (2 * np.pi / n)
            return l, dl
        if self.kind == "rectangle":
            c = [complex(-4 * s, -2 * s), complex(4 * s, -2 * s), complex(4 * s, 2 * s), complex(-4 * s, 2 * s)]
            return _polyline_nodes(c + [c[0]], n)
        return _polyline_nodes([complex(-self.L, -2 * s), complex(self.L, -2 * s)], n)

    def certificate(self):
        """Minimum distance from the contour to the cut and to l = 0 (must be positive)."""
        l, _ = self.nodes(4096)
        s = abs(self.k)
        y = np.clip(l.imag, -s, s)
        d_cut = np.abs(l - 1j * y)
        return float(min(d_cut.min(), np.abs(l).min()))


def _polyline_nodes(corners, n):
    sides = len(corners) - 1
    per = max(1, n // (8 * sides))
    ls, ws = [], []
    for a, b in zip(corners[:-1], corners[1:]):
        e = np.linspace(0.0, 1.0, per + 1)
        for s0, s1 in zip(e[:-1], e[1:]):
            u = 0.5 * (s0 + s1) + 0.5 * (s1 - s0) * _GL8_X
            ls.append(a + (b - a) * u)
            ws.append((b - a) * 0.5 * (s1 - s0) * _GL8_W)
    return np.concatenate(ls), np.concatenate(ws)


def K_apply(f, k: float, t, contour: GammaK2 | None = None, tol: float = 1e-9):
    """``(1/2 pi) int f(l, t) dl / (l (k^2+l^2)^{1/2})`` over ``contour``.

    ``f(l, t)`` receives ``l`` with shape (n,) and must return an array whose
    last axis runs over ``l``.  The node-halving difference is the error
    estimate; it must not exceed ``tol`` times the absolute-integrand scale.
    """
    contour = contour or GammaK2(k)
    t = np.asarray(t, dtype=float)

    def run(n):
        l, dl = contour.nodes(n)
        weight = dl / (l * sqrt_kl(k, l)) / (2 * np.pi)
        vals = np.asarray(f(l, t), dtype=complex)
        return vals, weight, l

    vals, weight, l = run(contour.n)
    terms = vals * weight
    value = terms.sum(axis=-1)
    scale = np.abs(terms).sum(axis=-1)
    if not contour.closed:
        ends = np.abs(terms[..., [0, -1]]).max(axis=-1) / np.maximum(np.abs(weight[[0, -1]]).max(), 1e-300)
        tail = ends * contour.L
        if np.any(tail > tol * np.maximum(scale, 1e-300)):
            raise DivergentIntegral("integrand does not decay along the open contour; K[f] is undefined")
    vals2, weight2, _ = run(contour.n // 2)
    value2 = (vals2 * weight2).sum(axis=-1)
    err = np.abs(value - value2)
    if np.any(err > tol * np.maximum(scale, 1e-300)):
        raise ToleranceNotMet(f"K quadrature error {float(err.max()):.3g} above tolerance", value)
    return value


def kernel_series(params: MaterialParams, k: float, taus, data: InitialData = InitialData(),
                  contour: GammaK2 | None = None, tol: float = 1e-9):
    """K[N](tau), K[M](tau), K[H](tau) for every entry of ``taus`` (shapes (2,2,n), (2,2,n), (2,n))."""
    taus = np.asarray(taus, dtype=float)

    def make(which):
        def f(l, t):
            N, M, H = kernels(params, k, l[None, :], t[:, None], data if which == 2 else InitialData())
            return (N, M, H)[which]
        return f

    KN = K_apply(make(0), k, taus, contour, tol)
    KM = K_apply(make(1), k, taus, contour, tol)
    KH = K_apply(make(2), k, taus, contour, tol) if not data.is_zero else np.zeros((2, len(taus)), complex)
    return KN, KM, KH


# --------------------------------------------------------------------------- Volterra solver

def _g_samples(forcing: BoundaryForcing, params: MaterialParams, k: float, t):
    from .transforms import g_tilde
    t = np.asarray(t, dtype=float).copy()
    if len(t) and t[0] == 0:
        t[0] = 1e-14 * (t[1] if len(t) > 1 else 1.0)  # right limit at the jump of a suddenly applied load
    return np.array([g_tilde(forcing, params, 1, k, t), g_tilde(forcing, params, 2, k, t)])


def solve_volterra(params: MaterialParams, forcing: BoundaryForcing, data: InitialData, k: float, t_grid,
                   contour: GammaK2 | None = None, tol: float = 1e-10, max_iter: int = 200) -> BoundaryTrace:
    """Trapezoidal time stepping of the second-kind Volterra system.

    The implicit part ``(dt/2) K[M](0) h_n`` is resolved by fixed-point
    iteration; failure to converge raises :class:`StepUnstable`.
    """
    t = np.asarray(t_grid, dtype=float)
    if t.ndim != 1 or len(t) < 2 or t[0] != 0:
        raise ValueError("t_grid must be a 1-D grid starting at 0")
    dt = t[1] - t[0]
    if not np.allclose(np.diff(t), dt, rtol=1e-9, atol=0):
        raise ValueError("t_grid must be uniform")
    n = len(t)
    KN, KM, KH = kernel_series(params, k, t, data, contour)
    g = _g_samples(forcing, params, k, t)
    h = np.zeros((2, n), dtype=complex)
    h[:, 0] = KH[:, 0]
    A = 0.5 * dt * KM[:, :, 0]
    for i in range(1, n):
        # KN(t_i - t_m) for m = 0..i is KN[..., i::-1]
        kn = KN[:, :, i::-1]
        km = KM[:, :, i::-1]
        wts = np.full(i + 1, dt)
        wts[0] = wts[-1] = 0.5 * dt
        known = np.einsum("abm,bm,m->a", kn, g[:, :i + 1], wts)
        known += np.einsum("abm,bm,m->a", km[:, :, :i], h[:, :i], wts[:i])
        known += KH[:, i]
        x = h[:, i - 1].copy()
        for _ in range(max_iter):
            x_new = known + A @ x
            if np.max(np.abs(x_new - x)) <= tol * max(np.max(np.abs(x_new)), 1e-300):
                x = x_new
                break
            x = x_new
        else:
            raise StepUnstable(f"fixed-point iteration did not converge at t={t[i]:.6g}")
        h[:, i] = x
    return BoundaryTrace(float(k), t, h[0], h[1], {"dt": dt, "contour": (contour or GammaK2(k)).kind})


# --------------------------------------------------------------------------- Laplace domain

def _smoothstep_laplace(z):
    """6 int_0^1 (u - u^2) e^{-z u} du, stable for every z."""
    z = np.asarray(z, dtype=complex)
    out = np.empty_like(z)
    small = np.abs(z) < 1.0
    zs = z[small]
    acc = np.zeros_like(zs)
    term = np.ones_like(zs)
    for m in range(30):
        acc += term / ((m + 2) * (m + 3))
        term = term * (-zs) / (m + 1)
    out[small] = 6 * acc
    zl = z[~small]
    e = np.exp(-zl)
    i1 = (1 - e * (1 + zl)) / zl**2
    i2 = (2 - e * (zl * zl + 2 * zl + 2)) / zl**3
    out[~small] = 6 * (i1 - i2)
    return out


def _piecewise_linear_laplace(times, values, p, horizon=math.inf):
    """Laplace transform of the linear interpolant of (times, values), zero before the first
    time and held after the last.

    Written exactly as a sum of a delayed step and delayed ramps.  Terms whose delay exceeds
    ``horizon`` are dropped: the result is the transform of a profile that agrees with the
    interpolant on [0, horizon] and is safe to invert there along contours reaching Re p -> -inf.
    """
    times = np.asarray(times, float)
    values = np.asarray(values, complex)
    p = np.asarray(p, dtype=complex)
    out = np.zeros(p.shape, dtype=complex)
    if times[0] <= horizon:
        out += values[0] * np.exp(-p * times[0]) / p
    slopes = np.concatenate([[0.0], np.diff(values) / np.diff(times), [0.0]])
    for ti, ds in zip(times, np.diff(slopes)):
        if ti <= horizon and ds != 0:
            out += ds * np.exp(-p * ti) / (p * p)
    return out


def g_laplace(forcing: BoundaryForcing, params: MaterialParams, j: int, k: float, p, horizon: float = math.inf):
    """Laplace transform in t of g~_j(k, t).

    With a finite ``horizon`` the delayed pieces of the time profile that start after it are
    dropped (see :func:`_piecewise_linear_laplace`); the inverse is unchanged on [0, horizon].
    """
    p = np.asarray(p, dtype=complex)
    if forcing.is_zero:
        return np.zeros(p.shape, dtype=complex)
    if forcing.kind == "sampled":
        s = forcing.sampled
        vals = s.transform(j, k, s.t)
        return _piecewise_linear_laplace(s.t, np.ravel(vals), p, horizon)
    amp = complex(forcing.amplitude(params, j, k))
    if forcing.kind == "moving":
        return amp / (p + 1j * k * forcing.speed)
    prof = forcing.profile
    if prof.kind == "heaviside":
        return amp / p
    if prof.kind == "smoothed":
        r = prof.rise
        if horizon < r:  # the rising cubic 3(t/r)^2 - 2(t/r)^3 continued past t = r
            return amp * (6 / (r * r * p**3) - 12 / (r**3 * p**4))
        return amp * _smoothstep_laplace(p * r) / p
    return amp * _piecewise_linear_laplace(prof.times, prof.values, p, horizon)


def _forced_response(params, forcing, k, p, horizon=math.inf):
    """Response matrix times g~o; analytic in p off the imaginary cut segments."""
    A, _ = response_matrix(params, k, p)
    g = np.array([g_laplace(forcing, params, 1, k, p, horizon), g_laplace(forcing, params, 2, k, p, horizon)])
    return np.einsum("ab...,b...->a...", A, g)


def response_matrix(params: MaterialParams, k: float, p):
    """The 2x2 surface-response matrix acting on the Laplace-transformed boundary data."""
    lam, mu = params.lam, params.mu
    lp2 = lam + 2 * mu
    p = np.asarray(p, dtype=complex)
    w1 = w_root(lp2, k, p)
    w2 = w_root(mu, k, p)
    q = p * p + 2 * mu * k * k
    r = math.sqrt(mu / lp2)
    R = q * q - 4 * r * mu * k * k * w1 * w2
    A = np.array([[-math.sqrt(mu) * p * p * w2, 1j * k * (lp2 * q - 2 * math.sqrt(mu * lp2) * w1 * w2)],
                  [1j * k * (2 * mu * r * w1 * w2 - mu * q), -math.sqrt(lp2) * p * p * w1]])
    return A / R, R


def laplace_solution(params: MaterialParams, forcing: BoundaryForcing, data: InitialData, k: float, p,
                     contour: GammaK2 | None = None, pole_tol: float = 1e-10):
    """(u~o, v~o)(k, p): the response matrix applied to g~o plus the initial-data term.

    The initial-data term is a contour integral with ``1/(p - i omega_j)``;
    it is valid while the pole stays outside ``contour``, which is enforced by
    requiring ``Re p`` to exceed ``Re(i omega_j)`` on the contour.
    """
    p = np.asarray(p, dtype=complex)
    if np.any(p.real <= 0):
        raise ValueError("need Re p > 0")
    D = delta_p(params, k, p)
    if np.any(np.abs(D) < pole_tol):
        raise RayleighPole("p is at a zero of the Rayleigh determinant")
    out = _forced_response(params, forcing, k, p)
    if data.is_zero:
        return out[0], out[1]
    lam, mu = params.lam, params.mu
    lp2 = lam + 2 * mu
    contour = contour or GammaK2(k)
    lc, _ = contour.nodes()
    w1c, w2c = omega(1, params, k, lc), omega(2, params, k, lc)
    bound = max(float(np.max((1j * w1c).real)), float(np.max((1j * w2c).real)))
    if np.any(p.real <= bound):
        raise ToleranceNotMet(f"Re p must exceed {bound:.4g} for the initial-data term on this contour")
    pf = p.ravel()

    def f1(l, _t):
        P0, P1, _, _ = initial_transforms(data, k, l)
        w1 = omega(1, params, k, l)
        return -1j * (1j * w1 * P0 + P1)[None, :] / (lp2 * (pf[:, None] - 1j * w1[None, :]))

    def f2(l, _t):
        _, _, Q0, Q1 = initial_transforms(data, k, l)
        w2 = omega(2, params, k, l)
        return 1j * (1j * w2 * Q0 + Q1)[None, :] / (mu * (pf[:, None] - 1j * w2[None, :]))

    I1 = K_apply(f1, k, 0.0, contour).reshape(p.shape)
    I2 = K_apply(f2, k, 0.0, contour).reshape(p.shape)
    w1 = w_root(lp2, k, p)
    w2 = w_root(mu, k, p)
    q = p * p + 2 * mu * k * k
    r = math.sqrt(mu / lp2)
    B = np.array([[q / w1**2, 2j * math.sqrt(mu) * k / w2],
                  [-2j * r * math.sqrt(mu) * k / w1, q / w2**2]])
    extra = np.einsum("ab...,b...->a...", B, np.array([I1, I2])) / D
    return out[0] + extra[0], out[1] + extra[1]


# --------------------------------------------------------------------------- Rayleigh zeros

@dataclass(frozen=True)
class RayleighReport:
    """Zeros of the Laplace-domain determinant as s = p/(|k| cs).

    ``zeros`` are on the imaginary axis (+-i c_R/cs); ``cubic_roots`` are the
    roots in eta = c^2/cs^2 of the polynomial obtained by squaring the Rayleigh
    equation; ``pole_free`` is True when all three are real, i.e. when no
    root of the squared equation can lie off the imaginary axis.
    ``threshold_ratio`` is the mu/lam at which the cubic acquires a complex
    pair; ``nominal_threshold`` is the externally quoted value it is compared
    against.
    """

    speed_ratio: float
    zeros: tuple
    cubic_roots: tuple
    classical_ratio: float
    rhp_zero_count: int
    pole_free: bool
    threshold_ratio: float
    nominal_threshold: float
    nominal_pole_free: bool

    def lines(self):
        out = [f"Rayleigh speed c_R/cs = {self.speed_ratio:.10f}",
               f"classical cubic root c/cs = {self.classical_ratio:.10f}",
               "zeros p/(|k| cs): " + ", ".join(f"{z.imag:+.10f}i" for z in self.zeros),
               "squared-equation roots eta = c^2/cs^2: " + ", ".join(_fmt_c(z) for z in self.cubic_roots),
               f"zeros with Re p > 0 on the principal sheet: {self.rhp_zero_count}",
               f"complex-pair threshold mu/lam = {self.threshold_ratio:.6f} (nominal {self.nominal_threshold})"]
        if self.pole_free:
            out.append("classifier: no unstable forcing poles (all squared-equation roots real)")
        else:
            out.append("classifier: complex squared-equation roots present (poles off the imaginary axis)")
        if self.pole_free != self.nominal_pole_free:
            out.append("note: classification differs from the nominal threshold rule for this mu/lam")
        return out


def _fmt_c(z):
    z = complex(z)
    return f"{z.real:.8f}" if abs(z.imag) < 1e-12 else f"{z.real:.8f}{z.imag:+.8f}i"


def _rayleigh_cubic(r):
    """eta^3 - 8 eta^2 + (24 - 16/r) eta - 16 (1 - 1/r), r = cp^2/cs^2."""
    return np.array([1.0, -8.0, 24.0 - 16.0 / r, -16.0 * (1.0 - 1.0 / r)])


def _cubic_discriminant(c):
    a, b, cc, d = c
    return 18 * a * b * cc * d - 4 * b**3 * d + b**2 * cc**2 - 4 * a * cc**3 - 27 * a**2 * d**2


def _rhp_zero_count(params: MaterialParams, R: float = 20.0, delta: float = 1e-3, n: int = 200001):
    """Winding number of the determinant around the right half-disk of radius R (s-plane, k = cs = 1)."""
    cs = params.cs

    def D(s):
        return delta_p(params, 1.0, s * cs)

    y = np.sinh(np.linspace(-np.arcsinh(R / 1e-3), np.arcsinh(R / 1e-3), n)) * 1e-3
    y = y[np.abs(y) <= R]
    line = delta + 1j * y
    th = np.linspace(np.pi / 2, -np.pi / 2, 4001)
    arc = delta + R * np.exp(1j * th)
    z = np.concatenate([line, arc])
    vals = D(z)
    if np.any(vals == 0) or not np.all(np.isfinite(vals)):
        raise RootSearchIncomplete("determinant vanished or overflowed on the counting contour")
    ang = np.unwrap(np.angle(vals))
    return int(round(-(ang[-1] - ang[0]) / (2 * np.pi)))


def rayleigh_zeros(params: MaterialParams, nominal_threshold: float = 0.906) -> RayleighReport:
    """Zeros of the determinant in s = p/(|k| cs) and the pole classification."""
    r = params.cp**2 / params.cs**2

    def f(y):  # determinant at s = 0+ + i y, multiplied by the positive factor (r - y^2)(1 - y^2)
        return (2 - y * y) ** 2 - 4 * math.sqrt(1 - y * y / r) * math.sqrt(1 - y * y)

    ys = np.linspace(1e-6, 1 - 1e-12, 4001)
    fv = np.array([f(y) for y in ys])
    idx = np.nonzero(np.sign(fv[:-1]) * np.sign(fv[1:]) < 0)[0]
    if len(idx) != 1:
        raise RootSearchIncomplete(f"expected one Rayleigh root in (0, cs), found {len(idx)}")
    yR = brentq(f, ys[idx[0]], ys[idx[0] + 1], xtol=1e-15, rtol=1e-15)
    # confirm it is a zero of the full determinant approached from Re p > 0
    s = 1e-9 + 1j * yR
    if abs(complex(delta_p(params, 1.0, s * params.cs))) > 1e-5:
        raise RootSearchIncomplete("bracketed root is not a determinant zero")
    coeffs = _rayleigh_cubic(r)
    roots = np.roots(coeffs)
    real = sorted(float(z.real) for z in roots if abs(z.imag) < 1e-9 and 0 < z.real < 1)
    if not real:
        raise RootSearchIncomplete("classical cubic has no root in (0, 1)")
    classical = math.sqrt(real[0])
    pole_free = bool(_cubic_discriminant(coeffs) > 0)

    def disc(ratio):  # ratio = mu/lam, r = (lam + 2 mu)/mu = 1/ratio + 2
        return _cubic_discriminant(_rayleigh_cubic(1.0 / ratio + 2.0))

    threshold = brentq(disc, 0.2, 5.0, xtol=1e-12)
    count = _rhp_zero_count(params)
    return RayleighReport(
        speed_ratio=yR, zeros=(complex(0, -yR), complex(0, yR)),
        cubic_roots=tuple(sorted((complex(z) for z in roots), key=lambda z: (z.real, z.imag))),
        classical_ratio=classical, rhp_zero_count=count, pole_free=pole_free, threshold_ratio=threshold,
        nominal_threshold=nominal_threshold, nominal_pole_free=params.mu / params.lam > nominal_threshold)


# --------------------------------------------------------------------------- inversion

@dataclass(frozen=True)
class InversionResult:
    values: np.ndarray
    error_estimate: np.ndarray


def _bromwich(F, t, n, sigma, reach, refine=1):
    m = max(math.pi * n / (12 * t), reach)
    h = 3.0 / (n * refine)
    u = h * np.arange(-n * refine, n * refine + 1)
    p = sigma + m * (1 + 1j * u) ** 2
    dp = 2j * m * (1 + 1j * u)
    vals = np.asarray(F(p), dtype=complex)
    return h * np.sum(np.exp(p * t) * vals * dp, axis=-1) / (2j * np.pi)


def invert_laplace(F, t_grid, n: int = 64, sigma: float = 0.0, reach: float = 0.0, tol: float | None = None):
    """Inverse Laplace transform along the parabola ``sigma + m (1 + i u)^2``.

    ``reach`` is the largest |Im| of a singularity on or left of ``Re p =
    sigma``; the parabola scale m is at least that, so the contour encloses
    every singularity.  The difference to the run with twice the nodes on
    the same parabola is the error estimate; with ``tol`` it must not exceed ``tol`` times the peak
    value.  ``t = 0`` returns the initial value ``lim p F(p)``.
    """
    t = np.atleast_1d(np.asarray(t_grid, dtype=float))
    if np.any(t < 0):
        raise ValueError("need t >= 0")
    out = np.zeros(t.shape, dtype=complex)
    err = np.zeros(t.shape)
    for i, ti in enumerate(t):
        if ti == 0:
            big = 1e8 * max(1.0, reach)
            out[i] = big * complex(np.asarray(F(np.array([big + 0j])))[..., 0])
            continue
        a = _bromwich(F, ti, n, sigma, reach)
        b = _bromwich(F, ti, n, sigma, reach, refine=2)
        out[i], err[i] = b, abs(a - b)
    if tol is not None:
        peak = max(float(np.max(np.abs(out))), 1e-300)
        if np.any(err > tol * peak):
            raise ToleranceNotMet(f"inversion error {float(err.max()):.3g} above tolerance", InversionResult(out, err))
    return InversionResult(out, err)


def _forcing_delays(forcing: BoundaryForcing):
    if forcing.is_zero or forcing.kind == "moving":
        return np.zeros(0)
    if forcing.kind == "sampled":
        return np.sort(np.asarray(forcing.sampled.t, float))
    return np.sort(np.asarray(forcing.profile.breakpoints(), float))


def laplace_trace(params: MaterialParams, forcing: BoundaryForcing, k: float, t_grid, n: int = 64,
                  margin: float = 0.1) -> BoundaryTrace:
    """Surface trace for zero initial data by inverting the closed-form Laplace solution.

    Times are grouped by which delayed pieces of the load history have started; each group is
    inverted with those pieces only, so no term e^{p (t - tau)} with tau > t is ever integrated.
    """
    sigma = margin * params.cs * max(abs(k), 1e-12)
    reach = 1.5 * params.cp * abs(k)
    t = np.asarray(t_grid, float)
    delays = _forcing_delays(forcing)
    key = np.searchsorted(delays, t, side="right")
    u = np.zeros(t.shape, dtype=complex)
    v = np.zeros(t.shape, dtype=complex)
    err_u = err_v = 0.0
    for g in np.unique(key):
        idx = np.nonzero(key == g)[0]
        horizon = float(t[idx].min())
        # the parabola also visits Re p < 0, where the closed form is the analytic continuation
        ru = invert_laplace(lambda p: _forced_response(params, forcing, k, p, horizon)[0], t[idx], n, sigma, reach)
        rv = invert_laplace(lambda p: _forced_response(params, forcing, k, p, horizon)[1], t[idx], n, sigma, reach)
        u[idx], v[idx] = ru.values, rv.values
        err_u = max(err_u, float(ru.error_estimate.max()))
        err_v = max(err_v, float(rv.error_estimate.max()))
    return BoundaryTrace(float(k), t, u, v, {"error_u": err_u, "error_v": err_v})


def main_path_trace(params: MaterialParams, forcing: BoundaryForcing, k: float, t_grid, y: float = 0.0,
                    quad=None) -> BoundaryTrace:
    """x-transform of the spectral-representation field at depth ``y`` (-> surface trace as y -> 0)."""
    from .solver import ProblemSpec, QuadConfig, inner_integrals
    quad = quad or QuadConfig(y_min=0.0)
    problem = ProblemSpec(params, forcing=forcing)
    t = np.asarray(t_grid, float)
    tt = np.where(t > 0, t, 1e-12)
    vals, diag = inner_integrals(problem, float(k), np.array([y]), tt, quad)
    fac = 2 * math.pi * problem.prefactor
    return BoundaryTrace(float(k), t, fac * vals[0, :, 0], fac * vals[1, :, 0], diag)
