"""Transforms of the initial and boundary data and the driving functions N_P, N_Q.

Conventions: ``g~(k,t) = int e^{-ikx} g(x,t) dx`` and
``f^(k,l) = int dx int_0^inf dy e^{-ikx-ily} f(x,y)``.

Every time-convolution is written through the kernels

    S(w2, r) = sin(w r) / w          K(w2, r) = (1 - cos(w r)) / w^2

which are entire in ``w2 = omega^2``, so none of the quantities below depend on
the branch chosen for omega and there is no 0/0 at ``l = +-ik``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np
from scipy.special import wofz

from .errors import DomainError, GridTooCoarse
from .spectral import MaterialParams, omega, omega_sq

_GL_X, _GL_W = np.polynomial.legendre.leggauss(16)
SERIES_SWITCH = 1e-3


# --------------------------------------------------------------------------- kernels

def _sinc_z(z):
    """sin(z)/z for complex arrays, series below SERIES_SWITCH."""
    z = np.asarray(z, dtype=complex)
    small = np.abs(z) < SERIES_SWITCH
    with np.errstate(invalid="ignore", divide="ignore"):
        out = np.where(small, 1.0, np.sin(z) / np.where(small, 1.0, z))
    z2 = z * z
    return np.where(small, 1.0 - z2 / 6.0 + z2 * z2 / 120.0, out)


def kernel_S(w2, r):
    """sin(w r)/w as a function of w^2 (entire)."""
    w = np.sqrt(np.asarray(w2, dtype=complex))
    return r * _sinc_z(w * r)


def kernel_C(w2, r):
    """cos(w r) as a function of w^2 (entire)."""
    w = np.sqrt(np.asarray(w2, dtype=complex))
    return np.cos(w * r)


def kernel_K(w2, r):
    """(1 - cos(w r))/w^2 = (r^2/2) sinc(w r/2)^2, stable as w -> 0."""
    w = np.sqrt(np.asarray(w2, dtype=complex))
    s = _sinc_z(0.5 * w * r)
    return 0.5 * r * r * s * s


# --------------------------------------------------------------------------- data types

@dataclass(frozen=True)
class TimeProfile:
    """Time dependence of a line load: ``heaviside``, ``smoothed`` or ``sampled``.

    ``smoothed`` is the C1 smoothstep ``3 s^2 - 2 s^3`` (s = t/rise) reaching one
    at ``t = rise``.  ``sampled`` interpolates ``values`` linearly on ``times``
    and holds the last value.
    """

    kind: str = "heaviside"
    rise: float = 0.0
    times: tuple = ()
    values: tuple = ()

    def __post_init__(self):
        if self.kind not in ("heaviside", "smoothed", "sampled"):
            raise ValueError(f"unknown time profile {self.kind!r}")
        if self.kind == "smoothed" and not self.rise > 0:
            raise ValueError("smoothed profile needs rise > 0")
        if self.kind == "sampled" and len(self.times) != len(self.values):
            raise ValueError("sampled profile needs matching times/values")

    def __call__(self, s):
        s = np.asarray(s, dtype=float)
        if self.kind == "heaviside":
            return (s > 0).astype(float)
        if self.kind == "smoothed":
            q = np.clip(s / self.rise, 0.0, 1.0)
            return q * q * (3 - 2 * q)
        return np.interp(s, self.times, self.values, left=0.0, right=self.values[-1])

    def breakpoints(self):
        if self.kind == "smoothed":
            return (self.rise,)
        if self.kind == "sampled":
            return tuple(self.times)
        return ()


HEAVISIDE = TimeProfile("heaviside")


@dataclass(frozen=True)
class SampledBoundary:
    """g1, g2 sampled on a uniform (x, t) grid; arrays are indexed [it, ix]."""

    x: np.ndarray
    t: np.ndarray
    g1: np.ndarray
    g2: np.ndarray

    def __post_init__(self):
        for a in (self.x, self.t):
            d = np.diff(a)
            if len(a) < 2 or not np.allclose(d, d[0], rtol=1e-8):
                raise ValueError("sampled boundary grids must be uniform")
        if self.g1.shape != (len(self.t), len(self.x)) or self.g2.shape != self.g1.shape:
            raise ValueError("g1/g2 must have shape (len(t), len(x))")

    def transform(self, comp, k, s):
        dx = self.x[1] - self.x[0]
        k = np.atleast_1d(np.asarray(k, dtype=float))
        if np.max(np.abs(k)) > math.pi / dx:
            raise GridTooCoarse(f"|k| = {np.max(np.abs(k)):.3g} exceeds the Nyquist limit {math.pi / dx:.3g}")
        g = self.g1 if comp == 1 else self.g2
        phase = np.exp(-1j * np.outer(k, self.x)) * dx  # (nk, nx)
        gt = phase @ g.T  # (nk, nt)
        s = np.asarray(s, dtype=float)
        out = np.empty(k.shape + s.shape, dtype=complex)
        for i in range(len(k)):
            out[i] = np.interp(s, self.t, gt[i].real, left=0.0) + 1j * np.interp(s, self.t, gt[i].imag, left=0.0)
        return out


@dataclass(frozen=True)
class BoundaryForcing:
    """Stress data g1, g2.

    ``kind`` is one of ``none``, ``tangential`` (g1 = s0 d(x) X(t)/mu),
    ``normal`` (g2 = s0 d(x) Y(t)/(lam+mu)), ``moving``
    (g2 = s0 d(x - C t)/(lam+mu)) or ``sampled``.  A positive ``mollifier``
    replaces d(x) by a unit-mass Gaussian of that standard deviation.
    """

    kind: str = "none"
    sigma0: float = 0.0
    profile: TimeProfile = HEAVISIDE
    speed: float = 0.0
    mollifier: float = 0.0
    sampled: SampledBoundary | None = None

    def __post_init__(self):
        if self.kind not in ("none", "tangential", "normal", "moving", "sampled"):
            raise ValueError(f"unknown forcing kind {self.kind!r}")
        if not np.isfinite(self.sigma0):
            raise ValueError("sigma0 must be finite")
        if self.speed < 0:
            raise ValueError("moving-load speed must be >= 0")
        if self.mollifier < 0:
            raise ValueError("mollifier width must be >= 0")
        if self.kind == "sampled" and self.sampled is None:
            raise ValueError("sampled forcing needs grids")

    @property
    def is_zero(self):
        return self.kind == "none" or (self.kind != "sampled" and self.sigma0 == 0)

    def scaled(self, factor):
        if self.kind == "sampled":
            s = self.sampled
            return BoundaryForcing("sampled", sampled=SampledBoundary(s.x, s.t, factor * s.g1, factor * s.g2))
        return BoundaryForcing(self.kind, self.sigma0 * factor, self.profile, self.speed, self.mollifier)

    def amplitude(self, params: MaterialParams, comp: int, k):
        """Spatial factor A(k) with g~_comp(k, t) = A(k) * profile(t) (line loads)."""
        k = np.asarray(k, dtype=float)
        moll = np.exp(-0.5 * (self.mollifier * k) ** 2) if self.mollifier > 0 else 1.0
        if self.kind == "tangential" and comp == 1:
            return self.sigma0 / params.mu * moll * np.ones_like(k)
        if self.kind in ("normal", "moving") and comp == 2:
            return self.sigma0 / (params.lam + params.mu) * moll * np.ones_like(k)
        return np.zeros_like(k)


@dataclass(frozen=True)
class GaussianBump:
    amplitude: float
    x0: float
    y0: float
    width: float

    def __call__(self, x, y):
        r2 = (np.asarray(x) - self.x0) ** 2 + (np.asarray(y) - self.y0) ** 2
        return self.amplitude * np.exp(-r2 / (2 * self.width**2))

    def transform(self, k, l):
        """Half-plane transform in closed form via the Faddeeva function."""
        k = np.asarray(k, dtype=float)
        l = np.asarray(l, dtype=complex)
        s = self.width
        xpart = s * math.sqrt(2 * math.pi) * np.exp(-1j * k * self.x0 - 0.5 * (k * s) ** 2)
        # erfc(z) = exp(-z^2) w(iz), z = (-y0 + i l s^2)/(s sqrt 2); the Gaussian
        # prefactors cancel against exp(-z^2) leaving exp(-y0^2/(2 s^2)).
        zeta = (-l * s * s - 1j * self.y0) / (s * math.sqrt(2))
        w = np.where(zeta.imag >= 0, wofz(np.where(zeta.imag >= 0, zeta, 0)),
                     2 * np.exp(-zeta * zeta) - wofz(np.where(zeta.imag < 0, -zeta, 0)))
        ypart = s * math.sqrt(math.pi / 2) * math.exp(-self.y0**2 / (2 * s * s)) * w
        return self.amplitude * xpart * ypart


@dataclass(frozen=True)
class SampledInitial:
    """u0, u1, v0, v1 sampled on a uniform (x, y) grid over y >= 0; arrays [iy, ix]."""

    x: np.ndarray
    y: np.ndarray
    fields: dict

    def __post_init__(self):
        if np.min(self.y) < 0:
            raise ValueError("sampled initial data must cover y >= 0 only")
        for a in (self.x, self.y):
            d = np.diff(a)
            if len(a) < 2 or not np.allclose(d, d[0], rtol=1e-8):
                raise ValueError("sampled initial grids must be uniform")

    def transform(self, name, k, l):
        f = self.fields.get(name)
        k = np.asarray(k, dtype=float)
        l = np.asarray(l, dtype=complex)
        if f is None:
            return np.zeros(np.broadcast(k, l).shape, dtype=complex)
        dx = self.x[1] - self.x[0]
        dy = self.y[1] - self.y[0]
        wy = np.full(len(self.y), dy)
        if abs(self.y[0]) < 1e-14:
            wy[0] = 0.5 * dy  # trapezoid end at the surface
        kb, lb = np.broadcast_arrays(k, l)
        ex = np.exp(-1j * np.multiply.outer(kb.ravel(), self.x)) * dx
        ey = np.exp(-1j * np.multiply.outer(lb.ravel(), self.y)) * wy
        out = np.einsum("nx,yx,ny->n", ex, f, ey)
        return out.reshape(kb.shape)


FIELDS = ("u0", "u1", "v0", "v1")


@dataclass(frozen=True)
class InitialData:
    """Initial displacements/velocities: ``zero``, ``gaussian`` or ``sampled``.

    For ``gaussian``, ``bumps`` maps each of u0, u1, v0, v1 to a tuple of
    :class:`GaussianBump`.
    """

    kind: str = "zero"
    bumps: dict = field(default_factory=dict)
    sampled: SampledInitial | None = None

    def __post_init__(self):
        if self.kind not in ("zero", "gaussian", "sampled"):
            raise ValueError(f"unknown initial-data kind {self.kind!r}")
        if self.kind == "sampled" and self.sampled is None:
            raise ValueError("sampled initial data needs grids")
        if any(name not in FIELDS for name in self.bumps):
            raise ValueError(f"initial fields must be among {FIELDS}")

    @property
    def is_zero(self):
        return self.kind == "zero" or (self.kind == "gaussian" and not any(self.bumps.values()))

    def field_values(self, name, x, y):
        if self.kind == "zero":
            return np.zeros(np.broadcast(x, y).shape)
        if self.kind == "gaussian":
            return sum((b(x, y) for b in self.bumps.get(name, ())), np.zeros(np.broadcast(x, y).shape))
        raise NotImplementedError("point values of sampled data: interpolate the grid directly")

    def scaled(self, factor):
        if self.kind == "gaussian":
            return InitialData("gaussian", {n: tuple(GaussianBump(b.amplitude * factor, b.x0, b.y0, b.width) for b in bs)
                                            for n, bs in self.bumps.items()})
        if self.kind == "sampled":
            s = self.sampled
            return InitialData("sampled", sampled=SampledInitial(s.x, s.y, {n: factor * f for n, f in s.fields.items()}))
        return self

    def transform(self, name, k, l, strict=True):
        k = np.asarray(k, dtype=float)
        l = np.asarray(l, dtype=complex)
        shape = np.broadcast(k, l).shape
        if self.kind == "zero":
            return np.zeros(shape, dtype=complex)
        if self.kind == "gaussian":
            out = np.zeros(shape, dtype=complex)
            for b in self.bumps.get(name, ()):
                out = out + b.transform(k, l)
            return out
        if strict and np.any(l.imag > 1e-12):
            raise DomainError("sampled initial-data transforms need Im l <= 0")
        return self.sampled.transform(name, k, l)


# --------------------------------------------------------------------------- boundary transforms

def g_tilde(forcing: BoundaryForcing, params: MaterialParams, j: int, k, t):
    """x-transform g~_j(k, t) of the boundary data."""
    if j not in (1, 2):
        raise ValueError("j must be 1 or 2")
    k = np.asarray(k, dtype=float)
    t = np.asarray(t, dtype=float)
    if forcing.is_zero:
        return np.zeros(np.broadcast(k, t).shape, dtype=complex)
    if forcing.kind == "sampled":
        return forcing.sampled.transform(j, k, t).reshape(np.broadcast(k, t).shape)
    amp = forcing.amplitude(params, j, k)
    if forcing.kind == "moving":
        return amp * np.exp(-1j * k * forcing.speed * t) * (t >= 0)
    return amp * forcing.profile(t) + 0j


def _time_nodes(t, breaks, rate, panel_phase=3.0):
    """Gauss-Legendre nodes on [0, t] split at ``breaks`` and by oscillation ``rate``."""
    cuts = sorted({0.0, t, *[b for b in breaks if 0 < b < t]})
    xs, ws = [], []
    for a, b in zip(cuts[:-1], cuts[1:]):
        m = max(1, int(math.ceil((b - a) * rate / panel_phase)))
        e = np.linspace(a, b, m + 1)
        for lo, hi in zip(e[:-1], e[1:]):
            xs.append(0.5 * (lo + hi) + 0.5 * (hi - lo) * _GL_X)
            ws.append(0.5 * (hi - lo) * _GL_W)
    if not xs:
        return np.zeros(0), np.zeros(0)
    return np.concatenate(xs), np.concatenate(ws)


def _chunked_quad(kernel, w2, s, ws, g, chunk=2_000_000):
    """sum_s kernel(w2, s) g(s) ws, chunked over w2 to bound memory."""
    w2 = np.asarray(w2, dtype=complex)
    flat = w2.ravel()
    out = np.empty(flat.shape, dtype=complex)
    step = max(1, chunk // max(1, len(s)))
    for i in range(0, len(flat), step):
        blk = flat[i:i + step]
        out[i:i + step] = kernel(blk[:, None], s[None, :]) @ (g * ws)
    return out.reshape(w2.shape)


def smoothstep_moments(w2, a, rise, terms=24):
    """``A = int_0^a cos(w s) h(s) ds`` and ``B = int_0^a sin(w s)/w h(s) ds``.

    ``h`` is the smoothstep of the given ``rise`` and ``0 <= a <= rise``.  Both
    are entire in ``w2``: a Taylor series is used for ``|w a| < 2`` and the
    closed form from repeated integration by parts elsewhere.
    """
    w2 = np.asarray(w2, dtype=complex)
    A = np.zeros(w2.shape, dtype=complex)
    B = np.zeros(w2.shape, dtype=complex)
    if a <= 0:
        return A, B
    small = np.abs(w2) * a * a < 4.0
    if np.any(small):
        z = -w2[small]
        zn = np.ones(z.shape, dtype=complex)
        sa, sb = np.zeros_like(zn), np.zeros_like(zn)
        for n in range(terms):
            m0, m1 = 2 * n, 2 * n + 1
            mom0 = 3 * a ** (m0 + 3) / ((m0 + 3) * rise ** 2) - 2 * a ** (m0 + 4) / ((m0 + 4) * rise ** 3)
            mom1 = 3 * a ** (m1 + 3) / ((m1 + 3) * rise ** 2) - 2 * a ** (m1 + 4) / ((m1 + 4) * rise ** 3)
            sa += zn * mom0 / math.factorial(m0)
            sb += zn * mom1 / math.factorial(m1)
            zn = zn * z
        A[small], B[small] = sa, sb
    big = ~small
    if np.any(big):
        w = np.sqrt(w2[big])
        q = a / rise
        h0 = q * q * (3 - 2 * q)
        h1 = 6 * q * (1 - q) / rise
        h2 = (6 - 12 * q) / rise ** 2
        h2_0 = 6 / rise ** 2
        h3 = -12 / rise ** 3
        c, s = np.cos(w * a), np.sin(w * a)
        A[big] = s * h0 / w + c * h1 / w ** 2 - s * h2 / w ** 3 + (1 - c) * h3 / w ** 4
        B[big] = -c * h0 / w ** 2 + s * h1 / w ** 3 + (c * h2 - h2_0) / w ** 4 - s * h3 / w ** 5
    return A, B


def _smoothed_duhamel(w2, t, rise):
    """int_0^t sin(w (t-s))/w h(s) ds for the smoothstep h (unit amplitude)."""
    if t <= 0:
        return np.zeros(np.shape(w2), dtype=complex)
    A, B = smoothstep_moments(w2, min(t, rise), rise)
    out = kernel_S(w2, t) * A - kernel_C(w2, t) * B
    if t > rise:
        out = out + kernel_K(w2, t - rise)
    return out


def duhamel(forcing: BoundaryForcing, params: MaterialParams, comp: int, w2, k: float, t: float):
    """int_0^t sin(w (t-s))/w g~_comp(k, s) ds for every entry of ``w2``.

    ``k`` is a scalar here; ``w2`` may be any array.
    """
    w2 = np.asarray(w2, dtype=complex)
    if forcing.is_zero or t <= 0:
        return np.zeros(w2.shape, dtype=complex)
    if forcing.kind in ("tangential", "normal"):
        amp = complex(forcing.amplitude(params, comp, k))
        if amp == 0:
            return np.zeros(w2.shape, dtype=complex)
        prof = forcing.profile
        if prof.kind == "heaviside":
            return amp * kernel_K(w2, t)
        if prof.kind == "smoothed":
            return amp * _smoothed_duhamel(w2, t, prof.rise)
        rate = float(np.max(np.abs(np.sqrt(w2)))) if w2.size else 0.0
        s, ws = _time_nodes(t, prof.breakpoints(), rate)
        return amp * _chunked_quad(lambda a, b: kernel_S(a, t - b), w2, s, ws, prof(s))
    # moving and sampled loads: generic oscillation-aware quadrature
    rate = (float(np.max(np.abs(np.sqrt(w2)))) if w2.size else 0.0)
    breaks = ()
    if forcing.kind == "moving":
        rate += abs(k) * forcing.speed
    else:
        breaks = tuple(forcing.sampled.t)
    s, ws = _time_nodes(t, breaks, rate)
    g = np.asarray(g_tilde(forcing, params, comp, k, s)).reshape(-1)
    return _chunked_quad(lambda a, b: kernel_S(a, t - b), w2, s, ws, g)


def duhamel_times(forcing: BoundaryForcing, params: MaterialParams, comp: int, w2, k: float, times):
    """:func:`duhamel` for several output times; result has a trailing time axis.

    For the smoothed profile the integral is split as
    ``sin(w t)/w * A - cos(w t) * B + K(w2, t - rise)`` with the closed-form
    moments of :func:`smoothstep_moments`.
    """
    w2 = np.asarray(w2, dtype=complex)
    times = np.atleast_1d(np.asarray(times, dtype=float))
    out = np.zeros(w2.shape + times.shape, dtype=complex)
    if forcing.is_zero:
        return out
    simple = forcing.kind in ("tangential", "normal")
    if simple and forcing.profile.kind == "heaviside":
        amp = complex(forcing.amplitude(params, comp, k))
        if amp != 0:
            for i, t in enumerate(times):
                out[..., i] = amp * kernel_K(w2, t) if t > 0 else 0.0
        return out
    if simple and forcing.profile.kind == "smoothed":
        amp = complex(forcing.amplitude(params, comp, k))
        if amp == 0:
            return out
        for i, t in enumerate(times):
            out[..., i] = amp * _smoothed_duhamel(w2, t, forcing.profile.rise)
        return out
    for i, t in enumerate(times):
        out[..., i] = duhamel(forcing, params, comp, w2, k, t)
    return out


def time_integrals(forcing: BoundaryForcing, params: MaterialParams, j: int, sign: int, k: float, l, t: float,
                   which: str = "f"):
    """g^{(j)+-} (which='g', uses g~_1) or f^{(j)+-} (which='f', uses g~_2).

    ``int_0^t exp(+-i omega_j s) g~(k, s) ds`` with omega_j on the fixed branch.
    """
    if sign not in (1, -1):
        raise ValueError("sign must be +1 or -1")
    comp = 1 if which == "g" else 2
    w = sign * omega(j, params, k, np.asarray(l, dtype=complex))
    if forcing.is_zero or t <= 0:
        return np.zeros(np.shape(w), dtype=complex)
    if forcing.kind in ("tangential", "normal") and forcing.profile.kind == "heaviside":
        amp = complex(forcing.amplitude(params, comp, k))
        x = 1j * w * t
        small = np.abs(x) < SERIES_SWITCH
        with np.errstate(invalid="ignore", divide="ignore"):
            ratio = np.where(small, 1 + x / 2 + x * x / 6, np.expm1(x) / np.where(small, 1.0, x))
        return amp * t * ratio
    rate = float(np.max(np.abs(w))) + (abs(k) * forcing.speed if forcing.kind == "moving" else 0.0)
    breaks = forcing.profile.breakpoints() if forcing.kind in ("tangential", "normal") else (
        tuple(forcing.sampled.t) if forcing.kind == "sampled" else ())
    s, ws = _time_nodes(t, breaks, rate)
    g = np.asarray(g_tilde(forcing, params, comp, k, s)).reshape(-1)
    flat = np.atleast_1d(w).ravel()
    out = np.exp(1j * flat[:, None] * s[None, :]) @ (g * ws)
    return out.reshape(np.shape(w))


def big_GF(forcing: BoundaryForcing, params: MaterialParams, j: int, k: float, l, t: float):
    """(G^{(j)}, F^{(j)}) = -i * (Duhamel integrals of g~_1, g~_2 with omega_j)."""
    w2 = omega_sq(j, params, k, l)
    G = -1j * duhamel(forcing, params, 1, w2, k, t)
    F = -1j * duhamel(forcing, params, 2, w2, k, t)
    return G, F


def initial_transforms(data: InitialData, k, l, strict=True):
    """(P0, P1, Q0, Q1) from the half-plane transforms of the initial data."""
    u0 = data.transform("u0", k, l, strict)
    u1 = data.transform("u1", k, l, strict)
    v0 = data.transform("v0", k, l, strict)
    v1 = data.transform("v1", k, l, strict)
    k = np.asarray(k, dtype=float)
    l = np.asarray(l, dtype=complex)
    return k * u0 + l * v0, k * u1 + l * v1, l * u0 - k * v0, l * u1 - k * v1


class Known(NamedTuple):
    G1: np.ndarray
    G2: np.ndarray
    F1: np.ndarray
    F2: np.ndarray
    P0: np.ndarray
    P1: np.ndarray
    Q0: np.ndarray
    Q1: np.ndarray
    NP: np.ndarray
    NQ: np.ndarray


@dataclass(frozen=True)
class KnownTransforms:
    """Immutable evaluator of every known transform at (k, l, t).

    ``l`` may be an array; ``k`` and ``t`` are scalars.
    """

    forcing: BoundaryForcing
    data: InitialData
    params: MaterialParams

    def __call__(self, k: float, l, t: float, strict: bool = False) -> Known:
        p = self.params
        l = np.asarray(l, dtype=complex)
        w1 = omega_sq(1, p, k, l)
        w2 = omega_sq(2, p, k, l)
        G1, F1 = big_GF(self.forcing, p, 1, k, l, t)
        G2, F2 = big_GF(self.forcing, p, 2, k, l, t)
        if self.data.is_zero:
            z = np.zeros(l.shape, dtype=complex)
            P0 = P1 = Q0 = Q1 = z
            init_p = init_q = z
        else:
            P0, P1, Q0, Q1 = initial_transforms(self.data, k, l, strict)
            init_p = P0 * kernel_C(w1, t) + P1 * kernel_S(w1, t)
            init_q = Q0 * kernel_C(w2, t) + Q1 * kernel_S(w2, t)
        lp2 = p.lam + 2 * p.mu
        NP = -1j * l * lp2 * F1 - 1j * p.mu * k * G1 + init_p
        NQ = 1j * k * lp2 * F2 - 1j * p.mu * l * G2 + init_q
        return Known(G1, G2, F1, F2, P0, P1, Q0, Q1, NP, NQ)

    def npq_times(self, k: float, l, times, strict: bool = False, which: str = "PQ"):
        """(N_P, N_Q) at ``l`` for several times; trailing axis is time.

        ``which`` selects the components actually computed ("P", "Q" or
        "PQ"); the other is returned as zeros.
        """
        p = self.params
        l = np.asarray(l, dtype=complex)
        times = np.atleast_1d(np.asarray(times, dtype=float))
        w1 = omega_sq(1, p, k, l)
        w2 = omega_sq(2, p, k, l)
        lp2 = p.lam + 2 * p.mu
        le = l[..., None]
        NP = np.zeros(l.shape + times.shape, dtype=complex)
        NQ = np.zeros_like(NP)
        f = self.forcing
        wantP, wantQ = "P" in which, "Q" in which
        if not f.is_zero:
            g1 = f.kind in ("tangential", "sampled")
            g2 = f.kind in ("normal", "moving", "sampled")
            if wantP and g2:
                NP += -1j * le * lp2 * (-1j * duhamel_times(f, p, 2, w1, k, times))
            if wantP and g1:
                NP += -1j * p.mu * k * (-1j * duhamel_times(f, p, 1, w1, k, times))
            if wantQ and g2:
                NQ += 1j * k * lp2 * (-1j * duhamel_times(f, p, 2, w2, k, times))
            if wantQ and g1:
                NQ += -1j * p.mu * le * (-1j * duhamel_times(f, p, 1, w2, k, times))
        if not self.data.is_zero:
            P0, P1, Q0, Q1 = initial_transforms(self.data, k, l, strict)
            for i, t in enumerate(times):
                if wantP:
                    NP[..., i] += P0 * kernel_C(w1, t) + P1 * kernel_S(w1, t)
                if wantQ:
                    NQ[..., i] += Q0 * kernel_C(w2, t) + Q1 * kernel_S(w2, t)
        return NP, NQ

    def npq(self, k: float, l, t: float):
        kn = self(k, l, t)
        return kn.NP, kn.NQ


def N_PQ(forcing: BoundaryForcing, data: InitialData, params: MaterialParams, k: float, l, t: float):
    """Driving functions (N_P, N_Q) of the global relations."""
    return KnownTransforms(forcing, data, params).npq(k, l, t)
