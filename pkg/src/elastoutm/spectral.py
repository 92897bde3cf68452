"""Branch-resolved spectral functions of the elastic half-plane.

All array functions accept numpy arrays (or scalars) for ``k`` and ``l`` and
broadcast.  Branches are fixed as follows:

* ``sqrt_kl(k, l) = (k^2 + l^2)^{1/2}``: cut on the vertical segment joining
  ``+ik`` and ``-ik``, value ``~ l`` as ``l -> inf``.
* ``l12``: cut on the horizontal segment joining ``+-k*sqrt((lam+mu)/mu)``,
  value ``~ -l*sqrt(mu/(lam+2mu))``.
* ``l21``: cut on the vertical segment joining ``+-ik*sqrt((lam+mu)/(lam+2mu))``,
  value ``~ -l*sqrt((lam+2mu)/mu)``.

Each is written as ``l * sqrt(a + b*(k/l)^2)`` with the principal square root;
the principal cut of the inner root maps exactly onto the segments above.
"""
from __future__ import annotations

import functools
import math
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np

from .errors import BranchPointHit, OnBranchCut, RootSearchIncomplete, ZeroArgument

BRANCH_POINT_TOL = 1e-14


@dataclass(frozen=True)
class MaterialParams:
    """Lame constants with density normalised to one."""

    lam: float
    mu: float

    def __post_init__(self):
        if not (np.isfinite(self.lam) and np.isfinite(self.mu)):
            raise ValueError("lambda and mu must be finite")
        if self.mu <= 0:
            raise ValueError(f"mu must be positive (got mu={self.mu})")
        if self.lam + 2 * self.mu <= 0:
            raise ValueError(f"lambda + 2 mu must be positive (got {self.lam + 2 * self.mu})")
        if self.lam + self.mu <= 0:
            raise ValueError("cp > cs requires lambda + mu > 0")

    @property
    def cp(self) -> float:
        return math.sqrt(self.lam + 2 * self.mu)

    @property
    def cs(self) -> float:
        return math.sqrt(self.mu)

    @property
    def poisson(self) -> float:
        return self.lam / (2 * (self.lam + self.mu))

    def speed(self, j: int) -> float:
        return self.cp if j == 1 else self.cs


@dataclass(frozen=True)
class BranchValue:
    value: complex
    on_cut: bool


def eps_cut(k) -> float:
    return 1e-8 * max(1.0, abs(float(k)))


def _root_form(k, l, a, b):
    """``l*sqrt(a + b*(k/l)^2)`` with the principal root, broadcasting."""
    k = np.asarray(k, dtype=float)
    l = np.asarray(l, dtype=complex)
    with np.errstate(divide="ignore", invalid="ignore"):
        r = k / l
        out = l * np.sqrt(a + b * r * r)
    return out


def sqrt_kl(k, l):
    """(k^2+l^2)^{1/2} on the fixed branch (vectorised, no checks).

    At ``l = 0`` (on the cut) the value approached from ``Re l > 0`` is returned.
    """
    out = _root_form(k, l, 1.0, 1.0)
    l = np.asarray(l, dtype=complex)
    if np.any(l == 0):
        out = np.where(l == 0, np.abs(np.asarray(k, dtype=float)) + 0j, out)
    return out


def on_sqrt_cut(k, l, eps=None):
    k = abs(float(k))
    eps = eps_cut(k) if eps is None else eps
    return abs(l.real) < eps and abs(l.imag) <= k + eps


def sqrt_branch(k: float, l: complex) -> BranchValue:
    """Scalar evaluation of (k^2+l^2)^{1/2} with branch-point and cut checks."""
    l = complex(l)
    scale = max(1.0, abs(k))
    if k != 0 and (abs(l - 1j * k) < BRANCH_POINT_TOL * scale or abs(l + 1j * k) < BRANCH_POINT_TOL * scale):
        raise BranchPointHit(f"l={l} is a branch point of (k^2+l^2)^(1/2) for k={k}")
    if k == 0 and l == 0:
        raise BranchPointHit("k = l = 0")
    return BranchValue(complex(sqrt_kl(k, l)), on_sqrt_cut(k, l))


def omega(j: int, params: MaterialParams, k, l):
    """Dispersion relation omega_j = c_j (k^2+l^2)^{1/2}; j=1 P-wave, j=2 S-wave."""
    if j not in (1, 2):
        raise ValueError("j must be 1 or 2")
    return params.speed(j) * sqrt_kl(k, l)


def omega_sq(j: int, params: MaterialParams, k, l):
    """omega_j^2, which is entire in l and is all most callers need."""
    k = np.asarray(k, dtype=float)
    l = np.asarray(l, dtype=complex)
    return params.speed(j) ** 2 * (k * k + l * l)


def l12(params: MaterialParams, k, l):
    lp2 = params.lam + 2 * params.mu
    return -_root_form(k, l, params.mu / lp2, -(params.lam + params.mu) / lp2)


def l21(params: MaterialParams, k, l):
    mu = params.mu
    return -_root_form(k, l, (params.lam + 2 * mu) / mu, (params.lam + params.mu) / mu)


def l12_branch_points(params: MaterialParams, k):
    a = abs(k) * math.sqrt((params.lam + params.mu) / params.mu)
    return (complex(-a), complex(a))


def l21_branch_points(params: MaterialParams, k):
    b = abs(k) * math.sqrt((params.lam + params.mu) / (params.lam + 2 * params.mu))
    return (complex(0, -b), complex(0, b))


def _check_map_arg(k, l, bps, horizontal):
    l = complex(l)
    if l == 0:
        raise ZeroArgument("the l-maps are undefined at l = 0")
    scale = max(1.0, abs(k))
    for bp in bps:
        if abs(l - bp) < BRANCH_POINT_TOL * scale:
            raise BranchPointHit(f"l={l} is a branch point")
    eps = eps_cut(k)
    a = abs(bps[1])
    if horizontal:
        if abs(l.imag) < eps and abs(l.real) <= a + eps:
            raise OnBranchCut(f"l={l} lies on the l12 cut")
    else:
        if abs(l.real) < eps and abs(l.imag) <= a + eps:
            raise OnBranchCut(f"l={l} lies on the l21 cut")
    return l


def l_map_12(params: MaterialParams, k: float, l: complex) -> complex:
    """Checked scalar l12."""
    l = _check_map_arg(k, l, l12_branch_points(params, k), horizontal=True)
    return complex(l12(params, k, l))


def l_map_21(params: MaterialParams, k: float, l: complex) -> complex:
    """Checked scalar l21."""
    l = _check_map_arg(k, l, l21_branch_points(params, k), horizontal=False)
    return complex(l21(params, k, l))


class Coeffs(NamedTuple):
    C1: np.ndarray
    C2: np.ndarray
    C3: np.ndarray
    C4: np.ndarray
    D1: np.ndarray
    D2: np.ndarray
    D3: np.ndarray
    D4: np.ndarray


def coeffs(params: MaterialParams, k, l) -> Coeffs:
    lam, mu = params.lam, params.mu
    k = np.asarray(k, dtype=float)
    l = np.asarray(l, dtype=complex)
    m12 = l12(params, k, l)
    m21 = l21(params, k, l)
    k2 = k * k
    return Coeffs(
        C1=lam * k2 + m12 * m12 * (lam + 2 * mu),
        C2=2 * mu * k * m12,
        C3=2 * mu * k * l,
        C4=-mu * (k2 - l * l),
        D1=lam * k2 + l * l * (lam + 2 * mu),
        D2=-2 * mu * k * l,
        D3=-2 * mu * k * m21,
        D4=-mu * (k2 - m21 * m21),
    )


def delta(j: int, params: MaterialParams, k, l):
    """Simplified determinants Delta_1, Delta_2."""
    lam, mu = params.lam, params.mu
    k = np.asarray(k, dtype=float)
    l = np.asarray(l, dtype=complex)
    k2 = k * k
    if j == 1:
        return mu**2 * (k2 - l * l) ** 2 - 4 * mu**2 * k2 * l * l12(params, k, l)
    if j == 2:
        return (lam * k2 + l * l * (lam + 2 * mu)) ** 2 - 4 * mu**2 * k2 * l * l21(params, k, l)
    raise ValueError("j must be 1 or 2")


def delta_scale(j: int, params: MaterialParams, k, l):
    """Magnitude of the two terms of Delta_j, used as a relative yardstick."""
    lam, mu = params.lam, params.mu
    k = np.asarray(k, dtype=float)
    l = np.asarray(l, dtype=complex)
    k2 = k * k
    if j == 1:
        return np.abs(mu**2 * (k2 - l * l) ** 2) + np.abs(4 * mu**2 * k2 * l * l12(params, k, l))
    return np.abs((lam * k2 + l * l * (lam + 2 * mu)) ** 2) + np.abs(4 * mu**2 * k2 * l * l21(params, k, l))


def cut_segment(j: int, params: MaterialParams, k=1.0):
    """End points of the cut of the map entering Delta_j."""
    return l12_branch_points(params, k) if j == 1 else l21_branch_points(params, k)


def continue_root(square, path, start):
    """Analytic continuation of a square root along ``path``.

    ``square(z)`` gives the squared quantity; at each node the root closest to
    the previous value is kept.  Independent of any principal-branch formula.
    """
    path = np.asarray(path, dtype=complex)
    sq = np.sqrt(square(path).astype(complex))
    out = np.empty_like(sq)
    prev = complex(start)
    for i, r in enumerate(sq):
        prev = r if abs(r - prev) <= abs(r + prev) else -r
        out[i] = prev
    return out


def continuation_check(params: MaterialParams, k: float = 1.0, n_rays: int = 16, r_far: float = 1e6,
                       r_near: float | None = None, n_steps: int = 4000):
    """Compare the closed-form branches with continuation from infinity.

    Walks inwards along ``n_rays`` rays from ``|l| = r_far`` (where the
    asymptotic normalisation fixes the sign) and returns the maximum relative
    discrepancy for (sqrt_kl, l12, l21).  Rays along the cut directions are
    nudged so they stay off the cuts.
    """
    k = float(k)
    r_near = 1.5 * abs(k) * params.cp / params.cs if r_near is None else r_near
    lam, mu = params.lam, params.mu
    lp2 = lam + 2 * mu
    worst = np.zeros(3)
    for m in range(n_rays):
        theta = 2 * np.pi * (m + 0.37) / n_rays
        radii = np.geomspace(r_far, r_near, n_steps)
        path = radii * np.exp(1j * theta)
        checks = (
            (lambda z: k * k + z * z, path[0], sqrt_kl(k, path)),
            (lambda z: z * z * mu / lp2 - (lam + mu) / lp2 * k * k, -path[0] * math.sqrt(mu / lp2), l12(params, k, path)),
            (lambda z: z * z * lp2 / mu + (lam + mu) / mu * k * k, -path[0] * math.sqrt(lp2 / mu), l21(params, k, path)),
        )
        for i, (sq, start, closed) in enumerate(checks):
            cont = continue_root(sq, path, start)
            worst[i] = max(worst[i], float(np.max(np.abs(cont - closed) / np.abs(closed))))
    return worst


@dataclass(frozen=True)
class ZeroSet:
    ratios: tuple
    determinant_id: int
    max_abs_ratio: float
    residuals: tuple = field(default=(), compare=False)

    def upper(self, include_real=False):
        return [a for a in self.ratios if a.imag > 0 or (include_real and a.imag == 0)]


def _winding(vals):
    d = np.angle(vals[1:] / vals[:-1])
    return d


def _cell_hits_cut(x0, x1, y0, y1, cut):
    (a, b) = cut
    if a.imag == b.imag == 0:  # horizontal on the real axis
        lo, hi = min(a.real, b.real), max(a.real, b.real)
        return y0 <= 0 <= y1 and x1 >= lo and x0 <= hi
    lo, hi = min(a.imag, b.imag), max(a.imag, b.imag)
    return x0 <= 0 <= x1 and y1 >= lo and y0 <= hi


def _dist_to_cut(z, cut):
    a, b = cut
    if a.imag == b.imag == 0:
        x = min(max(z.real, min(a.real, b.real)), max(a.real, b.real))
        return abs(z - x)
    y = min(max(z.imag, min(a.imag, b.imag)), max(a.imag, b.imag))
    return abs(z - 1j * y)


def _newton(f, z, tol_root, scale_fn, max_iter=80):
    for _ in range(max_iter):
        fz = f(z)
        h = 1e-7 * max(1.0, abs(z))
        df = (f(z + h) - f(z - h)) / (2 * h)
        if df == 0 or not np.isfinite(df):
            return None
        step = fz / df
        z = z - step
        if abs(step) < 1e-15 * max(1.0, abs(z)):
            break
    else:
        return None
    if not np.isfinite(z):
        return None
    if abs(f(z)) > tol_root * scale_fn(z) * 1e3:
        return None
    return z


def _cell_winding(f, x0, x1, y0, y1, m=24, depth=0):
    corners = [complex(x0, y0), complex(x1, y0), complex(x1, y1), complex(x0, y1), complex(x0, y0)]
    pts = np.concatenate([np.linspace(a, b, m, endpoint=False) for a, b in zip(corners[:-1], corners[1:])] + [[corners[0]]])
    vals = f(pts)
    d = _winding(vals)
    if np.max(np.abs(d)) > np.pi / 3 and depth < 4:
        return _cell_winding(f, x0, x1, y0, y1, m * 4, depth + 1)
    return int(round(np.sum(d) / (2 * np.pi)))


@functools.lru_cache(maxsize=64)
def _delta_zeros_cached(j, lam, mu, n_cells, r_search, tol_root):
    params = MaterialParams(lam, mu)
    R = r_search if r_search is not None else 4 * params.cp / params.cs
    cut = cut_segment(j, params, 1.0)
    n = n_cells if n_cells % 2 == 1 else n_cells + 1  # odd: no grid line on either axis
    edges = np.linspace(-R, R, n + 1)

    def f(z):
        return delta(j, params, 1.0, z)

    def scale_fn(z):
        return float(delta_scale(j, params, 1.0, z))

    # boundary values on the whole raster, vectorised per grid line
    m = 16
    fine = np.linspace(-R, R, n * m + 1)
    H = f(fine[None, :] + 1j * edges[:, None])   # horizontal lines
    V = f(edges[:, None] + 1j * fine[None, :])   # vertical lines
    dH = np.angle(H[:, 1:] / H[:, :-1])
    dV = np.angle(V[:, 1:] / V[:, :-1])

    seeds = []
    for ix in range(n):
        for iy in range(n):
            x0, x1, y0, y1 = edges[ix], edges[ix + 1], edges[iy], edges[iy + 1]
            if _cell_hits_cut(x0, x1, y0, y1, cut):
                for fx in (0.2, 0.5, 0.8):
                    for fy in (0.15, 0.35, 0.65, 0.85):
                        z = complex(x0 + fx * (x1 - x0), y0 + fy * (y1 - y0))
                        if _dist_to_cut(z, cut) > 1e-6:
                            seeds.append((z, (x0, x1, y0, y1), False))
                continue
            sl = slice(ix * m, (ix + 1) * m)
            sv = slice(iy * m, (iy + 1) * m)
            segs = [dH[iy, sl], dV[ix + 1, sv], -dH[iy + 1, sl], -dV[ix, sv]]
            dmax = max(np.max(np.abs(s)) for s in segs)
            if dmax > np.pi / 3:
                w = _cell_winding(f, x0, x1, y0, y1)
            else:
                w = int(round(sum(np.sum(s) for s in segs) / (2 * np.pi)))
            if w != 0:
                seeds.extend(_split_seeds(f, x0, x1, y0, y1, w))
    roots = []
    for z0, box, required in seeds:
        z = _newton(f, z0, tol_root, scale_fn)
        if z is None:
            if required:
                raise RootSearchIncomplete(f"Newton polishing failed from seed {z0} (Delta_{j})")
            continue
        if box is not None:
            x0, x1, y0, y1 = box
            pad = 1e-9
            if not (x0 - pad <= z.real <= x1 + pad and y0 - pad <= z.imag <= y1 + pad):
                if required:
                    raise RootSearchIncomplete(f"Newton from {z0} left its cell (Delta_{j})")
                continue
        if abs(z.real) > R or abs(z.imag) > R or _dist_to_cut(z, cut) < 1e-7:
            continue
        if all(abs(z - r) > 1e-8 * max(1.0, abs(z)) for r in roots):
            roots.append(z)
    # snap symmetric partners and clean signed zeros
    clean = []
    for z in roots:
        re = 0.0 if abs(z.real) < 1e-12 else z.real
        im = 0.0 if abs(z.imag) < 1e-12 else z.imag
        clean.append(complex(re, im))
    clean.sort(key=lambda z: (round(z.real, 9), round(z.imag, 9)))
    res = tuple(abs(f(z)) / scale_fn(z) for z in clean)
    return tuple(clean), res


def _split_seeds(f, x0, x1, y0, y1, w, depth=0):
    """Seeds for a cell of winding ``w``: the centre if w == 1, else quadrants."""
    if w == 1 or depth > 6:
        return [(complex(0.5 * (x0 + x1), 0.5 * (y0 + y1)), (x0, x1, y0, y1), True)]
    xm, ym = 0.5 * (x0 + x1), 0.5 * (y0 + y1)
    out = []
    for a0, a1 in ((x0, xm), (xm, x1)):
        for b0, b1 in ((y0, ym), (ym, y1)):
            wq = _cell_winding(f, a0, a1, b0, b1)
            if wq:
                out.extend(_split_seeds(f, a0, a1, b0, b1, wq, depth + 1))
    return out


def delta_zeros(j: int, params: MaterialParams, n_cells: int = 95, r_search: float | None = None,
                tol_root: float = 1e-12) -> ZeroSet:
    """Zeros alpha of Delta_j(1, alpha) in the cut plane.

    Rasterised argument-principle scan over ``|Re|, |Im| <= r_search``
    (default ``4 cp/cs``), Newton polishing, deterministic ordering by real
    then imaginary part.  Cells crossing the cut are seeded directly.
    Zeros of ``Delta_j(k, l)`` are ``l = alpha * k``.
    """
    if j not in (1, 2):
        raise ValueError("j must be 1 or 2")
    ratios, res = _delta_zeros_cached(j, float(params.lam), float(params.mu), int(n_cells), r_search, tol_root)
    return ZeroSet(ratios=ratios, determinant_id=j,
                   max_abs_ratio=max((abs(a) for a in ratios), default=0.0), residuals=res)


@dataclass(frozen=True)
class SheetRoot:
    ratio: complex
    principal: bool
    relative_residual: float


def rationalized_zeros(j: int, params: MaterialParams) -> list:
    """All roots of Delta_j(1,a) * Delta_j^*(1,a), the product over both sheets.

    ``Delta_j = A - B m`` with ``m`` the square-root map (l12 or l21); the
    product ``A^2 - B^2 m^2`` is a degree-8 polynomial in ``a``.  Each root is
    labelled by whether it is a zero on the principal (cut-plane) sheet.
    """
    lam, mu = params.lam, params.mu
    lp2 = lam + 2 * mu
    P = np.polynomial.Polynomial
    a = P([0, 1])
    if j == 1:
        A = mu**2 * (1 - a * a) ** 2
        B = 4 * mu**2 * a
        m2 = (mu / lp2) * a * a - (lam + mu) / lp2
    elif j == 2:
        A = (lam + a * a * lp2) ** 2
        B = 4 * mu**2 * a
        m2 = (lp2 / mu) * a * a + (lam + mu) / mu
    else:
        raise ValueError("j must be 1 or 2")
    poly = A * A - B * B * m2
    roots = poly.roots()
    out = []
    for r in roots:
        r = complex(np.real_if_close(r, tol=1e6))
        # polish on the product polynomial
        for _ in range(5):
            d = poly.deriv()(r)
            if d == 0:
                break
            r = r - poly(r) / d
        tiny = 1e-13 * abs(r)
        r = complex(0.0 if abs(r.real) < tiny else r.real, 0.0 if abs(r.imag) < tiny else r.imag)
        res = float(abs(delta(j, params, 1.0, r)) / max(delta_scale(j, params, 1.0, r), 1e-300))
        out.append(SheetRoot(complex(r), res < 1e-8, res))
    out.sort(key=lambda s: (round(s.ratio.real, 9), round(s.ratio.imag, 9)))
    return out
