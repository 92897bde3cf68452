"""Integration paths in the complex l-plane and adaptive quadrature along them.

Two path families are provided.

* :func:`build_gamma_k` — the admissible trapezoid lying above every
  determinant zero, branch point and the pole ``l = ik``.
* :func:`build_low_path` — a path hugging the cut of one determinant family,
  together with small clockwise loops around the singular points that lie
  between it and the trapezoid.  By Cauchy's theorem the two give the same
  integral for integrands analytic above the certificate set; the low path
  avoids the exponential growth ``exp((c t - y) Im l)`` that makes quadrature
  on the trapezoid cancel catastrophically at large ``|k|``.

Quadrature is a vectorised adaptive Gauss–Kronrod (7/15) rule accepting
vector-valued integrands.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import CertificateViolation, ToleranceNotMet
from .spectral import MaterialParams, delta_zeros

# Gauss–Kronrod 7/15 nodes and weights on [-1, 1]
_XK = np.array([
    -0.991455371120812639206854697526329, -0.949107912342758524526189684047851,
    -0.864864423359769072789712788640926, -0.741531185599394439863864773280788,
    -0.586087235467691130294144845693013, -0.405845151377397166906606412076961,
    -0.207784955007898467600689403773245, 0.0,
    0.207784955007898467600689403773245, 0.405845151377397166906606412076961,
    0.586087235467691130294144845693013, 0.741531185599394439863864773280788,
    0.864864423359769072789712788640926, 0.949107912342758524526189684047851,
    0.991455371120812639206854697526329])
_WK = np.array([
    0.022935322010529224963732008058970, 0.063092092629978553290700663189204,
    0.104790010322250183839876322541518, 0.140653259715525918745189590510238,
    0.169004726639267902826583426598550, 0.190350578064785409913256402421014,
    0.204432940075298892414161999234649, 0.209482141084727828012999174891714,
    0.204432940075298892414161999234649, 0.190350578064785409913256402421014,
    0.169004726639267902826583426598550, 0.140653259715525918745189590510238,
    0.104790010322250183839876322541518, 0.063092092629978553290700663189204,
    0.022935322010529224963732008058970])
_WG = np.zeros(15)
_WG[1::2] = [0.129484966168869693270611432679082, 0.279705391489276667901467771423780,
             0.381830050505118944950369775488975, 0.417959183673469387755102040816327,
             0.381830050505118944950369775488975, 0.279705391489276667901467771423780,
             0.129484966168869693270611432679082]


# --------------------------------------------------------------------------- path pieces

@dataclass(frozen=True)
class Segment:
    a: complex
    b: complex

    def point(self, s):
        return self.a + (self.b - self.a) * s

    def deriv(self, s):
        return np.full(np.shape(s), self.b - self.a, dtype=complex)

    @property
    def length(self):
        return abs(self.b - self.a)


@dataclass(frozen=True)
class Arc:
    center: complex
    radius: float
    theta0: float
    theta1: float

    def point(self, s):
        th = self.theta0 + (self.theta1 - self.theta0) * s
        return self.center + self.radius * np.exp(1j * th)

    def deriv(self, s):
        th = self.theta0 + (self.theta1 - self.theta0) * s
        return 1j * self.radius * (self.theta1 - self.theta0) * np.exp(1j * th)

    @property
    def length(self):
        return abs(self.radius * (self.theta1 - self.theta0))


@dataclass(frozen=True)
class CertificateEntry:
    point: complex
    kind: str
    status: str  # "below" or "looped"
    distance: float


@dataclass(frozen=True)
class ContourPath:
    """Polyline from ``-L`` to ``+L`` plus clockwise loops.

    ``segments`` are ordered left to right; ``loops`` are (center, radius)
    pairs each integrated clockwise.  ``exclusion_certificate`` records every
    singular point with its verified distance to the path.
    """

    segments: tuple
    clearance: float
    exclusion_certificate: tuple
    loops: tuple = ()
    kind: str = "trapezoid"
    family: int = 0
    meta: dict = field(default_factory=dict, compare=False)

    @property
    def vertices(self):
        return [self.segments[0].a] + [s.b for s in self.segments]

    def pieces(self):
        out = list(self.segments)
        for c, r in self.loops:
            for q in range(4):  # clockwise: theta decreasing
                out.append(Arc(c, r, -q * math.pi / 2, -(q + 1) * math.pi / 2))
        return out

    def height_at(self, x):
        """Largest Im of the polyline over abscissa ``x`` (None if not covered)."""
        best = None
        for s in self.segments:
            lo, hi = sorted((s.a.real, s.b.real))
            if hi - lo < 1e-300:
                if abs(x - lo) < 1e-300:
                    h = max(s.a.imag, s.b.imag)
                    best = h if best is None else max(best, h)
                continue
            if lo <= x <= hi:
                h = s.a.imag + (s.b.imag - s.a.imag) * (x - s.a.real) / (s.b.real - s.a.real)
                best = h if best is None else max(best, h)
        return best

    def distance(self, z):
        return polyline_distance(self.vertices, z)

    def is_below(self, z):
        """Odd number of crossings of the upward vertical ray from ``z``."""
        z = complex(z)
        n = 0
        for s in self.segments:
            a, b = s.a, s.b
            if a.real == b.real:
                continue
            lo, hi = (a, b) if a.real < b.real else (b, a)
            if lo.real <= z.real < hi.real:
                h = lo.imag + (hi.imag - lo.imag) * (z.real - lo.real) / (hi.real - lo.real)
                if h > z.imag:
                    n += 1
        return n % 2 == 1


def polyline_distance(vertices, z):
    v = np.asarray(vertices, dtype=complex)
    a, b = v[:-1], v[1:]
    d = b - a
    with np.errstate(invalid="ignore", divide="ignore"):
        t = np.clip(((z - a) * np.conj(d)).real / np.abs(d) ** 2, 0.0, 1.0)
    t = np.where(np.abs(d) == 0, 0.0, t)
    return float(np.min(np.abs(a + t * d - z)))


def _seg_point_distance(a, b, z):
    d = b - a
    if d == 0:
        return abs(z - a)
    t = min(1.0, max(0.0, ((z - a) * np.conj(d)).real / abs(d) ** 2))
    return abs(a + t * d - z)


# --------------------------------------------------------------------------- singular points

def singular_points(params: MaterialParams, k: float, family: int | None = None):
    """Singular points (point, kind) with Im >= 0 for family 1, 2 or both (None).

    Family j carries Delta_j, the square-root map entering Delta_j, and the
    pole ``ik`` of ``1/(k^2+l^2)``.
    """
    ak = abs(k)
    pts = []
    fams = (1, 2) if family is None else (family,)
    for j in fams:
        for a in delta_zeros(j, params).ratios:
            z = complex(a) * ak
            if z.imag >= 0:
                pts.append((z, f"delta{j}-zero"))
    lam, mu = params.lam, params.mu
    if 1 in fams:
        a12 = math.sqrt((lam + mu) / mu) * ak
        pts += [(complex(-a12), "l12-branch"), (complex(a12), "l12-branch")]
    if 2 in fams:
        pts.append((1j * math.sqrt((lam + mu) / (lam + 2 * mu)) * ak, "l21-branch"))
    pts.append((1j * ak, "pole"))
    pts.append((1j * ak, "sqrt-branch"))
    # merge duplicates (e.g. the Delta zeros at +-ik coincide with the pole)
    out = []
    for z, kind in pts:
        for i, (w, kinds) in enumerate(out):
            if abs(w - z) <= 1e-9 * max(1.0, ak):
                out[i] = (w, kinds + "+" + kind)
                break
        else:
            out.append((z, kind))
    return out


def _cuts(params: MaterialParams, k: float, family: int | None):
    ak = abs(k)
    lam, mu = params.lam, params.mu
    cuts = []
    if family in (None, 1):
        a12 = math.sqrt((lam + mu) / mu) * ak
        cuts.append((complex(-a12), complex(a12)))
    if family in (None, 2):
        b = math.sqrt((lam + mu) / (lam + 2 * mu)) * ak
        cuts.append((-1j * b, 1j * b))
    return cuts


# --------------------------------------------------------------------------- path builders

def default_width(params: MaterialParams):
    """Half-width W of the flat top in units of |k|."""
    re = [abs(z.real) for j in (1, 2) for z in delta_zeros(j, params).ratios if z.imag > 0]
    return 2 * max(re, default=0.0) + 4


def build_gamma_k(params: MaterialParams, k: float, clearance: float, L: float | None = None,
                  width: float | None = None) -> ContourPath:
    """Admissible trapezoid above every singular point of both families."""
    if k == 0:
        raise ValueError("k must be nonzero")
    if not clearance > 0:
        raise ValueError("clearance must be positive")
    ak = abs(k)
    pts = singular_points(params, k)
    top = max(z.imag for z, _ in pts) + clearance * ak
    W = (default_width(params) if width is None else width) * ak
    xr = W + top  # 45 degree legs
    L = max(2 * xr, 50.0) if L is None else max(L, xr * 1.000001)
    verts = [complex(-L), complex(-xr), complex(-W, top), complex(W, top), complex(xr), complex(L)]
    segs = tuple(Segment(a, b) for a, b in zip(verts[:-1], verts[1:]))
    path = ContourPath(segs, clearance, (), kind="trapezoid", meta={"height": top, "half_width": W, "L": L})
    cert = []
    for z, kind in pts:
        d = path.distance(z)
        if not path.is_below(z) or d < clearance * ak * (1 - 1e-9):
            raise CertificateViolation(f"{kind} at {z} is not below the path by {clearance * ak}")
        cert.append(CertificateEntry(z, kind, "below", d))
    return ContourPath(segs, clearance, tuple(cert), kind="trapezoid", meta=path.meta)


def _low_vertices(params, ak, family, eta, L):
    lam, mu = params.lam, params.mu
    if family == 0:
        a = math.sqrt((lam + mu) / mu) * ak
        b = math.sqrt((lam + mu) / (lam + 2 * mu)) * ak
        e = eta * ak
        return [complex(-L), complex(-a - 2 * e), complex(-a - e, e), complex(-e, e), complex(-e, b + e),
                complex(e, b + e), complex(e, e), complex(a + e, e), complex(a + 2 * e), complex(L)]
    if family == 1:
        a = math.sqrt((lam + mu) / mu) * ak
        e = eta * ak
        return [complex(-L), complex(-a - 2 * e), complex(-a - e, e), complex(a + e, e), complex(a + 2 * e), complex(L)]
    b = math.sqrt((lam + mu) / (lam + 2 * mu)) * ak
    e = eta * ak
    return [complex(-L), complex(-e), complex(-e, b + e), complex(e, b + e), complex(e), complex(L)]


def build_low_path(params: MaterialParams, k: float, family: int, clearance: float,
                   L: float | None = None, max_loop_radius: float | None = None) -> ContourPath:
    """Cut-hugging path for determinant family 1 or 2 plus clockwise loops.

    ``family=0`` gives a path hugging the cuts of both families at once.

    The offset ``eta`` (units of |k|) starts at ``clearance`` and is halved
    until every singular point of the family is at least ``eta/2`` (times
    |k|) away from the polyline.  Points above the polyline are enclosed by
    loops of radius at most half their distance to anything else, and at
    most ``max_loop_radius`` (the integrands grow like exp(c t |Im omega|)
    away from the singular points, so small loops avoid cancellation).
    """
    if family not in (0, 1, 2):
        raise ValueError("family must be 0, 1 or 2")
    if k == 0:
        raise ValueError("k must be nonzero")
    ak = abs(k)
    pts = singular_points(params, k, family or None)
    L0 = 50.0 if L is None else L
    eta = clearance
    for _ in range(60):
        verts = _low_vertices(params, ak, family, eta, max(L0, 4 * ak * 3))
        dmin = min(polyline_distance(verts, z) for z, _ in pts)
        if dmin >= 0.5 * eta * ak:
            break
        eta *= 0.5
    else:
        raise CertificateViolation("could not separate the low path from the singular points")
    Lp = max(L0, abs(verts[-2].real) * 1.000001)
    verts = _low_vertices(params, ak, family, eta, Lp)
    segs = tuple(Segment(a, b) for a, b in zip(verts[:-1], verts[1:]))
    probe = ContourPath(segs, clearance, ())
    cuts = _cuts(params, k, family or None)
    cert, loops = [], []
    for z, kind in pts:
        d = probe.distance(z)
        if probe.is_below(z) or abs(z.imag) < 1e-12 * max(1.0, ak):
            cert.append(CertificateEntry(z, kind, "below", d))
            continue
        others = [abs(z - w) for w, _ in pts if w != z]
        others += [_seg_point_distance(a, b, z) for a, b in cuts]
        r = 0.5 * min([d] + [o for o in others if o > 0])
        if max_loop_radius is not None:
            r = min(r, max_loop_radius)
        loops.append((z, r))
        cert.append(CertificateEntry(z, kind, "looped", d))
    return ContourPath(segs, clearance, tuple(cert), tuple(loops), kind="low", family=family,
                       meta={"eta": eta, "L": Lp})


def verify_certificate(path: ContourPath, params: MaterialParams, k: float):
    """Independent recomputation of the certificate; returns the minimum margin.

    Raises :class:`CertificateViolation` on any inconsistency.
    """
    ak = abs(k)
    fam = (path.family or None) if path.kind == "low" else None
    pts = singular_points(params, k, fam)
    need = path.clearance * ak if path.kind == "trapezoid" else 0.5 * path.meta["eta"] * ak
    margin = math.inf
    for z, kind in pts:
        d = polyline_distance(path.vertices, z)
        if d < need * (1 - 1e-9):
            raise CertificateViolation(f"{kind} at {z}: distance {d} < {need}")
        looped = any(abs(z - c) < 1e-12 * max(1, ak) for c, _ in path.loops)
        if not (path.is_below(z) or looped or abs(z.imag) < 1e-12 * max(1.0, ak)):
            raise CertificateViolation(f"{kind} at {z} lies above the path and is not looped")
        margin = min(margin, d - need)
    for c, r in path.loops:
        for z, _ in pts:
            if abs(z - c) > 1e-12 and abs(z - c) <= r:
                raise CertificateViolation(f"loop around {c} encloses {z}")
        if polyline_distance(path.vertices, c) <= r:
            raise CertificateViolation(f"loop around {c} touches the path")
    return margin


def growth_exponent(params: MaterialParams, path: ContourPath, y: float, t: float):
    """Bound on log|integrand growth| along the path: max (c_p t - y) Im l."""
    top = max(v.imag for v in path.vertices)
    return max(0.0, (params.cp * t - y) * top)


# --------------------------------------------------------------------------- quadrature

@dataclass
class QuadratureResult:
    value: object
    error_estimate: float
    panels_used: int
    truncation_bound: float = 0.0
    converged: bool = True


_CHUNK_ELEMENTS = 4_000_000  # complex entries per integrand batch (~64 MB)


def _eval_panels(f, pieces, pid, s0, s1):
    """Gauss–Kronrod sums on a batch of panels. Returns (K, G) with shape (n, m...).

    Large batches are split so the integrand array stays below a fixed size.
    """
    n = len(pid)
    if n > 256:
        z0 = np.array([pieces[pid[0]].point(np.array([0.5 * (s0[0] + s1[0])]))[0]])
        if getattr(f, "factored", False):
            W, E = f(z0)
            per_panel = 15 * max(1, int(np.prod(W.shape[1:])) + int(np.prod(E.shape[1:])))
        else:
            per_panel = 15 * max(1, int(np.prod(np.asarray(f(z0)).shape[1:])))
        step = max(1, _CHUNK_ELEMENTS // per_panel)
        if n > step:
            parts = [_eval_panels_block(f, pieces, pid[i:i + step], s0[i:i + step], s1[i:i + step])
                     for i in range(0, n, step)]
            return np.concatenate([p[0] for p in parts]), np.concatenate([p[1] for p in parts])
    return _eval_panels_block(f, pieces, pid, s0, s1)


def _eval_panels_block(f, pieces, pid, s0, s1):
    half = 0.5 * (s1 - s0)
    mid = 0.5 * (s1 + s0)
    s = mid[:, None] + half[:, None] * _XK[None, :]  # (n, 15)
    z = np.empty(s.shape, dtype=complex)
    dz = np.empty(s.shape, dtype=complex)
    for i in np.unique(pid):
        sel = pid == i
        z[sel] = pieces[i].point(s[sel])
        dz[sel] = pieces[i].deriv(s[sel])
    n = len(pid)
    jac = dz * half[:, None]
    if getattr(f, "factored", False):
        # value at each node is the outer product W (x) E: sum panels as batched matmuls
        W, E = f(z.ravel())
        wshape, eshape = W.shape[1:], E.shape[1:]
        W = W.reshape(n, 15, -1)
        E = E.reshape(n, 15, -1)
        out = []
        for wts in (_WK, _WG):
            Wj = np.swapaxes(W * (wts[None, :] * jac)[:, :, None], 1, 2)  # (n, a, 15)
            out.append((Wj @ E).reshape((n,) + wshape + eshape))
        return out[0], out[1]
    vals = np.asarray(f(z.ravel()))
    tail = vals.shape[1:]
    vals = vals.reshape((n, 15) + tail)
    jac = jac.reshape((n, 15) + (1,) * len(tail))
    K = np.tensordot(_WK, np.moveaxis(vals * jac, 1, 0), axes=(0, 0))
    G = np.tensordot(_WG, np.moveaxis(vals * jac, 1, 0), axes=(0, 0))
    return K, G


def adaptive_pieces(f, pieces, tol=1e-8, floor=1e-14, max_panel=2.0, max_panels=40000, raise_on_fail=True):
    """Adaptive GK15 over a list of pieces (``Segment``/``Arc``).

    ``f`` maps a 1-D complex array of points to an array of shape ``(n,)`` or
    ``(n, m...)``.  If ``f.factored`` is true it instead returns ``(W, E)`` of
    shapes ``(n, a...)`` and ``(n, b...)``; the integrand is their outer product
    ``(n, a..., b...)``, which is never formed.  Panels are split breadth-first until the summed error
    estimate is below ``tol * max(max|value|, floor)``.
    """
    pid, s0, s1, w = [], [], [], []
    for i, p in enumerate(pieces):
        n = max(1, int(math.ceil(p.length / max_panel)))
        e = np.linspace(0.0, 1.0, n + 1)
        pid += [i] * n
        s0 += list(e[:-1])
        s1 += list(e[1:])
    pid, s0, s1 = np.array(pid), np.array(s0), np.array(s1)
    lengths = np.array([pieces[i].length for i in range(len(pieces))])
    total_len = float(np.sum(lengths)) or 1.0
    done = None
    done_err = 0.0
    used = 0
    while True:
        K, G = _eval_panels(f, pieces, pid, s0, s1)
        used += len(pid)
        err = np.abs(K - G)
        err = err.reshape(len(pid), -1).max(axis=1) if err.ndim > 1 else err
        part = K.sum(axis=0)
        total = part if done is None else done + part
        E = done_err + float(err.sum())
        target = tol * max(float(np.max(np.abs(total))) if np.size(total) else 0.0, floor)
        if E <= target:
            return QuadratureResult(total, E, used)
        share = target * (lengths[pid] * (s1 - s0)) / total_len
        accept = (err <= share) | ((s1 - s0) < 1e-13)
        if used + 2 * int((~accept).sum()) > max_panels:
            res = QuadratureResult(total, E, used, converged=False)
            if raise_on_fail:
                raise ToleranceNotMet(f"adaptive quadrature stopped at {used} panels, error {E:.3g} > {target:.3g}", res)
            return res
        acc_sum = K[accept].sum(axis=0)
        done = acc_sum if done is None else done + acc_sum
        done_err += float(err[accept].sum())
        rej = ~accept
        m = 0.5 * (s0[rej] + s1[rej])
        pid = np.concatenate([pid[rej], pid[rej]])
        s0, s1 = np.concatenate([s0[rej], m]), np.concatenate([m, s1[rej]])


def integrate_path(f, path: ContourPath, tol: float = 1e-8, floor: float = 1e-14, max_panel: float = 2.0,
                   max_panels: int = 40000, raise_on_fail: bool = True) -> QuadratureResult:
    """Integral of ``f`` along the polyline plus its clockwise loops."""
    return adaptive_pieces(f, path.pieces(), tol, floor, max_panel, max_panels, raise_on_fail)


def integrate_real_line(f, L: float, tol: float = 1e-8, breakpoints=(), decay: tuple = ("power", 2.0),
                        floor: float = 1e-14, max_panel: float = 2.0, max_panels: int = 40000,
                        raise_on_fail: bool = True) -> QuadratureResult:
    """Symmetric truncation of ``int f`` over the real line at ``+-L``.

    ``decay`` is ``("power", p)`` for ``|f| ~ |l|^-p`` or ``("exp", rate)``; the
    reported truncation bound is the tail integral of that model matched to
    ``|f(+-L)|``.
    """
    pts = sorted({-L, L, *[float(b) for b in breakpoints if -L < b < L]})
    pieces = [Segment(complex(a), complex(b)) for a, b in zip(pts[:-1], pts[1:])]
    res = adaptive_pieces(f, pieces, tol, floor, max_panel, max_panels, raise_on_fail)
    ends = np.asarray(f(np.array([-L, L], dtype=complex)))
    mag = np.abs(ends).reshape(2, -1).max(axis=1).sum()
    kind, par = decay
    if kind == "power":
        res.truncation_bound = float(mag * L / (par - 1)) if par > 1 else math.inf
    else:
        res.truncation_bound = float(mag / par)
    return res
