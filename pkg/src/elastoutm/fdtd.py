"""Finite-difference time-domain oracle on a truncated half-plane.

Displacements (u, v) live on a uniform grid with the free surface on the row
``y = 0`` and one ghost row at ``y = -h``.  Time stepping is the explicit
second-order leapfrog of

    u_tt = (lam+2mu) u_xx + mu u_yy + (lam+mu) v_xy
    v_tt = mu v_xx + (lam+2mu) v_yy + (lam+mu) u_xy

with central differences.  Before each step the ghost row is filled so that
the centred discrete stress conditions

    u_y + v_x = g1,      v_y + lam/(lam+2mu) u_x = g2

hold exactly on the surface row.  The outer edges carry a sponge layer with a
quadratic damping ramp and homogeneous Dirichlet walls.
"""
from __future__ import annotations

import math
import time
from dataclasses import dataclass, field, replace

import numpy as np

from . import __version__
from .errors import CflViolation, DomainTooSmall, GridTooCoarse
from .solver import FieldGrid, boundary_data
from .spectral import MaterialParams
from .transforms import BoundaryForcing, InitialData


@dataclass(frozen=True)
class FdtdConfig:
    """Grid, time step and truncation of an FDTD run.

    The computational box is ``[-X, X] x [0, Y]``; its outer ``layer`` band
    (default ``0.5 cp T``) is the sponge.  ``dt`` defaults to the largest step
    not above ``cfl * h / cp`` that lands on every output time.
    """

    params: MaterialParams
    X: float
    Y: float
    h: float
    dt: float | None = None
    layer: float | None = None
    sponge_strength: float = 30.0
    cfl: float = 0.5
    periodic_x: bool = False

    def __post_init__(self):
        if not (self.h > 0 and self.X > 0 and self.Y > 0):
            raise ValueError("h, X, Y must be positive")
        if self.dt is not None and self.dt > 0.5 * self.h / self.params.cp * (1 + 1e-12):
            raise CflViolation(f"dt={self.dt:.4g} exceeds 0.5 h / cp = {0.5 * self.h / self.params.cp:.4g}")
        if self.cfl > 0.5:
            raise CflViolation("cfl factor must not exceed 0.5")

    @property
    def nx(self):
        return int(round(2 * self.X / self.h)) + 1

    @property
    def ny(self):
        return int(round(self.Y / self.h)) + 1

    @property
    def x(self):
        return -self.X + self.h * np.arange(self.nx)

    @property
    def y(self):
        return self.h * np.arange(self.ny)

    def time_step(self, out_times=()):
        if self.dt is not None:
            return self.dt
        dmax = self.cfl * self.h / self.params.cp
        pos = sorted({float(t) for t in out_times if t > 0})
        if not pos:
            return dmax
        base = min([pos[0]] + [b - a for a, b in zip(pos[:-1], pos[1:]) if b - a > 1e-12])
        dt = base / math.ceil(base / dmax - 1e-9)
        for t in pos:
            if abs(t / dt - round(t / dt)) > 1e-6:
                raise ValueError(f"output time {t} is not a multiple of the step {dt:.6g}; pass dt explicitly")
        return dt


@dataclass
class FdtdState:
    """Displacements at the current and previous time levels; arrays are [row, col], row 0 = ghost."""

    u: np.ndarray
    v: np.ndarray
    u_prev: np.ndarray
    v_prev: np.ndarray
    t: float = 0.0
    n: int = 0
    meta: dict = field(default_factory=dict)


# --------------------------------------------------------------------------- operators

def _sponge(cfg: FdtdConfig, layer: float):
    """Damping coefficient gamma(x, y) on the full array (ghost row included)."""
    x = cfg.x
    y = np.concatenate([[-cfg.h], cfg.y])
    gmax = cfg.sponge_strength * cfg.params.cp / max(layer, cfg.h)
    dx = np.zeros_like(x) if cfg.periodic_x else np.clip((np.abs(x) - (cfg.X - layer)) / layer, 0, 1)
    dy = np.clip((y - (cfg.Y - layer)) / layer, 0, 1)
    return gmax * np.maximum(dx[None, :] ** 2, dy[:, None] ** 2)


def fill_ghost(state: FdtdState, cfg: FdtdConfig, g1, g2):
    """Ghost row from the centred stress conditions on the surface row (row 1)."""
    p = cfg.params
    r = p.lam / (p.lam + 2 * p.mu)
    h = cfg.h
    u, v = state.u, state.v
    if cfg.periodic_x:
        dvx = np.roll(v[1], -1) - np.roll(v[1], 1)
        dux = np.roll(u[1], -1) - np.roll(u[1], 1)
        u[0] = u[2] + dvx - 2 * h * g1
        v[0] = v[2] + r * dux - 2 * h * g2
        return
    u[0, 1:-1] = u[2, 1:-1] + (v[1, 2:] - v[1, :-2]) - 2 * h * g1[1:-1]
    v[0, 1:-1] = v[2, 1:-1] + r * (u[1, 2:] - u[1, :-2]) - 2 * h * g2[1:-1]
    u[0, [0, -1]] = 0.0
    v[0, [0, -1]] = 0.0


def _operator(u, v, cfg: FdtdConfig):
    """(L u, L v) on rows 1..ny-1 (surface to one above the bottom wall)."""
    p = cfg.params
    a, b, c = p.lam + 2 * p.mu, p.mu, p.lam + p.mu
    ih2 = 1.0 / cfg.h**2
    if cfg.periodic_x:
        def xs(arr, s):
            return np.roll(arr, -s, axis=1)
        C = slice(None)
    else:
        def xs(arr, s):
            return arr[:, 1 + s: arr.shape[1] - 1 + s]
        C = slice(1, -1)
    uc, um, up = u[1:-1], u[:-2], u[2:]
    vc, vm, vp = v[1:-1], v[:-2], v[2:]
    uxx = xs(uc, 1) - 2 * xs(uc, 0) + xs(uc, -1)
    vxx = xs(vc, 1) - 2 * xs(vc, 0) + xs(vc, -1)
    uyy = xs(up, 0) - 2 * xs(uc, 0) + xs(um, 0)
    vyy = xs(vp, 0) - 2 * xs(vc, 0) + xs(vm, 0)
    vxy = 0.25 * (xs(vp, 1) - xs(vp, -1) - xs(vm, 1) + xs(vm, -1))
    uxy = 0.25 * (xs(up, 1) - xs(up, -1) - xs(um, 1) + xs(um, -1))
    Lu = (a * uxx + b * uyy + c * vxy) * ih2
    Lv = (b * vxx + a * vyy + c * uxy) * ih2
    return Lu, Lv, C


def step(state: FdtdState, cfg: FdtdConfig, forcing: BoundaryForcing, t: float | None = None,
         dt: float | None = None, gamma=None, body=None) -> FdtdState:
    """One leapfrog step from ``state.t`` to ``state.t + dt``.

    ``gamma`` is the sponge array (computed from ``cfg`` if omitted);
    ``body`` an optional callable ``t -> (fu, fv)`` of body-force arrays on
    rows 1..ny-1.
    """
    dt = dt or cfg.time_step()
    if dt > 0.5 * cfg.h / cfg.params.cp * (1 + 1e-12):
        raise CflViolation(f"dt={dt:.4g} exceeds 0.5 h / cp")
    t = state.t if t is None else t
    if gamma is None:
        gamma = _sponge(cfg, cfg.layer or 0.25 * min(cfg.X, cfg.Y))
    g1, g2 = boundary_data(cfg.params, forcing, cfg.x, t)
    fill_ghost(state, cfg, np.broadcast_to(g1, cfg.x.shape), np.broadcast_to(g2, cfg.x.shape))
    Lu, Lv, C = _operator(state.u, state.v, cfg)
    if body is not None:
        fu, fv = body(t)
        Lu = Lu + fu[:, C]
        Lv = Lv + fv[:, C]
    gd = gamma[1:-1, C] * dt
    u_new = np.zeros_like(state.u)
    v_new = np.zeros_like(state.v)
    R = slice(1, -1)
    u_new[R, C] = (2 * state.u[R, C] - (1 - gd) * state.u_prev[R, C] + dt * dt * Lu) / (1 + gd)
    v_new[R, C] = (2 * state.v[R, C] - (1 - gd) * state.v_prev[R, C] + dt * dt * Lv) / (1 + gd)
    return FdtdState(u_new, v_new, state.u, state.v, t + dt, state.n + 1, state.meta)


def surface_residual(state: FdtdState, cfg: FdtdConfig, forcing: BoundaryForcing):
    """Max violation of the centred discrete stress conditions on the surface row (after a ghost fill)."""
    g1, g2 = boundary_data(cfg.params, forcing, cfg.x, state.t)
    g1 = np.broadcast_to(g1, cfg.x.shape)
    g2 = np.broadcast_to(g2, cfg.x.shape)
    fill_ghost(state, cfg, g1, g2)
    p = cfg.params
    r = p.lam / (p.lam + 2 * p.mu)
    u, v, h = state.u, state.v, cfg.h
    s = slice(1, -1)
    e1 = (u[2, s] - u[0, s]) / (2 * h) + (v[1, 2:] - v[1, :-2]) / (2 * h) - g1[s]
    e2 = (v[2, s] - v[0, s]) / (2 * h) + r * (u[1, 2:] - u[1, :-2]) / (2 * h) - g2[s]
    scale = max(float(np.max(np.abs(g1))), float(np.max(np.abs(g2))), 1.0)
    return float(max(np.max(np.abs(e1)), np.max(np.abs(e2)))) / scale


def energy(state: FdtdState, cfg: FdtdConfig, dt: float):
    """Leapfrog energy at the half level between ``state.u_prev`` and ``state.u``.

    Kinetic part from the time difference, strain part as the bilinear form
    ``-<u^{n+1}, L u^n>``; the surface row carries weight 1/2.  This is the
    quantity the interior scheme conserves exactly, so with a sponge it can
    only decrease away from surface-row effects.  Valid after a ``step``
    call (the ghost row of level n is filled in place).
    """
    Lu, Lv, C = _operator(state.u_prev, state.v_prev, cfg)
    w = np.ones((cfg.ny - 1, 1))
    w[0] = 0.5
    du = (state.u - state.u_prev)[1:-1, C]
    dv = (state.v - state.v_prev)[1:-1, C]
    kin = 0.5 * np.sum(w * (du**2 + dv**2)) / dt**2
    pot = -0.5 * np.sum(w * (state.u[1:-1, C] * Lu + state.v[1:-1, C] * Lv))
    return float(cfg.h**2 * (kin + pot))


# --------------------------------------------------------------------------- driver

def initial_state(cfg: FdtdConfig, initial: InitialData, dt: float) -> FdtdState:
    """Levels t = 0 and t = -dt from displacement and velocity data (second-order start)."""
    shape = (cfg.ny + 1, cfg.nx)
    u = np.zeros(shape)
    v = np.zeros(shape)
    if initial.is_zero:
        return FdtdState(u, v, u.copy(), v.copy())
    X, Y = np.meshgrid(cfg.x, cfg.y)
    u[1:] = initial.field_values("u0", X, Y)
    v[1:] = initial.field_values("v0", X, Y)
    u1 = np.zeros(shape)
    v1 = np.zeros(shape)
    u1[1:] = initial.field_values("u1", X, Y)
    v1[1:] = initial.field_values("v1", X, Y)
    st = FdtdState(u, v, u.copy(), v.copy())
    fill_ghost(st, cfg, np.zeros(cfg.nx), np.zeros(cfg.nx))
    Lu, Lv, C = _operator(st.u, st.v, cfg)
    up = u - dt * u1
    vp = v - dt * v1
    up[1:-1, C] += 0.5 * dt * dt * Lu
    vp[1:-1, C] += 0.5 * dt * dt * Lv
    for a in (up, vp):
        a[-1] = 0.0
        if not cfg.periodic_x:
            a[:, [0, -1]] = 0.0
    return FdtdState(u, v, up, vp)


def _sample(arr, cfg: FdtdConfig, xs, ys):
    """Bilinear interpolation of rows 1.. (y >= 0) at the tensor points ys x xs."""
    fx = (np.asarray(xs) + cfg.X) / cfg.h
    fy = np.asarray(ys) / cfg.h
    i0 = np.clip(np.floor(fx).astype(int), 0, cfg.nx - 2)
    j0 = np.clip(np.floor(fy).astype(int), 0, cfg.ny - 2)
    ax = fx - i0
    ay = fy - j0
    A = arr[1:]
    r0 = A[j0][:, i0] * (1 - ax) + A[j0][:, i0 + 1] * ax
    r1 = A[j0 + 1][:, i0] * (1 - ax) + A[j0 + 1][:, i0 + 1] * ax
    return r0 * (1 - ay[:, None]) + r1 * ay[:, None]


def check_domain(cfg: FdtdConfig, forcing: BoundaryForcing, xs, ys, t_end: float, layer: float):
    """Raise DomainTooSmall unless waves and evaluation points stay clear of the sponge until t_end."""
    reach = cfg.params.cp * t_end + 4 * forcing.mollifier
    if forcing.kind == "moving":
        reach += forcing.speed * t_end
    if not cfg.periodic_x and reach >= cfg.X - layer:
        raise DomainTooSmall(f"wavefront reach {reach:.3g} >= X - layer = {cfg.X - layer:.3g}")
    if reach >= cfg.Y - layer:
        raise DomainTooSmall(f"wavefront reach {reach:.3g} >= Y - layer = {cfg.Y - layer:.3g}")
    if (not cfg.periodic_x and np.max(np.abs(xs)) > cfg.X - layer) or np.max(ys) > cfg.Y - layer:
        raise DomainTooSmall("evaluation points lie inside the sponge layer")


def run(cfg: FdtdConfig, forcing: BoundaryForcing, initial: InitialData = InitialData(), xs=None, ys=None,
        ts=(1.0,), convergence: bool = False, rise_min_steps: int = 4) -> FieldGrid:
    """Integrate to every time in ``ts`` and sample (u, v) on ``xs x ys``.

    The load must be mollified (Gaussian width at least ``4 h``) and, if
    smoothed in time, rise over at least four steps.  With ``convergence``
    the run is repeated at ``h/2`` and the relative L2 difference is stored
    in ``meta['convergence']``.
    """
    ts = np.sort(np.atleast_1d(np.asarray(ts, dtype=float)))
    xs = cfg.x if xs is None else np.atleast_1d(np.asarray(xs, dtype=float))
    ys = cfg.y if ys is None else np.atleast_1d(np.asarray(ys, dtype=float))
    if np.any(ts < 0):
        raise ValueError("output times must be >= 0")
    if not forcing.is_zero and forcing.kind != "sampled":
        if forcing.mollifier < 4 * cfg.h:
            raise GridTooCoarse(f"mollifier width {forcing.mollifier} below 4 h = {4 * cfg.h}")
    dt = cfg.time_step(ts)
    if forcing.profile.kind == "smoothed" and forcing.profile.rise < rise_min_steps * dt:
        raise GridTooCoarse(f"rise time {forcing.profile.rise} below {rise_min_steps} steps")
    t_end = float(ts[-1])
    layer = cfg.layer if cfg.layer is not None else max(0.5 * cfg.params.cp * t_end, 4 * cfg.h)
    meta = {"solver": "fdtd", "h": cfg.h, "dt": dt, "layer": layer, "X": cfg.X, "Y": cfg.Y,
            "version": __version__}
    shape = (len(ts), len(ys), len(xs))
    if forcing.is_zero and initial.is_zero:
        return FieldGrid(xs, ys, ts, np.zeros(shape), np.zeros(shape), 0.0, meta)
    check_domain(cfg, forcing, xs, ys, t_end, layer)
    gamma = _sponge(cfg, layer)
    st = initial_state(cfg, initial, dt)
    U = np.zeros(shape)
    V = np.zeros(shape)
    steps = [int(round(t / dt)) for t in ts]
    clock = time.time()
    bc = 0.0
    for k, nk in enumerate(steps):
        while st.n < nk:
            st = step(st, cfg, forcing, st.n * dt, dt, gamma)
        bc = max(bc, surface_residual(st, cfg, forcing))
        U[k] = _sample(st.u, cfg, xs, ys)
        V[k] = _sample(st.v, cfg, xs, ys)
    meta.update(steps=int(steps[-1]), seconds=time.time() - clock, surface_residual=bc)
    grid = FieldGrid(xs, ys, ts, U, V, 0.0, meta)
    if convergence:
        fine = run(replace(cfg, h=cfg.h / 2, dt=None if cfg.dt is None else cfg.dt / 2), forcing, initial,
                   xs, ys, ts, convergence=False, rise_min_steps=rise_min_steps)
        diff = np.sqrt(np.sum((U - fine.u) ** 2 + (V - fine.v) ** 2) / max(np.sum(fine.u**2 + fine.v**2), 1e-300))
        meta["convergence"] = {"h": cfg.h, "h_half": cfg.h / 2, "relative_l2": float(diff)}
    return grid


def relative_l2(a: FieldGrid, b: FieldGrid, t_index: int | None = None):
    """||a - b|| / ||b|| over (u, v), optionally at one output time."""
    sl = slice(None) if t_index is None else t_index
    num = np.sum((a.u[sl] - b.u[sl]) ** 2 + (a.v[sl] - b.v[sl]) ** 2)
    den = np.sum(b.u[sl] ** 2 + b.v[sl] ** 2)
    return float(np.sqrt(num / den)) if den > 0 else float(np.sqrt(num))
