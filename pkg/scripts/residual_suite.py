"""Residual report (field equations, surface tractions, initial state) for the mollified normal load.

    python3 scripts/residual_suite.py [--h 0.015625] [--out out/residuals.npz]

Evaluates u, v on [-2, 2] x [0.2, 2] at three-point time stencils around
t = 0.5 and t = 1 plus t = 0, dt, 2dt, and on a five-layer strip at the
surface, then prints the relative residuals.  About 10 minutes at h = 1/64.
"""
import argparse
import os
import time

import numpy as np

from elastoutm.solver import FieldGrid, QuadConfig, bc_residual, evaluate_grid, ic_residual, normal_load_problem, \
    pde_residual
from elastoutm.spectral import MaterialParams


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--h", type=float, default=1 / 64)
    ap.add_argument("--mollifier", type=float, default=0.1)
    ap.add_argument("--rise", type=float, default=0.05)
    ap.add_argument("--out", default="out/residuals.npz")
    a = ap.parse_args()
    p = MaterialParams(2.0, 1.0)
    prob = normal_load_problem(p, 1.0, mollifier=a.mollifier, rise=a.rise)
    h, dt = a.h, a.h / 2
    xs = np.arange(-round(2 / h), round(2 / h) + 1) * h
    ys = 0.2 + np.arange(round(1.8 / h) + 1) * h
    ts = np.array([0, dt, 2 * dt, 0.5 - dt, 0.5, 0.5 + dt, 1 - 2 * dt, 1 - dt, 1.0])
    t0 = time.time()
    grid = evaluate_grid(prob, xs, ys, ts)
    strip = evaluate_grid(prob, xs, np.arange(5) * h, [0.5, 1.0], QuadConfig(y_min=0.0))
    peak = float(max(np.abs(grid.u).max(), np.abs(grid.v).max()))
    print(f"evaluated in {time.time() - t0:.0f} s; peak |u|,|v| = {peak:.4f}")
    print(f"field equations   {pde_residual(p, grid)['relative']:.3%}")
    print(f"surface (order 4) {bc_residual(p, prob.forcing, strip, order=4):.3%}")
    print(f"surface (order 2) {bc_residual(p, prob.forcing, strip, order=2):.3%}")
    ic = ic_residual(prob, FieldGrid(xs, ys, ts[:3], grid.u[:3], grid.v[:3]), peak)
    print(f"initial state     {ic:.2e} of peak")
    os.makedirs(os.path.dirname(a.out) or ".", exist_ok=True)
    np.savez(a.out, x=xs, y=ys, t=ts, u=grid.u, v=grid.v)
    print(f"wrote {a.out}")


if __name__ == "__main__":
    main()
