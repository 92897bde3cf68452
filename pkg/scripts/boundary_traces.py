"""Surface traces in Fourier space from three independent routes.

    python3 scripts/boundary_traces.py [--k 0.5 1 2] [--tmax 2]

For a suddenly applied normal line load with zero initial state, compares
the time-stepped Volterra system, the inverted Laplace-domain solution and
the spectral field transformed back at the surface.
"""
import argparse

import numpy as np

from elastoutm.laplace import laplace_trace, main_path_trace, solve_volterra
from elastoutm.solver import QuadConfig
from elastoutm.spectral import MaterialParams
from elastoutm.transforms import BoundaryForcing, InitialData


def rel(a, b):
    a, b = np.concatenate([a.u, a.v]), np.concatenate([b.u, b.v])
    return float(np.linalg.norm(a - b) / np.linalg.norm(b))


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--k", type=float, nargs="+", default=[0.5, 1.0, 2.0])
    ap.add_argument("--tmax", type=float, default=2.0)
    ap.add_argument("--num", type=int, default=201)
    a = ap.parse_args()
    p = MaterialParams(2.0, 1.0)
    forcing = BoundaryForcing("normal", 1.0)
    t = np.linspace(0.0, a.tmax, a.num)
    print(f"{'k':>6} {'volterra-laplace':>18} {'volterra-spectral':>18}")
    for k in a.k:
        vo = solve_volterra(p, forcing, InitialData(), k, t)
        la = laplace_trace(p, forcing, k, t)
        sp = main_path_trace(p, forcing, k, t, quad=QuadConfig(y_min=0.0))
        print(f"{k:6g} {rel(vo, la):18.2e} {rel(vo, sp):18.2e}")


if __name__ == "__main__":
    main()
