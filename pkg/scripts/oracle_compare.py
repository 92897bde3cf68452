"""Finite-difference oracle against the spectral field stored by residual_suite.py.

    python3 scripts/oracle_compare.py [--field out/residuals.npz] [--h 0.00390625]

Prints the relative L2 difference of (u, v) at t = 0.5 and t = 1 over the
stored grid.  h = 1/256 takes a few minutes.
"""
import argparse

import numpy as np

from elastoutm.fdtd import FdtdConfig, run
from elastoutm.spectral import MaterialParams
from elastoutm.transforms import BoundaryForcing, TimeProfile


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--field", default="out/residuals.npz")
    ap.add_argument("--h", type=float, default=1 / 256)
    ap.add_argument("--mollifier", type=float, default=0.1)
    ap.add_argument("--rise", type=float, default=0.05)
    ap.add_argument("--box", type=float, default=3.5, help="half-width and depth of the computational box")
    a = ap.parse_args()
    d = np.load(a.field)
    p = MaterialParams(2.0, 1.0)
    forcing = BoundaryForcing("normal", 1.0, TimeProfile("smoothed", a.rise), mollifier=a.mollifier)
    times = [0.5, 1.0]
    fd = run(FdtdConfig(p, a.box, a.box, a.h), forcing, xs=d["x"], ys=d["y"], ts=times)
    for i, t in enumerate(times):
        j = int(np.argmin(np.abs(d["t"] - t)))
        u, v = d["u"][j], d["v"][j]
        rel = np.sqrt(np.sum((fd.u[i] - u) ** 2 + (fd.v[i] - v) ** 2) / np.sum(u**2 + v**2))
        print(f"t = {t:g}: relative L2 difference {rel:.3%}")
    print(f"fdtd: {fd.meta['steps']} steps in {fd.meta['seconds']:.0f} s, surface residual {fd.meta['surface_residual']:.1e}")


if __name__ == "__main__":
    main()
