"""Pick the exclusion radius that maximises the worst-case coverage.

For each r_e the minimum of P_c over r_u = 0, 3, ..., 30 km is computed;
the best r_e maximises that minimum. Analytic only; a few minutes per density.

Run: python3 demos/exclusion_radius.py [--lambda-a 0.15] [--r-e 0:20:4]
"""

import argparse

import numpy as np

from vhetnet import UserFrame, default_params
from vhetnet.cli import parse_grid
from vhetnet.coverage import coverage

parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
parser.add_argument("--lambda-a", type=float, default=0.15)
parser.add_argument("--r-e", default="0:20:4")
args = parser.parse_args()

r_us = np.arange(0, 31, 3.0)
best = (-1.0, None)
for r_e in parse_grid(args.r_e):
    p = default_params(lambda_A=args.lambda_a, r_e=r_e)
    vals = [coverage(UserFrame(r, r_e), p).p_total for r in r_us]
    k = int(np.argmin(vals))
    print(f"r_e = {r_e:4.1f} km: min P_c = {vals[k]:.4f} at r_u = {r_us[k]:g} km")
    if vals[k] > best[0]:
        best = (vals[k], r_e)
print(f"best exclusion radius {best[1]:g} km, worst-case coverage {best[0]:.4f}")
