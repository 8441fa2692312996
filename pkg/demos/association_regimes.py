"""Who serves the user: TBS near town, LoS ABS in the countryside.

Run: python3 demos/association_regimes.py
"""

import numpy as np

from vhetnet import UserFrame, default_params
from vhetnet import geometry as geo
from vhetnet.association import association_probabilities, min_interferer_distance
from vhetnet.nearest import DistanceDistribution
from vhetnet.params import ALL_KINDS, BsKind

p = default_params()

# %% Association probabilities along a radial walk, for a few exclusion radii.
for r_e in (0.0, 8.0, 12.0):
    q = p.replace(r_e=r_e)
    print(f"r_e = {r_e:g} km")
    for r_u in (0.0, 4.0, 8.0, 12.0, 20.0, 30.0):
        a = association_probabilities(UserFrame(r_u, r_e), q)
        print(f"  r_u = {r_u:4.0f}: A_L = {a.L:.3f}  A_N = {a.N:.3f}  A_T = {a.T:.3f}")

# %% A TBS serving at 1 km keeps rivals away: how close may each class come?
for c in ALL_KINDS:
    d = min_interferer_distance(BsKind.T, c, 1.0, p)
    print(f"closest {c} interferer when a TBS serves at 1 km: {d:.3f} km")

# %% Nearest-ABS distance law around a user 10 km out (outer case, regions I-IV).
frame = UserFrame(10.0, 8.0)
law = DistanceDistribution(BsKind.L, frame, p)
for z in (1.0, 2.0, 4.0, 6.0, 10.0, 18.0, 25.0):
    print(f"z = {z:4.1f} ({geo.classify_region(z, frame).value:>3}): "
          f"P(nearest LoS ABS within z) = {law.cdf(z):.4f}")
print("support starts at", DistanceDistribution(BsKind.L, UserFrame(5.0, 8.0), p).support_start(),
      "km for a user 5 km out (inside the disk)")
