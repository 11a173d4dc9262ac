#!/usr/bin/env python3
"""Random zeta values on the strip from mpmath, frozen as a CSV test fixture.

Run with `python3 scripts/zeta_samples.py > crates/core/tests/data/zeta_samples.csv`.
"""
import random

from mpmath import mp, mpc, zeta

mp.dps = 30
rng = random.Random(20240611)
print("sigma,t,re,im")
for _ in range(1000):
    s = rng.uniform(0.55, 0.95)
    t = rng.uniform(15.0, 1e4)
    z = zeta(mpc(s, t))
    print(f"{s!r},{t!r},{mp.nstr(z.real, 20)},{mp.nstr(z.imag, 20)}")
