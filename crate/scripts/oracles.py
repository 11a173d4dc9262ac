#!/usr/bin/env python3
"""Independent high-precision reference values frozen into the Rust tests.

Run with `python3 scripts/oracles.py`. Uses mpmath at 50 digits; nothing here
shares code with the Rust implementation.
"""
from mpmath import mp, mpf, log, exp, sqrt, e, pi, zeta, findroot, floor, mpc, arg, fabs

mp.dps = 50


def c_sigma(s):
    L = fabs(log(2 * s - 1))
    return L / (L + 1)


def show(name, v):
    print(f"{name} = {mp.nstr(v, 20)}")


show("c_sigma(0.75)", c_sigma(mpf("0.75")))
s, b = mpf("0.95"), mpf("0.9")
show("gamma_max(0.95,0.9)", min(1, c_sigma(s) * (e**2 - e) * (b - 1) / log(b)))
sstar = findroot(lambda x: c_sigma(x) * (e**2 - e) - 1, mpf("0.88"))
show("sigma_star", sstar)

# theorem bound factors
s, k, T = mpf("0.75"), mpf("0.2"), mpf(10) ** 8
L = fabs(log(2 * s - 1))
shape = min(1, (e**2 - e) * c_sigma(s))
show("bound.shape", shape)
show("bound.kappa_factor", k ** (1 - s) / sqrt(L))
show("bound.growth_factor", log(T) ** (1 - s) / log(log(T)) ** s)
for TT in [10**3, 10**4, 10**5]:
    TT = mpf(TT)
    show(f"growth(T={int(TT)}, s=0.6)", log(TT) ** (1 - mpf("0.6")) / log(log(TT)) ** mpf("0.6"))


def primes_in(lo, hi):
    out = []
    n = int(floor(lo)) + 1
    while n <= hi:
        if n >= 2 and all(n % d for d in range(2, int(n**0.5) + 1)):
            out.append(n)
        n += 1
    return out


for N in [16, 10**3, 10**4, 10**5, 10**6]:
    base = log(N) * log(log(N))
    ends = [exp(mpf(x)) * base for x in ("0.5", "1", "2", "2.5")]
    print(f"N={N}: endpoints", [mp.nstr(x, 15) for x in ends])
    print(f"   |P-|={len(primes_in(ends[0], ends[1]))} |P|={len(primes_in(ends[1], ends[2]))} "
          f"|P+|={len(primes_in(ends[2], ends[3]))}")

# zeta values
for (sg, t) in [("0.75", "0"), ("0.6", "100"), ("0.8", "1000"), ("0.55", "5000"), ("0.5", "14.134725"),
                ("0.9", "20000"), ("2", "0")]:
    z = zeta(mpc(mpf(sg), mpf(t)))
    print(f"zeta({sg}+{t}i) = {mp.nstr(z.real, 20)} {mp.nstr(z.imag, 20)}  |z|={mp.nstr(abs(z), 10)}")


def log_zeta_tracked(sg, t, steps=4000):
    """log zeta along the horizontal segment from 3+it to sg+it, unwrapped finely."""
    sg, t = mpf(sg), mpf(t)
    z0 = zeta(mpc(3, t))
    val = log(z0)
    prev = z0
    for j in range(1, steps + 1):
        x = 3 + (sg - 3) * j / steps
        z = zeta(mpc(x, t))
        val += log(z / prev)
        prev = z
    return val


mp.dps = 25
for (sg, t) in [("0.6", "100"), ("0.75", "523.7"), ("0.55", "1234.5"), ("0.8", "40.1")]:
    v = log_zeta_tracked(sg, t, steps=1500)
    print(f"log_zeta({sg}+{t}i) = {mp.nstr(v.real, 16)} {mp.nstr(v.imag, 16)}")
