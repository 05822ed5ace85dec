"""
The HTMP family next to Marchenko-Pastur
========================================

Tabulates a few HTMP densities, their tail exponents and the distance to
the MP law as kappa grows, then checks a tridiagonal sample against the
limiting CDF.

    python3 demos/densities.py
"""
import numpy as np

from htmp_lab import (HTMPParams, MPParams, RngStream, density_cdf, htmp_pdf, ks_statistic,
                      mp_pdf, sample_htmp_esd, tail_exponents)

gamma = 0.3255
x = np.array([0.01, 0.1, 0.5, 1.0, 2.0, 5.0, 20.0])

print("density at", x)
print(f"  MP        {np.array2string(mp_pdf(x, MPParams(gamma)), precision=4)}")
for kappa in (1.9, 5.5, 50.0):
    p = HTMPParams(gamma, kappa)
    print(f"  kappa={kappa:<5} {np.array2string(htmp_pdf(x, p), precision=4)}")

# power laws at both ends
for kappa in (1.9, 5.5):
    t = tail_exponents(HTMPParams(gamma, kappa))
    print(f"kappa={kappa}: rho ~ x^{t.origin_exponent:.3f} near 0, x^-{t.upper_exponent:.3f} at infinity")

# distance to MP shrinks with kappa
grid = np.linspace(0.0, 6.0, 3001)
f_mp = density_cdf(MPParams(gamma), grid)
for kappa in (5.0, 20.0, 100.0, 400.0):
    d = np.max(np.abs(density_cdf(HTMPParams(gamma, kappa), grid) - f_mp))
    print(f"sup |F_kappa - F_MP| at kappa={kappa:g}: {d:.4f}")

# a finite-N sample against the limit
for N in (250, 1000, 4000):
    s = sample_htmp_esd(N, gamma, 5.5, RngStream(1))
    ks = ks_statistic(s.values, lambda t: density_cdf(HTMPParams(gamma, 5.5), t))
    print(f"N={N:5d}: KS = {ks:.4f}")
