"""
Phases of synthetic weight spectra
==================================

Classifies HTMP spectra with decreasing kappa, an MP spectrum with a few
outliers, and shows two tail mechanisms: Pareto covariance carried into
the spectrum, and F-distributed gradient norms.

    python3 demos/phases.py
"""
import math

import numpy as np

from htmp_lab import RngStream, classify_phase, sample_htmp_esd
from htmp_lab.applications import gradient_norm_tail_check, pipo_tail_check

gamma, N = 0.3255, 2000
for kappa in (math.inf, 5.5, 1.9):
    res = classify_phase(sample_htmp_esd(N, gamma, kappa, RngStream(3)))
    print(f"kappa={kappa}: {res.label.value:12s} fitted kappa={res.fit.params['kappa']:.3f}")

# MP bulk plus three far outliers
base = sample_htmp_esd(N, gamma, math.inf, RngStream(4)).values
spiked = np.concatenate([base, [8.0, 10.0, 12.0]])
print("MP + outliers:", classify_phase(spiked).label.value)

rep = pipo_tail_check(N=N, gamma=0.5, pareto_alpha=2.5, k=200, rng=RngStream(5))
print(f"Pareto(2.5) covariance: Hill index of covariance {rep['hill_covariance']:.3f}, "
      f"of the mixed spectrum {rep['hill']:.3f}")

g = gradient_norm_tail_check(10, 50, 5000, RngStream(6))
print(f"gradient norms: KS to F(10,41) {g['ks']:.4f}, lower slope {g['lower_slope']:.3f} "
      f"(limit {g['expected_lower']}), upper index {g['upper_index']:.3f} (limit {g['expected_upper']})")
