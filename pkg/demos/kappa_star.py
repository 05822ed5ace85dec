"""
Effective repulsion of structured matrices
==========================================

Runs the stochastic fixed-point estimator on small structured classes and
prints the estimate next to the closed form.  The block and Kronecker forms
for the commuting and Kronecker classes are approximations.

    python3 demos/kappa_star.py
"""
from htmp_lab import RngStream, StructureKind, StructureSpec
from htmp_lab.estimators import closed_form_kappa, estimate_kappa_fixed_point

K = StructureKind
specs = [
    StructureSpec(K.Diagonal, 12),
    StructureSpec(K.SymmetricBlockDiagonal, 3, 4),
    StructureSpec.of_size(K.FullSymmetric, 12),
    StructureSpec(K.KroneckerLike, 2, 6),
    StructureSpec(K.CommutingBlockDiagonal, 3, 4),
]

print(f"{'structure':10s} {'N':>3s} {'estimate':>9s} {'stderr':>7s} {'closed form':>12s}")
for s in specs:
    est = estimate_kappa_fixed_point(s, p=50, rng=RngStream(7))
    ref, exact = closed_form_kappa(s)
    tag = "" if exact else " (approx.)"
    print(f"{s.kind.value:10s} {s.N:3d} {est.kappa_star:9.4f} {est.stderr:7.4f} {ref:12.4f}{tag}")
