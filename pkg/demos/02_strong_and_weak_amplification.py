"""
Strong and weak amplification of a bilinear map
===============================================

A bilinear map ``R`` can be amplified in two ways. The strong version
multiplies the coefficient matrices; the weak version combines them with
the diamond product, so its output lives at level ``m^2``. The inner product
of a Hilbert space is bounded, but neither amplification of it is bounded
uniformly in the level.
"""
import numpy as np

from opspace.bioperators import (
    bifunctional,
    estimate_scb,
    estimate_wcb,
    inner_product_bifunctional,
)
from opspace.matrix_core import op_norm, random_cmatrix
from opspace.quantum_space import (
    make_column_hilbertian,
    make_conjugate_column,
    make_conjugate_row,
    make_omega,
    make_row_hilbertian,
    make_varpi,
)

print(f"{'n':>2} {'strong (omega, varpi)':>22} {'weak (omega, omega)':>20}")
for n in range(1, 7):
    Hc = make_column_hilbertian(n)
    Hbr, Hbc = make_conjugate_row(n), make_conjugate_column(n)
    strong = estimate_scb(inner_product_bifunctional(Hc, Hbr), n, restarts=1, iterations=5,
                          seed=n, witnesses=[(make_omega(n, n, Hc), make_varpi(n, n, Hbr))])
    weak = estimate_wcb(inner_product_bifunctional(Hc, Hbc), n, restarts=1, iterations=5,
                        seed=n, witnesses=[(make_omega(n, n, Hc), make_omega(n, n, Hbc))])
    print(f"{n:>2} {strong.value:22.6f} {weak.value:20.6f}")

# In contrast, every bounded bifunctional on a row space times a column space
# stays bounded by its norm at every level. The search below only produces
# lower bounds, and none of its samples ever exceeds that norm.
rng = np.random.default_rng(0)
Hr, Kc = make_row_hilbertian(3), make_column_hilbertian(3)
M = random_cmatrix(rng, 3, 3)
f = bifunctional(Hr, Kc, M)
print()
print(f"norm of f: {op_norm(M):.6f}")
for level in (1, 2, 3):
    est = estimate_scb(f, level, restarts=8, iterations=80, seed=level)
    print(f"level {level}: largest sampled ratio {est.max_sampled:.6f} "
          f"over {est.samples} samples")
