"""
Column versus row Hilbertians
=============================

The same Hilbert space carries two natural quantizations. The identity map
between them is an isometry on the underlying space, yet its amplifications
grow without bound. This script shows the growth at level ``n`` and the
explicit element that realizes it.
"""
import math

import numpy as np

from opspace.quantum_space import (
    amplified_norm,
    cb_norm_estimate,
    make_column_hilbertian,
    make_omega,
    make_row_hilbertian,
    make_varpi,
)

# The witness omega = sum_k q_k^* e_k is built from partial isometries q_k
# with q_k^* q_l = delta_kl P for a rank-one projection P. Its norm is 1 in
# the column quantization and sqrt(n) in the row quantization.
print(f"{'n':>2} {'|omega|_c':>10} {'|omega|_r':>10} {'|varpi|_c':>10} {'|varpi|_r':>10}")
for n in range(1, 9):
    Hc, Hr = make_column_hilbertian(n), make_row_hilbertian(n)
    print(f"{n:>2} {amplified_norm(make_omega(n, n, Hc)):10.6f}"
          f" {amplified_norm(make_omega(n, n, Hr)):10.6f}"
          f" {amplified_norm(make_varpi(n, n, Hc)):10.6f}"
          f" {amplified_norm(make_varpi(n, n, Hr)):10.6f}")

# A random search over the unit ball at level n finds lower bounds for the
# amplified identity; injecting omega as a candidate makes the bound exact.
print()
print(f"{'n':>2} {'search only':>12} {'with omega':>12} {'sqrt(n)':>10}")
for n in range(1, 9):
    Hc, Hr = make_column_hilbertian(n), make_row_hilbertian(n)
    blind = cb_norm_estimate(np.eye(n), Hc, Hr, n, restarts=4, iterations=60, seed=n)
    guided = cb_norm_estimate(np.eye(n), Hc, Hr, n, restarts=1, iterations=10, seed=n,
                              witnesses=[make_omega(n, n, Hc)])
    print(f"{n:>2} {blind.value:12.6f} {guided.value:12.6f} {math.sqrt(n):10.6f}")
