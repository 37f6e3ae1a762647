"""
Bracketing tensor norms
=======================

The Haagerup norm and the four-named norm of a tensor are infima over
representations, so a finite computation can only bracket them. Lower
bounds come from the spatial norm and from pairings with functionals;
upper bounds come from explicit representations that are merged and then
improved by a gauge search. When one factor is a column or row Hilbertian
a constructive certificate closes the bracket.
"""
import numpy as np

from opspace.quantum_space import (
    make_column_hilbertian,
    make_matrix_space,
    random_element,
    random_operator_space,
)
from opspace.tensor_products import (
    EQUALITY_CASES,
    chain_brackets,
    column_left_certificate,
    effros_rep,
    equality_suite,
    haagerup_bracket,
)

rng = np.random.default_rng(1)
E, F = make_matrix_space(2), random_operator_space(rng, 2, 2, 2)
rep = effros_rep(*[(random_element(E, rng, 2), random_element(F, rng, 2)) for _ in range(2)])
spatial, h, four = chain_brackets(rep, restarts=2, iterations=40, functionals=16, seed=1)
print(f"spatial norm      {spatial:.6f}")
print(f"Haagerup bracket  [{h.lower:.6f}, {h.upper:.6f}]  {h.status}")
print(f"four-named upper  {four.upper:.6f}")

# A tensor in H_c (x) M_2. The generic search leaves a gap, while the column
# certificate supplies a representation whose value is the spatial norm.
Hc = make_column_hilbertian(3)
rep = effros_rep((random_element(Hc, rng, 2), random_element(E, rng, 2)))
_, h, _ = chain_brackets(rep, restarts=1, iterations=10, functionals=4, seed=2)
U = rep.assemble()
closed = haagerup_bracket(U, [column_left_certificate(U)], restarts=0, iterations=0,
                          functionals=0)
print()
print(f"H_c (x) M_2 search only       [{h.lower:.6f}, {h.upper:.6f}]  {h.status}")
print(f"H_c (x) M_2 with certificate  [{closed.lower:.6f}, {closed.upper:.6f}]  {closed.status}")

print()
# Equality cases. For the two four-named cases the pair compares a Haagerup
# representation with the rigged representation it is carried to.
print(f"{'case':<24} {'lower':>10} {'upper':>10} {'gap':>9}")
for case in EQUALITY_CASES:
    r = equality_suite(case, h=3, space="random3", seed=0)
    print(f"{case:<24} {r['lower']:10.6f} {r['upper']:10.6f} {r['relative_gap']:9.1e}")
