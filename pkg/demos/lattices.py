"""LLL, brute-force SVP/CVP and planted SIS/LWE instances on toy lattices."""

import numpy as np

from blindlab.core_math import SeededRng
from blindlab.lattice import (
    cvp_bruteforce,
    gen_gadget_trapdoor,
    hadamard_ratio,
    is_lll_reduced,
    lll_reduce,
    lwe_bruteforce,
    lwe_gen,
    sis_bruteforce,
    sis_gen,
    svp_bruteforce,
    trapdoor_check_type2,
)

basis = [[201, 37, -15], [1648, 297, -100], [-33, 11, 907]]
res = lll_reduce(basis)
print("reduced basis:\n", np.array(res.basis))
print("hadamard ratio before %.4f after %.4f" % (hadamard_ratio(basis), hadamard_ratio(res.basis)))
print("LLL conditions hold:", bool(is_lll_reduced(res.basis)))

svp = svp_bruteforce(res.basis)
print("shortest vector", svp.vector, "norm^2", svp.norm_sq, "exact:", svp.exact)
print("closest vector to (100, 100, 100):", cvp_bruteforce(res.basis, [100, 100, 100]))

rng = SeededRng(7)
sis, x = sis_gen(2, 4, 7, 2, rng)
print("SIS planted", x, "all short solutions:", len(sis_bruteforce(sis, coeff_bound=2)))

lwe, s = lwe_gen(2, 10, 101, 2, rng)
print("LWE planted secret", s, "recovered", lwe_bruteforce(lwe))

A, R, G = gen_gadget_trapdoor(2, 4, 97, rng)
print("gadget trapdoor A R = G:", trapdoor_check_type2(A, R, G, 97, norm_bound=10.0))
