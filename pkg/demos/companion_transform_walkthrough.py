"""
The companion fixed point, step by step
=======================================

Everything downstream (risk limits, tuning, trace limits) rests on one
scalar equation.  For a discrete eigenvalue distribution with atoms
(tau_i, psi_i), aspect ratio g = dim/samples and penalty lam > 0, the
companion transform v = v(-lam) is the unique positive root of

    1/v = lam + g * sum_i psi_i tau_i / (1 + tau_i v).

This script solves it on a few models and checks the answers against
things you can verify by hand.
"""
import math

from ridgelimits import (
    make_atomic_spectrum,
    solve_companion,
    solve_companion_ridgeless,
    stieltjes_from_companion,
)

# A single atom makes the fixed point a quadratic:
#   lam tau v^2 + (lam + g tau - tau) v - 1 = 0.
tau, gamma, lam = 2.0, 1.7, 0.3
single = make_atomic_spectrum([(tau, 1.0)])
ce = solve_companion(single, gamma, lam)
a, b = lam * tau, lam + gamma * tau - tau
by_hand = (-b + math.sqrt(b * b + 4.0 * a)) / (2.0 * a)
print("single atom")
print(f"  solver v      = {ce.v:.15f}   ({ce.iterations} iterations)")
print(f"  quadratic root= {by_hand:.15f}")
print(f"  residual      = {ce.residual:.2e}")

# The identity spectrum at gamma = 2, lam = 1 has closed forms all the
# way down: v = sqrt(2) - 1 and v' = (sqrt(2) - 1) / 2.
identity = make_atomic_spectrum([(1.0, 1.0)])
ce = solve_companion(identity, 2.0, 1.0)
print("\nidentity spectrum, gamma = 2, lam = 1")
print(f"  v  = {ce.v:.15f}   expect sqrt(2)-1   = {math.sqrt(2) - 1:.15f}")
print(f"  v' = {ce.v_prime:.15f}   expect (sqrt(2)-1)/2 = {(math.sqrt(2) - 1) / 2:.15f}")

# The Stieltjes transform of the sample spectrum comes out of v by a
# one-line change of variables; on this model it equals 1/sqrt(2).
m = stieltjes_from_companion(2.0, 1.0, ce.v)
print(f"  stieltjes m = {m:.15f}   expect 1/sqrt(2) = {1 / math.sqrt(2):.15f}")

# Past the interpolation threshold (gamma > 1) the penalty can go all
# the way to zero.  Two equal-mass atoms at gamma = 2 again have a
# closed form: v(0) = 1/sqrt(rho1 * rho2).
split = make_atomic_spectrum([(4.0, 0.5), (1.0, 0.5)])
ce0 = solve_companion_ridgeless(split, 2.0)
print("\ntwo atoms (4, 1), gamma = 2, ridgeless")
print(f"  v(0) = {ce0.v:.15f}   expect 1/2 = {1 / math.sqrt(4.0 * 1.0):.15f}")

# v is monotone in the penalty; watch it fall as lam grows.
print("\nlam -> v on the two-atom model:")
for lam in (0.01, 0.1, 1.0, 10.0):
    print(f"  lam = {lam:5.2f}   v = {solve_companion(split, 2.0, lam).v:.10f}")
