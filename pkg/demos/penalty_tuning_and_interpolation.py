"""How much ridge does a well-aligned prior need?

Two short experiments with the tuning utilities.

First: fix a two-atom spectrum and crank up how much of the signal sits
on the large eigenvalues.  The optimal penalty shrinks as alignment
improves, and past a point the search returns exactly 0.0: pure
minimum-norm interpolation, no regularization at all.

Second: in the symmetric strong/weak model there is a closed-form test
for that boundary.  Sweep the signal-to-noise ratio and watch the
verdict flip, then confirm the flip against the sign of the risk
derivative at zero penalty.
"""
from ridgelimits import (
    ProblemSpec,
    interpolation_optimality,
    optimal_lambda,
    risk_derivative,
    strong_weak_model,
)

print("optimal penalty vs alignment (gamma = 2.5, noise 1, signal 2)")
print(f"{'phi1':>6} {'phi2':>6} {'lambda*':>12} {'risk*':>10}")
for phi1 in (1.0, 1.5, 1.8, 1.95, 2.0):
    phi2 = 2.0 - phi1  # keep psi1 phi1 + psi2 phi2 = 1
    spectrum, source = strong_weak_model(25.0, 1.0, 0.5, phi1, phi2)
    problem = ProblemSpec(spectrum, source, 2.5, 1.0, 2.0)
    lam_star, at_opt = optimal_lambda(problem)
    print(f"{phi1:6.2f} {phi2:6.2f} {lam_star:12.6f} {at_opt.total:10.6f}")
print("flat prior wants noise * gamma / signal = 1.25; alignment drives it to 0")

print()
print("interpolation test, rho = (4, 1), phi = (2, 0), gamma = 2")
print(f"{'snr':>6} {'margin':>10} {'lam=0 optimal':>14} {'slope at 0':>12}")
for snr in (5.0, 6.0, 6.75, 7.0, 9.0):
    margin, optimal = interpolation_optimality(4.0, 1.0, 2.0, 0.0, snr)
    spectrum, source = strong_weak_model(4.0, 1.0, 0.5, 2.0, 0.0)
    slope = risk_derivative(ProblemSpec(spectrum, source, 2.0, 1.0, snr), 0.0)
    print(f"{snr:6.2f} {margin:10.6f} {str(optimal):>14} {slope:12.6f}")
print("margin = 4 snr / 27 here, so the flip lands exactly at snr = 6.75")
