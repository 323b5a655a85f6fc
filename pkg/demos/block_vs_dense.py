"""Block solution against the brute-force 2**n simulation.

For a few qubit counts the survival probability, purity and QFI from the
sector decomposition are printed next to the dense results.  The block
numbers then go on to n = 200, well past what the dense space can hold.
"""
from ghzmetro import NoiseParams, evolve, quantum_fisher, survival_probability
from ghzmetro.oracle import dense_evolve, dense_observables, dense_qfi, dense_survival

theta, t = 1.0, 0.2
params = NoiseParams(Omega=0.5, gamma=0.8, gamma_prime=0.6)

print(f"{'n':>3} {'P block':>14} {'P dense':>14} {'purity block':>14} {'purity dense':>14} {'F_Q rel.err':>12}")
for n in (1, 2, 3, 4):
    dense = dense_evolve(n, theta, params, t)
    purity_dense = dense_observables(dense, theta)[0]
    F_block, F_dense = quantum_fisher(n, theta, params, t), dense_qfi(n, theta, params, t)
    print(f"{n:>3} {survival_probability(n, theta, params, t):14.10f} {dense_survival(dense):14.10f} "
          f"{evolve(n, theta, params, t).purity():14.10f} {purity_dense:14.10f} "
          f"{abs(F_block - F_dense) / F_dense:12.2e}")

print("\nlarge n, same parameters at t = 1e-3:")
for n in (50, 100, 200):
    print(f"  n={n:>3}  P={survival_probability(n, theta, params, 1e-3):.6f}")
