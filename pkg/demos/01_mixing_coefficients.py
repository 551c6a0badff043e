"""How fast does a Markov chain forget where it started?

The tau coefficient at lag k is the worst Wasserstein distance between the
k-step law and the stationary law.  For a symmetric two-state chain it has a
closed form, which we compare with the exact computation, and we contrast it
with the Kolmogorov-distance (phi-tilde) coefficient.
"""

import numpy as np

from depconc.mixing import ar1_tau_bound, chain_phitilde_exact, chain_tau_profile

kmax = 8
print("flip  k   tau exact    |1-2a|^k/2   AR(1) bound   phi-tilde")
for a in (0.1, 0.25, 0.4):
    P = np.array([[1 - a, a], [a, 1 - a]])
    tau = chain_tau_profile([0.0, 1.0], P, kmax, "tau")
    for k in (1, 2, 4, 8):
        closed = abs(1 - 2 * a) ** k / 2
        bound = ar1_tau_bound(abs(1 - 2 * a), 0.5, k, conservative=False)
        phi = chain_phitilde_exact([0.0, 1.0], P, k)
        print(f"{a:4}  {k}  {tau[k - 1]:.6e}  {closed:.6e}  {bound:.6e}  {phi:.6e}")

# tau scales with the state values, phi-tilde does not
P = np.array([[0.8, 0.2], [0.2, 0.8]])
print("\nscaling the states by 10 multiplies tau by",
      chain_tau_profile([0, 10], P, 3, "tau")[-1] / chain_tau_profile([0, 1], P, 3, "tau")[-1])
print("and leaves phi-tilde at", chain_phitilde_exact([0, 10], P, 3), "vs", chain_phitilde_exact([0, 1], P, 3))
