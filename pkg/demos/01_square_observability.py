"""
Observing a square membrane from one edge
=========================================

A free wave on the unit square is watched through the normal derivative on
the left edge. The smallest Rayleigh quotient of the observation Gram
against a chosen norm is the truncated observability constant.
"""

# %%
import numpy as np

from wavehum.observability import ObservationGeometry, assemble_gram, max_quotient, min_quotient
from wavehum.spectral import ENERGY, WEAK, DomainSpec

# %% [markdown]
# Short horizons leave directions unobserved; long ones do not.

# %%
for T in (0.5, 1, 2, 4, 9, 12):
    g = assemble_gram(ObservationGeometry.square_left_edge(T), DomainSpec.square(8))
    print(f"T={T:5.1f}  weak min quotient {min_quotient(g, WEAK)[0]:12.4e}")

# %% [markdown]
# Refining the truncation at T = 9. The weak-norm constant keeps falling,
# driven by pairs of modes (1, k2) and (2, k2) whose frequencies crowd
# together as k2 grows.

# %%
for K in (8, 12, 16, 24):
    g = assemble_gram(ObservationGeometry.square_left_edge(9.0), DomainSpec.square(K))
    q, state = min_quotient(g, WEAK)
    k = g.domain.mode_indices()
    top = np.argsort(-(state.pos**2 + (state.vel / np.sqrt(g.domain.eigenvalues())) ** 2))[:2]
    print(f"{K:2d}x{K:<2d} min {q:9.4f}  max(energy) {max_quotient(g, ENERGY):7.3f}  "
          f"dominant modes {[tuple(int(v) for v in k[i]) for i in top]}")
