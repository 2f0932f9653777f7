"""
Steering a string with a point force
====================================

A Dirac force at xi controls the string when every mode is seen at xi. At
xi = 1/2 all even modes vanish there and the solver reports the kernel.
"""

# %%
import numpy as np

from wavehum.diophantine import RealSpec, is_in_S
from wavehum.hum import NotObservableAtTruncation, simulate_controlled, solve_hum
from wavehum.observability import ObservationGeometry, assemble_gram
from wavehum.spectral import DomainSpec, ModalState, SobolevIndex, state_norm

pair = SobolevIndex(-0.5)
domain = DomainSpec.interval(16)
target = ModalState.random(domain, np.random.default_rng(2024))

# %%
xi = RealSpec.surd(-1, 1, 2)
print("xi = sqrt(2) - 1:", is_in_S(xi).to_dict())
gram = assemble_gram(ObservationGeometry.interval_point(float(xi), 3.0), domain)
sol = solve_hum(target, gram, pair=pair)
end = simulate_controlled(target, sol.control)
print("final residual", state_norm(end, pair) / state_norm(target, pair))

# %%
gram = assemble_gram(ObservationGeometry.interval_point(0.5, 3.0), domain)
try:
    solve_hum(target, gram, pair=pair)
except NotObservableAtTruncation as exc:
    print(exc)
    print("unobserved direction, largest position entries at modes",
          np.argsort(-np.abs(exc.null_state.pos))[:3] + 1)
