"""
Input-output map of the point-controlled string
===============================================

H(lam) = lam sum e_n(xi)^2 / (lam^2 + lambda_n) stays bounded on a vertical
line Re(lam) = delta when xi has bounded quotients. The full series has a
hyperbolic closed form, used here to check the truncation.
"""

# %%
import numpy as np

from wavehum.hum import transfer_function, transfer_scan
from wavehum.observability import ObservationGeometry
from wavehum.spectral import DomainSpec

xi = np.sqrt(2) - 1
geometry = ObservationGeometry.interval_point(xi, 1.0)

# %%
for N in (32, 128, 256):
    s = transfer_scan(geometry, DomainSpec.interval(N))
    print(f"N={N:3d} sup |H| = {s.sup:.5f} at {s.argsup:.3f}, tail there {s.tail_at_sup:.4f}")

# %%
lam = 1 + 1j * np.array([0.0, 6 * np.pi, 50.0])
val, tail = transfer_function(lam, geometry, DomainSpec.interval(256))
exact = np.sinh(lam * xi) * np.sinh(lam * (1 - xi)) / np.sinh(lam)
print("truncation error", np.abs(val - exact))
print("tail estimate   ", tail)
