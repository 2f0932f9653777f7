"""
Hilbert Uniqueness Method on the truncated spectral space.

The HUM operator is never formed: its quadratic form is the observation Gram,
so the minimizer of

    J(phi) = 1/2 int_0^T |B* phi|^2 dt + <phi, z>

solves one Hermitian positive-definite system ``G a = -r`` in traveling-wave
coordinates. The control is ``v = B* phi`` of the minimizing free solution
(``g = -d phi/d nu`` on the left edge of the square), stored as an exact sum
of complex exponentials.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass

import numpy as np

from .observability import (
    INTERVAL_POINT,
    ObservationGeometry,
    ObservationGram,
    assemble_gram,
    channel_layout,
    exp_integral,
    observed_energy,
    whitened_block,
    _coords_to_state,
)
from .spectral import (
    WEAK,
    DomainMismatch,
    DomainSpec,
    ModalState,
    SobolevIndex,
    dual_pairing,
    eigen_frequencies,
    evolve_free,
    state_norm,
    to_traveling_wave,
)

SINGULAR_RTOL = 1e-12


class NotObservableAtTruncation(RuntimeError):
    """The truncated Gram is singular; ``null_state`` spans an unobserved direction."""

    def __init__(self, message: str, null_state: ModalState, ratio: float):
        super().__init__(message)
        self.null_state = null_state
        self.ratio = ratio


class MaxIterExceeded(RuntimeError):
    def __init__(self, message: str, residual: float, iterations: int):
        super().__init__(message)
        self.residual = residual
        self.iterations = iterations


@dataclass(frozen=True, eq=False)
class ControlSignal:
    """Per-channel exponential sums ``v_m(t) = sum_j A_j exp(i mu_j t)`` on ``[0, T]``.

    Channels are the boundary modes ``sqrt(2) sin(k2 pi x2)`` for the square and
    the single scalar control for the interval point.
    """

    geometry: ObservationGeometry
    domain: DomainSpec
    labels: tuple
    amplitudes: tuple  # complex arrays, one per channel
    frequencies: tuple  # real arrays, one per channel

    @property
    def horizon(self) -> float:
        return self.geometry.horizon

    @classmethod
    def zero(cls, geometry: ObservationGeometry, domain: DomainSpec) -> "ControlSignal":
        layout = channel_layout(geometry, domain)
        empty = tuple(np.zeros(0, dtype=complex) for _ in layout)
        return cls(geometry, domain, tuple(lab for lab, _, _ in layout), empty, tuple(np.zeros(0) for _ in layout))

    def evaluate(self, times) -> np.ndarray:
        """Real control values, shape ``(channels, len(times))``; zero outside ``[0, T]``."""
        t = np.atleast_1d(np.asarray(times, dtype=float))
        out = np.zeros((len(self.labels), t.size))
        inside = (t >= 0) & (t <= self.horizon)
        for m, (A, mu) in enumerate(zip(self.amplitudes, self.frequencies)):
            if A.size:
                out[m, inside] = np.real(np.exp(1j * np.outer(t[inside], mu)) @ A)
        return out

    def cost(self) -> float:
        """``L^2(0, T)`` norm summed over channels, in closed form."""
        total = 0.0
        for A, mu in zip(self.amplitudes, self.frequencies):
            if A.size:
                E = exp_integral(mu[None, :] - mu[:, None], self.horizon)
                total += np.real(np.vdot(A, E @ A))
        return float(np.sqrt(max(total, 0.0)))

    def to_dict(self) -> dict:
        return {
            "geometry": self.geometry.to_dict(),
            "domain": self.domain.to_dict(),
            "channels": [
                {
                    "label": int(lab),
                    "terms": [
                        {"amplitude_re": float(a.real), "amplitude_im": float(a.imag), "frequency": float(f)}
                        for a, f in zip(A, mu)
                    ],
                }
                for lab, A, mu in zip(self.labels, self.amplitudes, self.frequencies)
            ],
        }

    def to_json(self, **kw) -> str:
        return json.dumps(self.to_dict(), **kw)

    @classmethod
    def from_dict(cls, d: dict) -> "ControlSignal":
        g = d["geometry"]
        geometry = ObservationGeometry(g["kind"], g["horizon"], g.get("xi"))
        domain = DomainSpec.from_dict(d["domain"])
        labels, amps, freqs = [], [], []
        for ch in d["channels"]:
            labels.append(ch["label"])
            amps.append(np.array([t["amplitude_re"] + 1j * t["amplitude_im"] for t in ch["terms"]], dtype=complex))
            freqs.append(np.array([t["frequency"] for t in ch["terms"]], dtype=float))
        return cls(geometry, domain, tuple(labels), tuple(amps), tuple(freqs))

    def to_csv(self, path, dt: float):
        """Time samples on a uniform grid of step ``dt``: columns ``t`` and one per channel."""
        n = int(np.floor(self.horizon / dt + 1e-9))
        t = np.arange(n + 1) * dt
        values = self.evaluate(t)
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["t"] + [f"channel_{lab}" for lab in self.labels])
            for i in range(t.size):
                w.writerow([repr(float(t[i]))] + [repr(float(v)) for v in values[:, i]])


@dataclass(frozen=True, eq=False)
class HumSolution:
    minimizer: ModalState
    control: ControlSignal
    residual: float
    iterations: int
    alpha: np.ndarray  # traveling-wave coordinates of the minimizer, [plus, minus]
    pair: SobolevIndex = WEAK


def evaluate_J(candidate: ModalState, target: ModalState, gram: ObservationGram) -> float:
    if candidate.domain != target.domain:
        raise DomainMismatch("candidate and target live on different truncations")
    return 0.5 * observed_energy(candidate, gram) + dual_pairing(candidate, target)


def hum_rhs(target: ModalState) -> np.ndarray:
    """Vector ``r`` with ``Re(r^H a) = <phi(a), target>`` for real states."""
    w = eigen_frequencies(target.domain)
    plus = target.vel + 1j * w * target.pos
    minus = target.vel - 1j * w * target.pos
    return np.concatenate([plus, minus])


def conjugate_gradient(matvec, b: np.ndarray, tol: float = 1e-10, max_iter: int | None = None, x0=None):
    """Plain CG for a Hermitian positive-definite operator.

    Stops when ``||b - A x|| <= tol * ||b||``. Returns ``(x, iterations, relative_residual)``.
    """
    n = b.size
    max_iter = 4 * n if max_iter is None else max_iter
    x = np.zeros_like(b) if x0 is None else np.array(x0, dtype=b.dtype)
    bnorm = np.linalg.norm(b)
    if bnorm == 0:
        return np.zeros_like(b), 0, 0.0
    r = b - matvec(x)
    p = r.copy()
    rr = np.real(np.vdot(r, r))
    k = 0
    while np.sqrt(rr) > tol * bnorm and k < max_iter:
        Ap = matvec(p)
        step = rr / np.real(np.vdot(p, Ap))
        x = x + step * p
        r = r - step * Ap
        rr_new = np.real(np.vdot(r, r))
        p = r + (rr_new / rr) * p
        rr = rr_new
        k += 1
        if k % 50 == 0:
            # periodic true-residual refresh limits drift on ill-conditioned blocks
            r = b - matvec(x)
            rr = np.real(np.vdot(r, r))
    true_res = np.linalg.norm(b - matvec(x)) / bnorm
    return x, k, float(true_res)


def check_observable(gram: ObservationGram, pair: SobolevIndex = WEAK, rtol: float = SINGULAR_RTOL):
    """Raise :class:`NotObservableAtTruncation` if the whitened Gram is numerically singular."""
    lo, hi, worst = np.inf, 0.0, None
    for block in gram.blocks:
        W, s = whitened_block(block, gram.domain, pair)
        vals, vecs = np.linalg.eigh(W)
        hi = max(hi, vals[-1])
        if vals[0] < lo:
            lo, worst = vals[0], (block, s * vecs[:, 0])
    ratio = lo / hi if hi > 0 else 0.0
    if ratio <= rtol:
        null = _coords_to_state(gram.domain, *worst)
        raise NotObservableAtTruncation(
            f"observation Gram is singular at this truncation (lambda_min/lambda_max = {ratio:.3e})",
            null,
            float(ratio),
        )
    return float(ratio)


def _whitened_system(target: ModalState, gram: ObservationGram, pair: SobolevIndex):
    M = gram.domain.size
    r = hum_rhs(target)
    systems = []
    for block in gram.blocks:
        W, s = whitened_block(block, gram.domain, pair)
        c = block.coords(M)
        systems.append((c, W, s, -s * r[c]))
    return systems


def solve_hum(
    target: ModalState,
    gram: ObservationGram,
    tol: float = 1e-10,
    max_iter: int | None = None,
    pair: SobolevIndex = WEAK,
) -> HumSolution:
    """Minimize J by conjugate gradients on the whitened, block-diagonal Gram system."""
    if target.domain != gram.domain:
        raise DomainMismatch("target and gram live on different truncations")
    M = gram.domain.size
    if max_iter is None:
        max_iter = 4 * M
    if not np.any(target.pos) and not np.any(target.vel):
        return HumSolution(ModalState.zeros(target.domain), ControlSignal.zero(gram.geometry, gram.domain), 0.0, 0,
                           np.zeros(2 * M, dtype=complex), pair)
    check_observable(gram, pair)

    alpha = np.zeros(2 * M, dtype=complex)
    iters = 0
    res2 = bnorm2 = 0.0
    for c, W, s, b in _whitened_system(target, gram, pair):
        beta, k, rel = conjugate_gradient(lambda x, W=W: W @ x, b, tol=tol, max_iter=max_iter)
        iters += k
        res2 += (rel * np.linalg.norm(b)) ** 2
        bnorm2 += np.linalg.norm(b) ** 2
        alpha[c] = s * beta
    residual = float(np.sqrt(res2 / bnorm2))
    if residual > tol:
        raise MaxIterExceeded(f"CG stopped at relative residual {residual:.3e} after {iters} iterations", residual, iters)

    # enforce the real-state structure (minus = conj(plus)) removed only by round-off
    plus = 0.5 * (alpha[:M] + np.conj(alpha[M:]))
    alpha = np.concatenate([plus, np.conj(plus)])
    w = eigen_frequencies(gram.domain)
    minimizer = ModalState(gram.domain, 2 * plus.real, -2 * w * plus.imag)
    control = synthesize_control(minimizer, gram.geometry)
    return HumSolution(minimizer, control, residual, iters, alpha, pair)


def dense_hum_coords(target: ModalState, gram: ObservationGram, pair: SobolevIndex = WEAK) -> np.ndarray:
    """Direct LAPACK solve of the same system; the reference for the CG path."""
    alpha = np.zeros(2 * gram.domain.size, dtype=complex)
    for c, W, s, b in _whitened_system(target, gram, pair):
        alpha[c] = s * np.linalg.solve(W, b)
    return alpha


def synthesize_control(minimizer: ModalState, geometry: ObservationGeometry) -> ControlSignal:
    """Control ``v = B* phi`` of the free solution started at ``minimizer``."""
    domain = minimizer.domain
    tw = to_traveling_wave(minimizer)
    w = eigen_frequencies(domain)
    labels, amps, freqs = [], [], []
    for label, modes, weights in channel_layout(geometry, domain):
        keep = (weights != 0) & ((tw.plus[modes] != 0) | (tw.minus[modes] != 0))
        m, b = modes[keep], weights[keep]
        labels.append(label)
        amps.append(np.concatenate([b * tw.plus[m], b * tw.minus[m]]))
        freqs.append(np.concatenate([w[m], -w[m]]))
    return ControlSignal(geometry, domain, tuple(labels), tuple(amps), tuple(freqs))


def duhamel_terms(omega: np.ndarray, mu: np.ndarray, T: float):
    """``int_0^T sin(w (T-s)) e^{i mu s} ds`` and the cosine analogue, shape ``(len(w), len(mu))``.

    Resonant pairs ``mu = +-w`` go through the regular branch of :func:`exp_integral`.
    """
    ep = np.exp(1j * omega * T)[:, None] * exp_integral(mu[None, :] - omega[:, None], T)
    em = np.exp(-1j * omega * T)[:, None] * exp_integral(mu[None, :] + omega[:, None], T)
    return (ep - em) / 2j, (ep + em) / 2


def simulate_controlled(initial: ModalState, control: ControlSignal, T: float | None = None) -> ModalState:
    """State at time ``T`` of the wave equation driven by ``control`` from ``initial``.

    Each mode obeys ``z'' + w^2 z = b_k v_m(t)``, which is the transposition
    form of the boundary (Dirichlet) control as well as the point-force form.
    """
    T = control.horizon if T is None else T
    if not np.isclose(T, control.horizon, rtol=0, atol=1e-12 * max(1.0, T)):
        raise ValueError(f"horizon mismatch: control lives on [0, {control.horizon}], asked for T={T}")
    if initial.domain != control.domain:
        raise DomainMismatch("initial state and control live on different truncations")
    free = evolve_free(initial, T)
    w = eigen_frequencies(initial.domain)
    dpos = np.zeros(initial.domain.size)
    dvel = np.zeros(initial.domain.size)
    layout = {lab: (modes, weights) for lab, modes, weights in channel_layout(control.geometry, initial.domain)}
    for lab, A, mu in zip(control.labels, control.amplitudes, control.frequencies):
        if A.size == 0:
            continue
        modes, weights = layout[lab]
        Is, Ic = duhamel_terms(w[modes], mu, T)
        dpos[modes] += np.real(weights * (Is @ A)) / w[modes]
        dvel[modes] += np.real(weights * (Ic @ A))
    return ModalState(initial.domain, free.pos + dpos, free.vel + dvel)


@dataclass(frozen=True)
class CostReport:
    cost: float
    gram_cost: float  # sqrt(a^H G a) from the solve coordinates
    target_norm: float
    ratio: float | None  # None when the target is zero

    def to_dict(self) -> dict:
        return {"cost": self.cost, "gram_cost": self.gram_cost, "target_norm": self.target_norm, "ratio": self.ratio}


def verify_cost_bound(solution: HumSolution, target: ModalState, gram: ObservationGram, pair: SobolevIndex) -> CostReport:
    """Empirical cost constant ``||v||_{L^2(0,T)} / ||target||_pair``."""
    cost = solution.control.cost()
    gram_cost = float(np.sqrt(max(gram.form(solution.alpha), 0.0)))
    norm = state_norm(target, pair)
    return CostReport(cost, gram_cost, norm, cost / norm if norm > 0 else None)


def cost_ratio_scan(
    targets: list[ModalState],
    geometry: ObservationGeometry,
    domains: list[DomainSpec],
    pair: SobolevIndex,
    solve_pair: SobolevIndex = WEAK,
    tol: float = 1e-10,
) -> list[dict]:
    """Max and mean cost ratio over ``targets`` for each truncation in ``domains``."""
    rows = []
    for domain in domains:
        gram = assemble_gram(geometry, domain)
        ratios = []
        for z in targets:
            z = z.embed(domain)
            sol = solve_hum(z, gram, tol=tol, pair=solve_pair)
            ratios.append(verify_cost_bound(sol, z, gram, pair).ratio)
        rows.append({"truncation": list(domain.truncation), "max_ratio": max(ratios), "mean_ratio": float(np.mean(ratios))})
    return rows


def transfer_function(lam, geometry: ObservationGeometry, domain: DomainSpec):
    """Truncated ``H(lam) = lam sum_n e_n(xi)^2 / (lam^2 + lambda_n)`` and a tail estimate.

    The tail replaces ``2 sin^2(n pi xi)`` by its mean 1 beyond the cutoff and
    integrates from ``N + 1/2``: ``|arctan(lam / (pi (N + 1/2))) / pi|``.
    """
    if geometry.kind != INTERVAL_POINT:
        raise ValueError("transfer function is defined for the interval point geometry")
    geometry.check_domain(domain)
    lam = np.asarray(lam, dtype=complex)
    if np.any(lam.real <= 0):
        raise ValueError("transfer function needs Re(lambda) > 0")
    (_, _, b), = channel_layout(geometry, domain)
    ev = domain.eigenvalues()
    l2 = lam[..., None] ** 2
    value = lam * np.sum(b**2 / (l2 + ev), axis=-1)
    N = domain.truncation[0]
    tail = np.abs(np.arctan(lam / (np.pi * (N + 0.5)))) / np.pi
    return value, tail


@dataclass(frozen=True)
class TransferScan:
    delta: float
    bound: float
    sup: float
    argsup: complex
    tail_at_sup: float
    max_tail: float

    def to_dict(self) -> dict:
        return {
            "delta": self.delta,
            "bound": self.bound,
            "sup": self.sup,
            "argsup_re": self.argsup.real,
            "argsup_im": self.argsup.imag,
            "tail_at_sup": self.tail_at_sup,
            "max_tail": self.max_tail,
        }


def transfer_scan(geometry: ObservationGeometry, domain: DomainSpec, delta: float = 1.0, bound: float = 100.0,
                  n_points: int = 20001) -> TransferScan:
    """Sample ``|H|`` on ``Re(lam) = delta``, ``|Im(lam)| <= bound``.

    The grid always contains the points ``i n pi`` near which ``|H|`` peaks.
    """
    grid = np.linspace(-bound, bound, n_points)
    n = np.arange(1, int(bound / np.pi) + 1) * np.pi
    y = np.unique(np.concatenate([grid, n, -n]))
    lam = delta + 1j * y
    val, tail = transfer_function(lam, geometry, domain)
    mag = np.abs(val)
    i = int(np.argmax(mag))
    return TransferScan(delta, bound, float(mag[i]), complex(lam[i]), float(tail[i]), float(tail.max()))
