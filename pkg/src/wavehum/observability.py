"""
Exact time-Gram forms of observed wave traces.

A free solution has modal coefficients
``phi_k(t) = a_k^+ e^{i w_k t} + a_k^- e^{-i w_k t}``. Every observation used here
splits into independent scalar channels ``y_m(t) = sum_k b_k phi_k(t)``:

* left edge of the square: one channel per ``k2`` (the orthonormal boundary mode
  ``sqrt(2) sin(k2 pi x2)``), weight ``b_k = sqrt(2) k1 pi``;
* point ``xi`` of the interval: a single channel, weight ``b_n = e_n(xi)``.

The Gram block of channel ``m`` is the Hermitian matrix with
``a^H G a = int_0^T |y_m(t)|^2 dt``, assembled in closed form.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from typing import Iterable

import numpy as np

from .spectral import (
    INTERVAL,
    SQUARE,
    DomainMismatch,
    DomainSpec,
    ModalState,
    SobolevIndex,
    TravelingWaveCoeffs,
    WEAK,
    eigen_frequencies,
    from_traveling_wave,
    state_norm,
    to_traveling_wave,
)

SQUARE_LEFT_EDGE = "square_left_edge"
INTERVAL_POINT = "interval_point"

RESONANCE_EPS = 1e-12


@dataclass(frozen=True)
class ObservationGeometry:
    """Observed trace and horizon ``T``; ``xi`` is only used for the interval point."""

    kind: str
    horizon: float
    xi: float | None = None

    def __post_init__(self):
        if not self.horizon > 0:
            raise ValueError("horizon must be strictly positive")
        if self.kind == INTERVAL_POINT:
            if self.xi is None or not 0 < self.xi < 1:
                raise ValueError("interval point requires 0 < xi < 1")
        elif self.kind == SQUARE_LEFT_EDGE:
            if self.xi is not None:
                raise ValueError("xi is meaningless for the square left edge")
        else:
            raise ValueError(f"unknown geometry kind {self.kind!r}")

    @classmethod
    def square_left_edge(cls, horizon: float) -> "ObservationGeometry":
        return cls(SQUARE_LEFT_EDGE, horizon)

    @classmethod
    def interval_point(cls, xi: float, horizon: float) -> "ObservationGeometry":
        return cls(INTERVAL_POINT, horizon, float(xi))

    def with_horizon(self, horizon: float) -> "ObservationGeometry":
        return ObservationGeometry(self.kind, horizon, self.xi)

    def check_domain(self, domain: DomainSpec):
        expected = SQUARE if self.kind == SQUARE_LEFT_EDGE else INTERVAL
        if domain.kind != expected:
            raise DomainMismatch(f"{self.kind} observation needs a {expected} domain")

    def to_dict(self) -> dict:
        d = {"kind": self.kind, "horizon": self.horizon}
        if self.xi is not None:
            d["xi"] = self.xi
        return d


def channel_layout(geometry: ObservationGeometry, domain: DomainSpec):
    """Split modes into observation channels.

    Returns a list of ``(label, flat_mode_indices, trace_weights)``.
    """
    geometry.check_domain(domain)
    if geometry.kind == INTERVAL_POINT:
        n = np.arange(1, domain.truncation[0] + 1)
        weights = np.sqrt(2.0) * np.sin(n * np.pi * geometry.xi)
        return [(0, np.arange(domain.size), weights)]
    K1, K2 = domain.truncation
    weights = np.sqrt(2.0) * np.pi * np.arange(1, K1 + 1)
    return [(k2, np.arange((k2 - 1) * K1, k2 * K1), weights) for k2 in range(1, K2 + 1)]


def exp_integral(delta, T: float):
    """``int_0^T exp(i delta t) dt``, vectorized over ``delta``.

    Written as ``T sinc(delta T / 2pi) exp(i delta T / 2)`` which has no
    cancellation near ``delta = 0``; ``|delta| < 1e-12`` uses the Taylor limit.
    """
    delta = np.asarray(delta, dtype=float)
    out = T * np.sinc(delta * T / (2 * np.pi)) * np.exp(0.5j * delta * T)
    tiny = np.abs(delta) < RESONANCE_EPS
    if np.any(tiny):
        d = delta[tiny]
        out = np.where(tiny, 0, out)
        out[tiny] = T + 0.5j * d * T**2 - d**2 * T**3 / 6
    return out[()] if out.ndim == 0 else out


@dataclass(frozen=True, eq=False)
class GramBlock:
    label: int
    modes: np.ndarray  # flat mode indices of this channel
    weights: np.ndarray  # trace weight per mode
    freqs: np.ndarray  # +w for plus coordinates, then -w for minus
    matrix: np.ndarray  # Hermitian, (2m, 2m)

    def coords(self, domain_size: int) -> np.ndarray:
        """Global traveling-wave coordinate indices (plus block, then minus block)."""
        return np.concatenate([self.modes, domain_size + self.modes])


@dataclass(frozen=True, eq=False)
class ObservationGram:
    geometry: ObservationGeometry
    domain: DomainSpec
    blocks: tuple[GramBlock, ...]
    derivative: bool = False

    @property
    def horizon(self) -> float:
        return self.geometry.horizon

    def dense(self) -> np.ndarray:
        """Full ``2M x 2M`` Hermitian matrix in global traveling-wave coordinates."""
        M = self.domain.size
        G = np.zeros((2 * M, 2 * M), dtype=complex)
        for b in self.blocks:
            c = b.coords(M)
            G[np.ix_(c, c)] = b.matrix
        return G

    def form(self, alpha: np.ndarray) -> float:
        """``alpha^H G alpha`` for stacked coordinates ``[plus, minus]``."""
        M = self.domain.size
        total = 0.0
        for b in self.blocks:
            a = alpha[b.coords(M)]
            total += np.real(np.vdot(a, b.matrix @ a))
        return float(total)

    def to_csv(self, path, tol: float = 0.0):
        """Write nonzero entries as ``row,col,re,im`` in global coordinates."""
        M = self.domain.size
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["row", "col", "re", "im"])
            for b in self.blocks:
                c = b.coords(M)
                for i, j in zip(*np.nonzero(np.abs(b.matrix) > tol)):
                    z = b.matrix[i, j]
                    w.writerow([int(c[i]), int(c[j]), repr(float(z.real)), repr(float(z.imag))])


def assemble_gram(geometry: ObservationGeometry, domain: DomainSpec, derivative: bool = False) -> ObservationGram:
    """Closed-form Gram of the observed trace over ``[0, T]``.

    With ``derivative=True`` the form measures the time derivative of the
    trace instead (the quantity bounded in the admissibility estimate).
    """
    w = eigen_frequencies(domain)
    T = geometry.horizon
    blocks = []
    for label, modes, weights in channel_layout(geometry, domain):
        freqs = np.concatenate([w[modes], -w[modes]])
        amp = np.concatenate([weights, weights]).astype(complex)
        if derivative:
            amp = amp * 1j * freqs
        G = np.conj(amp)[:, None] * amp[None, :] * exp_integral(freqs[None, :] - freqs[:, None], T)
        G = 0.5 * (G + G.conj().T)
        blocks.append(GramBlock(label, modes, weights, freqs, G))
    return ObservationGram(geometry, domain, tuple(blocks), derivative)


def observed_energy(state: ModalState, gram: ObservationGram) -> float:
    if state.domain != gram.domain:
        raise DomainMismatch(f"state on {state.domain}, gram on {gram.domain}")
    return max(gram.form(to_traveling_wave(state).stacked()), 0.0)


def observed_trace(state: ModalState, geometry: ObservationGeometry, times) -> np.ndarray:
    """Explicit observed trace ``B* phi(t)`` per channel, shape ``(channels, len(times))``.

    For the square the sign follows ``-d phi/d nu = d phi/d x1`` at ``x1 = 0``.
    """
    times = np.atleast_1d(np.asarray(times, dtype=float))
    w = eigen_frequencies(state.domain)
    wt = np.outer(w, times)
    phi = state.pos[:, None] * np.cos(wt) + (state.vel / w)[:, None] * np.sin(wt)
    rows = [weights @ phi[modes] for _, modes, weights in channel_layout(geometry, state.domain)]
    return np.array(rows)


def _norm_diag(domain: DomainSpec, pair: SobolevIndex, modes: np.ndarray) -> np.ndarray:
    lam = domain.eigenvalues()[modes]
    d = 2.0 * lam ** (2 * pair.alpha)
    return np.concatenate([d, d])


def whitened_block(block: GramBlock, domain: DomainSpec, pair: SobolevIndex) -> tuple[np.ndarray, np.ndarray]:
    """Return ``(D^-1/2 G D^-1/2, D^-1/2)`` for one block; ``D`` is the pair norm."""
    s = 1.0 / np.sqrt(_norm_diag(domain, pair, block.modes))
    return s[:, None] * block.matrix * s[None, :], s


def _coords_to_state(domain: DomainSpec, block: GramBlock, vec: np.ndarray) -> ModalState:
    M = domain.size
    alpha = np.zeros(2 * M, dtype=complex)
    alpha[block.coords(M)] = vec
    plus, minus = alpha[:M], alpha[M:]
    w = eigen_frequencies(domain)
    pos = plus + minus
    vel = 1j * w * (plus - minus)
    # complex eigenvectors of a complexified real form: real or imaginary part is a real eigenvector
    re = np.concatenate([pos.real, vel.real])
    im = np.concatenate([pos.imag, vel.imag])
    pick = re if np.linalg.norm(re) >= np.linalg.norm(im) else im
    return ModalState(domain, pick[:M], pick[M:])


def _extreme_quotient(gram: ObservationGram, pair: SobolevIndex, which: str):
    best_val, best_block, best_vec = None, None, None
    for block in gram.blocks:
        W, s = whitened_block(block, gram.domain, pair)
        try:
            vals, vecs = np.linalg.eigh(W)
        except np.linalg.LinAlgError as exc:
            raise RuntimeError(f"eigensolver failed on block {block.label}") from exc
        i = 0 if which == "min" else -1
        if best_val is None or (vals[i] < best_val if which == "min" else vals[i] > best_val):
            best_val, best_block, best_vec = vals[i], block, s * vecs[:, i]
    state = _coords_to_state(gram.domain, best_block, best_vec)
    n = state_norm(state, pair)
    return float(best_val), (state * (1.0 / n) if n > 0 else state)


def min_quotient(gram: ObservationGram, pair: SobolevIndex = WEAK) -> tuple[float, ModalState]:
    """Truncated observability constant and a state attaining it.

    Smallest generalized eigenvalue of (Gram, pair-norm form). Dense per-block
    eigensolves; intended for up to a couple of thousand modes.
    """
    return _extreme_quotient(gram, pair, "min")


def max_quotient(gram: ObservationGram, pair: SobolevIndex = WEAK) -> float:
    """Truncated admissibility constant (largest generalized eigenvalue)."""
    return _extreme_quotient(gram, pair, "max")[0]


def single_mode_quotient(gram: ObservationGram, mode, pair: SobolevIndex = WEAK) -> tuple[float, float]:
    """Extreme quotients restricted to the two traveling-wave coordinates of one mode."""
    i = gram.domain.flat_index(mode)
    for block in gram.blocks:
        hit = np.nonzero(block.modes == i)[0]
        if hit.size:
            j = hit[0]
            m = block.modes.size
            sub = block.matrix[np.ix_([j, j + m], [j, j + m])]
            d = _norm_diag(gram.domain, pair, block.modes[[j]])
            vals = np.linalg.eigvalsh(sub / np.sqrt(np.outer(d, d)))
            return float(vals[0]), float(vals[1])
    raise IndexError(f"mode {mode} not observed")


QUOTIENT_FIELDS = ["truncation", "T", "min_quotient", "max_quotient"]


def quotient_scan(
    geometry: ObservationGeometry,
    truncations: Iterable,
    horizons: Iterable[float],
    pair: SobolevIndex = WEAK,
) -> list[dict]:
    """Grid of truncated observability/admissibility constants."""
    kind = SQUARE if geometry.kind == SQUARE_LEFT_EDGE else INTERVAL
    rows = []
    for trunc in truncations:
        trunc = tuple(np.atleast_1d(trunc))
        if kind == SQUARE and len(trunc) == 1:
            trunc = (trunc[0], trunc[0])
        domain = DomainSpec(kind, trunc)
        for T in horizons:
            gram = assemble_gram(geometry.with_horizon(T), domain)
            rows.append(
                {
                    "truncation": "x".join(str(n) for n in trunc),
                    "T": float(T),
                    "min_quotient": min_quotient(gram, pair)[0],
                    "max_quotient": max_quotient(gram, pair),
                }
            )
    return rows


def write_quotient_csv(rows: list[dict], path):
    """Write scan rows to a path or an open text stream."""
    if hasattr(path, "write"):
        _write_rows(rows, path)
        return
    with open(path, "w", newline="") as fh:
        _write_rows(rows, fh)


def _write_rows(rows, fh):
    w = csv.DictWriter(fh, fieldnames=QUOTIENT_FIELDS, lineterminator="\n")
    w.writeheader()
    for r in rows:
        w.writerow({k: r[k] for k in QUOTIENT_FIELDS})


def traveling_to_state(domain: DomainSpec, alpha: np.ndarray) -> ModalState:
    M = domain.size
    return from_traveling_wave(TravelingWaveCoeffs(domain, alpha[:M], alpha[M:]))
