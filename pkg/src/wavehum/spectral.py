"""
Spectral representation of wave states on the unit interval and unit square.

States are stored as coefficients in the orthonormal Dirichlet eigenbasis:

* interval: ``e_n(x) = sqrt(2) sin(n pi x)``, ``lambda_n = (n pi)^2``
* square:   ``e_k(x) = 2 sin(k1 pi x1) sin(k2 pi x2)``,
  ``lambda_k = pi^2 (k1^2 + k2^2)``

Square modes are flattened k2-major: flat index ``(k2 - 1) * K1 + (k1 - 1)``,
so all modes sharing a ``k2`` are contiguous.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

INTERVAL = "interval"
SQUARE = "square"


class DomainMismatch(ValueError):
    """Two operands live on different domains or truncations."""


@dataclass(frozen=True)
class DomainSpec:
    """Domain kind and per-axis mode cutoffs.

    ``truncation`` is ``(N,)`` for the interval and ``(K1, K2)`` for the square.
    """

    kind: str
    truncation: tuple[int, ...]

    def __post_init__(self):
        trunc = tuple(int(n) for n in np.atleast_1d(self.truncation))
        object.__setattr__(self, "truncation", trunc)
        if self.kind == INTERVAL:
            if len(trunc) != 1:
                raise ValueError("interval truncation must be a single cutoff N")
        elif self.kind == SQUARE:
            if len(trunc) != 2:
                raise ValueError("square truncation must be (K1, K2)")
        else:
            raise ValueError(f"unknown domain kind {self.kind!r}")
        if min(trunc) < 1:
            raise ValueError("truncation components must be >= 1")

    @classmethod
    def interval(cls, n: int) -> "DomainSpec":
        return cls(INTERVAL, (n,))

    @classmethod
    def square(cls, k1: int, k2: int | None = None) -> "DomainSpec":
        return cls(SQUARE, (k1, k1 if k2 is None else k2))

    @property
    def size(self) -> int:
        return int(np.prod(self.truncation))

    def mode_indices(self) -> np.ndarray:
        """Integer mode labels in canonical order, shape ``(size, ndim)``."""
        if self.kind == INTERVAL:
            return np.arange(1, self.truncation[0] + 1)[:, None]
        k1max, k2max = self.truncation
        k2, k1 = np.meshgrid(np.arange(1, k2max + 1), np.arange(1, k1max + 1), indexing="ij")
        return np.column_stack([k1.ravel(), k2.ravel()])

    def flat_index(self, mode: Sequence[int] | int) -> int:
        mode = tuple(np.atleast_1d(mode))
        if self.kind == INTERVAL:
            (n,) = mode
            if not 1 <= n <= self.truncation[0]:
                raise IndexError(f"mode {n} outside truncation")
            return n - 1
        k1, k2 = mode
        K1, K2 = self.truncation
        if not (1 <= k1 <= K1 and 1 <= k2 <= K2):
            raise IndexError(f"mode {mode} outside truncation")
        return (k2 - 1) * K1 + (k1 - 1)

    def eigenvalues(self) -> np.ndarray:
        k = self.mode_indices()
        return np.pi**2 * np.sum(k.astype(float) ** 2, axis=1)

    def to_dict(self) -> dict:
        return {"kind": self.kind, "truncation": list(self.truncation)}

    @classmethod
    def from_dict(cls, d: dict) -> "DomainSpec":
        return cls(d["kind"], tuple(d["truncation"]))


def eigen_frequencies(domain: DomainSpec) -> np.ndarray:
    """Angular frequencies ``omega = sqrt(lambda)`` in canonical order."""
    return np.sqrt(domain.eigenvalues())


@dataclass(frozen=True)
class SobolevIndex:
    """State-space pair ``(H_a, H_{a-1/2})`` of the Sobolev scale.

    The norm squared is ``sum lambda^(2a) pos^2 + lambda^(2a-1) vel^2``.
    A pair written as ``(H_{-alpha}, H_{-alpha-1/2})`` corresponds to ``a = -alpha``.
    """

    alpha: float

    def weights(self, lam: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        return lam ** (2 * self.alpha), lam ** (2 * self.alpha - 1)


ENERGY = SobolevIndex(0.5)  # H^1_0 x L^2
WEAK = SobolevIndex(0.0)  # L^2 x H^-1


def _frozen_array(x, dtype=float) -> np.ndarray:
    a = np.array(x, dtype=dtype)
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class ModalState:
    """Position/velocity coefficients of a wave state in the orthonormal eigenbasis."""

    domain: DomainSpec
    pos: np.ndarray
    vel: np.ndarray

    def __post_init__(self):
        pos = _frozen_array(np.ravel(self.pos))
        vel = _frozen_array(np.ravel(self.vel))
        n = self.domain.size
        if pos.shape != (n,) or vel.shape != (n,):
            raise ValueError(f"pos/vel must have {n} coefficients for {self.domain}")
        if not (np.all(np.isfinite(pos)) and np.all(np.isfinite(vel))):
            raise ValueError("state coefficients must be finite")
        object.__setattr__(self, "pos", pos)
        object.__setattr__(self, "vel", vel)

    @classmethod
    def zeros(cls, domain: DomainSpec) -> "ModalState":
        return cls(domain, np.zeros(domain.size), np.zeros(domain.size))

    @classmethod
    def single_mode(cls, domain: DomainSpec, mode, pos: float = 0.0, vel: float = 0.0) -> "ModalState":
        p = np.zeros(domain.size)
        v = np.zeros(domain.size)
        i = domain.flat_index(mode)
        p[i], v[i] = pos, vel
        return cls(domain, p, v)

    @classmethod
    def random(cls, domain: DomainSpec, rng: np.random.Generator) -> "ModalState":
        return cls(domain, rng.standard_normal(domain.size), rng.standard_normal(domain.size))

    def __add__(self, other: "ModalState") -> "ModalState":
        _check_same(self.domain, other.domain)
        return ModalState(self.domain, self.pos + other.pos, self.vel + other.vel)

    def __sub__(self, other: "ModalState") -> "ModalState":
        _check_same(self.domain, other.domain)
        return ModalState(self.domain, self.pos - other.pos, self.vel - other.vel)

    def __mul__(self, c: float) -> "ModalState":
        return ModalState(self.domain, c * self.pos, c * self.vel)

    __rmul__ = __mul__

    def embed(self, domain: DomainSpec) -> "ModalState":
        """Zero-pad (or restrict) onto another truncation of the same domain kind."""
        if domain.kind != self.domain.kind:
            raise DomainMismatch("cannot embed across domain kinds")
        pos = np.zeros(domain.size)
        vel = np.zeros(domain.size)
        src = self.domain.mode_indices()
        for i, mode in enumerate(src):
            try:
                j = domain.flat_index(mode)
            except IndexError:
                continue
            pos[j], vel[j] = self.pos[i], self.vel[i]
        return ModalState(domain, pos, vel)

    def to_dict(self) -> dict:
        return {"domain": self.domain.to_dict(), "pos": self.pos.tolist(), "vel": self.vel.tolist()}

    @classmethod
    def from_dict(cls, d: dict) -> "ModalState":
        return cls(DomainSpec.from_dict(d["domain"]), d["pos"], d["vel"])

    def to_json(self) -> str:
        return json.dumps(self.to_dict())

    @classmethod
    def from_json(cls, s: str) -> "ModalState":
        return cls.from_dict(json.loads(s))


@dataclass(frozen=True, eq=False)
class TravelingWaveCoeffs:
    """Amplitudes of ``phi_k(t) = plus_k e^{i w_k t} + minus_k e^{-i w_k t}``."""

    domain: DomainSpec
    plus: np.ndarray = field()
    minus: np.ndarray = field()

    def __post_init__(self):
        object.__setattr__(self, "plus", _frozen_array(self.plus, complex))
        object.__setattr__(self, "minus", _frozen_array(self.minus, complex))

    def stacked(self) -> np.ndarray:
        return np.concatenate([self.plus, self.minus])


def _check_same(a: DomainSpec, b: DomainSpec):
    if a != b:
        raise DomainMismatch(f"domain mismatch: {a} vs {b}")


def to_traveling_wave(state: ModalState) -> TravelingWaveCoeffs:
    w = eigen_frequencies(state.domain)
    plus = 0.5 * (state.pos - 1j * state.vel / w)
    return TravelingWaveCoeffs(state.domain, plus, np.conj(plus))


def from_traveling_wave(coeffs: TravelingWaveCoeffs) -> ModalState:
    """Inverse of :func:`to_traveling_wave`; real parts are taken."""
    w = eigen_frequencies(coeffs.domain)
    pos = coeffs.plus + coeffs.minus
    vel = 1j * w * (coeffs.plus - coeffs.minus)
    return ModalState(coeffs.domain, pos.real, vel.real)


def state_norm(state: ModalState, pair: SobolevIndex = ENERGY) -> float:
    wp, wv = pair.weights(state.domain.eigenvalues())
    return float(np.sqrt(np.sum(wp * state.pos**2) + np.sum(wv * state.vel**2)))


def dual_pairing(a: ModalState, b: ModalState) -> float:
    """``<a.pos, b.vel> - <a.vel, b.pos>`` taken coefficient-wise."""
    _check_same(a.domain, b.domain)
    return float(a.pos @ b.vel - a.vel @ b.pos)


def evolve_free(state: ModalState, t: float) -> ModalState:
    """Exact solution of the homogeneous wave equation at time ``t``."""
    if t < 0:
        raise ValueError("t must be nonnegative")
    w = eigen_frequencies(state.domain)
    c, s = np.cos(w * t), np.sin(w * t)
    pos = state.pos * c + state.vel / w * s
    vel = -w * state.pos * s + state.vel * c
    return ModalState(state.domain, pos, vel)


def interval_basis(domain: DomainSpec, x) -> np.ndarray:
    """Orthonormal interval eigenfunctions at points ``x``, shape ``(len(x), N)``."""
    n = np.arange(1, domain.truncation[0] + 1)
    return np.sqrt(2.0) * np.sin(np.pi * np.outer(np.atleast_1d(x), n))
