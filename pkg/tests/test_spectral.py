import json

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from wavehum.spectral import (
    ENERGY,
    WEAK,
    DomainMismatch,
    DomainSpec,
    ModalState,
    SobolevIndex,
    dual_pairing,
    eigen_frequencies,
    evolve_free,
    from_traveling_wave,
    state_norm,
    to_traveling_wave,
)

DOMAINS = [DomainSpec.interval(7), DomainSpec.square(4, 3), DomainSpec.square(5)]


def test_domain_validation():
    with pytest.raises(ValueError):
        DomainSpec.interval(0)
    with pytest.raises(ValueError):
        DomainSpec("square", (3,))
    with pytest.raises(ValueError):
        DomainSpec("disk", (3,))


def test_square_flattening_is_k2_major():
    d = DomainSpec.square(3, 2)
    k = d.mode_indices()
    assert k.tolist() == [[1, 1], [2, 1], [3, 1], [1, 2], [2, 2], [3, 2]]
    assert d.flat_index((3, 2)) == 5
    assert all(d.flat_index(m) == i for i, m in enumerate(k))


def test_eigen_frequencies_examples():
    assert eigen_frequencies(DomainSpec.interval(3))[0] == pytest.approx(np.pi, rel=1e-15)
    sq = DomainSpec.square(4)
    w = eigen_frequencies(sq)
    assert w[sq.flat_index((3, 4))] == pytest.approx(5 * np.pi, rel=1e-15)
    assert w[sq.flat_index((1, 1))] == pytest.approx(np.pi * np.sqrt(2), rel=1e-15)
    assert np.all(w > 0)


def test_traveling_wave_cosine_and_sine_states():
    d = DomainSpec.square(3)
    k = (2, 3)
    tw = to_traveling_wave(ModalState.single_mode(d, k, pos=1.0))
    i = d.flat_index(k)
    assert tw.plus[i] == pytest.approx(0.5)
    assert tw.minus[i] == pytest.approx(0.5)
    w = eigen_frequencies(d)[i]
    tw = to_traveling_wave(ModalState.single_mode(d, k, vel=w))
    assert tw.plus[i] == pytest.approx(-0.5j)
    assert tw.minus[i] == pytest.approx(0.5j)


@pytest.mark.parametrize("domain", DOMAINS, ids=str)
def test_traveling_wave_round_trip(domain):
    rng = np.random.default_rng(1)
    for _ in range(10):
        s = ModalState.random(domain, rng)
        tw = to_traveling_wave(s)
        assert np.array_equal(tw.minus, np.conj(tw.plus))
        back = from_traveling_wave(tw)
        ref = np.linalg.norm(np.concatenate([s.pos, s.vel]))
        err = np.linalg.norm(np.concatenate([back.pos - s.pos, back.vel - s.vel]))
        assert err <= 1e-13 * ref


def test_traveling_wave_matches_time_evolution():
    d = DomainSpec.interval(5)
    s = ModalState.random(d, np.random.default_rng(3))
    tw = to_traveling_wave(s)
    w = eigen_frequencies(d)
    t = 0.37
    phi = tw.plus * np.exp(1j * w * t) + tw.minus * np.exp(-1j * w * t)
    np.testing.assert_allclose(phi.real, evolve_free(s, t).pos, atol=1e-13)
    np.testing.assert_allclose(phi.imag, 0, atol=1e-13)


def test_state_norm_examples():
    d = DomainSpec.interval(4)
    e1 = ModalState.single_mode(d, 1, pos=1.0)
    assert state_norm(e1, ENERGY) == pytest.approx(np.pi, rel=1e-15)
    assert state_norm(e1, WEAK) == pytest.approx(1.0, rel=1e-15)
    sq = DomainSpec.square(4)
    v = ModalState.single_mode(sq, (3, 4), vel=1.0)
    w = eigen_frequencies(sq)[sq.flat_index((3, 4))]
    assert state_norm(v, WEAK) == pytest.approx(1 / w, rel=1e-14)
    assert state_norm(v, WEAK) == pytest.approx(1 / (5 * np.pi), rel=1e-14)


def test_state_norm_general_pair_weights():
    d = DomainSpec.interval(3)
    s = ModalState(d, [1.0, 0, 0], [0, 0, 2.0])
    lam = d.eigenvalues()
    a = -0.5
    expected = np.sqrt(lam[0] ** (2 * a) * 1 + lam[2] ** (2 * a - 1) * 4)
    assert state_norm(s, SobolevIndex(a)) == pytest.approx(expected, rel=1e-14)


def test_dual_pairing_examples():
    d = DomainSpec.interval(3)
    a = ModalState.single_mode(d, 1, pos=1.0)
    b = ModalState.single_mode(d, 1, vel=1.0)
    assert dual_pairing(a, b) == 1.0
    s = ModalState.random(d, np.random.default_rng(0))
    assert dual_pairing(s, s) == pytest.approx(0.0, abs=1e-15)
    with pytest.raises(DomainMismatch):
        dual_pairing(a, ModalState.zeros(DomainSpec.interval(4)))


@given(seed=st.integers(0, 2**32 - 1), c=st.floats(-5, 5))
@settings(max_examples=50, deadline=None)
def test_dual_pairing_bilinear_antisymmetric(seed, c):
    rng = np.random.default_rng(seed)
    d = DomainSpec.square(3)
    a, b, e = (ModalState.random(d, rng) for _ in range(3))
    assert dual_pairing(a, b) == pytest.approx(-dual_pairing(b, a), abs=1e-14 * 10)
    assert abs(dual_pairing(a, b) + dual_pairing(b, a)) <= 1e-14 * max(1, abs(dual_pairing(a, b)))
    lhs = dual_pairing(a + c * e, b)
    assert lhs == pytest.approx(dual_pairing(a, b) + c * dual_pairing(e, b), abs=1e-12)


def test_evolve_free_identity_and_period():
    d = DomainSpec.interval(3)
    s = ModalState.random(d, np.random.default_rng(5))
    z = evolve_free(s, 0.0)
    assert np.array_equal(z.pos, s.pos) and np.array_equal(z.vel, s.vel)
    e1 = ModalState.single_mode(d, 1, pos=1.0)
    back = evolve_free(e1, 2.0)
    np.testing.assert_allclose(back.pos, e1.pos, atol=1e-12)
    np.testing.assert_allclose(back.vel, e1.vel, atol=1e-12)
    with pytest.raises(ValueError):
        evolve_free(s, -1.0)


@given(seed=st.integers(0, 2**32 - 1), t=st.floats(0, 100))
@settings(max_examples=60, deadline=None)
def test_free_evolution_conserves_energy_and_weak_norms(seed, t):
    d = DomainSpec.square(4)
    s = ModalState.random(d, np.random.default_rng(seed))
    z = evolve_free(s, t)
    for pair in (ENERGY, WEAK):
        assert abs(state_norm(z, pair) - state_norm(s, pair)) <= 1e-12 * state_norm(s, pair)


def test_json_round_trip():
    d = DomainSpec.square(3, 2)
    s = ModalState.random(d, np.random.default_rng(9))
    obj = json.loads(s.to_json())
    assert set(obj) == {"domain", "pos", "vel"}
    assert obj["domain"] == {"kind": "square", "truncation": [3, 2]}
    back = ModalState.from_json(s.to_json())
    assert back.domain == d
    assert np.array_equal(back.pos, s.pos) and np.array_equal(back.vel, s.vel)


def test_state_validation_and_immutability():
    d = DomainSpec.interval(3)
    with pytest.raises(ValueError):
        ModalState(d, [1, 2], [1, 2, 3])
    with pytest.raises(ValueError):
        ModalState(d, [1, np.nan, 3], [0, 0, 0])
    s = ModalState(d, [1, 2, 3], [0, 0, 0])
    with pytest.raises(ValueError):
        s.pos[0] = 5.0


def test_embed_zero_pads_by_mode_label():
    small = DomainSpec.square(2)
    big = DomainSpec.square(3)
    s = ModalState.single_mode(small, (2, 2), pos=1.5)
    e = s.embed(big)
    assert e.pos[big.flat_index((2, 2))] == 1.5
    assert np.count_nonzero(e.pos) == 1
