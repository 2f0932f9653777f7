import json

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from oracles import rk4_modal
from wavehum.hum import (
    ControlSignal,
    MaxIterExceeded,
    NotObservableAtTruncation,
    conjugate_gradient,
    cost_ratio_scan,
    dense_hum_coords,
    evaluate_J,
    simulate_controlled,
    solve_hum,
    synthesize_control,
    transfer_function,
    transfer_scan,
    verify_cost_bound,
)
from wavehum.observability import ObservationGeometry, assemble_gram, channel_layout, observed_energy
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
    state_norm,
)

SQRT2M1 = np.sqrt(2) - 1


def _gram(T=9.0, K=8):
    return assemble_gram(ObservationGeometry.square_left_edge(T), DomainSpec.square(K))


GRAM_8 = _gram()
GRAM_4 = _gram(K=4)


def test_J_examples():
    g = GRAM_4
    d = g.domain
    z = ModalState.random(d, np.random.default_rng(0))
    assert evaluate_J(ModalState.zeros(d), z, g) == 0.0
    phi = ModalState.random(d, np.random.default_rng(1))
    expected = 0.5 * observed_energy(phi, g) + dual_pairing(phi, z)
    assert evaluate_J(phi, z, g) == pytest.approx(expected, rel=1e-14)
    with pytest.raises(DomainMismatch):
        evaluate_J(phi, ModalState.zeros(DomainSpec.square(3)), g)


def test_zero_target_gives_zero_control():
    sol = solve_hum(ModalState.zeros(GRAM_4.domain), GRAM_4)
    assert sol.iterations == 0
    assert not np.any(sol.minimizer.pos) and not np.any(sol.minimizer.vel)
    assert sol.control.cost() == 0.0
    assert np.all(sol.control.evaluate(np.linspace(0, 9, 5)) == 0)
    rep = verify_cost_bound(sol, ModalState.zeros(GRAM_4.domain), GRAM_4, ENERGY)
    assert rep.ratio is None


def test_conjugate_gradient_spd_system():
    rng = np.random.default_rng(5)
    X = rng.standard_normal((30, 30)) + 1j * rng.standard_normal((30, 30))
    A = X.conj().T @ X + 30 * np.eye(30)
    b = rng.standard_normal(30) + 0j
    x, k, rel = conjugate_gradient(lambda v: A @ v, b, tol=1e-12)
    assert rel <= 1e-12
    np.testing.assert_allclose(x, np.linalg.solve(A, b), rtol=1e-10)
    x0, k0, r0 = conjugate_gradient(lambda v: A @ v, np.zeros(30, complex))
    assert k0 == 0 and r0 == 0.0 and not np.any(x0)


@pytest.mark.parametrize("seed", range(5))
def test_cg_matches_dense_solve(seed):
    z = ModalState.random(GRAM_8.domain, np.random.default_rng(seed))
    sol = solve_hum(z, GRAM_8, tol=1e-10)
    ref = dense_hum_coords(z, GRAM_8)
    assert np.linalg.norm(sol.alpha - ref) <= 1e-6 * np.linalg.norm(ref)
    assert sol.residual <= 1e-10


def test_single_mode_target_converges_quickly():
    d = GRAM_8.domain
    z = ModalState.single_mode(d, (1, 1), pos=1.0)
    sol = solve_hum(z, GRAM_8, tol=1e-8)
    assert sol.residual <= 1e-8
    assert sol.iterations <= 128


def test_minimizer_is_stationary_and_gives_minus_half_energy():
    g = GRAM_4
    z = ModalState.random(g.domain, np.random.default_rng(7))
    sol = solve_hum(z, g, tol=1e-12)
    phi = sol.minimizer
    J = evaluate_J(phi, z, g)
    assert J == pytest.approx(-0.5 * observed_energy(phi, g), rel=1e-9)
    rng = np.random.default_rng(8)
    for _ in range(5):
        h = ModalState.random(g.domain, rng)
        eps = 1e-4
        # first variation vanishes; second variation is G(h) >= 0
        dJ = evaluate_J(phi + eps * h, z, g) - J
        assert dJ >= -1e-12 * abs(J)
        assert dJ == pytest.approx(0.5 * eps**2 * observed_energy(h, g), rel=1e-4, abs=1e-12 * abs(J))


def test_control_drives_target_to_rest():
    g = GRAM_8
    for seed in range(3):
        z = ModalState.random(g.domain, np.random.default_rng(seed))
        sol = solve_hum(z, g)
        end = simulate_controlled(z, sol.control)
        assert state_norm(end, ENERGY) <= 1e-8 * state_norm(z, ENERGY)


def test_interval_point_control_drives_target_to_rest():
    g = assemble_gram(ObservationGeometry.interval_point(SQRT2M1, 3.0), DomainSpec.interval(16))
    z = ModalState.random(g.domain, np.random.default_rng(3))
    pair = SobolevIndex(-0.5)
    sol = solve_hum(z, g, pair=pair)
    end = simulate_controlled(z, sol.control)
    assert state_norm(end, pair) <= 1e-8 * state_norm(z, pair)
    assert len(sol.control.labels) == 1


def test_midpoint_is_not_observable():
    g = assemble_gram(ObservationGeometry.interval_point(0.5, 3.0), DomainSpec.interval(8))
    z = ModalState.random(g.domain, np.random.default_rng(0))
    with pytest.raises(NotObservableAtTruncation) as info:
        solve_hum(z, g)
    null = info.value.null_state
    assert observed_energy(null, g) <= 1e-12 * state_norm(null, WEAK) ** 2 * 1e3
    assert info.value.ratio <= 1e-12


def test_max_iter_exceeded_is_reported():
    z = ModalState.random(GRAM_8.domain, np.random.default_rng(0))
    with pytest.raises(MaxIterExceeded) as info:
        solve_hum(z, GRAM_8, max_iter=2)
    assert info.value.residual > 1e-10


def test_control_signal_zero_and_single_mode():
    geo = ObservationGeometry.square_left_edge(2.0)
    d = DomainSpec.square(3)
    zero = ControlSignal.zero(geo, d)
    assert zero.labels == (1, 2, 3)
    assert zero.cost() == 0.0
    k = (2, 3)
    phi = ModalState.single_mode(d, k, pos=1.0)
    ctrl = synthesize_control(phi, geo)
    t = np.linspace(0, 2, 7)
    w = eigen_frequencies(d)[d.flat_index(k)]
    v = ctrl.evaluate(t)
    np.testing.assert_allclose(v[2], np.sqrt(2) * 2 * np.pi * np.cos(w * t), atol=1e-12)
    np.testing.assert_array_equal(v[:2], 0)
    # outside the horizon the control is off
    assert np.all(ctrl.evaluate([-0.1, 2.1]) == 0)


@pytest.mark.parametrize("seed", range(3))
def test_control_cost_equals_observed_energy(seed):
    g = GRAM_4
    phi = ModalState.random(g.domain, np.random.default_rng(seed))
    ctrl = synthesize_control(phi, g.geometry)
    assert ctrl.cost() ** 2 == pytest.approx(observed_energy(phi, g), rel=1e-12)
    t = np.linspace(0, g.geometry.horizon, 200_001)
    y = np.sum(ctrl.evaluate(t) ** 2, axis=0)
    quad = np.sum((y[1:] + y[:-1]) / 2) * (t[1] - t[0])
    assert ctrl.cost() ** 2 == pytest.approx(quad, rel=1e-7)


def test_simulate_with_zero_control_is_free_evolution():
    geo = ObservationGeometry.square_left_edge(1.3)
    d = DomainSpec.square(3)
    s = ModalState.random(d, np.random.default_rng(2))
    a = simulate_controlled(s, ControlSignal.zero(geo, d))
    b = evolve_free(s, 1.3)
    assert np.array_equal(a.pos, b.pos) and np.array_equal(a.vel, b.vel)
    with pytest.raises(ValueError):
        simulate_controlled(s, ControlSignal.zero(geo, d), T=2.0)


@pytest.mark.parametrize(
    "geometry,domain",
    [
        (ObservationGeometry.interval_point(SQRT2M1, 3.0), DomainSpec.interval(8)),
        (ObservationGeometry.square_left_edge(9.0), DomainSpec.square(4)),
    ],
    ids=["interval", "square"],
)
def test_closed_form_duhamel_matches_rk4(geometry, domain):
    rng = np.random.default_rng(21)
    w = eigen_frequencies(domain)
    layout = channel_layout(geometry, domain)
    labels, amps, freqs = [], [], []
    for lab, modes, _ in layout:
        # generic frequencies plus exact resonances with the channel's modes
        mu = np.concatenate([rng.uniform(-20, 20, 3), w[modes][:2], -w[modes][:1]])
        labels.append(lab)
        amps.append(rng.standard_normal(mu.size) + 1j * rng.standard_normal(mu.size))
        freqs.append(mu)
    ctrl = ControlSignal(geometry, domain, tuple(labels), tuple(amps), tuple(freqs))
    s0 = ModalState.random(domain, rng)
    end = simulate_controlled(s0, ctrl)

    def forcing(t):
        # accumulated step times can overshoot T by an ulp, where the control is off
        v = ctrl.evaluate([min(t, geometry.horizon)])[:, 0]
        f = np.zeros(domain.size)
        for m, (_, modes, weights) in enumerate(layout):
            f[modes] += weights * v[m]
        return f

    pos, vel = rk4_modal(s0.pos, s0.vel, w, forcing, geometry.horizon, 10_000)
    ref = np.concatenate([pos, vel])
    err = np.linalg.norm(np.concatenate([end.pos, end.vel]) - ref)
    assert err <= 1e-6 * np.linalg.norm(ref)


def test_cost_report_consistency():
    g = GRAM_8
    z = ModalState.random(g.domain, np.random.default_rng(4))
    sol = solve_hum(z, g)
    rep = verify_cost_bound(sol, z, g, ENERGY)
    assert rep.cost == pytest.approx(rep.gram_cost, rel=1e-10)
    assert rep.ratio == pytest.approx(rep.cost / state_norm(z, ENERGY), rel=1e-14)
    # the optimal cost squared equals the duality pairing -<phi, z>
    assert rep.cost**2 == pytest.approx(-dual_pairing(sol.minimizer, z), rel=1e-9)


def test_cost_ratio_scan_shape():
    geo = ObservationGeometry.square_left_edge(9.0)
    targets = [ModalState.random(DomainSpec.square(3), np.random.default_rng(i)) for i in range(3)]
    rows = cost_ratio_scan(targets, geo, [DomainSpec.square(3), DomainSpec.square(4)], ENERGY)
    assert [r["truncation"] for r in rows] == [[3, 3], [4, 4]]
    assert all(r["max_ratio"] >= r["mean_ratio"] > 0 for r in rows)


@given(seed=st.integers(0, 2**32 - 1), c=st.floats(0.1, 10.0))
@settings(max_examples=15, deadline=None)
def test_hum_is_linear_in_target(seed, c):
    rng = np.random.default_rng(seed)
    g = GRAM_4
    z1, z2 = ModalState.random(g.domain, rng), ModalState.random(g.domain, rng)
    a = solve_hum(z1 + c * z2, g, tol=1e-12).alpha
    b = solve_hum(z1, g, tol=1e-12).alpha + c * solve_hum(z2, g, tol=1e-12).alpha
    assert np.linalg.norm(a - b) <= 1e-8 * np.linalg.norm(a)


def test_control_signal_json_round_trip():
    g = GRAM_4
    sol = solve_hum(ModalState.random(g.domain, np.random.default_rng(1)), g)
    obj = json.loads(sol.control.to_json())
    assert set(obj) == {"geometry", "domain", "channels"}
    assert set(obj["channels"][0]["terms"][0]) == {"amplitude_re", "amplitude_im", "frequency"}
    back = ControlSignal.from_dict(obj)
    t = np.linspace(0, 9, 101)
    assert np.array_equal(back.evaluate(t), sol.control.evaluate(t))


def test_control_csv(tmp_path):
    g = GRAM_4
    sol = solve_hum(ModalState.single_mode(g.domain, (1, 1), pos=1.0), g)
    path = tmp_path / "control.csv"
    sol.control.to_csv(path, dt=0.5)
    lines = path.read_text().splitlines()
    assert lines[0] == "t,channel_1,channel_2,channel_3,channel_4"
    assert len(lines) == 1 + 19


def test_transfer_function_single_term():
    geo = ObservationGeometry.interval_point(0.5, 1.0)
    lam = np.array([1.0, 2 + 3j])
    val, _ = transfer_function(lam, geo, DomainSpec.interval(1))
    np.testing.assert_allclose(val, 2 * lam / (lam**2 + np.pi**2), rtol=1e-14)
    with pytest.raises(ValueError):
        transfer_function(-1.0, geo, DomainSpec.interval(1))
    with pytest.raises(ValueError):
        transfer_function(1.0, ObservationGeometry.square_left_edge(1.0), DomainSpec.square(2))


def test_transfer_function_conjugate_symmetry():
    geo = ObservationGeometry.interval_point(SQRT2M1, 1.0)
    lam = 1 + 1j * np.linspace(0, 50, 101)
    d = DomainSpec.interval(64)
    a, _ = transfer_function(lam, geo, d)
    b, _ = transfer_function(np.conj(lam), geo, d)
    np.testing.assert_allclose(b, np.conj(a), rtol=1e-12)


def test_transfer_function_against_hyperbolic_closed_form():
    # the full series sums to sinh(lam xi) sinh(lam (1 - xi)) / sinh(lam)
    xi = SQRT2M1
    geo = ObservationGeometry.interval_point(xi, 1.0)
    lam = 1 + 1j * np.linspace(-100, 100, 2001)
    exact = np.sinh(lam * xi) * np.sinh(lam * (1 - xi)) / np.sinh(lam)
    errs = []
    for N in (64, 256):
        val, tail = transfer_function(lam, geo, DomainSpec.interval(N))
        err = np.abs(val - exact)
        assert np.all(err <= 1.1 * tail)
        errs.append(err.max())
    assert errs[1] < errs[0]


def test_transfer_scan_finds_peak_near_resonance():
    geo = ObservationGeometry.interval_point(SQRT2M1, 1.0)
    scan = transfer_scan(geo, DomainSpec.interval(256))
    k = round(abs(scan.argsup.imag) / np.pi)
    assert abs(scan.argsup.imag) == pytest.approx(k * np.pi, abs=0.05)
    assert scan.tail_at_sup <= scan.max_tail
    fine = 1 + 1j * np.linspace(-100, 100, 400_001)
    exact = np.abs(np.sinh(fine * SQRT2M1) * np.sinh(fine * (1 - SQRT2M1)) / np.sinh(fine)).max()
    assert abs(scan.sup - exact) <= 0.01 * exact
