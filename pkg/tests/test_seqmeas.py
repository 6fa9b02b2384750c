import json
import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from netshare.errors import InfeasibleScheduleError, NetShareError
from netshare.qstate import bell_mixture, chsh_horodecki_max, maximally_mixed, phi_plus, pure_schmidt, random_state
from netshare.seqmeas import (
    LITERAL_PAPER, SHARP_ZX, SharpnessSchedule, apply_schedule, chsh_closed_form, chsh_direct,
    fixed_party_observables, luders_round, povm_pair, schedule_greedy,
)
from netshare.tensor_core import I2, SX, SZ, eig_hermitian, kron, partial_trace, psd_sqrt

QUARTER = math.pi / 4


def bloch_channel(theta, gamma):
    """Action of the averaged measurement on the measured qubit's Bloch components.

    An effect pair (I +/- c n.sigma)/2 with |n| = 1 keeps the n component and
    shrinks the orthogonal ones by sqrt(1 - c^2); averaging the two inputs
    averages n n^T over n = (+/- gamma sin, 0, cos) / c.
    """
    c = math.hypot(math.cos(theta), gamma * math.sin(theta))
    keep = math.sqrt(max(0.0, 1 - c * c))
    nn = np.diag([(gamma * math.sin(theta)) ** 2, 0.0, math.cos(theta) ** 2]) / c**2
    return keep * np.eye(3) + (1 - keep) * nn


def test_povm_pair_projective_at_full_sharpness():
    p0, p1 = povm_pair(QUARTER, 1.0)
    e = p0.e0
    assert np.allclose(e @ e, e, atol=1e-12)
    v = [np.trace(e @ s).real for s in (SX, np.array([[0, -1j], [1j, 0]]), SZ)]
    assert np.allclose(v, [math.sin(QUARTER), 0, math.cos(QUARTER)])
    for p in (p0, p1):
        assert np.allclose(p.e0 + p.e1, I2, atol=1e-12)


def test_povm_pair_unsharp_inputs_coincide():
    p0, p1 = povm_pair(0.3, 0.0)
    assert np.allclose(p0.e0, p1.e0)
    assert np.allclose(p0.e0, (I2 + math.cos(0.3) * SZ) / 2)


@pytest.mark.parametrize("theta,gamma", [(0.1, 0.3), (QUARTER, 0.7), (0.5, 1.0), (0.2, 0.0)])
def test_povm_observable_spectrum(theta, gamma):
    for p in povm_pair(theta, gamma):
        w, _ = eig_hermitian(p.observable)
        r = math.sqrt(math.cos(theta) ** 2 + gamma**2 * math.sin(theta) ** 2)
        assert np.allclose(w, [r, -r])


@pytest.mark.parametrize("theta,gamma", [(-0.1, 0.5), (1.0, 0.5), (0.3, 1.5), (0.3, -0.1)])
def test_povm_pair_ranges(theta, gamma):
    with pytest.raises(NetShareError):
        povm_pair(theta, gamma)


def test_fixed_party_observables():
    b0, b1 = fixed_party_observables(math.pi / 8, LITERAL_PAPER)
    assert np.allclose(b0, math.cos(math.pi / 8) * SZ) and np.allclose(b1, math.sin(math.pi / 8) * SX)
    b0, b1 = fixed_party_observables(0.4, SHARP_ZX)
    assert np.allclose(b0, SZ) and np.allclose(b1, SX)
    with pytest.raises(NetShareError):
        fixed_party_observables(0.4, "other")


def test_luders_round_examples():
    out = luders_round(phi_plus(), "A", 0.0, 0.42)
    assert np.allclose(out.bloch.T, np.diag([0, 0, 1]), atol=1e-12)
    th = 0.37
    out = luders_round(phi_plus(), "A", th, 1.0)
    assert np.allclose(out.bloch.T, np.diag([math.sin(th) ** 2, 0, math.cos(th) ** 2]), atol=1e-12)


def test_luders_round_matches_bloch_oracle(rng):
    for _ in range(40):
        st = random_state(rng)
        th, g = float(rng.uniform(0, QUARTER)), float(rng.uniform(0, 1))
        m = bloch_channel(th, g)
        a = luders_round(st, "A", th, g).bloch
        assert np.allclose(a.T, m @ st.bloch.T, atol=1e-12)
        assert np.allclose(a.r, m @ st.bloch.r, atol=1e-12)
        assert np.allclose(a.s, st.bloch.s, atol=1e-12)
        b = luders_round(st, "B", th, g).bloch
        assert np.allclose(b.T, st.bloch.T @ m.T, atol=1e-12)
        assert np.allclose(b.s, m @ st.bloch.s, atol=1e-12)


@settings(max_examples=100, deadline=None)
@given(st.integers(0, 2**32 - 1), st.floats(0, QUARTER), st.floats(0, 1), st.sampled_from("AB"))
def test_channel_contract(seed, theta, gamma, side):
    state = random_state(np.random.default_rng(seed))
    out = luders_round(state, side, theta, gamma)
    assert abs(np.trace(out.rho).real - 1) <= 1e-10
    assert np.linalg.eigvalsh(out.rho)[0] >= -1e-9
    assert np.all(out.spectrum <= state.spectrum + 1e-9)
    assert chsh_horodecki_max(out) <= chsh_horodecki_max(state) + 1e-9


def test_other_side_reduced_state_unchanged(rng):
    for _ in range(20):
        st = random_state(rng)
        out = luders_round(st, "A", 0.3, 0.6)
        assert np.max(np.abs(partial_trace(out.rho, [1], [2, 2]) - partial_trace(st.rho, [1], [2, 2]))) <= 1e-10


def test_zero_sharpness_is_single_axis_channel(rng):
    st = random_state(rng)
    th = 0.6
    e = (I2 + math.cos(th) * SZ) / 2
    ks = [kron(psd_sqrt(e), I2), kron(psd_sqrt(I2 - e), I2)]
    direct = sum(k @ st.rho @ k for k in ks)
    assert np.allclose(luders_round(st, "A", th, 0.0).rho, direct, atol=1e-12)


def test_twelve_rounds_preserve_trace(rng):
    st = random_state(rng)
    sched = SharpnessSchedule(0.4, tuple(rng.uniform(0, 1, 12)))
    states = apply_schedule(st, "A", sched)
    assert len(states) == 13
    for s in states:
        assert abs(np.trace(s.rho).real - 1) <= 1e-9
    hm = [chsh_horodecki_max(s) for s in states]
    assert all(b <= a + 1e-9 for a, b in zip(hm, hm[1:]))


def test_apply_schedule_lengths():
    assert len(apply_schedule(phi_plus(), "A", SharpnessSchedule(0.3))) == 1
    states = apply_schedule(phi_plus(), "A", SharpnessSchedule(QUARTER, (1.0,)))
    assert np.allclose(states[1].bloch.T, np.diag([0.5, 0, 0.5]), atol=1e-12)
    assert np.allclose(states[1].spectrum, [0.5, 0.5, 0], atol=1e-12)


def test_schedule_validation_and_json():
    with pytest.raises(NetShareError):
        SharpnessSchedule(0.0, (0.5,))
    with pytest.raises(NetShareError):
        SharpnessSchedule(0.3, (1.2,))
    s = SharpnessSchedule(0.3, (0.1, 0.5))
    assert SharpnessSchedule.from_json(json.loads(json.dumps(s.to_json()))) == s


def bilinear_chsh(state, theta, gamma, mode):
    T = state.bloch.T
    b0, b1 = ([0, 0, 1], [1, 0, 0]) if mode == SHARP_ZX else ([0, 0, math.cos(theta)], [math.sin(theta), 0, 0])
    plus = np.array([0, 0, 2 * math.cos(theta)])
    minus = np.array([2 * gamma * math.sin(theta), 0, 0])
    return plus @ T @ b0 + minus @ T @ b1


def test_chsh_direct_examples():
    th = math.pi / 8
    assert chsh_direct(phi_plus(), th, 1.0) == pytest.approx(2 * math.cos(th) + 2 * math.sin(th), abs=1e-12)
    assert chsh_direct(phi_plus(), th, 1.0) == pytest.approx(2.6131, abs=5e-5)
    assert chsh_direct(phi_plus(), 0.5, 1.0, LITERAL_PAPER) == pytest.approx(2.0, abs=1e-12)
    assert chsh_direct(maximally_mixed(), 0.2, 0.3, LITERAL_PAPER) == 0


def test_chsh_direct_matches_bilinear_form(rng):
    for _ in range(30):
        st = random_state(rng)
        th, g = float(rng.uniform(0, QUARTER)), float(rng.uniform(0, 1))
        for mode in (SHARP_ZX, LITERAL_PAPER):
            assert chsh_direct(st, th, g, mode) == pytest.approx(bilinear_chsh(st, th, g, mode), abs=1e-12)


def test_chsh_direct_linear_in_state(rng):
    a, b = random_state(rng), random_state(rng)
    p = 0.3
    from netshare.qstate import TwoQubitState
    mix = TwoQubitState(p * a.rho + (1 - p) * b.rho)
    lhs = chsh_direct(mix, 0.4, 0.7)
    assert lhs == pytest.approx(p * chsh_direct(a, 0.4, 0.7) + (1 - p) * chsh_direct(b, 0.4, 0.7), abs=1e-10)


def test_chsh_closed_form_examples():
    th = 0.3
    assert chsh_closed_form(1, SharpnessSchedule(th, (0.4,)), 1, 1) == pytest.approx(2 * (0.4 * math.sin(th) + math.cos(th)))
    assert chsh_closed_form(4, SharpnessSchedule(th, (0, 0, 0, 0)), 1, 0.5) == pytest.approx(2 * math.cos(th))
    th = math.pi / 8
    expected = 0.5 * math.sin(th) + math.cos(th) * (1 + math.sqrt(0.75))
    assert chsh_closed_form(2, SharpnessSchedule(th, (0.5, 0.5)), 1, 1) == pytest.approx(expected, abs=1e-12)


def test_closed_form_disagrees_with_simulation():
    th = math.pi / 8
    sched = SharpnessSchedule(th, (0.5, 0.5))
    second = apply_schedule(phi_plus(), "A", SharpnessSchedule(th, (0.5,)))[1]
    direct = chsh_direct(second, th, 0.5)
    closed = chsh_closed_form(2, sched, 1, 1)
    # the recursion tracks a different measurement family; only the record matters
    assert abs(direct - closed) > 1e-3


def test_schedule_greedy_first_round_inversion():
    sched = schedule_greedy(phi_plus(), 0.1, 1, 0.01)
    expected = (1.005 - math.cos(0.1)) / math.sin(0.1)
    assert sched.gammas[0] == pytest.approx(expected, abs=1e-9)
    assert chsh_direct(phi_plus(), 0.1, sched.gammas[0]) >= 2.01


def test_schedule_greedy_values_hold_margin():
    sched = schedule_greedy(bell_mixture(0.9), 0.06, 2, 1e-3)
    states = apply_schedule(bell_mixture(0.9), "A", SharpnessSchedule(0.06, sched.gammas[:1]))
    for s, g in zip(states, sched.gammas):
        assert chsh_direct(s, 0.06, g) >= 2 + 1e-3
        assert chsh_direct(s, 0.06, max(g - 1e-8, 0)) < 2 + 1e-3 or g == 0


def test_schedule_greedy_infeasible():
    with pytest.raises(InfeasibleScheduleError) as exc:
        schedule_greedy(phi_plus(), QUARTER, 10, 1e-3)
    assert 1 <= exc.value.round_index <= 10
    assert len(exc.value.gammas) == exc.value.round_index - 1


def test_schedule_greedy_literal_mode_never_starts():
    with pytest.raises(InfeasibleScheduleError) as exc:
        schedule_greedy(phi_plus(), 0.3, 3, 1e-3, mode=LITERAL_PAPER)
    assert exc.value.round_index == 1


def test_schedule_greedy_rejects_zero_margin():
    with pytest.raises(NetShareError):
        schedule_greedy(phi_plus(), 0.1, 3, 0.0)
