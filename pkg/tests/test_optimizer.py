import math

import numpy as np
import pytest

from netshare.errors import NetShareError
from netshare.netcalc import biloc_bounds, biloc_max, star_max, star_norm_bound
from netshare.optimizer import (
    _correlation_matrix, angles_to_vectors, chsh_value, maximize_biloc, maximize_chsh, maximize_star,
    random_unit_vectors, seesaw_chsh, vectors_to_angles,
)
from netshare.qstate import (
    TwoQubitState, bell_mixture, chsh_horodecki_max, maximally_mixed, phi_plus, pure_schmidt, random_state,
)
from netshare.tensor_core import bloch_operator, kron

S2 = math.sqrt(2)


def test_angle_round_trip(rng):
    v = random_unit_vectors(rng, 10)
    assert np.allclose(angles_to_vectors(vectors_to_angles(v)), v)
    assert np.allclose(np.linalg.norm(angles_to_vectors(rng.standard_normal(20)), axis=1), 1, atol=1e-12)


def test_chsh_examples():
    r = maximize_chsh(phi_plus())
    assert r.best_value == pytest.approx(2 * S2, abs=1e-6) and r.converged
    assert maximize_chsh(maximally_mixed()).best_value == pytest.approx(0, abs=1e-12)


def test_chsh_matches_horodecki(rng):
    for _ in range(50):
        st = random_state(rng)
        r = maximize_chsh(st)
        assert abs(r.best_value - chsh_horodecki_max(st)) <= 1e-5
        a, b = r.best_settings.vectors["a"], r.best_settings.vectors["b"]
        assert np.allclose(np.linalg.norm(np.vstack([a, b]), axis=1), 1, atol=1e-9)
        assert chsh_value(st, *a, *b) == pytest.approx(r.best_value)


def test_seesaw_steps_never_decrease(rng):
    for _ in range(20):
        T = _correlation_matrix(random_state(rng))
        trace = []
        seesaw_chsh(T, *random_unit_vectors(rng, 4), trace=trace)
        assert all(b >= a - 1e-12 for a, b in zip(trace, trace[1:]))


def test_chsh_violation_iff_horodecki(rng):
    for _ in range(50):
        st = random_state(rng, rank=int(rng.integers(1, 3)))
        assert (chsh_horodecki_max(st) > 2) == (maximize_chsh(st).best_value > 2 + 1e-6) or \
            abs(chsh_horodecki_max(st) - 2) < 1e-6


def test_biloc_maximally_entangled():
    r = maximize_biloc(phi_plus(), phi_plus())
    assert r.best_value == pytest.approx(2 * S2, abs=1e-4)


def test_biloc_beats_closed_form_for_unequal_spectra():
    st = pure_schmidt(math.pi / 8)
    r = maximize_biloc(st, phi_plus())
    closed = 2 * math.sqrt(1 + math.sin(math.pi / 4))
    assert biloc_max(st, phi_plus()) == pytest.approx(closed)
    # product settings reach 2 sqrt(|delta| |eta|) = 2 sqrt(sqrt(2) sqrt(1.5))
    geo = 2 * math.sqrt(S2 * math.sqrt(1.5))
    assert r.best_value == pytest.approx(geo, abs=1e-6)
    assert r.best_value > closed + 0.01


def test_biloc_separable_pair():
    a = TwoQubitState(kron((np.eye(2) + bloch_operator([0, 0, 0.8])) / 2, np.eye(2) / 2))
    b = TwoQubitState(np.diag([0.5, 0, 0, 0.5]))
    assert maximize_biloc(a, b).best_value <= 2 + 1e-6


def test_biloc_equal_sources_attain_closed_form(rng):
    for _ in range(5):
        st = random_state(rng)
        r = maximize_biloc(st, st)
        assert abs(r.best_value - biloc_max(st, st)) <= 1e-3
        assert r.best_value <= biloc_max(st, st) + 1e-4


def test_biloc_attains_norm_bound(rng):
    hits = 0
    for _ in range(10):
        a, b = random_state(rng), random_state(rng)
        geo = biloc_bounds(a, b)[1]
        val = maximize_biloc(a, b).best_value
        assert val <= geo + 1e-4
        hits += abs(val - geo) <= 1e-3
    assert hits >= 10


def test_star_examples():
    assert maximize_star([phi_plus()] * 2).best_value == pytest.approx(S2, abs=1e-4)
    assert maximize_star([phi_plus()] * 3).best_value == pytest.approx(S2, abs=1e-3)
    assert maximize_star([phi_plus(), maximally_mixed(), bell_mixture(0.9)]).best_value == pytest.approx(0, abs=1e-6)


def test_star_never_exceeds_norm_bound(rng):
    for n in (2, 3):
        states = [random_state(rng) for _ in range(n)]
        r = maximize_star(states)
        assert r.best_value <= star_norm_bound(states) + 1e-4
        assert r.best_value == pytest.approx(star_norm_bound(states), abs=1e-3)
        assert star_max(states) <= star_norm_bound(states) + 1e-12


def test_star_equal_branches_attain_closed_form():
    states = [bell_mixture(0.85)] * 3
    assert maximize_star(states).best_value == pytest.approx(star_max(states), abs=1e-3)


def test_star_branch_limit():
    with pytest.raises(NetShareError) as exc:
        maximize_star([phi_plus()] * 5)
    assert exc.value.code == "branch-limit-exceeded"


def test_results_deterministic_and_serializable():
    import json
    a = maximize_biloc(pure_schmidt(0.4), bell_mixture(0.8), restarts=3, seed=11)
    b = maximize_biloc(pure_schmidt(0.4), bell_mixture(0.8), restarts=3, seed=11)
    assert a.best_value == b.best_value
    data = json.loads(json.dumps(a.to_json()))
    assert set(data["best_settings"]) == {"a", "b0", "b1", "c"}
