"""Bilocality and star-network functionals and the sequential-measurement drivers.

Direct evaluation contracts explicit observables against the joint source
state. The closed forms give the maxima over outer-party observables and
product central observables, in terms of the correlation spectra of the
sources. The ``run_*`` drivers evolve sources under greedy sharpness
schedules and judge each round with the closed forms.
"""

from dataclasses import dataclass
import math

import numpy as np

from netshare.errors import InfeasibleScheduleError, NetShareError
from netshare.qstate import phi_plus
from netshare.seqmeas import (
    SHARP_ZX,
    RoundReport,
    SharpnessSchedule,
    apply_schedule,
    chsh_closed_form,
    chsh_direct,
    schedule_greedy,
)
from netshare.tensor_core import bloch_operator, eig_hermitian, kron, permute_factors

VIOLATION_TOL = 1e-9
OBS_TOL = 1e-9
MAX_DIRECT_BRANCHES = 4

BILOC_BOUND = 2.0
STAR_BOUND = 1.0

INCONCLUSIVE = "inconclusive-by-paper"
INFEASIBLE = "infeasible"
BASELINE = "baseline"


def _check_observable(m, dim):
    m = np.asarray(m, dtype=complex)
    if m.shape != (dim, dim):
        raise NetShareError("bad-factorization", f"observable of shape {m.shape}, expected {(dim, dim)}")
    w, _ = eig_hermitian(m)
    if w[0] > 1 + OBS_TOL or w[-1] < -1 - OBS_TOL:
        raise NetShareError("bad-parameter", f"observable spectrum [{w[-1]:.6g}, {w[0]:.6g}] outside [-1, 1]")
    return m


@dataclass(frozen=True, eq=False)
class BilocSettings:
    """(A0, A1) on Alice's qubit, (B0, B1) on Bob's two qubits, (C0, C1) on Charlie's."""

    a_obs: tuple
    b_obs: tuple
    c_obs: tuple

    def __post_init__(self):
        object.__setattr__(self, "a_obs", tuple(_check_observable(m, 2) for m in self.a_obs))
        object.__setattr__(self, "b_obs", tuple(_check_observable(m, 4) for m in self.b_obs))
        object.__setattr__(self, "c_obs", tuple(_check_observable(m, 2) for m in self.c_obs))

    @classmethod
    def from_vectors(cls, a, b, c):
        """Observables n.sigma from unit vectors: ``a`` and ``c`` hold two vectors,
        ``b`` holds two (left, right) pairs for the product central observables."""
        a_obs = tuple(bloch_operator(v) for v in a)
        c_obs = tuple(bloch_operator(v) for v in c)
        b_obs = tuple(kron(bloch_operator(u), bloch_operator(w)) for u, w in b)
        return cls(a_obs, b_obs, c_obs)


@dataclass(frozen=True, eq=False)
class StarSettings:
    """Two observables per outer branch and two 2^n x 2^n central observables."""

    branch_obs: tuple
    bob_obs: tuple

    def __post_init__(self):
        branch = tuple(tuple(_check_observable(m, 2) for m in pair) for pair in self.branch_obs)
        n = len(branch)
        object.__setattr__(self, "branch_obs", branch)
        object.__setattr__(self, "bob_obs", tuple(_check_observable(m, 2**n) for m in self.bob_obs))

    @classmethod
    def from_vectors(cls, branch, bob):
        """``branch[i]`` is a pair of unit vectors; ``bob[y]`` lists n unit vectors."""
        branch_obs = tuple(tuple(bloch_operator(v) for v in pair) for pair in branch)
        bob_obs = tuple(kron(*[bloch_operator(v) for v in vecs]) for vecs in bob)
        return cls(branch_obs, bob_obs)

    @classmethod
    def from_biloc(cls, s):
        """Two-branch settings equivalent to ``s``; pair them with ``[rho_ab, swap_qubits(rho_bc)]``."""
        return cls((s.a_obs, s.c_obs), s.b_obs)


@dataclass(frozen=True)
class NetworkValue:
    i_term: float
    j_term: float
    value: float
    bound: float
    violated: bool

    def to_json(self):
        return {"i": self.i_term, "j": self.j_term, "value": self.value, "bound": self.bound, "violated": self.violated}


def _network_value(i, j, root, bound):
    value = abs(i) ** (1 / root) + abs(j) ** (1 / root)
    return NetworkValue(float(i), float(j), float(value), bound, bool(value > bound + VIOLATION_TOL))


def biloc_value_direct(rho_ab, rho_bc, s):
    """S_biloc = sqrt|I| + sqrt|J| on rho_AB x rho_BC (factors A, B1, B2, C)."""
    joint = kron(rho_ab.rho, rho_bc.rho)
    (a0, a1), (b0, b1), (c0, c1) = s.a_obs, s.b_obs, s.c_obs
    i = np.trace(joint @ kron(a0 + a1, b0, c0 + c1)).real
    j = np.trace(joint @ kron(a0 - a1, b1, c0 - c1)).real
    return _network_value(i, j, 2, BILOC_BOUND)


def biloc_max(rho_ab, rho_bc):
    d, e = rho_ab.spectrum, rho_bc.spectrum
    return 2 * math.sqrt(d[0] * e[0] + d[1] * e[1])


def biloc_bounds(rho_ab, rho_bc):
    """(S_biloc max, 2 sqrt(|delta| |eta|), sqrt(S_AB max S_BC max)), which are non-decreasing."""
    d, e = rho_ab.spectrum[:2], rho_bc.spectrum[:2]
    s_max = biloc_max(rho_ab, rho_bc)
    nd, ne = math.hypot(*d), math.hypot(*e)
    geo = 2 * math.sqrt(nd * ne)
    chsh = math.sqrt((2 * nd) * (2 * ne))
    assert s_max <= geo + 1e-10 and geo <= chsh + 1e-10, (s_max, geo, chsh)
    return s_max, geo, chsh


def star_max(states, n=None):
    """sqrt((prod t1)^(1/n) + (prod t2)^(1/n)), t_k the squared singular values per branch."""
    n = len(states) if n is None else n
    if n < 2 or len(states) != n:
        raise NetShareError("too-few-branches", f"star network needs n >= 2 branches, got {n}")
    t1 = [st.spectrum[0] ** 2 for st in states]
    t2 = [st.spectrum[1] ** 2 for st in states]
    return math.sqrt(math.prod(t1) ** (1 / n) + math.prod(t2) ** (1 / n))


def star_norm_bound(states):
    """(prod_i |delta^(i)|)^(1/n) with |delta| the norm of the two largest singular values.

    Upper bound on N_star over outer observables and product central
    observables (Cauchy-Schwarz on the orthogonal pairs A0 +/- A1), attained by
    rotating each pair 45 degrees inside its top singular plane. It coincides
    with :func:`star_max` when all branch spectra are proportional, and for
    n = 2 equals half the middle term of :func:`biloc_bounds`.
    """
    n = len(states)
    if n < 2:
        raise NetShareError("too-few-branches", f"star network needs n >= 2 branches, got {n}")
    return math.prod(math.hypot(*st.spectrum[:2]) for st in states) ** (1 / n)


def star_joint_state(states):
    """Tensor product of the branch states with factors reordered to (A1..An, B1..Bn)."""
    n = len(states)
    joint = kron(*[st.rho for st in states])
    perm = [2 * i for i in range(n)] + [2 * i + 1 for i in range(n)]
    return permute_factors(joint, perm, [2] * (2 * n))


def star_value_direct(states, s):
    n = len(states)
    if n > MAX_DIRECT_BRANCHES:
        raise NetShareError("branch-limit-exceeded", f"direct evaluation supports n <= {MAX_DIRECT_BRANCHES}, got {n}")
    if n < 2:
        raise NetShareError("too-few-branches", f"star network needs n >= 2 branches, got {n}")
    if len(s.branch_obs) != n:
        raise NetShareError("bad-factorization", f"{len(s.branch_obs)} branch settings for {n} branches")
    joint = star_joint_state(states)
    # summing over inputs factorizes: sum_x prod_i A^i_{x_i} = prod_i (A^i_0 + A^i_1)
    plus = kron(*[a0 + a1 for a0, a1 in s.branch_obs], s.bob_obs[0])
    minus = kron(*[a0 - a1 for a0, a1 in s.branch_obs], s.bob_obs[1])
    scale = 2.0**-n
    i = scale * np.trace(joint @ plus).real
    j = scale * np.trace(joint @ minus).real
    return _network_value(i, j, n, STAR_BOUND)


# drivers


def _report(round_index, state, gamma, theta, mode, value, bound, kind, closed=None, flags=(), branches=()):
    """RoundReport for the observer holding ``state``; ``gamma=None`` means no measurement was made."""
    return RoundReport(
        round_index=round_index,
        gamma_used=gamma,
        chsh_direct=None if gamma is None else chsh_direct(state, theta, gamma, mode),
        spectrum_after=tuple(float(x) for x in state.spectrum),
        value=float(value),
        bound=bound,
        violated=bool(value > bound + VIOLATION_TOL),
        kind=kind,
        chsh_closed_form=closed,
        flags=tuple(flags),
        branches=tuple(branches),
    )


def _evolve(state, theta, n_rounds, margin, mode, side="A"):
    """Greedy sharpness values and the states seen by observers 1..n.

    If scheduling fails at observer k, the list holds k states and k-1 gammas
    and the error is returned instead of raised.
    """
    try:
        schedule = schedule_greedy(state, theta, n_rounds, margin, mode, side)
        gammas, error = list(schedule.gammas), None
    except InfeasibleScheduleError as exc:
        gammas, error = list(exc.gammas), exc
    n_states = len(gammas) + 1 if error else len(gammas)
    states = apply_schedule(state, side, SharpnessSchedule(theta, tuple(gammas[: n_states - 1])))
    return gammas, states, error


def _gamma_at(gammas, k):
    return gammas[k - 1] if 1 <= k <= len(gammas) else None


def _raise_with(error, reports):
    error.reports = reports
    raise error


def run_unilateral_biloc(state, theta, n_max, margin, mode=SHARP_ZX, rho_bc=None):
    """Alice_1..Alice_n measure one after another on rho_AB; rho_BC (default Phi+) is untouched.

    Round k reports the closed-form S_biloc maximum of rho_AB^(k) with rho_BC,
    Alice_k's sharpness and direct CHSH value, and the closed-form recursion
    value next to it. ``n_max = 0`` gives one baseline report.
    """
    rho_bc = phi_plus() if rho_bc is None else rho_bc
    if n_max <= 0:
        return [_report(0, state, None, theta, mode, biloc_max(state, rho_bc), BILOC_BOUND, "s_biloc", flags=(BASELINE,))]
    gammas, states, error = _evolve(state, theta, n_max, margin, mode)
    d1, d2 = state.spectrum[:2]
    reports = []
    for k, st in enumerate(states, start=1):
        gamma = _gamma_at(gammas, k)
        value = biloc_max(st, rho_bc)
        if gamma is None:
            rep = _report(k, st, None, theta, mode, value, BILOC_BOUND, "s_biloc", flags=(INFEASIBLE,))
        else:
            closed = chsh_closed_form(k, SharpnessSchedule(theta, tuple(gammas[:k])), d1, d2)
            rep = _report(k, st, gamma, theta, mode, value, BILOC_BOUND, "s_biloc", closed)
        reports.append(rep)
    if error:
        _raise_with(error, reports)
    return reports


def run_bilateral_biloc(state, theta, n_max, margin, m_max=None, mode=SHARP_ZX, rho_bc=None):
    """Alice measures n_max times on rho_AB and Charlie m_max times on rho_BC.

    Defaults: ``m_max = n_max`` and ``rho_bc = state``. Both use the greedy
    schedule of rho_AB, Charlie acting on the second factor of rho_BC. Round r
    pairs Alice_min(r,n) with Charlie_min(r,m); unequal pairs are flagged as
    inconclusive.
    """
    m_max = n_max if m_max is None else m_max
    rho_bc = state if rho_bc is None else rho_bc
    total = max(n_max, m_max)
    if total <= 0:
        return [_report(0, state, None, theta, mode, biloc_max(state, rho_bc), BILOC_BOUND, "s_biloc", flags=(BASELINE,))]
    gammas, a_states, error = _evolve(state, theta, total, margin, mode)
    c_states = apply_schedule(rho_bc, "B", SharpnessSchedule(theta, tuple(gammas[: len(a_states) - 1])))
    reports = []
    for r in range(1, len(a_states) + 1):
        k, l = min(r, max(n_max, 1)), min(r, max(m_max, 1))
        st_a, st_c = a_states[k - 1], c_states[l - 1]
        flags = [INCONCLUSIVE] if min(r, n_max) != min(r, m_max) else []
        gamma = _gamma_at(gammas, k) if n_max > 0 else None
        if error and r == len(a_states):
            flags.append(INFEASIBLE)
            gamma = None
        value = biloc_max(st_a, st_c)
        reports.append(_report(r, st_a, gamma, theta, mode, value, BILOC_BOUND, "s_biloc", flags=flags))
    if error:
        _raise_with(error, reports)
    return reports


def run_star(states, theta, rounds_per_branch, margin, mode=SHARP_ZX):
    """Outer party A_i measures its branch rounds_per_branch[i] times (0 = unmeasured).

    Each measured branch gets its own greedy schedule. Round r uses, on every
    branch, the state seen by observer min(r, rounds_i) and reports N_star
    from the closed form. The report's gamma/CHSH/spectrum are those of the
    first measured branch; all measured branches are listed in ``branches``.
    """
    n = len(states)
    if n < 2:
        raise NetShareError("too-few-branches", f"star network needs n >= 2 branches, got {n}")
    rounds = [int(m) for m in rounds_per_branch]
    if len(rounds) != n:
        raise NetShareError("bad-parameter", f"{len(rounds)} round counts for {n} branches")
    total = max(rounds)
    if total <= 0:
        return [_report(0, states[0], None, theta, mode, star_max(states), STAR_BOUND, "n_star", flags=(BASELINE,))]
    runs, error = [], None
    for st, m in zip(states, rounds):
        if m <= 0:
            runs.append(None)
            continue
        gammas, seq, err = _evolve(st, theta, m, margin, mode)
        runs.append((gammas, seq))
        error = error or err
    reports = []
    for r in range(1, total + 1):
        evolved, details, stalled = [], [], False
        for i, (st, run) in enumerate(zip(states, runs)):
            if run is None:
                evolved.append(st)
                continue
            gammas, seq = run
            k = min(r, len(seq))
            gamma = _gamma_at(gammas, k)
            stalled = stalled or gamma is None
            evolved.append(seq[k - 1])
            details.append({
                "branch": i,
                "observer": k,
                "gamma": gamma,
                "chsh": None if gamma is None else chsh_direct(seq[k - 1], theta, gamma, mode),
                "spectrum": [float(x) for x in seq[k - 1].spectrum],
            })
        lead = details[0]
        st = evolved[lead["branch"]]
        gamma = None if stalled else lead["gamma"]
        flags = (INFEASIBLE,) if stalled else ()
        reports.append(_report(r, st, gamma, theta, mode, star_max(evolved), STAR_BOUND, "n_star",
                               flags=flags, branches=tuple(tuple(d.items()) for d in details)))
        if stalled:
            break
    if error:
        _raise_with(error, reports)
    return reports
