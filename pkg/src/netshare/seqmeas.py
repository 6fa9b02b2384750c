"""Sequential two-outcome unsharp measurements and their CHSH values.

Observer k measures ``cos(theta) sigma_z +/- gamma_k sin(theta) sigma_x`` on
one qubit of a two-qubit state. The next observer receives the state averaged
over both inputs and both outcomes (the Lüders rule with square-root Kraus
operators), so the sequence is a chain of trace-preserving unital channels.
"""

from dataclasses import dataclass
import math

import numpy as np

from netshare.errors import InfeasibleScheduleError, NetShareError
from netshare.qstate import TwoQubitState
from netshare.tensor_core import I2, SX, SZ, kron, psd_sqrt

SHARP_ZX = "sharp-zx"
LITERAL_PAPER = "literal-paper"
MODES = (SHARP_ZX, LITERAL_PAPER)
SIDES = ("A", "B")

BISECT_TOL = 1e-10
BISECT_MAXITER = 200


@dataclass(frozen=True, eq=False)
class BinaryPovm:
    e0: np.ndarray
    e1: np.ndarray
    theta: float
    gamma: float
    input_sign: int

    @property
    def observable(self):
        return self.e0 - self.e1


@dataclass(frozen=True)
class SharpnessSchedule:
    """Common tilt angle and the ordered sharpness values of the sequential observers."""

    theta: float
    gammas: tuple = ()

    def __post_init__(self):
        _check_theta(self.theta, allow_zero=False)
        gammas = tuple(float(g) for g in self.gammas)
        for g in gammas:
            _check_gamma(g)
        object.__setattr__(self, "gammas", gammas)

    def __len__(self):
        return len(self.gammas)

    def to_json(self):
        return {"theta": self.theta, "gammas": list(self.gammas)}

    @classmethod
    def from_json(cls, data):
        return cls(float(data["theta"]), tuple(data.get("gammas", ())))


@dataclass(frozen=True)
class RoundReport:
    """One sequential round of a network driver.

    ``value`` is S_biloc (bound 2) or N_star (bound 1) computed from the
    closed-form maximum on the evolved spectra.
    """

    round_index: int
    gamma_used: float
    chsh_direct: float
    spectrum_after: tuple
    value: float
    bound: float
    violated: bool
    kind: str = "s_biloc"
    chsh_closed_form: float = None
    flags: tuple = ()
    branches: tuple = ()

    def to_json(self):
        row = {
            "round": self.round_index,
            "gamma": self.gamma_used,
            "chsh": self.chsh_direct,
            "spectrum": list(self.spectrum_after),
            self.kind: self.value,
            "bound": self.bound,
            "violated": self.violated,
            "flags": list(self.flags),
        }
        if self.chsh_closed_form is not None:
            row["chsh_closed_form"] = self.chsh_closed_form
        if self.branches:
            row["branches"] = [dict(b) for b in self.branches]
        return row


def _check_theta(theta, allow_zero=True):
    lo_ok = theta >= 0 if allow_zero else theta > 0
    if not (lo_ok and theta <= math.pi / 4 + 1e-12):
        raise NetShareError("bad-parameter", f"theta={theta} outside {'[' if allow_zero else '('}0, pi/4]")


def _check_gamma(gamma):
    if not 0 <= gamma <= 1:
        raise NetShareError("bad-parameter", f"sharpness gamma={gamma} outside [0, 1]")


def povm_pair(theta, gamma):
    """The two binary POVMs (inputs x=0 and x=1) of one sequential observer.

    theta = 0 is accepted as the sharp sigma_z limit.
    """
    _check_theta(theta)
    _check_gamma(gamma)
    out = []
    for sign in (+1, -1):
        obs = math.cos(theta) * SZ + sign * gamma * math.sin(theta) * SX
        e0 = (I2 + obs) / 2
        out.append(BinaryPovm(e0, I2 - e0, theta, gamma, sign))
    return tuple(out)


def fixed_party_observables(theta, mode=SHARP_ZX):
    """Expectation operators (B0, B1) of the party that never updates its state."""
    if mode == SHARP_ZX:
        return SZ.copy(), SX.copy()
    if mode == LITERAL_PAPER:
        return math.cos(theta) * SZ, math.sin(theta) * SX
    raise NetShareError("bad-parameter", f"unknown mode {mode!r}")


def _on_side(op, side):
    if side == "A":
        return kron(op, I2)
    if side == "B":
        return kron(I2, op)
    raise NetShareError("bad-parameter", f"side must be 'A' or 'B', got {side!r}")


def luders_round(state, side, theta, gamma):
    """State handed to the next observer: 1/2 sum_{a,x} sqrt(E_a|x) rho sqrt(E_a|x)."""
    rho = state.rho
    out = np.zeros((4, 4), dtype=complex)
    for povm in povm_pair(theta, gamma):
        for effect in (povm.e0, povm.e1):
            k = _on_side(psd_sqrt(effect), side)
            out += k @ rho @ k
    return TwoQubitState(out / 2, state.label)


def apply_schedule(state, side, schedule):
    """[rho^(1) = state, rho^(2), ...], one extra state per sharpness value."""
    states = [state]
    for g in schedule.gammas:
        states.append(luders_round(states[-1], side, schedule.theta, g))
    return states


def chsh_direct(state, theta, gamma, mode=SHARP_ZX, side="A"):
    """<(A0 + A1) x B0> + <(A0 - A1) x B1> with the sequential observer on ``side``."""
    p0, p1 = povm_pair(theta, gamma)
    a0, a1 = p0.observable, p1.observable
    b0, b1 = fixed_party_observables(theta, mode)
    if side == "A":
        op = kron(a0 + a1, b0) + kron(a0 - a1, b1)
    elif side == "B":
        op = kron(b0, a0 + a1) + kron(b1, a0 - a1)
    else:
        raise NetShareError("bad-parameter", f"side must be 'A' or 'B', got {side!r}")
    return float(np.trace(state.rho @ op).real)


def chsh_closed_form(n, schedule, delta1, delta2):
    """Recursion 2^(2-n) (g_n sqrt(d2) sin t + sqrt(d1) cos t prod_{j<n} (1 + sqrt(1 - g_j^2))).

    Literal transcription kept as a diagnostic; it does not agree with
    :func:`chsh_direct` on simulated states.
    """
    if n < 1 or len(schedule) < n:
        raise NetShareError("bad-parameter", f"need n >= 1 and at least n sharpness values, got n={n}")
    g = schedule.gammas
    t = schedule.theta
    prod = math.prod(1 + math.sqrt(1 - g[j] ** 2) for j in range(n - 1))
    return 2.0 ** (2 - n) * (g[n - 1] * math.sqrt(delta2) * math.sin(t) + math.sqrt(delta1) * math.cos(t) * prod)


def _smallest_gamma(fn, target):
    """Smallest gamma in [0, 1] with fn(gamma) >= target, or None.

    fn is affine and non-decreasing in gamma on the states used here, so
    bisection on the sign of fn - target converges.
    """
    if fn(0.0) >= target:
        return 0.0
    if fn(1.0) < target:
        return None
    lo, hi = 0.0, 1.0
    for _ in range(BISECT_MAXITER):
        if hi - lo <= BISECT_TOL:
            break
        mid = (lo + hi) / 2
        if fn(mid) >= target:
            hi = mid
        else:
            lo = mid
    return hi


def schedule_greedy(state, theta, n_rounds, margin, mode=SHARP_ZX, side="A"):
    """Pick each observer's sharpness as the smallest one giving CHSH >= 2 + margin.

    Raises :class:`InfeasibleScheduleError` at the first round where even a
    projective measurement falls short.
    """
    if not margin > 0:
        raise NetShareError("bad-parameter", f"margin must be positive, got {margin}")
    _check_theta(theta, allow_zero=False)
    gammas = []
    current = state
    for k in range(1, n_rounds + 1):
        g = _smallest_gamma(lambda x: chsh_direct(current, theta, x, mode, side), 2 + margin)
        if g is None:
            raise InfeasibleScheduleError(k, gammas)
        gammas.append(g)
        if k < n_rounds:
            current = luders_round(current, side, theta, g)
    return SharpnessSchedule(theta, tuple(gammas))
