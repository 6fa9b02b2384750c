"""Two-qubit states, their Bloch form and the Horodecki CHSH maximum."""

from dataclasses import dataclass
from functools import cached_property
import math

import numpy as np

from netshare.errors import NetShareError
from netshare.tensor_core import I2, PAULIS, eig_hermitian, kron, svd_real3

STATE_TOL = 1e-10
POSITIVITY_TOL = 1e-9


@dataclass(frozen=True, eq=False)
class BlochForm:
    """Local Bloch vectors ``r`` (first qubit), ``s`` (second) and correlation matrix ``T``."""

    r: np.ndarray
    s: np.ndarray
    T: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "r", np.asarray(self.r, dtype=float).reshape(3))
        object.__setattr__(self, "s", np.asarray(self.s, dtype=float).reshape(3))
        object.__setattr__(self, "T", np.asarray(self.T, dtype=float).reshape(3, 3))


@dataclass(frozen=True, eq=False)
class TwoQubitState:
    """Validated 4x4 density matrix with a lazily computed Bloch form."""

    rho: np.ndarray
    label: str = ""

    def __post_init__(self):
        rho = np.asarray(self.rho, dtype=complex)
        if rho.shape != (4, 4):
            raise NetShareError("not-a-state", f"expected 4x4 matrix, got {rho.shape}")
        if np.max(np.abs(rho - rho.conj().T)) > STATE_TOL:
            raise NetShareError("not-a-state", "matrix is not Hermitian")
        if abs(np.trace(rho) - 1) > STATE_TOL:
            raise NetShareError("not-a-state", f"trace {np.trace(rho).real:.12g} != 1")
        rho = (rho + rho.conj().T) / 2
        w, _ = eig_hermitian(rho)
        if w[-1] < -POSITIVITY_TOL:
            raise NetShareError("not-a-state", f"eigenvalue {w[-1]:.3e} is negative")
        rho.setflags(write=False)
        object.__setattr__(self, "rho", rho)

    @cached_property
    def bloch(self):
        return bloch_decompose(self)

    @cached_property
    def spectrum(self):
        return svd_real3(self.bloch.T)

    def to_json(self):
        return {
            "label": self.label,
            "dim": 4,
            "re": self.rho.real.ravel().tolist(),
            "im": self.rho.imag.ravel().tolist(),
        }

    @classmethod
    def from_json(cls, data):
        dim = int(data.get("dim", 4))
        if dim != 4 or len(data["re"]) != 16 or len(data["im"]) != 16:
            raise NetShareError("not-a-state", "expected 16 real and 16 imaginary entries")
        rho = (np.asarray(data["re"], dtype=float) + 1j * np.asarray(data["im"], dtype=float)).reshape(4, 4)
        return cls(rho, data.get("label", ""))


def pure_schmidt(alpha):
    """cos(alpha)|00> + sin(alpha)|11>, with alpha in (0, pi/4]."""
    if not 0 < alpha <= math.pi / 4 + 1e-15:
        raise NetShareError("bad-schmidt-angle", f"alpha={alpha} outside (0, pi/4]")
    psi = np.zeros(4, dtype=complex)
    psi[0] = math.cos(alpha)
    psi[3] = math.sin(alpha)
    return TwoQubitState(np.outer(psi, psi.conj()), f"pure(alpha={alpha:.6g})")


def phi_plus():
    return TwoQubitState(pure_schmidt(math.pi / 4).rho, "phi+")


def bell_mixture(p):
    """p |Phi+><Phi+| + (1-p) |Phi-><Phi-|."""
    if not 0 <= p <= 1:
        raise NetShareError("bad-parameter", f"mixture weight p={p} outside [0, 1]")
    s = 1 / math.sqrt(2)
    plus = np.array([s, 0, 0, s], dtype=complex)
    minus = np.array([s, 0, 0, -s], dtype=complex)
    rho = p * np.outer(plus, plus) + (1 - p) * np.outer(minus, minus)
    return TwoQubitState(rho, f"bell-mixture(p={p:.6g})")


def maximally_mixed():
    return TwoQubitState(np.eye(4, dtype=complex) / 4, "maximally-mixed")


def random_state(rng, rank=4):
    """Random density matrix G G^dag / tr, G a complex Gaussian 4 x rank matrix."""
    g = rng.standard_normal((4, rank)) + 1j * rng.standard_normal((4, rank))
    rho = g @ g.conj().T
    return TwoQubitState(rho / np.trace(rho).real, "random")


def bloch_decompose(state):
    rho = state.rho if isinstance(state, TwoQubitState) else np.asarray(state)
    r = [np.trace(rho @ kron(p, I2)).real for p in PAULIS]
    s = [np.trace(rho @ kron(I2, p)).real for p in PAULIS]
    T = [[np.trace(rho @ kron(pi, pj)).real for pj in PAULIS] for pi in PAULIS]
    return BlochForm(r, s, T)


def bloch_matrix(b):
    """Assemble 1/4 (I + r.sigma x I + I x s.sigma + sum T_ij sigma_i x sigma_j) without validation."""
    rho = kron(I2, I2).astype(complex)
    for i, p in enumerate(PAULIS):
        rho = rho + b.r[i] * kron(p, I2) + b.s[i] * kron(I2, p)
        for j, q in enumerate(PAULIS):
            rho = rho + b.T[i, j] * kron(p, q)
    return rho / 4


def bloch_reconstruct(b, label=""):
    return TwoQubitState(bloch_matrix(b), label)


def correlation_spectrum(state):
    """Singular values (delta1, delta2, delta3) of the correlation matrix, descending."""
    return state.spectrum


def chsh_horodecki_max(state):
    d = state.spectrum
    return 2 * math.sqrt(d[0] ** 2 + d[1] ** 2)


def apply_local_unitaries(state, u, v):
    w = kron(u, v)
    return TwoQubitState(w @ state.rho @ w.conj().T, state.label)


def swap_qubits(state):
    """Exchange the two tensor factors (a Bob-Charlie source seen as a Charlie-Bob branch)."""
    rho = np.asarray(state.rho).reshape(2, 2, 2, 2).transpose(1, 0, 3, 2).reshape(4, 4)
    return TwoQubitState(rho, state.label)
