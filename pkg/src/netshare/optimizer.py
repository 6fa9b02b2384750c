"""Numerical maximization of CHSH, S_biloc and N_star over measurement settings.

These searches are the independent check on every closed-form maximum, so
they never use singular values. CHSH is solved by alternating exact best
responses. The network functionals are searched with Nelder-Mead over
spherical angles of every observable's Bloch vector, with central
observables restricted to products of single-qubit observables.
"""

from dataclasses import dataclass, field
import math

import numpy as np
from scipy.optimize import minimize

from netshare.errors import NetShareError
from netshare.netcalc import (
    MAX_DIRECT_BRANCHES,
    BilocSettings,
    StarSettings,
    biloc_value_direct,
    star_value_direct,
)
from netshare.tensor_core import SX, SY, SZ, bloch_operator, kron

DEFAULT_SEED = 0xB10C

CHSH_RESTARTS = 20
CHSH_TOL = 1e-10
CHSH_MAX_SWEEPS = 10_000

NM_RESTARTS = 8
NM_OPTIONS = {"xatol": 1e-8, "fatol": 1e-11, "maxiter": 40_000, "maxfev": 40_000, "adaptive": True}


@dataclass
class SettingsParam:
    """Named groups of unit Bloch vectors, e.g. ``{"a": [a0, a1], "b": [b0, b1]}``."""

    vectors: dict

    def to_json(self):
        return {k: np.asarray(v, dtype=float).tolist() for k, v in self.vectors.items()}


@dataclass
class OptimResult:
    best_value: float
    best_settings: SettingsParam
    iterations: int
    converged: bool
    restart_values: list = field(default_factory=list, repr=False)

    def to_json(self):
        return {
            "best_value": self.best_value,
            "best_settings": self.best_settings.to_json(),
            "iterations": self.iterations,
            "converged": self.converged,
        }


def _restart_rng(seed, restart):
    # one stream per restart so results do not depend on execution order
    return np.random.default_rng([int(seed), int(restart)])


def random_unit_vectors(rng, count):
    v = rng.standard_normal((count, 3))
    return v / np.linalg.norm(v, axis=1, keepdims=True)


def angles_to_vectors(angles):
    """Rows (sin t cos p, sin t sin p, cos t) from a flat array of (t, p) pairs."""
    a = np.asarray(angles, dtype=float).reshape(-1, 2)
    t, p = a[:, 0], a[:, 1]
    st = np.sin(t)
    return np.stack([st * np.cos(p), st * np.sin(p), np.cos(t)], axis=1)


def vectors_to_angles(vectors):
    v = np.asarray(vectors, dtype=float).reshape(-1, 3)
    return np.stack([np.arccos(np.clip(v[:, 2], -1, 1)), np.arctan2(v[:, 1], v[:, 0])], axis=1).ravel()


def _correlation_matrix(state):
    # direct traces with no spectral decomposition
    paulis = (SX, SY, SZ)
    return np.array([[np.trace(state.rho @ kron(p, q)).real for q in paulis] for p in paulis])


def _normalized(v, fallback):
    n = np.linalg.norm(v)
    return v / n if n > 1e-15 else fallback


def chsh_value(state, a0, a1, b0, b1):
    """<(A0 + A1) B0> + <(A0 - A1) B1> by direct trace."""
    A0, A1, B0, B1 = (bloch_operator(v) for v in (a0, a1, b0, b1))
    op = kron(A0 + A1, B0) + kron(A0 - A1, B1)
    return float(np.trace(state.rho @ op).real)


def seesaw_chsh(T, a0, a1, b0, b1, tol=CHSH_TOL, max_sweeps=CHSH_MAX_SWEEPS, trace=None):
    """Alternate exact best responses from a starting point; returns (value, vectors, sweeps, converged).

    ``trace``, if a list, receives the objective after every half-step.
    """

    def value(a0, a1, b0, b1):
        return float((a0 + a1) @ T @ b0 + (a0 - a1) @ T @ b1)

    current = value(a0, a1, b0, b1)
    for sweep in range(1, max_sweeps + 1):
        b0 = _normalized(T.T @ (a0 + a1), b0)
        b1 = _normalized(T.T @ (a0 - a1), b1)
        if trace is not None:
            trace.append(value(a0, a1, b0, b1))
        a0 = _normalized(T @ (b0 + b1), a0)
        a1 = _normalized(T @ (b0 - b1), a1)
        new = value(a0, a1, b0, b1)
        if trace is not None:
            trace.append(new)
        if abs(new - current) < tol:
            return new, (a0, a1, b0, b1), sweep, True
        current = new
    return current, (a0, a1, b0, b1), max_sweeps, False


def maximize_chsh(state, restarts=CHSH_RESTARTS, seed=DEFAULT_SEED):
    T = _correlation_matrix(state)
    best = None
    values = []
    total_sweeps = 0
    converged = True
    for r in range(restarts):
        start = random_unit_vectors(_restart_rng(seed, r), 4)
        val, vecs, sweeps, ok = seesaw_chsh(T, *start)
        values.append(val)
        total_sweeps += sweeps
        converged = converged and ok
        if best is None or val > best[0]:
            best = (val, vecs)
    vecs = best[1]
    value = chsh_value(state, *vecs)
    settings = SettingsParam({"a": list(vecs[:2]), "b": list(vecs[2:])})
    return OptimResult(value, settings, total_sweeps, converged, values)


def _vec(t, p):
    st = math.sin(t)
    return (st * math.cos(p), st * math.sin(p), math.cos(t))


def _bilinear(u, T, v):
    # u^T T v on tuples; the optimizers call this millions of times
    return (
        u[0] * (T[0][0] * v[0] + T[0][1] * v[1] + T[0][2] * v[2])
        + u[1] * (T[1][0] * v[0] + T[1][1] * v[1] + T[1][2] * v[2])
        + u[2] * (T[2][0] * v[0] + T[2][1] * v[1] + T[2][2] * v[2])
    )


def _sum(u, v, sign):
    return (u[0] + sign * v[0], u[1] + sign * v[1], u[2] + sign * v[2])


def _nelder_mead(objective, n_vectors, restarts, seed):
    """Maximize ``objective`` over angle vectors; returns best (value, x) and bookkeeping.

    Each restart starts from uniformly random unit vectors; the best run is
    polished by one more Nelder-Mead pass.
    """
    def loss(x):
        return -objective(x)

    best = None
    values = []
    iterations = 0
    for r in range(restarts):
        x0 = vectors_to_angles(random_unit_vectors(_restart_rng(seed, r), n_vectors))
        res = minimize(loss, x0, method="Nelder-Mead", options=NM_OPTIONS)
        iterations += res.nit
        values.append(-res.fun)
        if best is None or res.fun < best.fun:
            best = res
    polish = minimize(loss, best.x, method="Nelder-Mead", options=NM_OPTIONS)
    iterations += polish.nit
    final = polish if polish.fun <= best.fun else best
    return (-final.fun, final.x), values, iterations, bool(polish.success)


def maximize_biloc(rho_ab, rho_bc, restarts=NM_RESTARTS, seed=DEFAULT_SEED):
    """Search over A0, A1, C0, C1 and product central observables B_y = u_y.sigma x w_y.sigma."""
    t_ab = _correlation_matrix(rho_ab).tolist()
    t_bc = _correlation_matrix(rho_bc).tolist()

    def objective(x):
        a0, a1, c0, c1, u0, w0, u1, w1 = [_vec(x[2 * k], x[2 * k + 1]) for k in range(8)]
        i = _bilinear(_sum(a0, a1, 1), t_ab, u0) * _bilinear(w0, t_bc, _sum(c0, c1, 1))
        j = _bilinear(_sum(a0, a1, -1), t_ab, u1) * _bilinear(w1, t_bc, _sum(c0, c1, -1))
        return math.sqrt(abs(i)) + math.sqrt(abs(j))

    (_, x), values, iterations, converged = _nelder_mead(objective, 8, restarts, seed)
    a0, a1, c0, c1, u0, w0, u1, w1 = angles_to_vectors(x)
    settings = BilocSettings.from_vectors((a0, a1), ((u0, w0), (u1, w1)), (c0, c1))
    value = biloc_value_direct(rho_ab, rho_bc, settings).value
    param = SettingsParam({"a": [a0, a1], "b0": [u0, w0], "b1": [u1, w1], "c": [c0, c1]})
    return OptimResult(value, param, iterations, converged, values)


def maximize_star(states, n=None, restarts=NM_RESTARTS, seed=DEFAULT_SEED):
    """Search over two observables per branch and product central observables.

    Vector layout: 2n outer vectors (branch-major), then n vectors of B0, then n of B1.
    """
    n = len(states) if n is None else n
    if n > MAX_DIRECT_BRANCHES:
        raise NetShareError("branch-limit-exceeded", f"direct evaluation supports n <= {MAX_DIRECT_BRANCHES}, got {n}")
    if n < 2 or len(states) != n:
        raise NetShareError("too-few-branches", f"star network needs n >= 2 branches, got {n}")
    ts = [_correlation_matrix(st).tolist() for st in states]
    scale = 2.0**-n

    def objective(x):
        v = [_vec(x[2 * k], x[2 * k + 1]) for k in range(4 * n)]
        i = j = scale
        for b, t in enumerate(ts):
            a0, a1 = v[2 * b], v[2 * b + 1]
            i *= _bilinear(_sum(a0, a1, 1), t, v[2 * n + b])
            j *= _bilinear(_sum(a0, a1, -1), t, v[3 * n + b])
        return abs(i) ** (1 / n) + abs(j) ** (1 / n)

    (_, x), values, iterations, converged = _nelder_mead(objective, 4 * n, restarts, seed)
    v = angles_to_vectors(x)
    outer, bob0, bob1 = v[: 2 * n].reshape(n, 2, 3), v[2 * n : 3 * n], v[3 * n :]
    settings = StarSettings.from_vectors([tuple(p) for p in outer], (list(bob0), list(bob1)))
    value = star_value_direct(states, settings).value
    param = SettingsParam({"outer": outer.reshape(-1, 3), "b0": bob0, "b1": bob1})
    return OptimResult(value, param, iterations, converged, values)
