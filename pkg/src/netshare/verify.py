"""Seeded oracle-equivalence suites behind ``netshare verify``."""

from dataclasses import dataclass, field
import math

import numpy as np

from netshare import netcalc, optimizer, seqmeas
from netshare.qstate import chsh_horodecki_max, random_state

SUITES = ("horodecki", "biloc-max", "star-max", "channel")


@dataclass
class PropertyResult:
    name: str
    tol: float
    passed: int = 0
    total: int = 0
    first_failure: dict = None

    def record(self, ok, instance):
        self.total += 1
        if ok:
            self.passed += 1
        elif self.first_failure is None:
            self.first_failure = instance

    @property
    def ok(self):
        return self.passed == self.total

    def line(self):
        return f"{self.name}: {self.passed}/{self.total} within {self.tol:g}"


@dataclass
class SuiteResult:
    suite: str
    properties: list = field(default_factory=list)

    @property
    def ok(self):
        return all(p.ok for p in self.properties)

    @property
    def first_failure(self):
        for p in self.properties:
            if p.first_failure is not None:
                return {"property": p.name, **p.first_failure}
        return None


def _states_json(*states):
    return {"states": [st.to_json() for st in states]}


def horodecki(rng, count=50, seed=optimizer.DEFAULT_SEED):
    prop = PropertyResult("seesaw CHSH vs 2 sqrt(d1^2 + d2^2)", 1e-5)
    for _ in range(count):
        st = random_state(rng)
        best = optimizer.maximize_chsh(st, seed=seed).best_value
        ref = chsh_horodecki_max(st)
        prop.record(abs(best - ref) <= prop.tol, {**_states_json(st), "optimizer": best, "closed_form": ref})
    return [prop]


def biloc_max(rng, count=10, seed=optimizer.DEFAULT_SEED):
    chain = PropertyResult("bound chain s_max <= geo <= chsh", 1e-10)
    below = PropertyResult("optimizer <= closed form", 1e-4)
    attained = PropertyResult("optimizer attains closed form", 1e-3)
    for _ in range(count):
        a, b = random_state(rng), random_state(rng)
        s_max, geo, chsh = netcalc.biloc_bounds(a, b)
        chain.record(s_max <= geo + 1e-10 and geo <= chsh + 1e-10, _states_json(a, b))
        best = optimizer.maximize_biloc(a, b, seed=seed).best_value
        info = {**_states_json(a, b), "optimizer": best, "closed_form": s_max, "geo_bound": geo}
        below.record(best <= s_max + below.tol, info)
        attained.record(abs(best - s_max) <= attained.tol, info)
    return [chain, below, attained]


def star_max(rng, count=4, seed=optimizer.DEFAULT_SEED, branches=(2, 3)):
    halves = PropertyResult("n=2 star_max = biloc_max / 2", 1e-10)
    below = PropertyResult("optimizer <= closed form", 1e-4)
    attained = PropertyResult("optimizer attains closed form", 1e-3)
    for _ in range(count):
        a, b = random_state(rng), random_state(rng)
        halves.record(abs(netcalc.star_max([a, b]) - netcalc.biloc_max(a, b) / 2) <= halves.tol, _states_json(a, b))
        for n in branches:
            states = [random_state(rng) for _ in range(n)]
            best = optimizer.maximize_star(states, seed=seed).best_value
            ref = netcalc.star_max(states)
            info = {**_states_json(*states), "optimizer": best, "closed_form": ref}
            below.record(best <= ref + below.tol, info)
            attained.record(abs(best - ref) <= attained.tol, info)
    return [halves, below, attained]


def channel(rng, count=100):
    trace = PropertyResult("trace preserved", 1e-10)
    positive = PropertyResult("positivity", 1e-9)
    spectrum = PropertyResult("correlation spectrum non-increasing", 1e-9)
    for _ in range(count):
        st = random_state(rng)
        theta = float(rng.uniform(1e-3, math.pi / 4))
        gamma = float(rng.uniform(0, 1))
        side = "A" if rng.random() < 0.5 else "B"
        out = seqmeas.luders_round(st, side, theta, gamma)
        info = {**_states_json(st), "theta": theta, "gamma": gamma, "side": side}
        trace.record(abs(np.trace(out.rho).real - 1) <= 1e-10, info)
        positive.record(np.linalg.eigvalsh(out.rho)[0] >= -1e-9, info)
        spectrum.record(bool(np.all(out.spectrum <= st.spectrum + 1e-9)), info)
    return [trace, positive, spectrum]


def run_suite(name, seed=optimizer.DEFAULT_SEED):
    rng = np.random.default_rng(seed)
    if name == "horodecki":
        props = horodecki(rng, seed=seed)
    elif name == "biloc-max":
        props = biloc_max(rng, seed=seed)
    elif name == "star-max":
        props = star_max(rng, seed=seed)
    elif name == "channel":
        props = channel(rng)
    else:
        raise ValueError(f"unknown suite {name!r}; choose from {', '.join(SUITES)}")
    return SuiteResult(name, props)
