"""Stochastic validation of the analytic risk formulas.

Random streams come from numpy's Philox counter-based generator.  A run
of ``trials`` is cut into fixed-size partitions; partition ``i`` draws
from ``Philox(SeedSequence([seed, i]))``.  Results therefore depend on
``(seed, trials)`` only, never on how many workers process the
partitions.
"""

from __future__ import annotations

import json
import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from importlib import resources
from typing import Callable, Sequence

import numpy as np

from .errors import ConfigurationError, DomainError
from .individual import (
    HazardContact,
    HazardSegment,
    check_probability,
    first_success_risk,
    hazard_risk,
)

log = logging.getLogger(__name__)

PARTITION_SIZE = 1 << 16


@dataclass(frozen=True)
class SimulationConfig:
    trials: int = 10**6
    seed: int = 0
    workers: int = 1

    def __post_init__(self):
        if self.trials < 1:
            raise DomainError("trials must be >= 1")
        if not 0 <= self.seed < 2**64:
            raise DomainError("seed must be a 64-bit unsigned value")


@dataclass(frozen=True)
class SimulationResult:
    risk: float
    standard_error: float
    successes: int
    trials: int


def partition_rng(seed: int, index: int) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(np.random.SeedSequence([seed, index])))


def _run(config: SimulationConfig, count_hits: Callable[[np.random.Generator, int], int]):
    sizes = [PARTITION_SIZE] * (config.trials // PARTITION_SIZE)
    if config.trials % PARTITION_SIZE:
        sizes.append(config.trials % PARTITION_SIZE)

    def job(i):
        return count_hits(partition_rng(config.seed, i), sizes[i])

    if config.workers > 1:
        with ThreadPoolExecutor(config.workers) as pool:
            counts = list(pool.map(job, range(len(sizes))))
    else:
        counts = [job(i) for i in range(len(sizes))]
    hits = int(sum(counts))
    r = hits / config.trials
    return SimulationResult(r, math.sqrt(r * (1.0 - r) / config.trials), hits, config.trials)


def simulate_first_success(
    probs: Sequence[float], config: SimulationConfig = SimulationConfig()
) -> SimulationResult:
    """Fraction of trials in which at least one Bernoulli(p_m) contact transmits."""
    p = np.array([check_probability(x) for x in probs], dtype=float)

    def count(rng, size):
        if p.size == 0:
            return 0
        draws = rng.random((size, p.size)) < p
        return int(np.count_nonzero(draws.any(axis=1)))

    return _run(config, count)


def _hazard_timeline(contacts: Sequence[HazardContact]):
    """Breakpoints, cumulative hazard at each, and total rate after each."""
    pieces = []
    for c in contacts:
        t = c.start
        for seg in c.segments:
            if not seg.rate >= 0:
                raise DomainError(f"hazard rate must be >= 0, got {seg.rate!r}")
            if seg.length > 0:
                pieces.append((t, t + seg.length, seg.rate))
            t += seg.length
    if not pieces:
        return np.zeros(1), np.zeros(1), np.zeros(1)
    times = np.unique([x for a, b, _ in pieces for x in (a, b)])
    rates = np.zeros(times.size)
    for a, b, rate in pieces:
        lo, hi = np.searchsorted(times, [a, b])
        rates[lo:hi] += rate
    cum = np.concatenate([[0.0], np.cumsum(rates[:-1] * np.diff(times))])
    return times, cum, rates


def simulate_hazard(
    contacts: Sequence[HazardContact],
    t1: float,
    t2: float,
    config: SimulationConfig = SimulationConfig(),
) -> SimulationResult:
    """Fraction of sampled infection times that fall in ``[t1, t2]``.

    Infection times are drawn by inverting the cumulative hazard at a
    unit-exponential draw; a draw beyond the total hazard means no
    infection at all.
    """
    if t2 < t1:
        raise DomainError("window has t2 < t1")
    times, cum, rates = _hazard_timeline(contacts)

    def count(rng, size):
        e = rng.standard_exponential(size)
        k = np.searchsorted(cum, e, side="left")
        t = np.full(size, np.inf)
        inside = (k > 0) & (k < cum.size)
        j = k[inside] - 1
        t[inside] = times[j] + (e[inside] - cum[j]) / rates[j]
        t[k == 0] = times[0]
        return int(np.count_nonzero((t >= t1) & (t <= t2)))

    return _run(config, count)


# -- bundled validation scenarios ---------------------------------------------


@dataclass(frozen=True)
class Scenario:
    name: str
    kind: str  # "binomial" or "hazard"
    probs: tuple[float, ...] = ()
    contacts: tuple[HazardContact, ...] = ()
    window: tuple[float, float] = (0.0, 0.0)

    def analytic(self) -> float:
        if self.kind == "binomial":
            return first_success_risk(self.probs)
        return hazard_risk(self.contacts, *self.window)

    def simulate(self, config: SimulationConfig) -> SimulationResult:
        if self.kind == "binomial":
            return simulate_first_success(self.probs, config)
        return simulate_hazard(self.contacts, *self.window, config)


def scenario_from_dict(doc) -> Scenario:
    kind = doc.get("kind")
    if kind == "binomial":
        return Scenario(doc["name"], kind, probs=tuple(float(p) for p in doc["probs"]))
    if kind == "hazard":
        contacts = tuple(
            HazardContact(
                float(c["start"]),
                tuple(HazardSegment(float(r), float(ln)) for r, ln in c["segments"]),
            )
            for c in doc["contacts"]
        )
        return Scenario(doc["name"], kind, contacts=contacts, window=tuple(doc["window"]))
    raise ConfigurationError(f"scenario {doc.get('name')!r}: unknown kind {kind!r}")


def bundled_scenarios() -> list[Scenario]:
    docs = json.loads((resources.files("hcprisk") / "data" / "mc_scenarios.json").read_text())
    return [scenario_from_dict(d) for d in docs["scenarios"]]


@dataclass
class ValidationRow:
    scenario: str
    analytic: float
    empirical: float
    z: float
    passed: bool
    seeds: list[int] = field(default_factory=list)


def _z_score(analytic: float, result: SimulationResult) -> float:
    # binomial spread around the analytic value; degenerate at 0 and 1
    sigma = math.sqrt(analytic * (1.0 - analytic) / result.trials)
    diff = result.risk - analytic
    if sigma == 0.0:
        return 0.0 if diff == 0.0 else math.inf
    return diff / sigma


def validate(
    scenarios: Sequence[Scenario],
    config: SimulationConfig = SimulationConfig(),
    z_limit: float = 3.0,
    retry_limit: float = 4.0,
) -> list[ValidationRow]:
    """Compare each scenario's analytic risk with its simulated frequency.

    A scenario passes when ``|z| <= z_limit``.  Otherwise it is rerun
    once with the next seed and passes if ``|z| <= retry_limit``; both
    seeds are recorded.
    """
    rows = []
    for sc in scenarios:
        exact = sc.analytic()
        res = sc.simulate(config)
        z = _z_score(exact, res)
        row = ValidationRow(sc.name, exact, res.risk, z, abs(z) <= z_limit, [config.seed])
        if not row.passed:
            retry = SimulationConfig(config.trials, (config.seed + 1) % 2**64, config.workers)
            res2 = sc.simulate(retry)
            z2 = _z_score(exact, res2)
            log.warning(
                "scenario %s: |z|=%.2f with seed %d, retried with seed %d: |z|=%.2f",
                sc.name, abs(z), config.seed, retry.seed, abs(z2),
            )
            row = ValidationRow(
                sc.name, exact, res2.risk, z2, abs(z2) <= retry_limit, [config.seed, retry.seed]
            )
        rows.append(row)
    return rows
