"""Individual-level infection risk from a sequence of close contacts.

A healthcare worker's contacts are treated as independent Bernoulli
transmission trials.  The risk over a time window is the probability
that the first successful transmission happens at some contact in the
window:

    PIR = sum_m [prod_{r<m} (1 - p_r)] * p_m  =  1 - prod_m (1 - p_m)

When per-contact probabilities vary in time the same quantity is
expressed through a piecewise-constant hazard; see :func:`hazard_risk`.

Timestamps may be ``datetime`` objects or plain numbers of minutes; the
two kinds must not be mixed within one call.
"""

from __future__ import annotations

import math
from collections import Counter
from dataclasses import dataclass, field, replace
from datetime import datetime, timedelta
from enum import Enum
from typing import Callable, Iterable, Mapping, Sequence

from .errors import ConfigurationError, DomainError


class Compartment(str, Enum):
    E = "E"
    IC = "IC"
    IS = "IS"
    HW = "HW"

    @classmethod
    def parse(cls, value: "str | Compartment") -> "Compartment":
        try:
            return cls(value)
        except ValueError:
            raise DomainError(
                f"unknown compartment {value!r}; expected one of E, IC, IS, HW"
            ) from None


def _add_minutes(t, minutes: float):
    if isinstance(t, datetime):
        return t + timedelta(minutes=minutes)
    return t + minutes


def _minutes_between(a, b) -> float:
    delta = b - a
    if isinstance(delta, timedelta):
        return delta.total_seconds() / 60.0
    return float(delta)


def check_probability(p: float, what: str = "probability") -> float:
    p = float(p)
    if not 0.0 <= p <= 1.0:  # also rejects NaN
        raise DomainError(f"{what} must lie in [0, 1], got {p!r}")
    return p


@dataclass(frozen=True)
class ContactEvent:
    """One close contact between an HCP and another person."""

    contact_person_id: str
    compartment: Compartment
    start_time: object
    duration: float = 0.0
    transmission_prob: float | None = None
    covariates: Mapping[str, float] | None = None

    def __post_init__(self):
        object.__setattr__(self, "compartment", Compartment.parse(self.compartment))
        if not self.duration >= 0:
            raise DomainError(f"duration must be >= 0 minutes, got {self.duration!r}")
        if self.transmission_prob is not None:
            check_probability(self.transmission_prob, "transmission_prob")
        elif self.covariates is None:
            raise ConfigurationError(
                f"contact with {self.contact_person_id!r} has neither a "
                "transmission probability nor covariates"
            )

    @property
    def end_time(self):
        return _add_minutes(self.start_time, self.duration)


@dataclass(frozen=True)
class ExposureWindow:
    """Admission-to-recovery interval during which a person can transmit.

    ``None`` on either side means unbounded.
    """

    admit_time: object = None
    recovery_time: object = None

    def __post_init__(self):
        if (
            self.admit_time is not None
            and self.recovery_time is not None
            and self.recovery_time < self.admit_time
        ):
            raise DomainError("exposure window has recovery_time before admit_time")


UNBOUNDED = ExposureWindow()


@dataclass(frozen=True)
class ContactSequence:
    hcp_id: str
    events: tuple[ContactEvent, ...] = ()
    window: tuple[object, object] = (None, None)

    def __post_init__(self):
        # sorted() is stable, so ties keep their input order
        events = tuple(sorted(self.events, key=lambda e: e.start_time))
        object.__setattr__(self, "events", events)
        t1, t2 = self.window
        if t1 is not None and t2 is not None and t2 < t1:
            raise DomainError("sequence window has t2 < t1")

    @property
    def counts(self) -> dict[Compartment, int]:
        """Number of contacts per compartment (N_E, N_IC, N_IS, N_HW)."""
        tally = Counter(e.compartment for e in self.events)
        return {c: tally.get(c, 0) for c in Compartment}


@dataclass(frozen=True)
class HazardSegment:
    rate: float
    length: float

    def __post_init__(self):
        if not self.rate >= 0:
            raise DomainError(f"hazard rate must be >= 0, got {self.rate!r}")
        if not self.length >= 0:
            raise DomainError(f"segment length must be >= 0, got {self.length!r}")


@dataclass(frozen=True)
class HazardContact:
    """A contact whose hazard is piecewise constant, starting at ``start`` minutes."""

    start: float
    segments: tuple[HazardSegment, ...] = field(default_factory=tuple)

    @property
    def length(self) -> float:
        return sum(s.length for s in self.segments)

    @property
    def cumulative_hazard(self) -> float:
        return sum(s.rate * s.length for s in self.segments)


def first_success_risk(probs: Iterable[float]) -> float:
    """Probability that at least one of a run of independent contacts transmits.

    Evaluates the first-success sum ``sum_m prod_{r<m}(1-p_r) p_m``.

    >>> round(first_success_risk([0.01, 0.05, 0.05]), 4)
    0.1065
    """
    ps = [check_probability(p) for p in probs]
    # the value is order-invariant; summing in sorted order makes it bitwise so
    ps.sort()
    total = 0.0
    survival = 1.0
    for p in ps:
        total += survival * p
        survival *= 1.0 - p
    return min(total, 1.0)


def geometric_risk(p: float, n: int) -> float:
    """First-success risk for ``n`` contacts sharing one probability ``p``."""
    p = check_probability(p)
    if n < 0:
        raise DomainError(f"number of contacts must be >= 0, got {n}")
    if n == 0 or p == 0.0:
        return 0.0
    if p == 1.0:
        return 1.0
    return -math.expm1(n * math.log1p(-p))


def clip_to_exposure_window(
    event: ContactEvent,
    window: ExposureWindow = UNBOUNDED,
    span: tuple[object, object] = (None, None),
) -> ContactEvent | None:
    """Restrict a contact to ``[max(t1, admit), min(t2, recovery)]``.

    Returns ``None`` when the contact does not overlap the allowed
    interval.  The transmission probability is kept as is; only the
    timing (start and duration) is trimmed.
    """
    t1, t2 = span
    lows = [t for t in (t1, window.admit_time) if t is not None]
    highs = [t for t in (t2, window.recovery_time) if t is not None]
    lo = max(lows) if lows else None
    hi = min(highs) if highs else None
    if lo is not None and hi is not None and hi < lo:
        return None

    start, end = event.start_time, event.end_time
    new_start = start if lo is None or start >= lo else lo
    new_end = end if hi is None or end <= hi else hi
    if new_end < new_start:
        return None
    if event.duration > 0 and new_end == new_start:
        # touches the boundary without any overlap
        return None
    if new_start == start and new_end == end:
        return event
    return replace(
        event, start_time=new_start, duration=_minutes_between(new_start, new_end)
    )


def _cumulative_hazard_at(contacts: Sequence[HazardContact], t: float) -> float:
    total = 0.0
    for c in contacts:
        a = c.start
        for seg in c.segments:
            b = a + seg.length
            if t > a:
                total += seg.rate * (min(t, b) - a)
            a = b
    return total


def hazard_risk(contacts: Sequence[HazardContact], t1: float, t2: float) -> float:
    """Probability that infection happens in ``[t1, t2]`` under a piecewise hazard.

    Hazards of overlapping contacts add.  The cumulative hazard
    ``H(t)`` is integrated exactly over the constant segments and the
    result is ``S(t1) - S(t2)`` with ``S(t) = exp(-H(t))``.
    """
    if t2 < t1:
        raise DomainError("window has t2 < t1")
    for c in contacts:
        for seg in c.segments:
            if not seg.rate >= 0:
                raise DomainError(f"hazard rate must be >= 0, got {seg.rate!r}")
    h1 = _cumulative_hazard_at(contacts, t1)
    h2 = _cumulative_hazard_at(contacts, t2)
    # S(t1) - S(t2) = S(t1) * (1 - exp(-(H2 - H1)))
    return math.exp(-h1) * -math.expm1(-(h2 - h1))


def hazard_risk_upper_bound(contacts: Sequence[HazardContact]) -> float:
    """Sum of per-contact transmission probabilities ``1 - exp(-H_m)``.

    Bounds :func:`hazard_risk` from above (union bound); it is not a
    probability in general and can exceed 1.
    """
    return sum(-math.expm1(-c.cumulative_hazard) for c in contacts)


def sequential_contacts(
    segment_lists: Iterable[Sequence[HazardSegment]], start: float = 0.0, gap: float = 0.0
) -> list[HazardContact]:
    """Lay contacts end to end on the time axis, ``gap`` minutes apart."""
    out = []
    t = start
    for segs in segment_lists:
        c = HazardContact(start=t, segments=tuple(segs))
        out.append(c)
        t += c.length + gap
    return out


def resolve_probability(
    event: ContactEvent, model: Callable[[Mapping[str, float]], float] | None = None
) -> float:
    if event.transmission_prob is not None:
        return event.transmission_prob
    if event.covariates is None:
        raise ConfigurationError(
            f"contact with {event.contact_person_id!r} has no probability source"
        )
    if model is None:
        raise ConfigurationError(
            f"contact with {event.contact_person_id!r} needs a transmission model "
            "to turn its covariates into a probability"
        )
    return check_probability(model(event.covariates))


def individual_risk(
    seq: ContactSequence,
    model=None,
    windows: Mapping[str, ExposureWindow] | None = None,
) -> float:
    """Risk of infection for one HCP over ``seq.window``.

    Parameters
    ----------
    seq : ContactSequence
    model : LogisticModel or callable, optional
        Used for events that carry covariates instead of an explicit
        probability.  A :class:`~hcprisk.transmission.LogisticModel` is
        accepted directly.
    windows : mapping of contact person id to ExposureWindow, optional
        Persons without an entry are treated as always infectious.
    """
    windows = windows or {}
    predict = model
    if model is not None and not callable(model):
        from .transmission import predict_probability

        predict = lambda z: predict_probability(model, z)  # noqa: E731

    probs = []
    for event in seq.events:
        clipped = clip_to_exposure_window(
            event, windows.get(event.contact_person_id, UNBOUNDED), seq.window
        )
        if clipped is None:
            continue
        probs.append(resolve_probability(clipped, predict))
    return first_success_risk(probs)
