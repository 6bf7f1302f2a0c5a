"""Occupation-specific risk scores and the derived per-contact probabilities.

The score averages three 0-100 work-context ratings (contact with
others, physical proximity, exposure to infection) and weights the
average by weekly hours relative to the longest-working occupation.
The per-contact transmission probability is the score relative to the
highest score, divided by a scaling parameter ``phi``.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from importlib import resources
from pathlib import Path
from typing import Iterable, Mapping, Sequence

from .errors import DomainError, InputParseError
from .individual import geometric_risk

DEFAULT_PHI = 20.0


@dataclass(frozen=True)
class OccupationProfile:
    name: str
    co: float
    pp: float
    ei: float
    hours_per_week: float

    def __post_init__(self):
        for field_name in ("co", "pp", "ei"):
            v = getattr(self, field_name)
            if not 0.0 <= v <= 100.0:
                raise DomainError(f"{self.name}: {field_name} score {v!r} not in [0, 100]")
        if not self.hours_per_week > 0:
            raise DomainError(f"{self.name}: hours_per_week must be > 0")

    @property
    def mean_score(self) -> float:
        return (self.co + self.pp + self.ei) / 3.0


@dataclass(frozen=True)
class OccupationRisk:
    name: str
    ors: float
    p_hat: float
    pir: float


def ors_scores(profiles: Sequence[OccupationProfile]) -> dict[str, float]:
    if not profiles:
        raise DomainError("at least one occupation profile is required")
    max_hours = max(p.hours_per_week for p in profiles)
    return {p.name: p.mean_score * p.hours_per_week / max_hours for p in profiles}


def transmission_prob_from_ors(
    scores: Mapping[str, float], phi: float = DEFAULT_PHI
) -> dict[str, float]:
    """Map scores to per-contact probabilities ``ors / (phi * max ors)``."""
    if not scores:
        raise DomainError("no scores given")
    if not phi >= 1.0:
        raise DomainError(f"phi must be >= 1 so that probabilities stay <= 1, got {phi!r}")
    for name, s in scores.items():
        if not s > 0:
            raise DomainError(f"{name}: score must be > 0, got {s!r}")
    top = max(scores.values())
    return {name: s / (phi * top) for name, s in scores.items()}


def occupation_case_study(
    occupations: Sequence[OccupationProfile] | Mapping[str, float],
    n_contacts: int = 5,
    phi: float = DEFAULT_PHI,
) -> list[OccupationRisk]:
    """Score, probability and ``n_contacts``-contact risk for each occupation.

    ``occupations`` is either a list of profiles or a precomputed
    ``{name: score}`` mapping.  Rows keep the input order.
    """
    if isinstance(occupations, Mapping):
        scores = dict(occupations)
    else:
        scores = ors_scores(list(occupations))
    probs = transmission_prob_from_ors(scores, phi)
    return [
        OccupationRisk(name, scores[name], probs[name], geometric_risk(probs[name], n_contacts))
        for name in scores
    ]


def read_occupations(path_or_lines: str | Path | Iterable[str]):
    """Read an occupations CSV.

    Two layouts are accepted: full profiles
    (``name,co,pp,ei,hours_per_week``) giving a list of
    :class:`OccupationProfile`, or precomputed scores (``name,ors``)
    giving a ``{name: score}`` dict.
    """
    if isinstance(path_or_lines, (str, Path)):
        with open(path_or_lines, newline="") as fh:
            return read_occupations(fh.readlines())
    kept = [(i, line) for i, line in enumerate(path_or_lines, start=1) if not line.startswith("#")]
    physical = [i for i, _ in kept]
    reader = csv.DictReader(line for _, line in kept)
    fields = [f.strip() for f in (reader.fieldnames or [])]
    reader.fieldnames = fields
    profile_cols = ["name", "co", "pp", "ei", "hours_per_week"]
    if fields[:2] == ["name", "ors"]:
        scores: dict[str, float] = {}
        for row in reader:
            lineno = physical[reader.line_num - 1]
            try:
                scores[row["name"].strip()] = float(row["ors"])
            except (TypeError, ValueError) as exc:
                raise InputParseError(f"bad ors value: {exc}", line=lineno) from None
        return scores
    if fields != profile_cols:
        raise InputParseError(
            f"expected header {','.join(profile_cols)} or name,ors; got {','.join(fields)}",
            line=physical[0] if physical else 1,
        )
    profiles = []
    for row in reader:
        lineno = physical[reader.line_num - 1]
        try:
            profiles.append(
                OccupationProfile(
                    row["name"].strip(),
                    float(row["co"]),
                    float(row["pp"]),
                    float(row["ei"]),
                    float(row["hours_per_week"]),
                )
            )
        except (TypeError, ValueError) as exc:
            if isinstance(exc, DomainError):
                raise
            raise InputParseError(str(exc), line=lineno) from None
    return profiles


def bundled_profiles() -> list[OccupationProfile]:
    """Six healthcare occupations whose scores reproduce the published ORS column.

    The individual CO/PP/EI ratings are reverse-engineered, not O*Net data.
    """
    text = (resources.files("hcprisk") / "data" / "occupations.csv").read_text()
    return read_occupations(text.splitlines(keepends=True))
