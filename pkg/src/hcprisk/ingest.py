"""CSV readers for contact logs and exposure windows.

contacts: ``hcp_id,contact_id,compartment,start_time,duration_min,prob[,covariate...]``
windows:  ``person_id,admit_time,recovery_time``

Timestamps are ISO-8601.  Each contact row needs a ``prob`` or a full
set of covariate values.
"""

from __future__ import annotations

import csv
from datetime import datetime
from pathlib import Path
from typing import Iterable

from .errors import ConfigurationError, DomainError, InputParseError
from .individual import Compartment, ContactEvent, ContactSequence, ExposureWindow

CONTACT_COLUMNS = ["hcp_id", "contact_id", "compartment", "start_time", "duration_min", "prob"]
WINDOW_COLUMNS = ["person_id", "admit_time", "recovery_time"]


def parse_time(text: str, line: int | None = None) -> datetime:
    text = text.strip()
    if text.endswith("Z"):
        text = text[:-1] + "+00:00"
    try:
        return datetime.fromisoformat(text)
    except ValueError:
        raise InputParseError(f"not an ISO-8601 timestamp: {text!r}", line=line) from None


def _lines(source) -> Iterable[str]:
    if isinstance(source, (str, Path)):
        with open(source, newline="") as fh:
            return fh.readlines()
    return list(source)


def read_contacts(source, window=(None, None)) -> dict[str, ContactSequence]:
    """Parse a contacts CSV into one :class:`ContactSequence` per HCP.

    HCPs appear in order of first occurrence.  ``window`` is the
    ``(t1, t2)`` analysis window applied to every sequence.
    """
    reader = csv.reader(_lines(source))
    header = next(reader, None)
    if header is None:
        return {}
    header = [h.strip() for h in header]
    if header[: len(CONTACT_COLUMNS)] != CONTACT_COLUMNS:
        raise InputParseError(
            f"header must start with {','.join(CONTACT_COLUMNS)}", line=1
        )
    covariate_names = header[len(CONTACT_COLUMNS) :]
    events: dict[str, list[ContactEvent]] = {}
    for lineno, row in enumerate(reader, start=2):
        if not row or all(not c.strip() for c in row):
            continue
        if len(row) != len(header):
            raise InputParseError(f"expected {len(header)} fields, found {len(row)}", line=lineno)
        hcp, contact, comp, start, duration, prob = (c.strip() for c in row[:6])
        try:
            compartment = Compartment(comp)
        except ValueError:
            raise InputParseError(f"unknown compartment {comp!r}", line=lineno) from None
        try:
            duration_min = float(duration) if duration else 0.0
            p = float(prob) if prob else None
            covs = None
            raw = [c.strip() for c in row[6:]]
            if covariate_names and all(raw):
                covs = {n: float(v) for n, v in zip(covariate_names, raw)}
        except ValueError as exc:
            raise InputParseError(str(exc), line=lineno) from None
        try:
            event = ContactEvent(contact, compartment, parse_time(start, lineno), duration_min, p, covs)
        except ConfigurationError as exc:
            raise ConfigurationError(f"line {lineno}: {exc}") from None
        except DomainError as exc:
            raise InputParseError(str(exc), line=lineno) from None
        events.setdefault(hcp, []).append(event)
    return {h: ContactSequence(h, tuple(ev), window) for h, ev in events.items()}


def read_windows(source) -> dict[str, ExposureWindow]:
    reader = csv.reader(_lines(source))
    header = [h.strip() for h in next(reader, [])]
    if header != WINDOW_COLUMNS:
        raise InputParseError(f"header must be {','.join(WINDOW_COLUMNS)}", line=1)
    windows = {}
    for lineno, row in enumerate(reader, start=2):
        if not row or all(not c.strip() for c in row):
            continue
        if len(row) != 3:
            raise InputParseError(f"expected 3 fields, found {len(row)}", line=lineno)
        pid, admit, recovery = (c.strip() for c in row)
        a = parse_time(admit, lineno) if admit else None
        r = parse_time(recovery, lineno) if recovery else None
        try:
            windows[pid] = ExposureWindow(a, r)
        except DomainError as exc:
            raise InputParseError(str(exc), line=lineno) from None
    return windows
