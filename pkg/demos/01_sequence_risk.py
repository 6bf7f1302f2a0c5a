"""
Risk along a contact sequence
=============================

A healthcare worker meets three patients in turn.  Each meeting carries
its own chance of transmission, and infection happens at the first
successful one.
"""

import itertools

from hcprisk.individual import (
    ContactEvent,
    ContactSequence,
    ExposureWindow,
    HazardSegment,
    first_success_risk,
    hazard_risk,
    individual_risk,
    sequential_contacts,
)

probs = [0.01, 0.05, 0.05]
print("risk over the sequence:", round(first_success_risk(probs), 4))

# order does not matter
for perm in itertools.permutations(probs):
    print(perm, first_success_risk(perm))

# %%
# Contacts with a patient are only counted while that patient is
# infectious.  Here the third patient recovered ten minutes into the visit.
# A shortened contact keeps its per-contact probability; a contact that
# falls entirely outside the window drops out.

seq = ContactSequence(
    "hcp-1",
    (
        ContactEvent("p1", "IC", 0.0, 15.0, 0.01),
        ContactEvent("p2", "IC", 60.0, 15.0, 0.05),
        ContactEvent("p3", "IS", 120.0, 20.0, 0.05),
    ),
)
windows = {"p3": ExposureWindow(admit_time=0.0, recovery_time=130.0)}
print("with exposure windows:", individual_risk(seq, windows=windows))
windows = {"p3": ExposureWindow(admit_time=0.0, recovery_time=100.0)}
print("third patient recovered before the visit:", individual_risk(seq, windows=windows))

# %%
# The same risk from a time-varying hazard.  A constant rate
# -log(1 - p) / tau over a contact of length tau gives back p.

import math

segments = [[HazardSegment(-math.log1p(-p) / 15.0, 15.0)] for p in probs]
contacts = sequential_contacts(segments, gap=45.0)
print("hazard form:", hazard_risk(contacts, 0.0, 200.0))
