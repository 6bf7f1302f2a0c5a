"""
Occupation risk scores
======================

Each occupation gets a score from its contact, proximity and exposure
ratings scaled by weekly hours.  The top score maps to a per-contact
probability of 1 / phi; the rest scale proportionally.
"""

from hcprisk.occupational import bundled_profiles, occupation_case_study

for phi in (20, 10):
    print(f"phi = {phi}")
    for row in occupation_case_study(bundled_profiles(), n_contacts=5, phi=phi):
        print(f"  {row.name:<24} ors={row.ors:6.2f}  p={row.p_hat:.4f}  risk(5)={row.pir:.4f}")

# %%
# Risk grows with the number of contacts.

rn = occupation_case_study(bundled_profiles(), n_contacts=1)[0]
for n in (1, 5, 10, 20):
    row = occupation_case_study({rn.name: rn.ors}, n_contacts=n)[0]
    print(n, round(row.pir, 4))
