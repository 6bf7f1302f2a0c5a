"""
Facility-level risk
===================

Four facility features each give an expected individual risk, computed
as a probability-weighted mixture over the feature's categories.  The
facility estimate is their average.
"""

from hcprisk.population import bundled_case_study, ppe_adjusted_expectation, run_case_study

for result in run_case_study(bundled_case_study()):
    terms = ", ".join(f"{k}={v:.5f}" for k, v in result.expectations.items())
    print(f"{result.name:<11} {result.risk:.5f}   ({terms})")

# %%
# Lower PPE sufficiency raises the PPE term in proportion to the
# shortfall.

for sufficiency in (0.95, 0.9355, 0.85, 0.744, 0.6):
    print(sufficiency, round(ppe_adjusted_expectation(0.0065, 0.9355, sufficiency), 5))
