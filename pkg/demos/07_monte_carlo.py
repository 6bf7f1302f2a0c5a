"""
Checking the formulas by simulation
===================================

Each bundled scenario is simulated a million times and the empirical
infection frequency is compared with the analytic value.
"""

import time

from hcprisk.montecarlo import SimulationConfig, bundled_scenarios, validate

start = time.perf_counter()
rows = validate(bundled_scenarios(), SimulationConfig(trials=10**6, seed=0, workers=4))
print(f"{'scenario':<22}{'analytic':>10}{'empirical':>11}{'z':>7}")
for r in rows:
    print(f"{r.scenario:<22}{r.analytic:10.5f}{r.empirical:11.5f}{r.z:7.2f}  {'ok' if r.passed else 'FAIL'}")
print(f"{time.perf_counter() - start:.1f} s")
