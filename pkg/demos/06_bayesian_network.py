"""
Facility risk from a Bayesian network
=====================================

The demo network links facility controls and exposure to an infection
outcome.  Its probability tables are illustrative.  Inference is exact.
"""

from hcprisk.bayesnet import demo_network, infer_posterior, population_risk_posterior

net = demo_network()
print("nodes:", ", ".join(net.topological_order()))
print("prior infection risk:", round(population_risk_posterior(net), 4))

# %%
# Conditioning on poor ventilation and on a worker's individual risk.

print("poor ventilation:", round(population_risk_posterior(net, {"Ventilation": "poor"}), 4))
for risk in (0.05, 0.3, 0.6, 0.9):
    print(f"individual risk {risk}:", round(population_risk_posterior(net, individual_risk=risk), 4))

# %%
# The posterior of any node given evidence on others.

print(infer_posterior(net, "Ventilation", {"Infection": "yes"}))
