"""
Transmission probability from personal covariates
=================================================

A logistic model maps a worker's covariates to a transmission
probability.  The bundled reference model carries published
coefficients; a synthetic data set shows fitting and cross-validation.
"""

import json
from importlib import resources

import numpy as np

from hcprisk.transmission import (
    fit_logistic,
    k_fold_cv,
    load_dataset,
    model_from_dict,
    predict_probability,
    reference_model,
)

ref = reference_model()
baseline = {name: 0.0 for name in ref.schema}
print("all covariates zero:", round(predict_probability(ref, baseline), 4))
print("contact without PPE:", round(predict_probability(ref, {**baseline, "cont_wo_PPE": 1}), 4))

# %%
# Fit on the bundled synthetic data and compare with its generator.

data_dir = resources.files("hcprisk") / "data"
data = load_dataset(data_dir / "synthetic_uk_like.csv")
gen = model_from_dict(json.loads((data_dir / "synthetic_generator.json").read_text()))
model, diag = fit_logistic(data)
print(f"converged in {diag.iterations} Newton steps, log-likelihood {diag.log_likelihood:.2f}")
for name, est, se, true in zip(("intercept",) + model.schema, model.params, diag.std_errors, gen.params):
    print(f"  {name:<12} {est:+.4f} (se {se:.4f})   generator {true:+.4f}")

print("10-fold accuracy:", round(k_fold_cv(data, k=10), 4))
