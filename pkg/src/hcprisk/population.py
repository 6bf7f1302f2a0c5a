"""Facility-level risk from individual risks and control factors.

Two estimators live here:

* a logistic combiner ``1 / (1 + exp(-f / tau))`` of a linear form
  ``f = alpha . risks + sum_i w_i F_i + b``;
* the equal-weight estimator used for the two-state case study, which
  averages four mixture expectations ``E_X[PIR] = sum_x P(X=x) E[PIR|X=x]``.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import Mapping, Sequence

import numpy as np
from scipy.special import expit

from .errors import ConfigurationError, DistributionError, DomainError, InputParseError, SchemaError

CASE_STUDY_VARIABLES = ("SOH_time", "CS", "PPE_SL", "ORS")
MIXTURE_TOLERANCE = 0.02


@dataclass(frozen=True)
class AggregationModel:
    alpha: Sequence[float]
    weights: Mapping[str, float] = field(default_factory=dict)
    bias: float = 0.0
    tau: float = 1.0

    def __post_init__(self):
        if not self.tau > 0:
            raise DomainError(f"tau must be > 0, got {self.tau!r}")
        object.__setattr__(self, "alpha", tuple(float(a) for a in self.alpha))
        object.__setattr__(self, "weights", dict(self.weights))


def logistic_aggregate(
    individual_risks: Sequence[float],
    factors: Mapping[str, float],
    model: AggregationModel,
) -> float:
    risks = np.asarray(individual_risks, dtype=float).reshape(-1)
    if risks.shape[0] != len(model.alpha):
        raise SchemaError(f"{risks.shape[0]} individual risks for {len(model.alpha)} weights")
    if set(factors) != set(model.weights):
        raise SchemaError(
            f"control factors {sorted(factors)} do not match model weights {sorted(model.weights)}"
        )
    values = [float(v) for v in factors.values()]
    if not all(math.isfinite(v) for v in values):
        raise DomainError("control factor values must be finite")
    f = float(np.dot(model.alpha, risks))
    f += sum(model.weights[name] * float(v) for name, v in factors.items())
    f += model.bias
    return float(expit(f / model.tau))


@dataclass(frozen=True)
class MixtureBin:
    label: str
    p: float
    conditional_pir: float


@dataclass(frozen=True)
class FeatureMixture:
    variable: str
    bins: tuple[MixtureBin, ...]

    def __post_init__(self):
        bins = tuple(b if isinstance(b, MixtureBin) else MixtureBin(*b) for b in self.bins)
        object.__setattr__(self, "bins", bins)
        if not bins:
            raise DistributionError(f"{self.variable}: mixture has no bins")
        for b in bins:
            if not b.p >= 0:
                raise DistributionError(f"{self.variable}: bin {b.label!r} has p < 0")
            if not 0 <= b.conditional_pir <= 1:
                raise DomainError(
                    f"{self.variable}: bin {b.label!r} conditional risk not in [0, 1]"
                )

    @property
    def total_probability(self) -> float:
        return math.fsum(b.p for b in self.bins)


def mixture_expectation(
    mix: FeatureMixture, renormalize: bool = False, tolerance: float = MIXTURE_TOLERANCE
) -> float:
    """Probability-weighted sum of the bins' conditional risks.

    Bin probabilities must sum to 1 within ``tolerance`` unless
    ``renormalize`` is set, in which case they are rescaled to sum to 1.
    """
    total = mix.total_probability
    if renormalize:
        if total <= 0:
            raise DistributionError(f"{mix.variable}: bin probabilities sum to zero")
        scale = 1.0 / total
    else:
        if abs(total - 1.0) > tolerance:
            raise DistributionError(
                f"{mix.variable}: bin probabilities sum to {total:.6g}, "
                f"outside 1 +/- {tolerance}"
            )
        scale = 1.0
    return scale * math.fsum(b.p * b.conditional_pir for b in mix.bins)


def ppe_adjusted_expectation(
    reference_expectation: float,
    reference_sufficiency: float,
    target_sufficiency: float,
) -> float:
    """Rescale a PPE-attributed risk by the ratio of PPE insufficiency levels.

    Reverse-engineered calibration rule: risk is taken as proportional
    to ``1 - sufficiency``.
    """
    if reference_expectation < 0:
        raise DomainError("reference expectation must be >= 0")
    if reference_sufficiency == 1.0:
        raise ZeroDivisionError("reference PPE sufficiency of 1 leaves nothing to scale")
    for s in (reference_sufficiency, target_sufficiency):
        if not 0.0 <= s <= 1.0:
            raise DomainError(f"PPE sufficiency {s!r} not in [0, 1]")
    return reference_expectation * (1.0 - target_sufficiency) / (1.0 - reference_sufficiency)


def equal_weight_population_risk(expectations) -> float:
    """Average of the four feature expectations (SOH_time, CS, PPE_SL, ORS).

    Accepts a sequence of four numbers or a mapping keyed by those names.
    """
    if isinstance(expectations, Mapping):
        missing = [v for v in CASE_STUDY_VARIABLES if v not in expectations]
        if missing or len(expectations) != 4:
            raise SchemaError(
                f"expected exactly the variables {CASE_STUDY_VARIABLES}, "
                f"got {tuple(expectations)}"
            )
        values = [float(expectations[v]) for v in CASE_STUDY_VARIABLES]
    else:
        values = [float(v) for v in expectations]
        if len(values) != 4:
            raise SchemaError(f"expected exactly 4 expectations, got {len(values)}")
    for v in values:
        if not 0.0 <= v <= 1.0:
            raise DomainError(f"expectation {v!r} not in [0, 1]")
    return math.fsum(values) / 4.0


# -- case-study configuration ----------------------------------------------


@dataclass
class FacilityResult:
    name: str
    expectations: dict[str, float]
    risk: float


def _mixture_from_doc(variable: str, doc: Mapping) -> FeatureMixture:
    try:
        bins = [
            MixtureBin(str(b["label"]), float(b["p"]), float(b["conditional_pir"]))
            for b in doc["bins"]
        ]
    except (KeyError, TypeError, ValueError) as exc:
        raise InputParseError(f"{variable}: malformed mixture bins ({exc})") from None
    return FeatureMixture(variable, tuple(bins))


def variable_expectation(variable: str, spec: Mapping, renormalize: bool) -> float:
    """Evaluate one variable entry of a case-study config.

    Entries take one of three forms::

        {"expectation": 0.0173}
        {"bins": [{"label": ..., "p": ..., "conditional_pir": ...}, ...]}
        {"ppe_adjusted": {"reference_expectation": ..., "reference_sufficiency": ...,
                          "target_sufficiency": ...}}
    """
    if "expectation" in spec:
        value = float(spec["expectation"])
        if not 0.0 <= value <= 1.0:
            raise DomainError(f"{variable}: expectation {value!r} not in [0, 1]")
        return value
    if "bins" in spec:
        mix = _mixture_from_doc(variable, spec)
        # the tolerance applies even when rescaling; renormalizing only removes the residue
        if abs(mix.total_probability - 1.0) > MIXTURE_TOLERANCE:
            raise DistributionError(
                f"{variable}: bin probabilities sum to {mix.total_probability:.6g}, "
                f"outside 1 +/- {MIXTURE_TOLERANCE}"
            )
        return mixture_expectation(mix, renormalize=spec.get("renormalize", renormalize))
    if "ppe_adjusted" in spec:
        a = spec["ppe_adjusted"]
        try:
            return ppe_adjusted_expectation(
                float(a["reference_expectation"]),
                float(a["reference_sufficiency"]),
                float(a["target_sufficiency"]),
            )
        except KeyError as exc:
            raise ConfigurationError(f"{variable}: ppe_adjusted lacks {exc.args[0]!r}") from None
    raise ConfigurationError(
        f"{variable}: entry needs one of 'expectation', 'bins' or 'ppe_adjusted'"
    )


def run_case_study(config: Mapping) -> list[FacilityResult]:
    """Evaluate every facility in a case-study config.

    Variables listed under ``shared`` apply to every facility unless the
    facility overrides them.  ``renormalize`` (default true) rescales
    mixtures whose probabilities do not sum exactly to 1.
    """
    renormalize = bool(config.get("renormalize", True))
    shared = config.get("shared", {})
    facilities = config.get("facilities")
    if not isinstance(facilities, Mapping) or not facilities:
        raise ConfigurationError("case-study config lists no facilities")
    results = []
    for name, own in facilities.items():
        merged = {**shared, **own}
        missing = [v for v in CASE_STUDY_VARIABLES if v not in merged]
        if missing:
            raise ConfigurationError(f"{name}: missing variable(s) {', '.join(missing)}")
        unknown = [v for v in merged if v not in CASE_STUDY_VARIABLES]
        if unknown:
            raise ConfigurationError(f"{name}: unknown variable(s) {', '.join(unknown)}")
        exps = {v: variable_expectation(v, merged[v], renormalize) for v in CASE_STUDY_VARIABLES}
        results.append(FacilityResult(name, exps, equal_weight_population_risk(exps)))
    return results


def load_case_study(path: str | Path) -> dict:
    try:
        return json.loads(Path(path).read_text())
    except json.JSONDecodeError as exc:
        raise InputParseError(exc.msg, line=exc.lineno) from None


def bundled_case_study() -> dict:
    return json.loads((resources.files("hcprisk") / "data" / "case_study.json").read_text())
