"""Logistic model of per-contact transmission probability.

``logit p = b0 + sum_i beta_i z_i``, fitted by maximum likelihood with
Newton / IRLS steps, plus AIC and k-fold cross-validated accuracy.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import Mapping, Sequence

import numpy as np
from scipy.special import expit

from .errors import (
    ConfigurationError,
    ConvergenceError,
    DomainError,
    FoldError,
    InputParseError,
    SchemaError,
    SeparationError,
)

MODEL_FORMAT_VERSION = 1

REFERENCE_SCHEMA = (
    "Age", "Cancer", "Resp", "Obes", "Smoker", "Doctor", "Allied_prof",
    "Dental_staff", "Pub_trans", "C_contact", "AGP", "PPE_train",
    "Lacked_PPE", "cont_wo_PPE", "Imp_PPE",
)  # fmt: skip


@dataclass(frozen=True, eq=False)
class LogisticModel:
    schema: tuple[str, ...]
    intercept: float
    coefficients: np.ndarray

    def __post_init__(self):
        schema = tuple(self.schema)
        if len(set(schema)) != len(schema):
            raise SchemaError(f"duplicate covariate names in schema {schema}")
        coef = np.asarray(self.coefficients, dtype=float).reshape(-1)
        if coef.shape[0] != len(schema):
            raise SchemaError(
                f"{coef.shape[0]} coefficients for {len(schema)} schema entries"
            )
        if not (np.all(np.isfinite(coef)) and np.isfinite(self.intercept)):
            raise DomainError("model coefficients must be finite")
        coef.setflags(write=False)
        object.__setattr__(self, "schema", schema)
        object.__setattr__(self, "intercept", float(self.intercept))
        object.__setattr__(self, "coefficients", coef)

    def __eq__(self, other):
        if not isinstance(other, LogisticModel):
            return NotImplemented
        return (
            self.schema == other.schema
            and self.intercept == other.intercept
            and np.array_equal(self.coefficients, other.coefficients)
        )

    __hash__ = None

    @property
    def n_params(self) -> int:
        return len(self.schema) + 1

    @property
    def params(self) -> np.ndarray:
        """Intercept followed by the coefficients."""
        return np.concatenate([[self.intercept], self.coefficients])

    def coefficient(self, name: str) -> float:
        return float(self.coefficients[self.schema.index(name)])

    def linear_predictor(self, X: np.ndarray) -> np.ndarray:
        X = np.asarray(X, dtype=float)
        if X.shape[-1] != len(self.schema):
            raise SchemaError(
                f"covariate vector has {X.shape[-1]} entries, schema has {len(self.schema)}"
            )
        return self.intercept + X @ self.coefficients


@dataclass
class LabeledDataset:
    schema: tuple[str, ...]
    X: np.ndarray
    y: np.ndarray

    def __post_init__(self):
        self.schema = tuple(self.schema)
        self.X = np.asarray(self.X, dtype=float)
        self.y = np.asarray(self.y, dtype=float).reshape(-1)
        if self.X.ndim != 2 or self.X.shape[1] != len(self.schema):
            raise SchemaError(
                f"data matrix of shape {self.X.shape} does not match schema of "
                f"{len(self.schema)} covariates"
            )
        if self.X.shape[0] != self.y.shape[0]:
            raise SchemaError("covariate rows and outcomes differ in length")
        if not np.all((self.y == 0) | (self.y == 1)):
            raise DomainError("outcomes must be 0 or 1")

    def __len__(self):
        return self.y.shape[0]

    def subset(self, idx) -> "LabeledDataset":
        return LabeledDataset(self.schema, self.X[idx], self.y[idx])


@dataclass
class FitDiagnostics:
    log_likelihood: float
    iterations: int
    std_errors: np.ndarray  # intercept first
    max_score: float
    ridge: float = 0.0
    history: list[float] = field(default_factory=list, repr=False)


def _as_vector(model: LogisticModel, z) -> np.ndarray:
    if isinstance(z, Mapping):
        missing = [n for n in model.schema if n not in z]
        extra = [n for n in z if n not in model.schema]
        if missing or extra:
            raise SchemaError(
                f"covariates do not match schema (missing {missing}, unexpected {extra})"
            )
        return np.array([float(z[n]) for n in model.schema])
    return np.asarray(z, dtype=float)


def predict_probability(model: LogisticModel, z) -> float | np.ndarray:
    """Transmission probability for covariates ``z``.

    ``z`` may be a mapping keyed by covariate name, a vector in schema
    order, or a 2-D array of such vectors (one probability per row).
    """
    x = _as_vector(model, z)
    if not np.all(np.isfinite(x)):
        raise DomainError("covariates must be finite")
    p = expit(model.linear_predictor(x))
    return float(p) if np.ndim(p) == 0 else p


def log_likelihood(model: LogisticModel, data: LabeledDataset) -> float:
    _check_schema(model, data)
    eta = model.linear_predictor(data.X)
    # log p = -log(1+e^-eta), log(1-p) = -log(1+e^eta)
    return float(np.sum(data.y * eta - np.logaddexp(0.0, eta)))


def aic(model: LogisticModel, data: LabeledDataset) -> float:
    """Akaike information criterion, counting the intercept as a parameter."""
    return 2.0 * model.n_params - 2.0 * log_likelihood(model, data)


def _check_schema(model: LogisticModel, data: LabeledDataset):
    if tuple(model.schema) != tuple(data.schema):
        raise SchemaError(f"model schema {model.schema} != data schema {data.schema}")


def _design(X: np.ndarray) -> np.ndarray:
    return np.column_stack([np.ones(X.shape[0]), X])


def score_vector(params: np.ndarray, data: LabeledDataset, ridge: float = 0.0) -> np.ndarray:
    """Gradient of the (penalized) log-likelihood with respect to ``params``."""
    A = _design(data.X)
    p = expit(A @ params)
    g = A.T @ (data.y - p)
    g[1:] -= ridge * params[1:]
    return g


def _penalized_loglik(params, A, y, ridge):
    eta = A @ params
    return float(np.sum(y * eta - np.logaddexp(0.0, eta))) - 0.5 * ridge * float(
        params[1:] @ params[1:]
    )


def _is_separated(eta: np.ndarray, y: np.ndarray, margin: float = 15.0) -> bool:
    # every row classified correctly with a huge margin: the MLE is at infinity
    signed = np.where(y == 1, eta, -eta)
    return bool(np.all(signed > margin))


def fit_logistic(
    data: LabeledDataset,
    max_iter: int = 100,
    tol: float = 1e-8,
    ridge: float = 0.0,
) -> tuple[LogisticModel, FitDiagnostics]:
    """Maximum-likelihood fit by Newton-Raphson (IRLS) with step halving.

    Convergence is declared once the largest component of the score
    vector drops below ``tol``.  ``ridge`` adds ``ridge/2 * |beta|^2``
    to the objective (intercept unpenalized); it is never applied
    unless asked for.

    Raises
    ------
    SeparationError
        The outcomes are perfectly separated and ``ridge == 0``.
    ConvergenceError
        ``max_iter`` exhausted; carries the last iterate.
    """
    if ridge < 0:
        raise DomainError("ridge must be >= 0")
    n_pos = int(data.y.sum())
    if n_pos == 0 or n_pos == len(data):
        raise DomainError("fitting needs at least one row of each outcome class")
    if data.X.shape[1] and np.any(np.ptp(data.X, axis=0) == 0):
        const = [n for n, c in zip(data.schema, np.ptp(data.X, axis=0) == 0) if c]
        raise ConfigurationError(f"constant covariate columns duplicate the intercept: {const}")

    A = _design(data.X)
    y = data.y
    k = A.shape[1]
    penalty = np.full(k, ridge)
    penalty[0] = 0.0

    params = np.zeros(k)
    params[0] = np.log(n_pos / (len(data) - n_pos))
    ll = _penalized_loglik(params, A, y, ridge)
    history = [ll]

    def separation():
        return SeparationError(
            "outcomes are perfectly separated by the covariates; the MLE does not "
            "exist. Refit with a ridge penalty > 0."
        )

    n_steps = 0
    while True:
        eta = A @ params
        p = expit(eta)
        g = A.T @ (y - p) - penalty * params
        if np.max(np.abs(g)) < tol:
            if ridge == 0 and _is_separated(eta, y):
                raise separation()
            break
        if n_steps == max_iter:
            raise ConvergenceError(
                f"no convergence within {max_iter} iterations "
                f"(max |score| = {np.max(np.abs(g)):.3g})",
                params.copy(),
            )
        w = p * (1.0 - p)
        H = (A * w[:, None]).T @ A + np.diag(penalty)
        try:
            step = np.linalg.solve(H, g)
        except np.linalg.LinAlgError:
            if ridge == 0 and _is_separated(eta, y):
                raise separation() from None
            raise ConvergenceError("singular information matrix", params.copy()) from None

        t = 1.0
        for _ in range(40):
            cand = params + t * step
            new_ll = _penalized_loglik(cand, A, y, ridge)
            if new_ll >= ll - 1e-12 * abs(ll):
                break
            t *= 0.5
        params, ll = cand, new_ll
        n_steps += 1
        history.append(ll)
        if ridge == 0 and _is_separated(A @ params, y, margin=30.0):
            raise separation()

    eta = A @ params
    w = expit(eta) * (1.0 - expit(eta))
    info = (A * w[:, None]).T @ A + np.diag(penalty)
    try:
        se = np.sqrt(np.diag(np.linalg.inv(info)))
    except np.linalg.LinAlgError:
        se = np.full(k, np.nan)
    model = LogisticModel(data.schema, params[0], params[1:])
    diag = FitDiagnostics(
        log_likelihood=log_likelihood(model, data),
        iterations=n_steps,
        std_errors=se,
        max_score=float(np.max(np.abs(g))),
        ridge=ridge,
        history=history,
    )
    return model, diag


def k_fold_cv(
    data: LabeledDataset,
    k: int = 10,
    threshold: float = 0.5,
    seed: int = 0,
    **fit_kwargs,
) -> float:
    """Mean held-out classification accuracy over a seeded k-fold split."""
    if k < 2:
        raise FoldError("k must be at least 2")
    n = len(data)
    if k > n:
        raise FoldError(f"k = {k} folds requested for only {n} rows")
    rng = np.random.default_rng(seed)
    folds = np.array_split(rng.permutation(n), k)
    accuracies = []
    for i, test_idx in enumerate(folds):
        y_test = data.y[test_idx]
        if y_test.min() == y_test.max():
            raise FoldError(f"fold {i} contains a single outcome class", fold=i)
        train_idx = np.concatenate([f for j, f in enumerate(folds) if j != i])
        y_train = data.y[train_idx]
        if y_train.min() == y_train.max():
            raise FoldError(f"training set for fold {i} contains a single outcome class", fold=i)
        model, _ = fit_logistic(data.subset(train_idx), **fit_kwargs)
        pred = predict_probability(model, data.X[test_idx]) >= threshold
        accuracies.append(np.mean(pred == (y_test == 1)))
    return float(np.mean(accuracies))


def simulate_dataset(
    model: LogisticModel,
    n: int,
    rng: np.random.Generator,
    binary: Sequence[str] = (),
    scale: Mapping[str, float] | None = None,
) -> LabeledDataset:
    """Draw covariates and outcomes from a known logistic model.

    Covariates named in ``binary`` are Bernoulli(0.3); the rest are
    standard normal, multiplied by ``scale[name]`` when given.
    """
    scale = scale or {}
    cols = []
    for name in model.schema:
        if name in binary:
            cols.append((rng.random(n) < 0.3).astype(float))
        else:
            cols.append(rng.standard_normal(n) * scale.get(name, 1.0))
    X = np.column_stack(cols) if cols else np.empty((n, 0))
    y = (rng.random(n) < expit(model.linear_predictor(X))).astype(float)
    return LabeledDataset(model.schema, X, y)


# -- files -----------------------------------------------------------------


def model_to_dict(model: LogisticModel, diagnostics: FitDiagnostics | None = None) -> dict:
    doc = {
        "format_version": MODEL_FORMAT_VERSION,
        "schema": list(model.schema),
        "intercept": model.intercept,
        "coefficients": [float(c) for c in model.coefficients],
    }
    if diagnostics is not None:
        doc["std_errors"] = [float(s) for s in diagnostics.std_errors]
        doc["log_likelihood"] = diagnostics.log_likelihood
        doc["iterations"] = diagnostics.iterations
    return doc


def model_from_dict(doc: Mapping) -> LogisticModel:
    try:
        version = doc["format_version"]
        if version != MODEL_FORMAT_VERSION:
            raise InputParseError(f"unsupported model format_version {version!r}")
        return LogisticModel(tuple(doc["schema"]), doc["intercept"], doc["coefficients"])
    except KeyError as exc:
        raise InputParseError(f"model document lacks field {exc.args[0]!r}") from None
    except (TypeError, ValueError) as exc:
        if isinstance(exc, SchemaError):
            raise
        raise InputParseError(f"bad model document: {exc}") from None


def load_model(path: str | Path) -> LogisticModel:
    try:
        doc = json.loads(Path(path).read_text())
    except json.JSONDecodeError as exc:
        raise InputParseError(exc.msg, line=exc.lineno) from None
    return model_from_dict(doc)


def save_model(model: LogisticModel, path: str | Path, diagnostics=None) -> None:
    Path(path).write_text(json.dumps(model_to_dict(model, diagnostics), indent=2) + "\n")


def reference_model() -> LogisticModel:
    """Coefficients from the UK healthcare-worker cross-sectional fit (bundled)."""
    ref = resources.files("hcprisk") / "data" / "reference_model.json"
    return model_from_dict(json.loads(ref.read_text()))


def load_dataset(path: str | Path, outcome: str = "outcome") -> LabeledDataset:
    """Read a CSV whose header lists the covariates plus an ``outcome`` column."""
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise InputParseError("empty dataset file", line=1) from None
        header = [h.strip() for h in header]
        if outcome not in header:
            raise InputParseError(f"header lacks an {outcome!r} column", line=1)
        yi = header.index(outcome)
        schema = tuple(h for i, h in enumerate(header) if i != yi)
        rows, ys = [], []
        for lineno, row in enumerate(reader, start=2):
            if not row or all(not c.strip() for c in row):
                continue
            if len(row) != len(header):
                raise InputParseError(
                    f"expected {len(header)} fields, found {len(row)}", line=lineno
                )
            try:
                vals = [float(c) for c in row]
            except ValueError as exc:
                raise InputParseError(str(exc), line=lineno) from None
            if vals[yi] not in (0.0, 1.0):
                raise InputParseError(f"outcome must be 0 or 1, got {row[yi]!r}", line=lineno)
            ys.append(vals[yi])
            rows.append([v for i, v in enumerate(vals) if i != yi])
    X = np.array(rows, dtype=float).reshape(len(rows), len(schema))
    return LabeledDataset(schema, X, np.array(ys))


def save_dataset(data: LabeledDataset, path: str | Path, outcome: str = "outcome") -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow([*data.schema, outcome])
        for x, y in zip(data.X, data.y):
            w.writerow([repr(float(v)) for v in x] + [int(y)])
