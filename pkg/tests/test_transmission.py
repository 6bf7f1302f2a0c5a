import json
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.special import expit

from hcprisk.errors import (
    ConfigurationError,
    ConvergenceError,
    DomainError,
    FoldError,
    SchemaError,
    SeparationError,
)
from hcprisk.transmission import (
    REFERENCE_SCHEMA,
    LabeledDataset,
    LogisticModel,
    aic,
    fit_logistic,
    k_fold_cv,
    load_dataset,
    load_model,
    log_likelihood,
    model_from_dict,
    model_to_dict,
    predict_probability,
    reference_model,
    save_dataset,
    save_model,
    score_vector,
    simulate_dataset,
)

from oracles import binomial_loglik, finite_difference_gradient

# frozen from a direct evaluation of 1 / (1 + exp(-eta)) at the bundled coefficients
P_ALL_ZERO = 0.355419714351


@pytest.fixture(scope="module")
def ref():
    return reference_model()


@pytest.fixture(scope="module")
def small_data():
    gen = LogisticModel(("a", "b", "c"), -0.4, [0.8, -0.5, 0.3])
    return gen, simulate_dataset(gen, 3000, np.random.default_rng(11), binary=("c",))


class TestPredict:
    def test_all_zero_covariates(self, ref):
        z = {n: 0.0 for n in REFERENCE_SCHEMA}
        assert predict_probability(ref, z) == pytest.approx(0.3554, abs=5e-5)
        assert predict_probability(ref, z) == pytest.approx(P_ALL_ZERO, abs=1e-12)

    def test_worked_profile(self, ref):
        z = {n: 0.0 for n in REFERENCE_SCHEMA}
        z.update(Age=40, Doctor=1, AGP=1, cont_wo_PPE=1)
        eta = -0.5953 - 0.0120 * 40 + 0.1514 - 0.2201 + 0.3261
        assert predict_probability(ref, z) == pytest.approx(1 / (1 + math.exp(-eta)), abs=1e-12)

    def test_extreme_predictor_stays_finite(self):
        m = LogisticModel(("x",), 0.0, [1.0])
        assert predict_probability(m, [800.0]) == 1.0
        assert predict_probability(m, [-800.0]) == 0.0

    def test_vector_and_matrix(self, ref):
        X = np.zeros((3, len(REFERENCE_SCHEMA)))
        out = predict_probability(ref, X)
        assert out.shape == (3,)
        assert np.allclose(out, P_ALL_ZERO)

    def test_schema_mismatch(self, ref):
        with pytest.raises(SchemaError):
            predict_probability(ref, {"Age": 1.0})
        with pytest.raises(SchemaError):
            predict_probability(ref, np.zeros(3))

    def test_model_validation(self):
        with pytest.raises(SchemaError):
            LogisticModel(("a", "a"), 0.0, [1.0, 2.0])
        with pytest.raises(SchemaError):
            LogisticModel(("a",), 0.0, [1.0, 2.0])
        with pytest.raises(DomainError):
            LogisticModel(("a",), float("nan"), [1.0])

    def test_reference_sign_pattern(self, ref):
        positive = {"Cancer", "Resp", "Obes", "Doctor", "Pub_trans", "C_contact", "Lacked_PPE", "cont_wo_PPE"}
        for name in REFERENCE_SCHEMA:
            assert (ref.coefficient(name) > 0) == (name in positive), name

    @given(st.integers(0, 14), st.floats(0.0, 5.0), st.floats(0.01, 5.0))
    def test_monotone_in_covariate_by_sign(self, j, base, delta):
        m = reference_model()
        z = np.zeros(len(REFERENCE_SCHEMA))
        z[j] = base
        lo = predict_probability(m, z)
        z[j] = base + delta
        hi = predict_probability(m, z)
        if m.coefficients[j] > 0:
            assert hi >= lo
        else:
            assert hi <= lo


class TestLikelihood:
    def test_against_direct_sum(self, small_data):
        gen, data = small_data
        p = [1 / (1 + math.exp(-(gen.intercept + float(np.dot(gen.coefficients, x))))) for x in data.X]
        assert log_likelihood(gen, data) == pytest.approx(binomial_loglik(p, data.y), abs=1e-8)
        assert aic(gen, data) == pytest.approx(
            2 * 4 - 2 * binomial_loglik(p, data.y), abs=1e-8
        )

    def test_aic_hand_value(self):
        # 100 rows, intercept only, p = 0.5: LL = 100 ln 0.5
        data = LabeledDataset((), np.empty((100, 0)), [0, 1] * 50)
        m = LogisticModel((), 0.0, [])
        assert aic(m, data) == pytest.approx(2 - 200 * math.log(0.5), abs=1e-9)
        assert aic(m, data) == pytest.approx(140.63, abs=5e-3)

    def test_saturated_model_aic_is_2k(self):
        # each row has its own indicator; a perfect fit gives LL = 0
        X = np.eye(4)[:, 1:]
        data = LabeledDataset(("b", "c", "d"), X, [0, 1, 1, 1])
        m = LogisticModel(("b", "c", "d"), -60.0, [120.0, 120.0, 120.0])
        assert aic(m, data) == pytest.approx(2 * 4, abs=1e-9)

    def test_gradient_matches_finite_differences(self, small_data):
        gen, data = small_data
        x0 = np.array([-0.1, 0.5, -0.2, 0.1])

        def ll(theta):
            return log_likelihood(LogisticModel(gen.schema, theta[0], theta[1:]), data)

        fd = finite_difference_gradient(ll, x0, h=1e-5)
        g = score_vector(x0, data)
        assert np.allclose(g, fd, rtol=1e-5, atol=1e-6)


class TestFit:
    def test_intercept_only_closed_form(self):
        y = np.r_[np.ones(37), np.zeros(163)]
        data = LabeledDataset((), np.empty((200, 0)), y)
        m, diag = fit_logistic(data)
        assert m.intercept == pytest.approx(math.log(37 / 163), abs=1e-9)
        assert diag.max_score < 1e-6

    def test_recovers_generator(self, small_data):
        gen, data = small_data
        m, diag = fit_logistic(data)
        assert diag.max_score < 1e-6
        assert np.all(np.abs(m.params - gen.params) < 3 * diag.std_errors)
        # the log-likelihood never decreases across Newton steps
        assert all(b >= a - 1e-9 for a, b in zip(diag.history, diag.history[1:]))

    def test_score_zero_at_mle(self, small_data):
        _, data = small_data
        m, _ = fit_logistic(data)
        assert np.max(np.abs(score_vector(m.params, data))) < 1e-6

    def test_noise_column_costs_at_most_two_aic(self, small_data):
        gen, data = small_data
        rng = np.random.default_rng(5)
        base, _ = fit_logistic(data)
        wider = LabeledDataset(data.schema + ("noise",), np.column_stack([data.X, rng.standard_normal(len(data))]), data.y)
        big, _ = fit_logistic(wider)
        assert aic(big, wider) <= aic(base, data) + 2 + 1e-9

    def test_separation(self):
        X = np.linspace(-1, 1, 40)[:, None]
        data = LabeledDataset(("x",), X, (X[:, 0] > 0).astype(float))
        with pytest.raises(SeparationError, match="ridge"):
            fit_logistic(data)
        m, diag = fit_logistic(data, ridge=1.0)
        assert m.coefficients[0] > 0
        assert diag.ridge == 1.0

    def test_single_class_and_constant_column(self):
        with pytest.raises(DomainError):
            fit_logistic(LabeledDataset(("x",), np.ones((5, 1)) * np.arange(5)[:, None], np.zeros(5)))
        with pytest.raises(ConfigurationError):
            fit_logistic(LabeledDataset(("x",), np.ones((4, 1)), [0, 1, 0, 1]))

    def test_iteration_cap(self, small_data):
        _, data = small_data
        with pytest.raises(ConvergenceError) as info:
            fit_logistic(data, max_iter=1)
        assert info.value.last_iterate.shape == (4,)

    def test_ridge_shrinks(self, small_data):
        _, data = small_data
        plain, _ = fit_logistic(data)
        shrunk, _ = fit_logistic(data, ridge=500.0)
        assert np.linalg.norm(shrunk.coefficients) < np.linalg.norm(plain.coefficients)

    def test_bundled_synthetic_recovers_generator(self):
        from importlib import resources

        base = resources.files("hcprisk") / "data"
        data = load_dataset(base / "synthetic_uk_like.csv")
        gen = model_from_dict(json.loads((base / "synthetic_generator.json").read_text()))
        m, diag = fit_logistic(data)
        assert np.all(np.abs(m.params - gen.params) < 3 * diag.std_errors)


class TestCrossValidation:
    def test_separable_ridge_fit(self):
        rng = np.random.default_rng(2)
        X = rng.standard_normal((400, 2))
        y = (X[:, 0] + X[:, 1] > 0).astype(float)
        data = LabeledDataset(("a", "b"), X, y)
        assert k_fold_cv(data, k=10, ridge=0.01) >= 0.99

    def test_pure_noise_is_chance(self):
        rng = np.random.default_rng(4)
        data = LabeledDataset(("a", "b"), rng.standard_normal((10000, 2)), rng.random(10000) < 0.5)
        assert k_fold_cv(data, k=10) == pytest.approx(0.5, abs=0.05)

    def test_seeded_and_deterministic(self, small_data):
        _, data = small_data
        assert k_fold_cv(data, k=5, seed=3) == k_fold_cv(data, k=5, seed=3)

    def test_fold_errors(self, small_data):
        _, data = small_data
        with pytest.raises(FoldError):
            k_fold_cv(data.subset(slice(0, 5)), k=6)
        with pytest.raises(FoldError):
            k_fold_cv(data, k=1)
        lopsided = LabeledDataset(("x",), np.arange(20.0)[:, None], [1] + [0] * 19)
        with pytest.raises(FoldError) as info:
            k_fold_cv(lopsided, k=10)
        assert info.value.fold is not None


class TestFiles:
    def test_model_round_trip(self, tmp_path, small_data):
        _, data = small_data
        m, diag = fit_logistic(data)
        path = tmp_path / "m.json"
        save_model(m, path, diag)
        back = load_model(path)
        assert back.schema == m.schema
        assert np.array_equal(back.params, m.params)
        assert model_from_dict(model_to_dict(m)) == m

    def test_dataset_round_trip(self, tmp_path, small_data):
        _, data = small_data
        path = tmp_path / "d.csv"
        save_dataset(data, path)
        back = load_dataset(path)
        assert back.schema == data.schema
        assert np.array_equal(back.X, data.X) and np.array_equal(back.y, data.y)

    def test_reference_model_has_standard_errors(self, ref):
        assert ref.n_params == 16
        assert ref.intercept == -0.5953
