import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.optimize import linprog

from mcsvm.svm import (BinarySvmModel, KernelSpec, SvmError, TrainerConfig, TrainingTrace,
                       decision_function, decision_value, dumps_model, gram, kernel_eval,
                       kkt_violations, loads_model, predict_sign, train_smo)

LINEAR = KernelSpec("linear")


@pytest.fixture(scope="module")
def two_point():
    return train_smo([[-1.0], [1.0]], [-1, 1], TrainerConfig(C=10), LINEAR)


# -- kernels --------------------------------------------------------------------

def test_linear_kernel():
    assert kernel_eval(LINEAR, (1, 0), (1, 0)) == 1.0


@pytest.mark.parametrize("gamma", [0.01, 0.5, 3.0])
def test_rbf_self_similarity(gamma):
    assert kernel_eval(KernelSpec("rbf", gamma=gamma), (0.3, -2.0), (0.3, -2.0)) == 1.0


def test_rbf_hand_value():
    value = kernel_eval(KernelSpec("rbf", gamma=0.5), (0, 0), (1, 1))
    assert value == pytest.approx(math.exp(-0.5 * 2), abs=1e-12)
    assert value == pytest.approx(0.367879, abs=1e-6)


def test_polynomial_kernel():
    spec = KernelSpec("poly", gamma=0.5, degree=2, coef0=1.0)
    assert spec.kind == "polynomial"
    assert kernel_eval(spec, (1, 2), (3, 4)) == pytest.approx((0.5 * 11 + 1) ** 2)


def test_kernel_dimension_mismatch():
    with pytest.raises(SvmError):
        kernel_eval(LINEAR, (1, 2), (1, 2, 3))


@pytest.mark.parametrize("kw", [dict(kind="sigmoid"), dict(gamma=0.0), dict(degree=0)])
def test_kernel_spec_validation(kw):
    with pytest.raises(SvmError):
        KernelSpec(**kw)


@pytest.mark.parametrize("kw", [dict(C=0), dict(tol=-1), dict(eps=0), dict(max_passes=0)])
def test_trainer_config_validation(kw):
    with pytest.raises(SvmError):
        TrainerConfig(**kw)


@settings(max_examples=50, deadline=None)
@given(st.integers(1, 30), st.integers(1, 6), st.floats(0.01, 10), st.integers(0, 2**31))
def test_rbf_gram_symmetric_unit_diagonal(n, d, gamma, seed):
    X = np.random.default_rng(seed).normal(size=(n, d))
    K = gram(KernelSpec("rbf", gamma=gamma), X, X)
    np.testing.assert_allclose(K, K.T, atol=1e-15)
    np.testing.assert_allclose(np.diag(K), 1.0, atol=1e-15)


def test_default_gamma_is_inverse_feature_count():
    assert KernelSpec().resolved(13).gamma == pytest.approx(1 / 13)


# -- training -------------------------------------------------------------------

def test_two_point_analytic(two_point):
    # dual 2a - 2a^2 peaks at a = 0.5
    assert two_point.n_sv == 2
    np.testing.assert_allclose(two_point.alphas, [0.5, 0.5], atol=1e-6)
    assert two_point.bias == pytest.approx(0.0, abs=1e-6)
    assert decision_value(two_point, [2.0]) == pytest.approx(2.0, abs=1e-6)
    assert decision_value(two_point, [0.0]) == pytest.approx(0.0, abs=1e-9)


def test_two_point_signs(two_point):
    assert predict_sign(two_point, [2.0]) == 1
    assert predict_sign(two_point, [-2.0]) == -1


def test_zero_decision_is_positive():
    model = BinarySvmModel(np.empty((0, 1)), np.empty(0), np.empty(0), 0.0, LINEAR, 1.0, 1)
    assert decision_value(model, [5.0]) == 0.0
    assert predict_sign(model, [5.0]) == 1


def test_empty_support_set_returns_bias():
    model = BinarySvmModel(np.empty((0, 2)), np.empty(0), np.empty(0), -0.7, LINEAR, 1.0, 2)
    assert decision_value(model, [1.0, 2.0]) == -0.7


def test_decision_dimension_mismatch(two_point):
    with pytest.raises(SvmError):
        decision_value(two_point, [1.0, 2.0])


def test_duplicated_data_same_signs():
    rng = np.random.default_rng(1)
    X = rng.normal(size=(20, 2))
    y = np.where(X[:, 0] + 0.3 * rng.normal(size=20) > 0, 1, -1)
    single = train_smo(X, y, TrainerConfig(C=1), KernelSpec("rbf", gamma=0.5))
    double = train_smo(np.vstack([X, X]), np.concatenate([y, y]), TrainerConfig(C=1),
                       KernelSpec("rbf", gamma=0.5))
    np.testing.assert_array_equal(np.sign(decision_function(single, X)),
                                  np.sign(decision_function(double, X)))


@pytest.mark.parametrize("labels, fragment", [
    ([1, 1, 1], "both labels"),
    ([0, 1, -1], "-1 or \\+1"),
])
def test_label_validation(labels, fragment):
    with pytest.raises(SvmError, match=fragment):
        train_smo([[0.0], [1.0], [2.0]], labels)


def test_non_convergence_flagged():
    rng = np.random.default_rng(0)
    X = rng.normal(size=(40, 3))
    y = np.where(rng.random(40) < 0.5, -1, 1)
    model = train_smo(X, y, TrainerConfig(C=100, max_passes=1), LINEAR)
    assert not model.converged
    assert model.n_iter == 40


def separable_set(rng, n=20, margin=0.5):
    w = rng.normal(size=2)
    w /= np.linalg.norm(w)
    pts = []
    while len(pts) < n:
        p = rng.uniform(-3, 3, size=2)
        if abs(p @ w) >= margin:
            pts.append(p)
    X = np.array(pts)
    y = np.where(X @ w > 0, 1, -1)
    if len(set(y)) < 2:
        return separable_set(rng, n, margin)
    return X, y


def lp_separable(X, y) -> bool:
    # y_i (w.x_i + b) >= 1 for some (w, b)
    A = -y[:, None] * np.hstack([X, np.ones((len(X), 1))])
    res = linprog(np.zeros(X.shape[1] + 1), A_ub=A, b_ub=-np.ones(len(X)),
                  bounds=[(None, None)] * (X.shape[1] + 1))
    return res.status == 0


@pytest.mark.parametrize("seed", range(5))
def test_separable_zero_training_error(seed):
    X, y = separable_set(np.random.default_rng(seed))
    assert lp_separable(X, y)
    model = train_smo(X, y, TrainerConfig(C=100), LINEAR)
    assert model.converged
    assert np.all(np.where(decision_function(model, X) >= 0, 1, -1) == y)


def random_problem(seed):
    rng = np.random.default_rng(seed)
    n = int(rng.integers(4, 61))
    d = int(rng.integers(1, 14))
    X = rng.normal(size=(n, d))
    y = np.where(rng.random(n) < 0.5, -1, 1)
    y[0], y[1] = 1, -1
    return X, y


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 2**31), st.sampled_from(["linear", "rbf", "polynomial"]),
       st.sampled_from([0.1, 1.0, 10.0]))
def test_feasibility_kkt_and_monotone_objective(seed, kind, C):
    X, y = random_problem(seed)
    cfg = TrainerConfig(C=C, max_passes=2000)
    trace = TrainingTrace()
    model = train_smo(X, y, cfg, KernelSpec(kind, coef0=1.0), trace=trace)
    a = trace.alphas
    assert model.converged
    assert np.all(a >= 0) and np.all(a <= C + 1e-10)
    assert abs(a @ y) <= 1e-8
    assert abs(model.dual_coef.sum()) <= 1e-8
    assert np.all((model.alphas > cfg.eps) & (model.alphas <= C))
    assert not kkt_violations(model, X, y, a, cfg.tol).any()
    assert np.all(np.diff(trace.objective) >= -1e-12)


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 2**31), st.sampled_from(["linear", "rbf"]))
def test_label_flip_negates_decision(seed, kind):
    X, y = random_problem(seed)
    cfg = TrainerConfig(C=1.0, max_passes=2000)
    kernel = KernelSpec(kind)
    pos = train_smo(X, y, cfg, kernel)
    neg = train_smo(X, -y, cfg, kernel)
    probe = np.vstack([X, np.random.default_rng(seed).normal(size=(10, X.shape[1]))])
    np.testing.assert_allclose(decision_function(neg, probe), -decision_function(pos, probe),
                               atol=1e-8)


def test_agrees_with_closed_form_on_symmetric_pair():
    # +/- points at distance 2r along a line: alpha = 1 / (2 r^2) while below C
    for r in (0.5, 1.0, 2.0):
        model = train_smo([[-r, 0.0], [r, 0.0]], [-1, 1], TrainerConfig(C=100), LINEAR)
        np.testing.assert_allclose(model.alphas, [1 / (2 * r * r)] * 2, rtol=1e-6)


def test_box_constraint_binds():
    model = train_smo([[-1.0], [1.0]], [-1, 1], TrainerConfig(C=0.1), LINEAR)
    np.testing.assert_allclose(model.alphas, [0.1, 0.1])


# -- serialization --------------------------------------------------------------

def test_model_round_trip():
    X, y = random_problem(7)
    model = train_smo(X, y, TrainerConfig(C=1.0), KernelSpec("rbf"))
    text = dumps_model(model)
    assert text.splitlines()[0].startswith("svm kind=rbf gamma=")
    assert len(text.splitlines()) == model.n_sv + 1
    back = loads_model(text)
    np.testing.assert_array_equal(back.support_vectors, model.support_vectors)
    np.testing.assert_array_equal(back.alphas, model.alphas)
    assert back.bias == model.bias and back.kernel == model.kernel and back.C == model.C
    np.testing.assert_array_equal(decision_function(back, X), decision_function(model, X))


def test_truncated_model_rejected():
    X, y = random_problem(8)
    text = dumps_model(train_smo(X, y))
    with pytest.raises(SvmError):
        loads_model("\n".join(text.splitlines()[:-1]))
