import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from mdsvm.data import (Dataset, SyntheticSpec, apply_standardize, fit_standardize,
                        generate_synthetic)
from mdsvm.solver import objective_subproblem
from mdsvm.trainer import (LinearModel, MdsvmHyper, ModelFileError, ModelSet,
                           block_subproblem, disjointness_penalty, global_objective,
                           init_modelset, load_models, predict, save_models, train_ensvm,
                           train_mdsvm, train_svm)
from mdsvm.tuning import TuningConfig, tune_ensvm


def toy(seed=0, n=40, d=5):
    rng = np.random.default_rng(seed)
    X = rng.standard_normal((n, d))
    y = np.where(X[:, 0] + 0.5 * X[:, 1] + 0.3 * rng.standard_normal(n) >= 0, 1.0, -1.0)
    return Dataset(X, y)


def random_set(rng, m, d, hyper=None):
    hyper = hyper or MdsvmHyper(m=m, lambda1=rng.random(), lambda2=rng.random() * 5,
                                lambda3=0.1 + rng.random())
    return ModelSet([LinearModel(rng.standard_normal(d), rng.standard_normal())
                     for _ in range(m)], hyper)


def standardized(spec, seed):
    data, truth = generate_synthetic(spec, seed)
    return apply_standardize(fit_standardize(data), data), truth


def test_disjointness_examples():
    assert disjointness_penalty([np.array([1.0, -2.0])]) == 0.0
    assert disjointness_penalty([np.array([1.0, -2.0, 0.0]), np.array([0.0, 3.0, 4.0])]) == 12.0
    assert disjointness_penalty([np.array([1.0, 0.0]), np.array([0.0, 5.0])]) == 0.0


def test_disjointness_matches_pair_loop():
    rng = np.random.default_rng(0)
    for _ in range(20):
        W = rng.standard_normal((4, 6))
        loop = sum(np.abs(W[i]) @ np.abs(W[j]) for i in range(4) for j in range(4) if i != j)
        assert disjointness_penalty(list(W)) == pytest.approx(loop, rel=1e-12)


def test_global_objective_at_zero():
    data = Dataset(np.arange(6.0).reshape(3, 2), [1, -1, 1])
    ms = ModelSet([LinearModel(np.zeros(2)), LinearModel(np.zeros(2))], MdsvmHyper(m=2))
    assert global_objective(ms, data) == 6.0


def test_global_objective_single_model_is_svm():
    data = toy()
    rng = np.random.default_rng(1)
    mod = LinearModel(rng.standard_normal(5), 0.3)
    ms = ModelSet([mod], MdsvmHyper(m=1, lambda3=0.7))
    margins = data.y * mod.decision_function(data.X)
    expected = np.maximum(0, 1 - margins).sum() + 0.7 * mod.w @ mod.w
    assert global_objective(ms, data) == pytest.approx(expected, rel=1e-12)


def test_global_objective_dimension_mismatch():
    ms = ModelSet([LinearModel(np.zeros(3))], MdsvmHyper(m=1))
    with pytest.raises(ValueError):
        global_objective(ms, toy(d=5))


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 10_000), st.integers(1, 4))
def test_block_bookkeeping(seed, m):
    # the joint objective minus the block objective of model i does not depend on model i
    rng = np.random.default_rng(seed)
    data = toy(seed % 7, n=12, d=4)
    ms = random_set(rng, m, 4)
    i = int(rng.integers(m))
    spec = block_subproblem(ms, i, data)
    w_new, b_new = rng.standard_normal(4), float(rng.standard_normal())
    other = ModelSet([mod if j != i else LinearModel(w_new, b_new)
                      for j, mod in enumerate(ms.models)], ms.hyper)
    lhs = global_objective(ms, data) - global_objective(other, data)
    rhs = (objective_subproblem(ms.models[i].w, ms.models[i].b, spec)
           - objective_subproblem(w_new, b_new, spec))
    assert lhs == pytest.approx(rhs, rel=1e-9, abs=1e-9)


def test_predict_examples():
    assert predict(LinearModel([1.0, 0.0], 0.0), [2.0, 5.0]) == (1.0, 2.0)
    const = LinearModel([0.0, 0.0], -0.5)
    assert predict(const, [3.0, -1.0]) == (-1.0, -0.5)
    assert predict(LinearModel([1.0, 1.0], 0.0), [1.0, -1.0])[0] == 1.0
    with pytest.raises(ValueError):
        predict(const, [1.0])


def test_init_modelset_examples():
    base = LinearModel([2.0, -4.0], 1.0)
    one = init_modelset(base, 1)
    np.testing.assert_array_equal(one.models[0].w, base.w)
    four = init_modelset(base, 4)
    for mod in four.models:
        np.testing.assert_array_equal(mod.w, [0.5, -1.0])
        assert mod.b == 0.25
    np.testing.assert_array_equal(four.W.sum(axis=0), base.w)
    assert four.biases.sum() == base.b


def test_hyper_validation():
    with pytest.raises(ValueError):
        MdsvmHyper(m=0)
    with pytest.raises(ValueError):
        MdsvmHyper(lambda3=0.0)
    with pytest.raises(ValueError):
        MdsvmHyper(lambda2=-1.0)


def test_single_model_equals_svm():
    data = toy(2)
    svm = train_svm(data, 0.5)
    ms = train_mdsvm(data, MdsvmHyper(m=1, lambda1=1.0, lambda2=10.0, lambda3=0.5))
    ref = ModelSet([svm], MdsvmHyper(m=1, lambda3=0.5))
    assert global_objective(ms, data) == pytest.approx(global_objective(ref, data), abs=1e-6)


def test_trace_non_increasing_and_deterministic():
    data = toy(3, n=60, d=8)
    hyper = MdsvmHyper(m=3, lambda1=1.0, lambda2=3.0, lambda3=1.0)
    init = init_modelset(train_svm(data, 1.0), 3, hyper, jitter=0.01, seed=1)
    a = train_mdsvm(data, hyper, init)
    b = train_mdsvm(data, hyper, init)
    steps = np.diff(a.objective_trace)
    assert np.all(steps < 1e-6)
    assert a.W.tobytes() == b.W.tobytes() and a.biases.tobytes() == b.biases.tobytes()
    assert a.objective_trace == b.objective_trace


def test_no_disjointness_gives_identical_models():
    data = toy(4)
    hyper = MdsvmHyper(m=2, lambda1=1.0, lambda2=0.0, lambda3=1.0)
    ms = train_mdsvm(data, hyper, init_modelset(train_svm(data, 1.0), 2, hyper))
    np.testing.assert_allclose(ms.W[0], ms.W[1], atol=1e-3)


def test_duplicated_pair_separates():
    spec = SyntheticSpec(n=300, core_features=2, redundant_groups=2, group_size=1,
                         noise_features=5, within_group_correlation=1.0)
    disjoint = 0
    for seed in range(10):
        data, truth = standardized(spec, seed)
        hyper = MdsvmHyper(m=2, lambda1=1.0, lambda2=10.0, lambda3=1.0)
        init = init_modelset(train_svm(data, 1.0), 2, hyper, jitter=0.01, seed=seed)
        ms = train_mdsvm(data, hyper, init)
        pair = sorted(set().union(*truth.true_cfs))
        W = ms.W[:, pair]
        disjoint += disjointness_penalty(list(W)) == 0.0
    assert disjoint == 10


def test_ensvm_limits():
    data = toy(5)
    assert np.all(train_ensvm(data, 1e12, 1.0).w == 0)
    assert np.count_nonzero(train_ensvm(data, 0.0, 1.0).w) == data.d
    with pytest.raises(ValueError):
        train_ensvm(data, 1.0, 0.0)


def test_elastic_net_grouping():
    # each correlated group is either mostly in the support or left out entirely
    spec = SyntheticSpec(n=300, core_features=2, redundant_groups=2, group_size=3,
                         noise_features=5, within_group_correlation=0.95)
    consistent = 0
    for seed in range(10):
        data, truth = standardized(spec, seed)
        w = train_ensvm(data, 1.0, 1.0).w
        inside = [sum(w[j] != 0 for j in g) for g in truth.true_cfs]
        consistent += all(k >= 2 or k == 0 for k in inside)
    assert consistent >= 7


@pytest.mark.slow
def test_ensvm_screens_noise_at_tuned_penalties():
    spec = SyntheticSpec(n=500, noise_features=5)
    config = TuningConfig()
    clean = 0
    for seed in range(10):
        data, truth = standardized(spec, seed)
        l1, l2 = tune_ensvm(data, config)
        support = set(np.flatnonzero(train_ensvm(data, l1, l2).w))
        clean += not (support & truth.irrelevant)
    assert clean >= 8


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 10_000), st.integers(1, 4), st.booleans())
def test_model_file_round_trip(tmp_path_factory, seed, m, named):
    rng = np.random.default_rng(seed)
    d = int(rng.integers(1, 8))
    ms = random_set(rng, m, d)
    for mod in ms.models:
        mod.w[rng.random(d) < 0.3] = 0.0
    names = [f"f{j}" for j in range(d)] if named else None
    path = tmp_path_factory.mktemp("models") / "m.txt"
    save_models(ms, path, names)
    back, got_names = load_models(path)
    X = rng.standard_normal((20, d))
    for a, b in zip(ms.models, back.models):
        assert a.decision_function(X).tobytes() == b.decision_function(X).tobytes()
    assert back.hyper == ms.hyper
    assert got_names == (tuple(names) if named else None)


def test_model_file_errors(tmp_path):
    p = tmp_path / "bad.txt"
    p.write_text("garbage\n")
    with pytest.raises(ModelFileError, match="header"):
        load_models(p)
    p.write_text("mdsvm d=2 m=2 lambda1=1 lambda2=1 lambda3=1\nmodel 1\nbias 0\n")
    with pytest.raises(ModelFileError, match="m=2"):
        load_models(p)
    p.write_text("mdsvm d=2 m=1 lambda1=1 lambda2=1 lambda3=1\nmodel 1\nw 1:x\n")
    with pytest.raises(ModelFileError, match="malformed"):
        load_models(p)
