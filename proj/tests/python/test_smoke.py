import math

import numpy as np
import pytest

sr = pytest.importorskip("structrates")


def test_decode_and_frontier_on_three_class():
    loss = sr.FiniteLoss.three_class()
    center = np.full(3, 1 / 3)
    assert sr.decode(loss, center) == 0
    assert sr.margin_gap(loss, center) == pytest.approx(1 / 3)
    assert sr.frontier_distance(loss, center) == pytest.approx(0.19245008972987526, abs=1e-15)
    probe = sr.probe_frontier(loss, center)
    assert probe["best"] == 0 and probe["distance"] == pytest.approx(0.19245008972987526)


def test_decode_matches_argmin():
    rng = np.random.default_rng(3)
    for _ in range(200):
        m = rng.integers(0, 5, size=(4, 3)).astype(float)
        loss = sr.FiniteLoss(["a", "b", "c", "d"], ["x", "y", "z"], m)
        mu = rng.dirichlet(np.ones(3))
        assert sr.decode(loss, mu) == int(np.argmin(m @ mu))
        np.testing.assert_allclose(sr.risk_vector(loss, mu), m @ mu, atol=1e-15)


def test_invalid_loss_raises():
    with pytest.raises(sr.ContractViolation):
        sr.FiniteLoss(["a"], ["x"], np.zeros((1, 1)))


def test_knn_and_krr_weights():
    X = np.array([[0.0], [1.0], [-1.0]])
    w = sr.knn_weights([0.0], X, [0, 1, 0], 2)
    np.testing.assert_array_equal(w, [0.5, 0.25, 0.25])
    K = sr.krr_weights(np.array([[0.1], [0.4]]), X, [0, 1, 0], 0.5, 1e-3)
    assert K.shape == (3, 2)
    assert sr.knn_schedule(1000) == 100
    assert sr.krr_schedule(10000, 1.0, 0.5, 1.0) == 0.01


def test_synthetic_sample_and_predict():
    problem = sr.SyntheticProblem.power_margin(1.0)
    X, y = problem.sample(400, 5)
    assert X.shape == (400, 1) and len(y) == 400
    grid = problem.regular_grid(100)
    pred = sr.predict(problem.loss, X, y, grid, {"type": "knn", "k0": 1.0, "beta": 1.0})
    assert len(pred) == 100
    assert 0.0 <= sr.excess_risk(pred, problem, grid) < 0.05
    bayes = [problem.bayes_predict(x) for x in grid]
    assert sr.excess_risk(bayes, problem, grid) == 0.0


def test_margin_profile_recovers_alpha():
    problem = sr.SyntheticProblem.power_margin(1.0)
    margins = [problem.frontier_distance(x) for x in problem.regular_grid(20000)]
    profile = sr.margin_profile(margins)
    assert abs(profile["alpha_hat"] - 1.0) < 0.05
    assert all(a <= b for a, b in zip(profile["cdf"], profile["cdf"][1:]))

    stairs = sr.SyntheticProblem.staircase()
    flat = sr.margin_profile([stairs.frontier_distance(x) for x in stairs.regular_grid(1000)],
                             sr.log_thresholds(1e-3, 1.0, 50))
    assert flat["alpha_hat"] is None and flat["no_density_t0"] >= 0.9


def test_rate_experiment_is_deterministic():
    config = {
        "problem": {"kind": "power_margin", "alpha": 1.0},
        "estimator": {"type": "knn"},
        "n_grid": [50, 100, 200, 400],
        "trials": 5,
        "eval_grid_size": 50,
        "master_seed": 7,
    }
    a = sr.rate_experiment(config)
    b = sr.rate_experiment(config, workers=2)
    assert a == b
    assert a["theoretical_slope"] == pytest.approx(-2 / 3)
    assert len(a["trials"]) == 4 and len(a["trials"][0]) == 5
    assert math.isclose(a["per_n"][0]["mean_excess_risk"], sum(a["trials"][0]) / 5)


def test_strict_config():
    with pytest.raises(sr.ContractViolation):
        sr.rate_experiment({"problem": {"kind": "power_margin", "alpha": 1.0}, "trails": 3})
