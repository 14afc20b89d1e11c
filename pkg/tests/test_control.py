import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from stabsel.control import (
    BoundEstimate,
    Candidate,
    ObjectiveSpec,
    calibrate_lambda,
    calibration_target,
    choose,
    model_choice,
    nfp_bound,
    pi_for_bound,
    sac_candidates,
    stability_candidates,
)
from stabsel.meta import SacConfig, StabilityConfig, StabilityProfile
from stabsel.solvers import lambda_grid, lambda_max

from conftest import make_bundle


def test_nfp_bound_examples():
    assert nfp_bound(math.sqrt(800), 1000, 0.9) == pytest.approx(1.0, rel=1e-12)
    assert nfp_bound(7.0, 50, 1.0) == pytest.approx(49 / 50)
    assert nfp_bound(0.0, 50, 0.6) == 0.0
    assert BoundEstimate(7.0, 50, 1.0).value == nfp_bound(7.0, 50, 1.0)
    for bad in [(1.0, 10, 0.5), (1.0, 10, 1.1), (-1.0, 10, 0.9), (1.0, 0, 0.9)]:
        with pytest.raises(ValueError):
            nfp_bound(*bad)


def test_pi_inversion_examples():
    K = 1000
    q = math.sqrt(0.8 * K)
    assert pi_for_bound(q, K, 1.0) == (pytest.approx(0.9), False)
    assert pi_for_bound(q, K, 10.0) == (pytest.approx(0.54), False)
    assert pi_for_bound(q, K, 0.1) == (1.0, True)
    pi, clamped = pi_for_bound(0.0, K, 1.0)
    assert clamped and 0.5 < pi < 0.5 + 1e-12


@settings(max_examples=200, deadline=None)
@given(q=st.floats(0.1, 100), K=st.integers(1, 10_000), target=st.floats(0.01, 50))
def test_pi_inversion_round_trip(q, K, target):
    pi, clamped = pi_for_bound(q, K, target)
    if not clamped:
        assert nfp_bound(q, K, pi) == pytest.approx(target, abs=1e-9, rel=1e-9)


def test_calibration_target():
    assert calibration_target(1000) == pytest.approx(math.sqrt(800))
    assert calibration_target(1000, 5, per_output=True) == pytest.approx(math.sqrt(4000))
    assert calibration_target(1000, 5) == pytest.approx(math.sqrt(800))


def _stub_factory(shape, q_of_lambda):
    """lam -> sub-algorithm selecting the first q(lam) inputs every time."""

    def factory(lam):
        def sub(data):
            m = np.zeros((shape.n_inputs, shape.n_outputs), dtype=bool)
            m[: q_of_lambda[lam], 0] = True
            return m

        return sub

    return factory


def test_calibration_stops_at_first_exceeding():
    data = make_bundle(20, 6)
    grid = [5.0, 4.0, 3.0, 2.0, 1.0]
    factory = _stub_factory(data.shape, {5.0: 1, 4.0: 2, 3.0: 3, 2.0: 4, 1.0: 5})
    cal = calibrate_lambda(data, factory, 2.5, grid, StabilityConfig(iterations=4))
    assert cal.lam == 3.0 and cal.index == 2 and cal.reached
    assert [q for _, q in cal.path] == [1.0, 2.0, 3.0]
    assert cal.warning is None


def test_calibration_target_zero_walks_past_empty():
    data = make_bundle(20, 6)
    grid = [5.0, 4.0, 3.0]
    factory = _stub_factory(data.shape, {5.0: 0, 4.0: 0, 3.0: 2})
    cal = calibrate_lambda(data, factory, 0.0, grid, StabilityConfig(iterations=3))
    assert cal.lam == 3.0
    factory = _stub_factory(data.shape, {5.0: 1, 4.0: 2, 3.0: 2})
    assert calibrate_lambda(data, factory, 0.0, grid, StabilityConfig(iterations=3)).lam == 5.0


def test_calibration_unreached_warns():
    data = make_bundle(30, 6, seed=2)
    lmax = lambda_max(data, "lasso")
    grid = [4 * lmax, 2 * lmax]
    cal = calibrate_lambda(data, "lasso", 1.0, grid, StabilityConfig(iterations=5))
    assert not cal.reached and cal.profile.q_hat == 0.0 and cal.warning
    assert cal.lam == 2 * lmax


def test_calibration_real_solver_reaches_target():
    data = make_bundle(60, 20, seed=3)
    grid = lambda_grid(lambda_max(data, "lasso"), 0.95, 100)
    target = calibration_target(20)
    cal = calibrate_lambda(data, "lasso", target, grid, StabilityConfig(iterations=10))
    assert cal.reached and cal.profile.q_hat > target
    assert all(q <= target for _, q in cal.path[:-1])


# ---------------------------------------------------------------------------
# model choice


def test_choose_hand_example():
    c = choose([Candidate({"a": 1}, 10, 1.0), Candidate({"a": 2}, 12, 3.0)])
    assert c.params == {"a": 1} and c.score == 8 and c.t_hat == 9 and c.v_hat == 1


def test_choose_tie_breaks_on_size_then_proxy():
    cands = [Candidate({"i": 0}, 6, 2.0), Candidate({"i": 1}, 4, 0.0), Candidate({"i": 2}, 4, 0.0)]
    assert choose(cands).params == {"i": 1}


def test_choose_clamps_proxy_to_size():
    # B-hat above |S| cannot mean more false positives than selected elements
    c = choose([Candidate({}, 2, 50.0)])
    assert c.v_hat == 2 and c.t_hat == 0


def test_choose_custom_objective():
    obj = ObjectiveSpec(lambda t, v: t - 3 * v)
    c = choose([Candidate({"i": 0}, 10, 2.0), Candidate({"i": 1}, 5, 0.5)], obj)
    assert c.params == {"i": 1}


def test_stability_candidates_all_empty_returns_largest_pi():
    prof = StabilityProfile(np.zeros((5, 1), dtype=np.int64), (0,) * 10, 10)
    cands = stability_candidates(prof, [0.6, 0.9, 0.75], 5)
    c = choose(cands)
    assert c.score == 0 and c.params["pi"] == 0.9


def test_sac_candidates_threshold():
    p = np.array([[0.01], [0.5], [3.0]])
    sizes = [c.size for c in sac_candidates(p, [0.1, 1.0, 5.0])]
    assert sizes == [1, 2, 3]


def test_model_choice_regimes_run():
    data = make_bundle(40, 8, seed=4)
    grid = lambda_grid(lambda_max(data, "lasso"), 0.9, 25)
    pis = [0.6, 0.75, 0.9]
    st_cfg = StabilityConfig(iterations=10)
    fixed = model_choice(data, "lasso", "stability-fixed-lambda", pi_grid=pis, lambdas=grid, stability=st_cfg)
    joint = model_choice(data, "lasso", "stability-joint", pi_grid=pis, lambdas=grid[::4], stability=st_cfg)
    sac = model_choice(data, "lasso", "screen-and-clean", pi_grid=[0.1, 1.0],
                       sac=SacConfig(splits=2, folds=3))
    for mc in (fixed, joint, sac):
        assert mc.selection.shape == data.shape
        assert mc.score == pytest.approx(mc.t_hat - mc.v_hat)
    assert "lambda" in joint.params and "pi" in joint.params
    assert "pi_sac" in sac.params
    with pytest.raises(ValueError):
        model_choice(data, "lasso", "nonsense", pi_grid=pis)
