import json
import math

import numpy as np
import pytest

from stabsel.control import nfp_bound
from stabsel.datagen import DataConfig
from stabsel.harness import (
    ExperimentError,
    ExperimentSpec,
    PowerMetricConfig,
    cv_overselection,
    error_control_table,
    expected_cells,
    gamma_power,
    job_seeds,
    load_store,
    max_ntp_curve,
    model_choice_table,
    roc_curve,
    run_experiment,
    stability_points,
    stability_v_at_bound,
    write_report,
)

from oracles import ceil_threshold

SMALL = DataConfig("A", 30, 40, 3, 2.0)


def spec_for(tmp_path, **kw):
    base = dict(configs=[SMALL], replicates=1, regimes=("baseline",), scale=1.0, out_dir=str(tmp_path / "store"),
                iterations=10, folds=3, splits=2, baseline_grid=3, calibration_grid=100, joint_lambdas=3)
    base.update(kw)
    return ExperimentSpec(**base)


def test_baseline_grid_three_cells(tmp_path):
    spec = spec_for(tmp_path)
    s = run_experiment(spec)
    assert s.written == 3 and s.cells == 3 and s.status == "ok"
    assert len(list((tmp_path / "store" / "cells").glob("*.json"))) == 3
    recs = load_store(tmp_path / "store")
    assert [r["point"] for r in recs] == [0, 1, 2] and recs[0]["size"] == 0


def test_resume_makes_no_new_invocations(tmp_path):
    spec = spec_for(tmp_path, regimes=("baseline", "stability", "cross-validation"))
    first = run_experiment(spec)
    assert first.invocations > 0
    again = run_experiment(spec)
    assert again.invocations == 0 and again.written == 0 and again.skipped == first.written


def test_partial_store_only_fills_gaps(tmp_path):
    spec = spec_for(tmp_path, replicates=2)
    run_experiment(spec)
    victim = sorted((tmp_path / "store" / "cells").glob("*.json"))[0]
    victim.unlink()
    s = run_experiment(spec)
    assert s.written == 3 and s.skipped == 3


def test_store_completeness_invariant(tmp_path):
    spec = spec_for(tmp_path, replicates=2, regimes=("baseline", "stability", "screen-and-clean", "cross-validation"),
                    pi_grid=(0.6, 0.9), pi_sac_grid=(0.5, 5.0))
    s = run_experiment(spec)
    assert s.written == expected_cells(spec) == 2 * (3 + 2 + 2 + 1)


def test_determinism_byte_identical(tmp_path):
    kw = dict(regimes=("baseline", "stability", "screen-and-clean", "cross-validation"), replicates=2)
    a = spec_for(tmp_path / "a", **kw)
    b = spec_for(tmp_path / "b", **kw)
    run_experiment(a)
    run_experiment(b)
    fa = sorted((tmp_path / "a" / "store" / "cells").iterdir())
    fb = sorted((tmp_path / "b" / "store" / "cells").iterdir())
    assert [p.name for p in fa] == [p.name for p in fb]
    assert all(x.read_bytes() == y.read_bytes() for x, y in zip(fa, fb))


def test_master_seed_changes_data():
    s0, s1 = job_seeds(0, SMALL, 0), job_seeds(1, SMALL, 0)
    assert s0 != s1 and job_seeds(0, SMALL, 0) == s0
    assert job_seeds(0, SMALL, 1) != s0
    assert len(set(s0.values())) == 4


def test_spec_roundtrip_and_validation(tmp_path):
    spec = spec_for(tmp_path, regimes=("stability",))
    assert ExperimentSpec.from_dict(json.loads(json.dumps(spec.to_dict()))) == spec
    with pytest.raises(ValueError):
        ExperimentSpec.from_dict({**spec.to_dict(), "bogus": 1})
    with pytest.raises(ValueError):
        spec_for(tmp_path, regimes=("magic",))
    with pytest.raises(ValueError):
        spec_for(tmp_path, pi_grid=(0.4,))


def test_all_jobs_failing_raises(tmp_path):
    bad = DataConfig("external", 5, 10, 1, 1.0, external_path=str(tmp_path / "missing"))
    with pytest.raises(ExperimentError):
        run_experiment(spec_for(tmp_path, configs=[bad]))


# ---------------------------------------------------------------------------
# metrics on synthetic records


def test_roc_identical_regime_is_one():
    pts = [[(0, 0), (0, 2), (1, 3), (4, 4)], [(0, 1), (2, 3)]]
    curve = roc_curve(pts, pts, max_v=5)
    assert all(p.ratio == 1.0 for p in curve)


def test_roc_perfect_vs_half():
    s = 6
    curve = roc_curve([[(0, s)]], [[(0, s // 2)]], max_v=3)
    assert curve[0].ratio == pytest.approx(4 / 3)


def test_roc_empty_regime_is_zero():
    curve = roc_curve([[(0, 0)]], [[(0, 2), (3, 4)]], max_v=4)
    assert [p.ratio for p in curve] == [0.0] * 5


def test_roc_both_zero_flagged():
    curve = roc_curve([[(0, 0)]], [[(0, 0)]], max_v=1)
    assert all(p.ratio == 1.0 and p.degenerate for p in curve)


def test_max_ntp_curve_monotone():
    rng = np.random.default_rng(0)
    pts = [(int(v), int(t)) for v, t in rng.integers(0, 15, size=(40, 2))]
    c = max_ntp_curve(pts, 20)
    assert np.all(np.diff(c) >= 0)
    for v in range(21):
        assert c[v] == max([t for pv, t in pts if pv <= v], default=0)


def test_gamma_power_examples():
    assert gamma_power([[(0, 5)], [(0, 5)]], [5, 5], PowerMetricConfig(1.0)) == 1.0
    assert gamma_power([[(1, 5)], [(1, 3), (1, 0)]], [5, 5], PowerMetricConfig(0.2)) == 0.0
    assert ceil_threshold(0.4, 10) == 4
    assert gamma_power([[(0, 4)], [(0, 3)]], [10, 10], PowerMetricConfig(0.4)) == 0.5
    with pytest.raises(ValueError):
        PowerMetricConfig(0.0)


def _stability_record(counts, I, q_hat, K, replicate=0, cid="c"):
    return {"regime": "stability", "algorithm": "lasso", "matrix_type": "A", "l1_weight": 1.0, "point": 0,
            "config_id": cid, "replicate": replicate, "iterations": I, "q_hat": q_hat, "K": K,
            "stable_counts": counts, "params": {"pi": 1.0, "lambda": 0.1}, "size": 0, "T": 0, "V": 0,
            "bound": 0.0, "n_true": 2}


def test_stability_v_at_bound_inversion():
    K = 1000
    q = math.sqrt(0.8 * K)
    counts = [[1, 1, 100, True], [2, 1, 90, False], [3, 1, 89, False], [4, 1, 60, True]]
    rec = _stability_record(counts, 100, q, K)
    T, V, bound, clamped = stability_v_at_bound(rec, 1.0)  # pi = 0.9
    assert (T, V, clamped) == (1, 1, False) and bound == pytest.approx(1.0)
    T, V, _, _ = stability_v_at_bound(rec, 10.0)  # pi = 0.54
    assert (T, V) == (2, 2)
    assert nfp_bound(q, K, 0.9) == pytest.approx(1.0)


def test_stability_points_sweep():
    counts = [[1, 1, 100, True], [2, 1, 90, False], [4, 1, 60, True]]
    pts = stability_points(_stability_record(counts, 100, 5.0, 10))
    assert pts == [(0, 0), (0, 1), (1, 1), (1, 2)]


def test_error_control_table_rows():
    K = 1000
    q = math.sqrt(0.8 * K)
    recs = [_stability_record([[1, 1, 95, False]], 100, q, K, replicate=r) for r in range(2)]
    recs.append(_stability_record([], 100, q, K, replicate=2))
    rows = error_control_table(recs, targets=(1.0,))
    assert len(rows) == 1
    r = rows[0]
    assert r.mean_v == pytest.approx(2 / 3) and r.p_v_within_bound == 1.0 and r.replicates == 3


def _cell(regime, rep, point, T, V, **kw):
    rec = {"regime": regime, "algorithm": "lasso", "matrix_type": "A", "l1_weight": 1.0, "config_id": "c",
           "replicate": rep, "point": point, "T": T, "V": V, "size": T + V, "n_true": 4}
    rec.update(kw)
    return rec


def test_model_choice_table_proxy_equals_oracle():
    # B-hat equals the true V at every pi: the proxied and oracle picks coincide
    recs = []
    for rep in range(2):
        for point, (pi, T, V) in enumerate([(0.9, 2, 0), (0.7, 3, 1), (0.6, 4, 3)]):
            recs.append(_cell("stability", rep, point, T, V, bound=float(V), params={"pi": pi, "lambda": 0.1}))
    rows = model_choice_table(recs)
    assert len(rows) == 1
    r = rows[0]
    assert (r.mean_t_proxy, r.mean_v_proxy) == (r.mean_t_oracle, r.mean_v_oracle) == (2.0, 0.0)


def test_model_choice_table_cv_uses_baseline_oracle():
    recs = [_cell("cross-validation", 0, 0, 3, 4, params={"lambda": 0.1})]
    recs += [_cell("baseline", 0, i, T, V, params={"lambda": 1.0 - i / 10})
             for i, (T, V) in enumerate([(0, 0), (2, 0), (3, 2)])]
    (row,) = model_choice_table(recs)
    assert (row.mean_t_proxy, row.mean_v_proxy, row.mean_t_oracle, row.mean_v_oracle) == (3, 4, 2, 0)


def test_cv_overselection_counts():
    K = 100
    q = math.sqrt(0.8 * K)
    recs = [_cell("cross-validation", 0, 0, 2, 5), _cell("cross-validation", 1, 0, 1, 0)]
    recs += [_stability_record([[1, 1, 100, True]], 100, q, K, replicate=r) for r in range(2)]
    out = cv_overselection(recs)
    assert out["replicates"] == 2 and out["fraction_cv_larger"] == 0.5
    assert out["fraction_configs_more_negatives"] == 1.0


def test_reports_from_real_store(tmp_path):
    spec = spec_for(tmp_path, replicates=2, regimes=("baseline", "stability", "screen-and-clean", "cross-validation"),
                    pi_grid=(0.6, 0.9), pi_sac_grid=(0.5, 5.0))
    run_experiment(spec)
    for table in ("roc", "error-control", "model-choice", "gamma-power"):
        out = tmp_path / f"{table}.csv"
        n = write_report(tmp_path / "store", table, out)
        lines = out.read_text().splitlines()
        assert n > 0 and len(lines) == n + 1
    roc = (tmp_path / "roc.csv").read_text().splitlines()
    # floats carry at most 6 significant digits
    ratio = roc[1].split(",")[8]
    assert len(ratio.replace(".", "").replace("-", "").lstrip("0")) <= 6
