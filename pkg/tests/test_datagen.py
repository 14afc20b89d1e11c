import numpy as np
import pytest

from stabsel.core import DataError, GroupStructure, is_standardized, save_bundle, DatasetBundle
from stabsel.datagen import (
    DataConfig,
    config_table,
    gen_design,
    gen_groups,
    gen_truth_and_response,
    generate,
    noise_variance,
    scale_config,
)


def corr(X):
    return np.corrcoef(X, rowvar=False)


def test_type_a_uncorrelated():
    X = gen_design(DataConfig("A", 20, 2000, 1, 1.0), np.random.default_rng(0))
    C = corr(X)
    assert np.max(np.abs(C - np.eye(20))) < 0.15
    assert np.max(np.abs(X.mean(axis=0))) < 0.1


def test_type_b_block_correlation():
    X = gen_design(DataConfig("B", 40, 2000, 1, 1.0), np.random.default_rng(1))
    C = corr(X)
    block = np.arange(40) // 4
    same = (block[:, None] == block[None, :]) & ~np.eye(40, dtype=bool)
    diff = block[:, None] != block[None, :]
    assert np.max(np.abs(C[same] - 0.5)) < 0.1
    assert np.max(np.abs(C[diff])) < 0.1


def test_type_c_adjacent_correlation():
    X = gen_design(DataConfig("C", 30, 2000, 1, 1.0), np.random.default_rng(2))
    adj = [np.corrcoef(X[:, i], X[:, i + 1])[0, 1] for i in range(29)]
    assert np.max(np.abs(np.array(adj) - 0.99)) < 0.02
    assert np.corrcoef(X[:, 0], X[:, 10])[0, 1] == pytest.approx(0.99**10, abs=0.05)


@pytest.mark.parametrize("kind,factors", [("D", 2), ("E", 10)])
def test_factor_designs_low_rank_plus_noise(kind, factors):
    X = gen_design(DataConfig(kind, 60, 3000, 1, 1.0), np.random.default_rng(3))
    ev = np.sort(np.linalg.eigvalsh(np.cov(X, rowvar=False)))[::-1]
    # a few large eigenvalues, then a bulk near the unit noise variance
    assert ev[factors - 1] > 5 * ev[factors + 1]
    assert ev[factors + 1] < 2.5


def test_groups_group_lasso():
    g = gen_groups(DataConfig("A", 8, 10, 1, 1.0, "group-lasso"))
    assert g.input_groups == ((0, 1, 2, 3), (4, 5, 6, 7)) and g.is_partition(8)
    assert g.output_groups == ()


def test_groups_siol():
    g = gen_groups(DataConfig("A", 20, 10, 1, 1.0, "siol"))
    one_based = [[i + 1 for i in grp] for grp in g.input_groups]
    assert one_based == [list(range(1, 7)), list(range(5, 12)), list(range(10, 17)), list(range(15, 21))]
    assert g.output_groups == ((0, 1, 2, 3, 4),)
    np.testing.assert_allclose(g.input_weights, np.sqrt([6, 7, 7, 6]))


def test_groups_lasso_empty():
    assert gen_groups(DataConfig("A", 8, 10, 1, 1.0)).is_empty


def test_noise_variance_formula():
    N = 100
    sig = np.zeros(N)
    sig[:50] = 2.0  # ||X beta||^2 = 200
    assert noise_variance(sig, 2.0) == pytest.approx(1.0)
    assert noise_variance(np.ones((10, 5)), 1.0) == pytest.approx(1.0)


def test_high_snr_response_follows_signal():
    cfg = DataConfig("A", 30, 200, 3, 1e12)
    b = generate(cfg, seed=4)
    signal = b.design @ b.beta_true
    z = (signal - signal.mean()) / signal.std()
    np.testing.assert_allclose(b.response, z, atol=1e-5)


def test_generate_standardized_and_truth_consistent():
    b = generate(DataConfig("D", 40, 60, 5, 0.5), seed=5)
    assert is_standardized(b)
    assert np.array_equal(b.truth_mask, b.beta_true != 0)
    assert b.truth_mask.sum() == 5
    assert b.meta["seed"] == 5 and b.meta["snr"] == 0.5


def test_siol_truth_size_varies_with_overlap():
    cfg = DataConfig("A", 50, 30, 3, 2.0, "siol")
    sizes = {int(generate(cfg, seed=s).truth_mask.sum()) for s in range(50)}
    assert len(sizes) > 1
    assert all(sz % 5 == 0 for sz in sizes)


def test_generate_deterministic():
    cfg = DataConfig("B", 20, 30, 2, 2.0)
    a, b = generate(cfg, seed=9), generate(cfg, seed=9)
    np.testing.assert_array_equal(a.design, b.design)
    np.testing.assert_array_equal(a.response, b.response)
    assert not np.array_equal(a.design, generate(cfg, seed=10).design)


def test_config_validation():
    with pytest.raises(ValueError):
        DataConfig("Z", 10, 10, 1, 1.0)
    with pytest.raises(ValueError):
        DataConfig("A", 10, 10, 1, 1.0, "group-lasso")
    with pytest.raises(ValueError):
        DataConfig("B", 15, 10, 1, 1.0)
    with pytest.raises(ValueError):
        DataConfig("A", 10, 10, 1, 0.0)
    with pytest.raises(ValueError):
        generate(DataConfig("A", 10, 10, 11, 1.0))


def test_config_tables():
    lasso = config_table("lasso")
    assert DataConfig("A", 1000, 100, 4, 0.5) in lasso
    assert DataConfig("A", 500, 500, 5, 0.5, "siol") in config_table("siol")
    assert len(lasso) == 56 and len(config_table("group-lasso")) == 56 and len(config_table("siol")) == 26
    assert all(c.matrix_type != "external" for c in config_table("lasso", include_external=False))


def test_scale_config():
    c = scale_config(DataConfig("A", 1000, 1000, 20, 2.0), 0.2)
    assert (c.N, c.d, c.s) == (200, 200, 4)
    g = scale_config(DataConfig("B", 1000, 200, 10, 2.0, "group-lasso"), 0.13)
    assert g.d % 4 == 0 and g.d % 10 == 0
    assert scale_config(c, 1.0) is c


def test_external_design(tmp_path):
    rng = np.random.default_rng(6)
    X = rng.standard_normal((12, 7))
    save_bundle(DatasetBundle(X, rng.standard_normal(12)), tmp_path)
    cfg = DataConfig("external", 7, 12, 2, 2.0, external_path=str(tmp_path))
    b = generate(cfg, seed=1)
    assert b.shape.n_inputs == 7 and is_standardized(b)
    with pytest.raises(DataError):
        generate(DataConfig("external", 8, 12, 2, 2.0, external_path=str(tmp_path)))


def test_truth_and_response_on_given_design():
    X = generate(DataConfig("A", 12, 40, 2, 1.0), seed=0).design
    b = gen_truth_and_response(X, GroupStructure(), DataConfig("A", 12, 40, 2, 1.0), np.random.default_rng(0))
    assert b.truth_mask.sum() == 2 and b.meta["sigma2"] > 0
