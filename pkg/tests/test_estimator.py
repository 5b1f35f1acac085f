import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from cpmisspec import (ConfigurationError, Dataset, DegenerateDesignError, KnownLevelsFitter,
                       fit_stump, fit_theta_known_levels, rss_profile)
from cpmisspec.estimator import (BELOW_DATA_GAP, fit_stump_batch, fit_theta_known_levels_batch,
                                 known_levels_criterion)

from conftest import brute_force_known_levels, brute_force_stump, random_dataset


def test_exact_stump_data():
    fit = fit_stump(Dataset([0.1, 0.2, 0.7, 0.9], [0, 0, 1, 1]))
    assert (fit.theta_hat, fit.beta_l_hat, fit.beta_u_hat, fit.rss, fit.n_left) == (0.2, 0, 1, 0, 2)


def test_constant_response_takes_smallest_split():
    d = Dataset([0.5, 0.1, 0.9, 0.3], [2.0] * 4)
    fit = fit_stump(d)
    assert fit.theta_hat == 0.1
    assert fit.beta_l_hat == fit.beta_u_hat == 2.0
    assert fit.rss == 0.0


def test_identical_covariates_rejected():
    with pytest.raises(DegenerateDesignError):
        fit_stump(Dataset([0.3, 0.3, 0.3], [0, 1, 2]))
    with pytest.raises(DegenerateDesignError):
        rss_profile(Dataset([0.3, 0.3], [0, 1]))


@pytest.mark.parametrize("seed", range(5))
def test_random_ten_point_dataset_matches_enumeration(seed):
    d = random_dataset(np.random.default_rng(seed), 10)
    fit = fit_stump(d)
    theta, rss = brute_force_stump(d.x, d.y)
    assert fit.theta_hat == theta
    assert fit.rss == pytest.approx(rss, rel=1e-12, abs=1e-12)


def test_known_levels_hand_example():
    assert fit_theta_known_levels(Dataset([0.2, 0.8], [0, 1]), 0.0, 1.0) == 0.2
    cands, vals = known_levels_criterion(Dataset([0.2, 0.8], [0, 1]), 0.0, 1.0)
    assert np.allclose(vals, [0.0, -0.5, 0.0])


def test_known_levels_all_above_mid_gives_sentinel():
    d = Dataset([0.4, 0.1, 0.7], [0.9, 0.8, 0.6])
    assert fit_theta_known_levels(d, 0.0, 1.0) == 0.1 - BELOW_DATA_GAP


def test_known_levels_rejects_bad_levels():
    with pytest.raises(ConfigurationError):
        fit_theta_known_levels(Dataset([0.1, 0.2], [0, 1]), 1.0, 1.0)
    with pytest.raises(ConfigurationError):
        KnownLevelsFitter(2.0, 1.0)


@pytest.mark.parametrize("seed", range(5))
def test_random_twelve_point_known_levels(seed):
    d = random_dataset(np.random.default_rng(seed), 12)
    theta, _, _ = brute_force_known_levels(d.x, d.y, 0.0, 1.0)
    assert fit_theta_known_levels(d, 0.0, 1.0) == theta


def test_profile_exact_stump():
    prof = rss_profile(Dataset([0.1, 0.2, 0.7, 0.9], [0, 0, 1, 1]))
    assert prof.shape == (3, 2)
    assert np.array_equal(prof[:, 0], [0.1, 0.2, 0.7])
    assert prof[1, 1] == 0.0


def test_profile_consistency(rng):
    for _ in range(50):
        d = random_dataset(rng, int(rng.integers(3, 60)))
        prof = rss_profile(d)
        fit = fit_stump(d)
        assert prof.shape[0] == d.n - 1
        # the profile uses prefix sums, the fit a direct sum of squares
        tss = float(((d.y - d.y.mean()) ** 2).sum())
        assert abs(prof[:, 1].min() - fit.rss) <= 1e-13 * tss
        assert prof[int(np.argmin(prof[:, 1])), 0] == fit.theta_hat


def test_fit_invariants(rng):
    for _ in range(50):
        d = random_dataset(rng, int(rng.integers(2, 80)), ties=bool(rng.integers(2)))
        if np.unique(d.x).size < 2:
            continue
        fit = fit_stump(d)
        left = d.x <= fit.theta_hat
        assert 1 <= fit.n_left == left.sum() <= d.n - 1
        assert fit.beta_l_hat == pytest.approx(d.y[left].mean(), abs=1e-12)
        assert fit.beta_u_hat == pytest.approx(d.y[~left].mean(), abs=1e-12)
        direct = ((d.y[left] - fit.beta_l_hat) ** 2).sum() + ((d.y[~left] - fit.beta_u_hat) ** 2).sum()
        assert fit.rss == pytest.approx(direct, rel=1e-9, abs=1e-12)


@settings(max_examples=50, deadline=None)
@given(seed=st.integers(0, 2 ** 32 - 1), n=st.integers(2, 50), ties=st.booleans())
def test_oracle_equivalence_property(seed, n, ties):
    d = random_dataset(np.random.default_rng(seed), n, ties)
    if np.unique(d.x).size >= 2:
        theta, rss = brute_force_stump(d.x, d.y)
        fit = fit_stump(d)
        assert fit.theta_hat == theta
        assert fit.rss == pytest.approx(rss, rel=1e-12, abs=1e-12)
    kl, _, _ = brute_force_known_levels(d.x, d.y, -0.2, 1.3)
    assert fit_theta_known_levels(d, -0.2, 1.3) == kl


@settings(max_examples=30, deadline=None)
@given(seed=st.integers(0, 2 ** 32 - 1), n=st.integers(2, 40))
def test_duplicating_data_keeps_theta(seed, n):
    d = random_dataset(np.random.default_rng(seed), n)
    dd = Dataset(np.concatenate([d.x, d.x]), np.concatenate([d.y, d.y]))
    assert fit_stump(dd).theta_hat == fit_stump(d).theta_hat
    assert fit_theta_known_levels(dd, 0, 1) == fit_theta_known_levels(d, 0, 1)


@settings(max_examples=30, deadline=None)
@given(seed=st.integers(0, 2 ** 32 - 1), n=st.integers(2, 40),
       c=st.floats(-100, 100, allow_nan=False))
def test_shift_equivariance(seed, n, c):
    d = random_dataset(np.random.default_rng(seed), n)
    a, b = fit_stump(d), fit_stump(Dataset(d.x, d.y + c))
    # the split is unchanged unless two splits tie to rounding
    prof = rss_profile(d)[:, 1]
    gap = np.sort(prof)[1] - prof.min() if prof.size > 1 else np.inf
    if gap > 1e-9 * max(1.0, abs(prof.min())):
        assert b.theta_hat == a.theta_hat
    assert b.beta_l_hat - a.beta_l_hat == pytest.approx(c, abs=1e-9)
    assert b.beta_u_hat - a.beta_u_hat == pytest.approx(c, abs=1e-9)


def test_batch_matches_single(rng):
    X = rng.random((40, 25))
    X[::5, 3] = X[::5, 4]  # some ties
    Y = (X > 0.4) + 0.5 * rng.standard_normal(X.shape)
    single = [fit_stump(Dataset(x, y)).theta_hat for x, y in zip(X, Y)]
    assert np.array_equal(fit_stump_batch(X, Y), single)
    kl = [fit_theta_known_levels(Dataset(x, y), 0.0, 1.0) for x, y in zip(X, Y)]
    assert np.array_equal(fit_theta_known_levels_batch(X, Y, 0.0, 1.0), kl)


def test_batch_rejects_degenerate_rows():
    with pytest.raises(DegenerateDesignError):
        fit_stump_batch(np.full((2, 3), 0.5), np.zeros((2, 3)))
