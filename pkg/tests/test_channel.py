import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from carriergame import ChannelRealization, GameConfig, effective_gain, sample_channels, sinr
from carriergame.channel import sample_gains, sinr_matrix, snr_db_to_sigma2, trial_rng


def test_theta_one_gives_identical_rows(cfg4):
    import dataclasses
    cfg = dataclasses.replace(cfg4, theta=1.0)
    for t in range(50):
        ch = sample_channels(cfg, 3, t)
        assert np.array_equal(ch.gains[0], ch.gains[1])
        assert ch.same_best


def test_sampler_marginals_and_independence():
    K, trials = 16, 100_000
    rng = trial_rng(7, 0)
    gains = np.stack([sample_gains(rng, K, 0.0) for _ in range(trials)])
    means = gains.mean(axis=0)
    assert np.all((means >= 0.99) & (means <= 1.01))
    for k in range(K):
        r = np.corrcoef(gains[:, 0, k], gains[:, 1, k])[0, 1]
        assert -0.02 <= r <= 0.02


def test_correlated_marginals_stay_unit_mean():
    rng = trial_rng(11, 0)
    gains = np.stack([sample_gains(rng, 4, 0.7) for _ in range(40_000)])
    assert np.allclose(gains.mean(axis=0), 1.0, atol=0.03)
    # corr(|h1|^2, |h2|^2) = theta^2 for this construction
    r = np.corrcoef(gains[:, 0, 0], gains[:, 1, 0])[0, 1]
    assert r == pytest.approx(0.49, abs=0.03)


def test_sinr_examples():
    ch = ChannelRealization([[2.0, 1.0], [1.0, 1.0]], sigma2=1.0)
    assert sinr(ch, [[3.0, 0.0], [5.0, 0.0]], 0, 0) == 1.0
    assert sinr(ch, [[3.0, 0.0], [0.0, 0.0]], 0, 0) == 6.0
    assert sinr(ch, [[0.0, 0.0], [5.0, 0.0]], 0, 0) == 0.0
    with pytest.raises(ValueError):
        sinr(ch, [[-1.0, 0.0], [0.0, 0.0]], 0, 0)


def test_effective_gain_examples():
    ch = ChannelRealization([[4.0, 1.0], [2.0, 1.0]], sigma2=1.0)
    assert effective_gain(ch, 1.0, 0, 0) == pytest.approx(4.0 / 3.0, rel=1e-15)
    assert effective_gain(ch, 0.0, 0, 0) == 4.0
    vals = [effective_gain(ch, p, 0, 0) for p in np.geomspace(1e-3, 1e9, 50)]
    assert all(b < a for a, b in zip(vals, vals[1:]))
    assert vals[-1] < 1e-8


@settings(max_examples=200, deadline=None)
@given(st.lists(st.floats(1e-3, 1e3), min_size=4, max_size=4),
       st.lists(st.floats(0.0, 1e2), min_size=4, max_size=4),
       st.floats(1e-3, 10.0), st.integers(0, 1), st.integers(0, 1))
def test_sinr_is_effective_gain_times_power(g, p, s2, user, k):
    ch = ChannelRealization(np.reshape(g, (2, 2)), sigma2=s2)
    powers = np.reshape(p, (2, 2))
    assert sinr(ch, powers, user, k) == effective_gain(ch, powers[1 - user, k], user, k) * powers[user, k]
    assert sinr_matrix(ch, powers)[user, k] == pytest.approx(sinr(ch, powers, user, k), rel=1e-14)


def test_best_and_second_match_full_sort(cfg4):
    import dataclasses
    cfg = dataclasses.replace(cfg4, K=7)
    for t in range(1000):
        ch = sample_channels(cfg, 99, t)
        for n in range(2):
            order = sorted(range(7), key=lambda k: -ch.gains[n, k])
            assert (ch.best[n], ch.second[n]) == (order[0], order[1])
            assert ch.g_best(n) >= ch.g_second(n) >= np.sort(ch.gains[n])[-3]
        assert ch.gamma_hat == (ch.g_best(1) - ch.g_second(1)) / ch.g_second(1)
        assert ch.gamma_hat >= 0


def test_ties_break_to_lowest_index():
    ch = ChannelRealization([[1.0, 3.0, 3.0], [2.0, 2.0, 2.0]])
    assert ch.best == (1, 0) and ch.second == (2, 1)
    assert ch.gamma_hat == 0.0


def test_reproducible(cfg4):
    a = sample_channels(cfg4, 2024, 17, 3)
    b = sample_channels(cfg4, 2024, 17, 3)
    assert a.gains.tobytes() == b.gains.tobytes()
    assert not np.array_equal(a.gains, sample_channels(cfg4, 2024, 18, 3).gains)
    assert not np.array_equal(a.gains, sample_channels(cfg4, 2024, 17, 4).gains)


def test_gains_are_read_only(cfg4):
    ch = sample_channels(cfg4, 0, 0)
    with pytest.raises(ValueError):
        ch.gains[0, 0] = 1.0


def test_swapped_exchanges_roles():
    ch = ChannelRealization([[3.0, 1.0], [1.0, 2.0]], 0.5, (1.0, 2.0))
    sw = ch.swapped()
    assert np.array_equal(sw.gains, ch.gains[::-1])
    assert sw.rates == (2.0, 1.0) and sw.best == (1, 0)


@pytest.mark.parametrize("kwargs", [dict(K=1), dict(K=2.5), dict(sigma2=0.0), dict(rates=(1.0, 0.0)),
                                    dict(theta=1.5), dict(theta=-0.1)])
def test_config_validation(kwargs):
    with pytest.raises(ValueError):
        GameConfig(**kwargs)


@pytest.mark.parametrize("gains", [[[1.0, 0.0], [1.0, 1.0]], [[1.0], [1.0]], [[1.0, 2.0, 3.0]],
                                   [[1.0, np.inf], [1.0, 1.0]]])
def test_channel_validation(gains):
    with pytest.raises(ValueError):
        ChannelRealization(gains)


def test_snr_conversion():
    assert snr_db_to_sigma2(10.0) == pytest.approx(0.1)
    assert GameConfig.from_snr_db(20.0).sigma2 == pytest.approx(0.01)
