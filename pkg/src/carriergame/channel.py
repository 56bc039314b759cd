"""Fading realizations, SINR and effective channel gains.

Users are indexed 0 (leader) and 1 (follower); carriers are 0-based.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Tuple

import numpy as np

from .efficiency import EfficiencyModel


def snr_db_to_sigma2(snr_db: float) -> float:
    return 10.0 ** (-snr_db / 10.0)


@dataclass(frozen=True)
class GameConfig:
    K: int = 4
    sigma2: float = 0.1
    rates: Tuple[float, float] = (1e6, 1e6)
    theta: float = 0.0
    model: EfficiencyModel = field(default_factory=lambda: EfficiencyModel.exp_block(100))

    def __post_init__(self):
        if int(self.K) != self.K or self.K < 2:
            raise ValueError(f"K must be an integer >= 2, got {self.K!r}")
        if not self.sigma2 > 0:
            raise ValueError("sigma2 must be positive")
        if len(self.rates) != 2 or min(self.rates) <= 0:
            raise ValueError("rates must be a pair of positive numbers")
        if not 0.0 <= self.theta <= 1.0:
            raise ValueError("theta must lie in [0, 1]")
        object.__setattr__(self, "rates", (float(self.rates[0]), float(self.rates[1])))

    @classmethod
    def from_snr_db(cls, snr_db: float = 10.0, **kwargs) -> "GameConfig":
        return cls(sigma2=snr_db_to_sigma2(snr_db), **kwargs)


class ChannelRealization:
    """Power gains g[n, k] for two users over K carriers, plus noise and rates.

    ``best[n]``/``second[n]`` are the indices of user n's largest and
    second-largest gains (ties go to the lower carrier index).
    """

    def __init__(self, gains, sigma2: float = 1.0, rates=(1.0, 1.0)):
        g = np.array(gains, dtype=float)
        if g.ndim != 2 or g.shape[0] != 2 or g.shape[1] < 2:
            raise ValueError(f"gains must have shape (2, K) with K >= 2, got {g.shape}")
        if not np.all(g > 0) or not np.all(np.isfinite(g)):
            raise ValueError("gains must be finite and strictly positive")
        if not sigma2 > 0:
            raise ValueError("sigma2 must be positive")
        g.setflags(write=False)
        self.gains = g
        self.sigma2 = float(sigma2)
        self.rates = (float(rates[0]), float(rates[1]))
        order = np.argsort(-g, axis=1, kind="stable")
        self.best = (int(order[0, 0]), int(order[1, 0]))
        self.second = (int(order[0, 1]), int(order[1, 1]))

    @property
    def K(self) -> int:
        return self.gains.shape[1]

    def g_best(self, n: int) -> float:
        return float(self.gains[n, self.best[n]])

    def g_second(self, n: int) -> float:
        return float(self.gains[n, self.second[n]])

    def ratio(self, n: int) -> float:
        """g_best / g_second for user n."""
        return self.g_best(n) / self.g_second(n)

    @property
    def gamma_hat(self) -> float:
        """Relative gap between the follower's two best carriers."""
        return (self.g_best(1) - self.g_second(1)) / self.g_second(1)

    @property
    def same_best(self) -> bool:
        return self.best[0] == self.best[1]

    def swapped(self) -> "ChannelRealization":
        """Same channel with the two players' roles exchanged."""
        return ChannelRealization(self.gains[::-1], self.sigma2, self.rates[::-1])

    def __repr__(self):
        return f"ChannelRealization(K={self.K}, sigma2={self.sigma2:g}, best={self.best})"


def trial_rng(seed: int, trial: int, sweep_index: int = 0) -> np.random.Generator:
    """Counter-based stream: any (seed, sweep_index, trial) is reproducible on its own."""
    return np.random.Generator(np.random.Philox(key=[seed & (2**64 - 1), (sweep_index << 32) | trial]))


def sample_gains(rng: np.random.Generator, K: int, theta: float) -> np.ndarray:
    """Unit-mean exponential power gains with a shared Gaussian component.

    h[n, k] = sqrt(theta) c[k] + sqrt(1 - theta) z[n, k] with c, z i.i.d. CN(0, 1);
    theta = 0 is independent across users, theta = 1 gives identical rows.
    """
    draws = rng.standard_normal((3, K, 2)) * np.sqrt(0.5)
    cplx = draws[..., 0] + 1j * draws[..., 1]
    h = np.sqrt(theta) * cplx[0] + np.sqrt(1.0 - theta) * cplx[1:]
    return np.abs(h) ** 2


def sample_channels(config: GameConfig, seed: int, trial: int, sweep_index: int = 0) -> ChannelRealization:
    gains = sample_gains(trial_rng(seed, trial, sweep_index), config.K, config.theta)
    return ChannelRealization(gains, config.sigma2, config.rates)


def effective_gain(channel: ChannelRealization, opp_power: float, user: int, carrier: int) -> float:
    """SINR per unit own power: g[n, k] / (sigma2 + g[m, k] p[m, k])."""
    g = channel.gains
    return float(g[user, carrier] / (channel.sigma2 + g[1 - user, carrier] * opp_power))


def sinr(channel: ChannelRealization, powers, user: int, carrier: int) -> float:
    p = np.asarray(powers, dtype=float)
    if np.any(p < 0):
        raise ValueError("powers must be nonnegative")
    return effective_gain(channel, p[1 - user, carrier], user, carrier) * float(p[user, carrier])


def sinr_matrix(channel: ChannelRealization, powers) -> np.ndarray:
    """SINR of both users on every carrier, shape (2, K)."""
    p = np.asarray(powers, dtype=float)
    g = channel.gains
    return g * p / (channel.sigma2 + (g * p)[::-1])
