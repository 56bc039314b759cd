"""Follower best response, Stackelberg and Nash equilibria, and a grid oracle.

Player 0 is the leader, player 1 the follower.  Every equilibrium of this game
puts each player's whole power on a single carrier, so allocations are built
from (carrier, power) pairs.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Optional, Sequence, Tuple, Union

import numpy as np

from .channel import ChannelRealization, GameConfig, sinr_matrix
from .efficiency import BetaStar, EfficiencyModel, GammaStar, solve_beta_star, solve_gamma_star

# Relative power increase that makes the follower's choice of its second
# carrier strict when the W candidate wins.
W_MARGIN = 1e-9
EPS_SEARCH_MAX_ITER = 200
ORACLE_P_MIN = 1e-6
ORACLE_P_MAX = 1e4
ORACLE_POINTS_PER_DECADE = 200


class ZeroPower(ValueError):
    """Utility requested for a user that transmits no power."""


class OutcomeKind(str, Enum):
    NASH_EXACT = "nash_exact"
    NASH_INFEASIBLE = "nash_infeasible"
    STACKELBERG_EXACT = "stackelberg_exact"
    STACKELBERG_EPSILON = "stackelberg_epsilon"
    NO_EQUILIBRIUM = "no_equilibrium"


class Branch(str, Enum):
    DISTINCT_BEST = "distinct_best"
    SMALL_GAP = "small_gap"
    V = "V"
    W = "W"
    U = "U"
    V0 = "V0"
    SPLIT = "split"
    SAME_CARRIER_NASH = "same_carrier_nash"
    ORACLE = "oracle"


ModelLike = Union[GameConfig, EfficiencyModel]


def _model(model: ModelLike) -> EfficiencyModel:
    return model.model if isinstance(model, GameConfig) else model


def _gamma(model: EfficiencyModel, gamma_star) -> float:
    if gamma_star is None:
        gamma_star = solve_gamma_star(model)
    return float(gamma_star)


class PowerAllocation:
    """Transmit powers, shape (2, K), in watts."""

    def __init__(self, powers):
        p = np.array(powers, dtype=float)
        if p.ndim != 2 or p.shape[0] != 2:
            raise ValueError(f"powers must have shape (2, K), got {p.shape}")
        if np.any(p < 0):
            raise ValueError("powers must be nonnegative")
        self.powers = p

    @classmethod
    def single(cls, K: int, leader: Optional[Tuple[int, float]] = None,
               follower: Optional[Tuple[int, float]] = None) -> "PowerAllocation":
        p = np.zeros((2, K))
        for n, entry in enumerate((leader, follower)):
            if entry is not None:
                p[n, entry[0]] = entry[1]
        return cls(p)

    def active_carrier(self, n: int) -> Optional[int]:
        nz = np.flatnonzero(self.powers[n] > 0)
        return int(nz[0]) if nz.size else None

    def power(self, n: int) -> float:
        return float(self.powers[n].sum())

    @property
    def single_carrier(self) -> bool:
        return bool(np.all((self.powers > 0).sum(axis=1) <= 1))

    def __repr__(self):
        return f"PowerAllocation({self.powers.tolist()})"


@dataclass
class EquilibriumOutcome:
    kind: OutcomeKind
    alloc: Optional[PowerAllocation]
    utilities: Tuple[Optional[float], Optional[float]]
    active_carriers: Tuple[Optional[int], Optional[int]]
    coordinated: bool
    branch: Branch
    epsilon: Optional[float] = None
    meta: dict = field(default_factory=dict)

    @property
    def exact(self) -> bool:
        return self.kind in (OutcomeKind.NASH_EXACT, OutcomeKind.STACKELBERG_EXACT)


@dataclass(frozen=True)
class LeaderCandidates:
    V: float
    W: float
    U: float
    V0: float
    beta_star: BetaStar


def _row_utilities(powers: np.ndarray, channel: ChannelRealization, model: EfficiencyModel):
    gam = sinr_matrix(channel, powers)
    throughput = np.asarray(model.f(gam), dtype=float).sum(axis=1)
    total = powers.sum(axis=1)
    out = []
    for n in range(2):
        out.append(channel.rates[n] * float(throughput[n]) / float(total[n]) if total[n] > 0 else None)
    return tuple(out)


def utility(alloc, channel: ChannelRealization, user: int, model: ModelLike) -> float:
    """Energy efficiency of ``user`` in bit/J: R * sum_k f(SINR_k) / sum_k p_k."""
    powers = alloc.powers if isinstance(alloc, PowerAllocation) else np.asarray(alloc, dtype=float)
    if not powers[user].sum() > 0:
        raise ZeroPower(f"user {user} transmits no power; utility is undefined")
    return _row_utilities(powers, channel, _model(model))[user]


def _outcome(kind, powers, channel, model, branch, **kw) -> EquilibriumOutcome:
    alloc = PowerAllocation(powers)
    active = (alloc.active_carrier(0), alloc.active_carrier(1))
    coordinated = active[0] is not None and active[1] is not None and active[0] != active[1]
    return EquilibriumOutcome(kind=kind, alloc=alloc, utilities=_row_utilities(alloc.powers, channel, model),
                              active_carriers=active, coordinated=coordinated, branch=branch, **kw)


def follower_best_response(p1, channel: ChannelRealization, gamma_star) -> np.ndarray:
    """Follower row: target SINR gamma_star on the carrier with the best effective gain."""
    p1 = np.asarray(p1, dtype=float)
    g1, g2 = channel.gains
    interference = channel.sigma2 + g1 * p1
    k = int(np.argmax(g2 / interference))
    row = np.zeros(channel.K)
    row[k] = float(gamma_star) * interference[k] / g2[k]
    return row


def leader_candidates(channel: ChannelRealization, gamma_star, model: ModelLike,
                      beta_star: Optional[BetaStar] = None) -> LeaderCandidates:
    """Leader values of the four shared-best-carrier strategies (bit/J).

    V: stay on the shared carrier and accept the follower there; W: push the
    follower off with SINR gamma_hat; U: move to the second carrier; V0: the
    vanishing-power limit on the shared carrier.
    """
    model = _model(model)
    g = float(gamma_star)
    gh = channel.gamma_hat
    s2 = channel.sigma2
    R1 = channel.rates[0]
    gB = channel.g_best(0)
    gS = channel.g_second(0)
    if beta_star is None:
        beta_star = solve_beta_star(model, g, gh)
    if beta_star.present:
        b = beta_star.value
        V = model.f_scalar(b) * (1.0 - g * b) * gB * R1 / (b * s2 * (1.0 + g))
    else:
        V = -math.inf
    W = model.f_scalar(gh) * gB * R1 / (gh * s2)
    U = model.f_scalar(g) * gS * R1 / (g * s2)
    V0 = model.f_prime_at_zero * gB * R1 / (s2 * (1.0 + g))
    return LeaderCandidates(V=V, W=W, U=U, V0=V0, beta_star=beta_star)


def _epsilon_leader_power(channel, model, g, V0, epsilon):
    """Halve the leader's shared-carrier power until it is within factor (1 + eps) of V0."""
    s2 = channel.sigma2
    gB = channel.g_best(0)
    R1 = channel.rates[0]
    alpha = g * s2 / gB
    for _ in range(EPS_SEARCH_MAX_ITER):
        sinr1 = gB * alpha / (s2 * (1.0 + g) + g * gB * alpha)
        if (1.0 + epsilon) * R1 * model.f_scalar(sinr1) / alpha >= V0:
            return alpha
        alpha *= 0.5
    return None


def stackelberg_solve(channel: ChannelRealization, model: ModelLike, gamma_star=None,
                      epsilon: float = 1e-6) -> EquilibriumOutcome:
    """Closed-form Stackelberg equilibrium with player 0 leading.

    ``epsilon`` is only used when no exact equilibrium exists (the V0 limit
    strictly dominates); the returned leader utility is then within a factor
    (1 + epsilon) of that supremum.
    """
    model = _model(model)
    g = _gamma(model, gamma_star)
    s2 = channel.sigma2
    K = channel.K
    B1, B2 = channel.best
    S1, S2 = channel.second
    exact = OutcomeKind.STACKELBERG_EXACT

    if B1 != B2:
        powers = PowerAllocation.single(K, (B1, g * s2 / channel.g_best(0)),
                                        (B2, g * s2 / channel.g_best(1))).powers
        return _outcome(exact, powers, channel, model, Branch.DISTINCT_BEST)

    gh = channel.gamma_hat
    if gh <= g:
        powers = PowerAllocation.single(K, (B1, g * s2 / channel.g_best(0)),
                                        (S2, g * s2 / channel.g_second(1))).powers
        return _outcome(exact, powers, channel, model, Branch.SMALL_GAP)

    cand = leader_candidates(channel, g, model)
    best_exact = max(cand.V, cand.W, cand.U)
    leader_row = np.zeros(K)
    meta = {"candidates": cand}
    if cand.V0 > best_exact:
        alpha = _epsilon_leader_power(channel, model, g, cand.V0, epsilon)
        if alpha is None:
            return EquilibriumOutcome(OutcomeKind.NO_EQUILIBRIUM, None, (None, None), (None, None),
                                      False, Branch.V0, meta=meta)
        leader_row[B1] = alpha
        branch, kind = Branch.V0, OutcomeKind.STACKELBERG_EPSILON
    elif cand.V == best_exact:
        b = cand.beta_star.value
        leader_row[B1] = b * (1.0 + g) * s2 / (channel.g_best(0) * (1.0 - g * b))
        branch, kind = Branch.V, exact
    elif cand.W == best_exact:
        leader_row[B1] = gh * s2 / channel.g_best(0) * (1.0 + W_MARGIN)
        branch, kind = Branch.W, exact
    else:
        leader_row[S1] = g * s2 / channel.g_second(0)
        branch, kind = Branch.U, exact
    powers = np.vstack([leader_row, follower_best_response(leader_row, channel, g)])
    eps = epsilon if kind is OutcomeKind.STACKELBERG_EPSILON else None
    return _outcome(kind, powers, channel, model, branch, epsilon=eps, meta=meta)


def nash_solve(channel: ChannelRealization, model: ModelLike, gamma_star=None) -> EquilibriumOutcome:
    """Pure equilibrium of the simultaneous-move game.

    When both users share a best carrier and both have a dominant best
    carrier (g_B >= (1 + gamma_star) g_S), neither moves away: they collide.
    The collision point has both SINRs at gamma_star, which requires
    gamma_star < 1 and, to be stable, both ratios >= 1 / (1 - gamma_star);
    otherwise the outcome is NASH_INFEASIBLE with no allocation.
    """
    model = _model(model)
    g = _gamma(model, gamma_star)
    s2 = channel.sigma2
    K = channel.K
    B, S = channel.best, channel.second
    exact = OutcomeKind.NASH_EXACT

    def on(n, which):
        k = B[n] if which == "B" else S[n]
        return (k, g * s2 / channel.gains[n, k])

    if B[0] != B[1]:
        powers = PowerAllocation.single(K, on(0, "B"), on(1, "B")).powers
        return _outcome(exact, powers, channel, model, Branch.DISTINCT_BEST)

    ratios = (channel.ratio(0), channel.ratio(1))
    dominant = [r > 1.0 + g for r in ratios]
    if dominant[0] and dominant[1]:
        if g < 1.0 and min(ratios) >= 1.0 / (1.0 - g):
            powers = np.zeros((2, K))
            for n in range(2):
                powers[n, B[n]] = g * s2 / (channel.g_best(n) * (1.0 - g))
            return _outcome(exact, powers, channel, model, Branch.SAME_CARRIER_NASH)
        return EquilibriumOutcome(OutcomeKind.NASH_INFEASIBLE, None, (None, None), (None, None),
                                  False, Branch.SAME_CARRIER_NASH)
    if dominant[0] != dominant[1]:
        winner = 0 if dominant[0] else 1
        selection = "dominant"
    else:
        winner = 0 if ratios[0] >= ratios[1] else 1
        selection = "larger_ratio"
    picks = [on(n, "B" if n == winner else "S") for n in range(2)]
    powers = PowerAllocation.single(K, picks[0], picks[1]).powers
    return _outcome(exact, powers, channel, model, Branch.SPLIT, meta={"selection": selection})


def _leader_grid_values(channel, model, g, carrier, P, follower_row=None):
    """Leader utility on ``carrier`` at powers ``P``.

    With ``follower_row`` the follower is held fixed; otherwise it plays its
    best response to each leader power.
    """
    g1, g2 = channel.gains
    s2 = channel.sigma2
    k = carrier
    if follower_row is not None:
        sinr1 = g1[k] * P / (s2 + g2[k] * follower_row[k])
    else:
        others = np.delete(np.arange(channel.K), k)
        h_others = g2[others] / s2
        j = int(np.argmax(h_others))
        best_other, idx_other = h_others[j], int(others[j])
        h_k = g2[k] / (s2 + g1[k] * P)
        shared = (h_k > best_other) | ((h_k == best_other) & (k < idx_other))
        sinr1 = np.where(shared, g1[k] * P / (s2 * (1.0 + g) + g * g1[k] * P), g1[k] * P / s2)
    return channel.rates[0] * np.asarray(model.f(sinr1), dtype=float) / P


def oracle_stackelberg(channel: ChannelRealization, model: ModelLike, gamma_star=None,
                       points_per_decade: int = ORACLE_POINTS_PER_DECADE, p_min: float = ORACLE_P_MIN,
                       p_max: float = ORACLE_P_MAX, carriers: Optional[Sequence[int]] = None) -> EquilibriumOutcome:
    """Brute-force Stackelberg solution over leader carrier x log power grid.

    Powers are ``p_min..p_max`` times sigma2 / g_best(leader).  The follower
    plays its exact best response to every grid point.
    """
    if not p_min > 0:
        raise ValueError("p_min must be positive")
    model = _model(model)
    g = _gamma(model, gamma_star)
    n_points = int(round(points_per_decade * math.log10(p_max / p_min))) + 1
    P = np.geomspace(p_min, p_max, n_points) * channel.sigma2 / channel.g_best(0)
    best = (-math.inf, None, None)
    for k in (range(channel.K) if carriers is None else carriers):
        u = _leader_grid_values(channel, model, g, k, P)
        i = int(np.argmax(u))
        if u[i] > best[0]:
            best = (float(u[i]), k, float(P[i]))
    leader_row = np.zeros(channel.K)
    leader_row[best[1]] = best[2]
    powers = np.vstack([leader_row, follower_best_response(leader_row, channel, g)])
    step = 10.0 ** (1.0 / points_per_decade)
    return _outcome(OutcomeKind.STACKELBERG_EXACT, powers, channel, model, Branch.ORACLE,
                    meta={"grid_ratio": step, "n_points": n_points})


def epsilon_ne_check(alloc, channel: ChannelRealization, epsilon: float, model: ModelLike,
                     gamma_star=None, bilevel: bool = False, grid_points: int = 200) -> bool:
    """(1 + eps) u_n(alloc) >= u_n(best single-carrier deviation) for both users.

    The follower's deviation is its exact best response.  The leader's is
    searched on ``grid_points`` log-spaced powers per carrier, holding the
    follower fixed, or, with ``bilevel=True``, letting it re-respond.
    """
    if epsilon < 0:
        raise ValueError("epsilon must be nonnegative")
    model = _model(model)
    g = _gamma(model, gamma_star)
    powers = alloc.powers if isinstance(alloc, PowerAllocation) else np.asarray(alloc, dtype=float)
    current = [u if u is not None else 0.0 for u in _row_utilities(powers, channel, model)]
    # roundoff slack only
    slack = 1.0 + 1e-12

    br = follower_best_response(powers[0], channel, g)
    dev2 = _row_utilities(np.vstack([powers[0], br]), channel, model)[1]
    if (1.0 + epsilon) * current[1] * slack < dev2:
        return False

    dev1 = 0.0
    for k in range(channel.K):
        P = np.geomspace(ORACLE_P_MIN, ORACLE_P_MAX, grid_points) * channel.sigma2 / channel.gains[0, k]
        u = _leader_grid_values(channel, model, g, k, P, None if bilevel else powers[1])
        dev1 = max(dev1, float(u.max()))
    return (1.0 + epsilon) * current[0] * slack >= dev1
