"""Closed-form coordination, spectral-efficiency and welfare results."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

from scipy.special import betaln

from .channel import ChannelRealization, sinr_matrix
from .efficiency import EfficiencyModel, solve_beta_star, solve_gamma_star
from .equilibrium import (
    EquilibriumOutcome,
    ModelLike,
    OutcomeKind,
    _model,
    stackelberg_solve,
)


class RoleEquilibriumMissing(RuntimeError):
    """One of the two role assignments has no equilibrium."""


@dataclass(frozen=True)
class CoordinationBound:
    K: int
    gamma_star: float
    bound: float


@dataclass(frozen=True)
class WelfareReport:
    sw_stackelberg: float
    sw_nash: Optional[float]
    sw_upper: float
    ratio_vs_nash: Optional[float]
    ratio_vs_max: float
    bound_vs_nash: Optional[float]
    bound_vs_max: Optional[float]

    @property
    def nash_bound_holds(self) -> Optional[bool]:
        if self.ratio_vs_nash is None or self.bound_vs_nash is None:
            return None
        return self.ratio_vs_nash <= self.bound_vs_nash * (1.0 + 1e-12)

    @property
    def max_bound_holds(self) -> Optional[bool]:
        if self.bound_vs_max is None:
            return None
        return self.ratio_vs_max <= self.bound_vs_max * (1.0 + 1e-12)


def no_coordination_region(channel: ChannelRealization, gamma_star) -> bool:
    """Shared best carrier and g_B >= (1 + gamma*) g_S for both users."""
    if not channel.same_best:
        return False
    g = float(gamma_star)
    return all(channel.g_best(n) >= (1.0 + g) * channel.g_second(n) for n in range(2))


def no_coordination_bound(K: int, gamma_star) -> CoordinationBound:
    """(1 + gamma*) B(1 + gamma*, K), evaluated through log-Gamma."""
    if K < 1:
        raise ValueError("K must be >= 1")
    g = float(gamma_star)
    value = math.exp(math.log1p(g) + betaln(1.0 + g, K))
    return CoordinationBound(K=int(K), gamma_star=g, bound=min(1.0, value))


def no_coordination_bound_product(K: int, gamma_star) -> float:
    """(K-1)! / prod_{k=2..K} (k + gamma*), as a running product."""
    g = float(gamma_star)
    value = 1.0
    for k in range(2, K + 1):
        value *= (k - 1) / (k + g)
    return value


def dominant_gap_probability(K: int, gamma_star) -> float:
    """P(g_B >= (1 + gamma*) g_S) for one user with K i.i.d. exponential gains."""
    return K * no_coordination_bound(K, gamma_star).bound


def nash_no_coordination_probability(K: int, gamma_star) -> float:
    """Exact probability of the shared-best / both-dominant region under i.i.d. fading.

    The best-carrier index is independent of the order statistics, and the
    users are independent, so the region has probability
    (1/K) * q^2 with q the single-user dominant-gap probability.
    """
    q = dominant_gap_probability(K, gamma_star)
    return q * q / K


def spectral_efficiency_bound(K: int, gamma_star) -> float:
    g = float(gamma_star)
    return math.log2(1.0 + g) * (1.0 - no_coordination_bound(K, g).bound)


def realized_spectral_efficiency(outcome: EquilibriumOutcome, channel: ChannelRealization) -> float:
    """Per-user average of log2(1 + SINR) on the active carriers."""
    if outcome.alloc is None:
        return 0.0
    gam = sinr_matrix(channel, outcome.alloc.powers)
    total = 0.0
    for n in range(2):
        k = outcome.active_carriers[n]
        if k is not None:
            total += math.log2(1.0 + gam[n, k])
    return 0.5 * total


def leader_prefers_leading(channel: ChannelRealization, model: ModelLike, gamma_star=None) -> bool:
    """Whether player 0 earns at least as much leading as following."""
    model = _model(model)
    g = solve_gamma_star(model).value if gamma_star is None else float(gamma_star)
    lead = stackelberg_solve(channel, model, g)
    follow = stackelberg_solve(channel.swapped(), model, g)
    if lead.kind is OutcomeKind.NO_EQUILIBRIUM or follow.kind is OutcomeKind.NO_EQUILIBRIUM:
        raise RoleEquilibriumMissing("no equilibrium for one of the role assignments")
    return lead.utilities[0] >= follow.utilities[1]


def _fx_over_x(model: EfficiencyModel, x: float) -> float:
    return model.f_scalar(x) / x


def leader_prefers_leading_conditions(channel: ChannelRealization, model: ModelLike, gamma_star=None) -> bool:
    """The six closed-form conditions under which leading pays for player 0.

    Each role uses the shared-carrier root for its own follower's gap.  The
    sixth condition compares against the follower's shared-carrier payoff
    a (1 - gamma* beta*) / (1 + beta*).  Test-only companion of
    :func:`leader_prefers_leading`; it does not cover the case where player 0
    would move to its second carrier while player 1 would push it away.
    """
    model = _model(model)
    g = solve_gamma_star(model).value if gamma_star is None else float(gamma_star)
    if not channel.same_best:
        return True
    r1, r2 = channel.ratio(0), channel.ratio(1)
    if min(r1, r2) <= 1.0 + g:
        return True

    a = model.f_scalar(g) / g
    # player 0 leads against gap r2 - 1; player 1 leads against gap r1 - 1
    beta1 = solve_beta_star(model, g, r2 - 1.0)
    beta2 = solve_beta_star(model, g, r1 - 1.0)

    def v(beta):
        if not beta.present:
            return -math.inf
        b = beta.value
        return model.f_scalar(b) * (1.0 - g * b) / (b * (1.0 + g))

    def shared_follower(beta):
        if not beta.present:
            return -math.inf
        b = beta.value
        return a * (1.0 - g * b) / (1.0 + b)

    W1, W2 = _fx_over_x(model, r2 - 1.0), _fx_over_x(model, r1 - 1.0)
    U1, U2 = a / r1, a / r2
    V1, V2 = v(beta1), v(beta2)

    cond3 = W2 >= max(U2, V2) and W1 >= max(U1, V1)
    cond4 = V1 >= max(U1, W1) and W2 >= max(U2, V2)
    cond5 = (U1 >= max(W1, V1) and V2 >= max(U2, W2)
             and beta2.present and r1 <= (1.0 + beta2.value) / (1.0 - g * beta2.value))
    cond6 = W1 >= max(U1, shared_follower(beta2)) and V2 >= max(U2, W2)
    return cond3 or cond4 or cond5 or cond6


def welfare_report(channel: ChannelRealization, nash: EquilibriumOutcome, stackelberg: EquilibriumOutcome,
                   model: ModelLike, gamma_star=None) -> WelfareReport:
    """Social welfare at both equilibria, the ideal sum, and their ratios.

    ``bound_vs_nash``/``bound_vs_max`` are the closed-form worst-case ratios
    for a shared best carrier (None when the best carriers differ).
    """
    model = _model(model)
    g = solve_gamma_star(model).value if gamma_star is None else float(gamma_star)
    R1, R2 = channel.rates
    s2 = channel.sigma2
    gB1, gB2 = channel.g_best(0), channel.g_best(1)
    gS1, gS2 = channel.g_second(0), channel.g_second(1)
    sw_upper = model.f_scalar(g) * (R1 * gB1 + R2 * gB2) / (g * s2)
    sw_st = float(sum(stackelberg.utilities))
    sw_nash = float(sum(nash.utilities)) if nash.exact else None
    ratio_nash = sw_nash / sw_st if sw_nash is not None else None
    if channel.same_best:
        bound_nash = (R1 * gB1 + R2 * gB2) / (R1 * gB1 + R2 * gS2)
        bound_max = (R1 * gB1 + R2 * gB2) / (R1 * gS1 + R2 * gS2)
    else:
        bound_nash = bound_max = None
    return WelfareReport(sw_stackelberg=sw_st, sw_nash=sw_nash, sw_upper=sw_upper,
                         ratio_vs_nash=ratio_nash, ratio_vs_max=sw_upper / sw_st,
                         bound_vs_nash=bound_nash, bound_vs_max=bound_max)
