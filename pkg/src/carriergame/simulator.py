"""Seeded Monte Carlo sweeps over fading realizations.

Each trial is a pure function of (seed, sweep index, trial index), so trials
can be farmed out to worker processes; per-trial records are reassembled in
trial order before any summation, which keeps results bit-identical between
serial and parallel runs.
"""

from __future__ import annotations

import dataclasses
import json
import logging
import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Dict, FrozenSet, List, Optional, Sequence, Tuple

import numpy as np

from . import analysis
from .channel import GameConfig, sample_channels, snr_db_to_sigma2
from .efficiency import EXP_BLOCK, solve_gamma_star
from .equilibrium import OutcomeKind, nash_solve, stackelberg_solve

log = logging.getLogger(__name__)

VARIABLES = ("K", "snr_db", "theta")
NASH = "nash"
STACKELBERG = "stackelberg"
Z95 = 1.959963984540054

# per-trial record layout
_FIELDS = (
    "st_leader", "st_follower", "st_uncoord", "st_anomaly", "se_st",
    "nash_leader", "nash_follower", "nash_uncoord", "nash_exact", "se_nash",
    "region", "same_best", "lead_pref", "ratio_nash", "ratio_max",
)
_IDX = {name: i for i, name in enumerate(_FIELDS)}

CSV_COLUMNS = (
    "variable", "value", "trials",
    "ee_stackelberg_leader", "ee_stackelberg_follower", "ee_stackelberg_sum",
    "ee_nash_leader", "ee_nash_follower", "ee_nash_sum", "ee_stackelberg_sum_paired",
    "nash_excluded", "stackelberg_anomalies",
    "p_nocoord_stackelberg", "p_nocoord_nash", "p_same_best",
    "p_nocoord_bound", "p_nocoord_nash_exact",
    "se_mean", "se_coord_mean", "se_nash_mean", "se_bound",
    "p_lead_preferred",
    "welfare_ratio_nash_mean", "welfare_ratio_nash_max",
    "welfare_ratio_max_mean", "welfare_ratio_max_max",
    "ci_ee_stackelberg_sum", "ci_ee_nash_sum", "ci_ee_stackelberg_sum_paired",
    "ci_p_nocoord_stackelberg", "ci_p_nocoord_nash",
    "ci_se_mean", "ci_se_coord_mean", "ci_p_lead_preferred",
    "seed",
)


@dataclass(frozen=True)
class SweepSpec:
    variable: str
    values: Tuple[float, ...]
    trials: int = 10_000
    base_config: GameConfig = field(default_factory=lambda: GameConfig.from_snr_db(10.0))
    seed: int = 0
    solvers: FrozenSet[str] = frozenset({NASH, STACKELBERG})
    role_swap: bool = True

    def __post_init__(self):
        if self.variable not in VARIABLES:
            raise ValueError(f"variable must be one of {VARIABLES}, got {self.variable!r}")
        values = tuple(self.values)
        if not values:
            raise ValueError("values must be non-empty")
        if any(b <= a for a, b in zip(values, values[1:])):
            raise ValueError("values must be strictly increasing")
        if self.trials < 1:
            raise ValueError("trials must be >= 1")
        solvers = frozenset(self.solvers)
        if not solvers or not solvers <= {NASH, STACKELBERG}:
            raise ValueError("solvers must be a non-empty subset of {'nash', 'stackelberg'}")
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "solvers", solvers)

    def config_for(self, value) -> GameConfig:
        if self.variable == "K":
            return dataclasses.replace(self.base_config, K=int(value))
        if self.variable == "snr_db":
            return dataclasses.replace(self.base_config, sigma2=snr_db_to_sigma2(float(value)))
        return dataclasses.replace(self.base_config, theta=float(value))


@dataclass
class SweepResult:
    variable: str
    seed: int
    trials: int
    gamma_star: float
    rows: List[Dict] = field(default_factory=list)
    trial_data: Optional[List[np.ndarray]] = field(default=None, repr=False, compare=False)

    def column(self, name: str) -> List:
        return [row[name] for row in self.rows]

    def trial_field(self, index: int, name: str) -> np.ndarray:
        """Raw per-trial values of one record field for sweep value ``index``."""
        if self.trial_data is None:
            raise ValueError("run_sweep(..., keep_trials=True) is needed for per-trial data")
        return self.trial_data[index][:, _IDX[name]]

    def to_dict(self) -> Dict:
        rows = [{k: (None if isinstance(v, float) and math.isnan(v) else v) for k, v in row.items()}
                for row in self.rows]
        return {"variable": self.variable, "seed": self.seed, "trials": self.trials,
                "gamma_star": self.gamma_star, "rows": rows}

    @classmethod
    def from_dict(cls, data: Dict) -> "SweepResult":
        rows = [{k: (math.nan if v is None else v) for k, v in row.items()} for row in data["rows"]]
        return cls(variable=data["variable"], seed=data["seed"], trials=data["trials"],
                   gamma_star=data["gamma_star"], rows=rows)

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2)

    def to_csv(self) -> str:
        lines = [",".join(CSV_COLUMNS)]
        for row in self.rows:
            lines.append(",".join(_fmt(row[c]) for c in CSV_COLUMNS))
        return "\n".join(lines) + "\n"


def _fmt(v) -> str:
    if isinstance(v, str):
        return v
    if isinstance(v, (int, np.integer)) and not isinstance(v, bool):
        return str(int(v))
    v = float(v)
    if math.isnan(v):
        return ""
    return f"{v:.12g}"


def _trial_record(spec: SweepSpec, sweep_index: int, config: GameConfig, gamma_star: float,
                  trial: int) -> np.ndarray:
    rec = np.full(len(_FIELDS), np.nan)
    ch = sample_channels(config, spec.seed, trial, sweep_index)
    model = config.model
    rec[_IDX["region"]] = analysis.no_coordination_region(ch, gamma_star)
    rec[_IDX["same_best"]] = ch.same_best

    st = None
    if STACKELBERG in spec.solvers:
        st = stackelberg_solve(ch, model, gamma_star)
        if st.kind is OutcomeKind.NO_EQUILIBRIUM:
            rec[_IDX["st_anomaly"]] = 1.0
        else:
            rec[_IDX["st_anomaly"]] = 0.0 if st.exact else 1.0
            rec[_IDX["st_leader"]], rec[_IDX["st_follower"]] = st.utilities
            rec[_IDX["st_uncoord"]] = not st.coordinated
            rec[_IDX["se_st"]] = analysis.realized_spectral_efficiency(st, ch)
            if spec.role_swap:
                try:
                    rec[_IDX["lead_pref"]] = analysis.leader_prefers_leading(ch, model, gamma_star)
                except analysis.RoleEquilibriumMissing:
                    pass

    if NASH in spec.solvers:
        ne = nash_solve(ch, model, gamma_star)
        rec[_IDX["nash_uncoord"]] = not ne.coordinated
        rec[_IDX["nash_exact"]] = ne.exact
        rec[_IDX["se_nash"]] = analysis.realized_spectral_efficiency(ne, ch)
        if ne.exact:
            rec[_IDX["nash_leader"]], rec[_IDX["nash_follower"]] = ne.utilities
        if st is not None and st.alloc is not None and ch.same_best:
            report = analysis.welfare_report(ch, ne, st, model, gamma_star)
            if report.ratio_vs_nash is not None:
                rec[_IDX["ratio_nash"]] = report.ratio_vs_nash
            rec[_IDX["ratio_max"]] = report.ratio_vs_max
    return rec


def _trial_block(args) -> np.ndarray:
    spec, sweep_index, config, gamma_star, start, stop = args
    return np.vstack([_trial_record(spec, sweep_index, config, gamma_star, t) for t in range(start, stop)])


def default_workers() -> int:
    env = os.environ.get("CARRIERGAME_THREADS")
    if env:
        try:
            return max(1, int(env))
        except ValueError:
            log.warning("ignoring non-integer CARRIERGAME_THREADS=%r", env)
    return 1


def _mean(x: np.ndarray) -> float:
    x = x[~np.isnan(x)]
    return math.fsum(x) / x.size if x.size else math.nan


def _max(x: np.ndarray) -> float:
    x = x[~np.isnan(x)]
    return float(x.max()) if x.size else math.nan


def _ci_mean(x: np.ndarray) -> float:
    x = x[~np.isnan(x)]
    if x.size < 2:
        return math.nan
    m = math.fsum(x) / x.size
    var = math.fsum((x - m) ** 2) / (x.size - 1)
    return Z95 * math.sqrt(var / x.size)


def _ci_prop(x: np.ndarray) -> float:
    x = x[~np.isnan(x)]
    if x.size == 0:
        return math.nan
    p = math.fsum(x) / x.size
    return Z95 * math.sqrt(p * (1.0 - p) / x.size)


def _aggregate(spec: SweepSpec, value, config: GameConfig, gamma_star: float, data: np.ndarray) -> Dict:
    col = {name: data[:, i] for name, i in _IDX.items()}
    st_sum = col["st_leader"] + col["st_follower"]
    nash_sum = col["nash_leader"] + col["nash_follower"]
    paired = np.where(np.isnan(nash_sum), np.nan, st_sum)
    se_coord = np.where(col["st_uncoord"] == 0.0, col["se_st"], np.nan)
    nash_exact = col["nash_exact"]
    excluded = int(np.sum(nash_exact == 0.0))
    anomalies = int(np.nansum(col["st_anomaly"]))
    if excluded:
        log.info("%s=%s: %d trials without an exact Nash equilibrium excluded from Nash means",
                 spec.variable, value, excluded)
    if anomalies:
        log.warning("%s=%s: %d Stackelberg trials without an exact equilibrium", spec.variable, value, anomalies)
    return {
        "variable": spec.variable,
        "value": value,
        "trials": spec.trials,
        "ee_stackelberg_leader": _mean(col["st_leader"]),
        "ee_stackelberg_follower": _mean(col["st_follower"]),
        "ee_stackelberg_sum": _mean(st_sum),
        "ee_nash_leader": _mean(col["nash_leader"]),
        "ee_nash_follower": _mean(col["nash_follower"]),
        "ee_nash_sum": _mean(nash_sum),
        "ee_stackelberg_sum_paired": _mean(paired),
        "nash_excluded": excluded,
        "stackelberg_anomalies": anomalies,
        "p_nocoord_stackelberg": _mean(col["st_uncoord"]),
        "p_nocoord_nash": _mean(col["nash_uncoord"]),
        "p_same_best": _mean(col["same_best"]),
        "p_nocoord_bound": analysis.no_coordination_bound(config.K, gamma_star).bound,
        "p_nocoord_nash_exact": analysis.nash_no_coordination_probability(config.K, gamma_star),
        "se_mean": _mean(col["se_st"]),
        "se_coord_mean": _mean(se_coord),
        "se_nash_mean": _mean(col["se_nash"]),
        "se_bound": analysis.spectral_efficiency_bound(config.K, gamma_star),
        "p_lead_preferred": _mean(col["lead_pref"]),
        "welfare_ratio_nash_mean": _mean(col["ratio_nash"]),
        "welfare_ratio_nash_max": _max(col["ratio_nash"]),
        "welfare_ratio_max_mean": _mean(col["ratio_max"]),
        "welfare_ratio_max_max": _max(col["ratio_max"]),
        "ci_ee_stackelberg_sum": _ci_mean(st_sum),
        "ci_ee_nash_sum": _ci_mean(nash_sum),
        "ci_ee_stackelberg_sum_paired": _ci_mean(paired),
        "ci_p_nocoord_stackelberg": _ci_prop(col["st_uncoord"]),
        "ci_p_nocoord_nash": _ci_prop(col["nash_uncoord"]),
        "ci_se_mean": _ci_mean(col["se_st"]),
        "ci_se_coord_mean": _ci_mean(se_coord),
        "ci_p_lead_preferred": _ci_prop(col["lead_pref"]),
        "seed": spec.seed,
    }


def _picklable(config: GameConfig) -> bool:
    return config.model.kind == EXP_BLOCK


def run_sweep(spec: SweepSpec, workers: Optional[int] = None, keep_trials: bool = False,
              chunk_size: int = 500) -> SweepResult:
    """Run every requested solver on ``spec.trials`` realizations per sweep value."""
    workers = default_workers() if workers is None else max(1, int(workers))
    gamma_star = solve_gamma_star(spec.base_config.model).value
    result = SweepResult(variable=spec.variable, seed=spec.seed, trials=spec.trials, gamma_star=gamma_star,
                         trial_data=[] if keep_trials else None)
    pool = None
    if workers > 1 and _picklable(spec.base_config):
        pool = ProcessPoolExecutor(max_workers=workers)
    try:
        for sweep_index, value in enumerate(spec.values):
            config = spec.config_for(value)
            blocks = [(spec, sweep_index, config, gamma_star, s, min(s + chunk_size, spec.trials))
                      for s in range(0, spec.trials, chunk_size)]
            parts = list(pool.map(_trial_block, blocks)) if pool else [_trial_block(b) for b in blocks]
            data = np.vstack(parts)
            result.rows.append(_aggregate(spec, value, config, gamma_star, data))
            if keep_trials:
                result.trial_data.append(data)
    finally:
        if pool is not None:
            pool.shutdown()
    return result


def run_se_tradeoff(spec: SweepSpec, coordinated_only: bool = False,
                    workers: Optional[int] = None) -> List[Tuple[float, float]]:
    """(mean Stackelberg sum EE, mean realized SE) per sweep value."""
    res = run_sweep(spec, workers=workers)
    se_key = "se_coord_mean" if coordinated_only else "se_mean"
    return [(row["ee_stackelberg_sum"], row[se_key]) for row in res.rows]


def parse_values(text: str, variable: str) -> Sequence:
    """'2,4,8' or '1..32' into a list (ints for K)."""
    text = text.strip()
    if ".." in text:
        lo, hi = text.split("..")
        vals = list(range(int(lo), int(hi) + 1))
    else:
        vals = [float(v) for v in text.split(",") if v.strip()]
    if variable == "K":
        if any(float(v) != int(v) for v in vals):
            raise ValueError("K values must be integers")
        vals = [int(v) for v in vals]
    return vals
