import dataclasses
import json
import math

import numpy as np
import pytest

from carriergame import GameConfig, SweepResult, SweepSpec, run_se_tradeoff, run_sweep
from carriergame.simulator import CSV_COLUMNS, STACKELBERG, default_workers, parse_values


@pytest.fixture
def small_spec(cfg4):
    return SweepSpec(variable="K", values=(2, 4), trials=60, base_config=cfg4, seed=11)


def test_deterministic_rerun(small_spec):
    a, b = run_sweep(small_spec), run_sweep(small_spec)
    assert a.to_csv() == b.to_csv()
    assert a.to_json() == b.to_json()


def test_single_trial_deterministic(cfg4):
    spec = SweepSpec(variable="snr_db", values=(5.0,), trials=1, base_config=cfg4, seed=3)
    assert run_sweep(spec).rows == run_sweep(spec).rows


def test_serial_equals_parallel(small_spec):
    serial = run_sweep(small_spec, workers=1, chunk_size=7)
    parallel = run_sweep(small_spec, workers=2, chunk_size=13)
    assert serial.to_csv() == parallel.to_csv()


def test_workers_from_environment(monkeypatch):
    monkeypatch.setenv("CARRIERGAME_THREADS", "3")
    assert default_workers() == 3
    monkeypatch.setenv("CARRIERGAME_THREADS", "lots")
    assert default_workers() == 1
    monkeypatch.delenv("CARRIERGAME_THREADS")
    assert default_workers() == 1


@pytest.mark.parametrize("kwargs", [dict(values=()), dict(values=(4, 2)), dict(values=(2, 2)),
                                    dict(trials=0), dict(variable="M"), dict(solvers={"oracle"}),
                                    dict(solvers=set())])
def test_spec_validation(cfg4, kwargs):
    args = dict(variable="K", values=(2, 4), trials=10, base_config=cfg4)
    args.update(kwargs)
    with pytest.raises(ValueError):
        SweepSpec(**args)


def test_config_for(cfg4):
    assert SweepSpec("K", (8,), base_config=cfg4).config_for(8).K == 8
    assert SweepSpec("snr_db", (20.0,), base_config=cfg4).config_for(20.0).sigma2 == pytest.approx(0.01)
    assert SweepSpec("theta", (0.5,), base_config=cfg4).config_for(0.5).theta == 0.5


def test_result_schema_and_ranges(small_spec):
    res = run_sweep(small_spec)
    header = res.to_csv().splitlines()[0].split(",")
    assert tuple(header) == CSV_COLUMNS
    for row in res.rows:
        assert row["trials"] == 60 and row["seed"] == 11
        for key in CSV_COLUMNS:
            v = row[key]
            if key.startswith("p_") and not math.isnan(v):
                assert 0.0 <= v <= 1.0
            if key.startswith("ci_") and not math.isnan(v):
                assert v >= 0.0
        assert row["stackelberg_anomalies"] == 0


def test_csv_twelve_significant_digits(small_spec):
    line = run_sweep(small_spec).to_csv().splitlines()[1]
    nums = [v for v in line.split(",")[3:] if v and "." in v]
    assert nums and all(len(v.replace(".", "").replace("-", "").split("e")[0].lstrip("0")) <= 12 for v in nums)


def test_json_round_trip(small_spec):
    res = run_sweep(small_spec)
    data = json.loads(res.to_json())
    back = SweepResult.from_dict(data)
    assert back.to_dict() == res.to_dict()
    assert json.loads(back.to_json()) == data


def test_nash_exclusions_reported(cfg4):
    spec = SweepSpec(variable="K", values=(2,), trials=300, base_config=cfg4, seed=1)
    res = run_sweep(spec, keep_trials=True)
    row = res.rows[0]
    region = res.trial_field(0, "region")
    assert row["nash_excluded"] == int(region.sum())
    assert row["p_nocoord_nash"] == pytest.approx(region.mean())


def test_stackelberg_only(cfg4):
    spec = SweepSpec(variable="K", values=(4,), trials=50, base_config=cfg4, solvers={STACKELBERG},
                     role_swap=False)
    row = run_sweep(spec).rows[0]
    assert math.isnan(row["ee_nash_sum"]) and math.isnan(row["p_lead_preferred"])
    assert row["ee_stackelberg_sum"] > 0


def test_trial_field_requires_keep(small_spec):
    with pytest.raises(ValueError):
        run_sweep(small_spec).trial_field(0, "region")


def test_se_tradeoff(cfg4):
    spec = SweepSpec(variable="K", values=(2, 8), trials=80, base_config=cfg4, seed=5, role_swap=False)
    pairs = run_se_tradeoff(spec)
    coord = run_se_tradeoff(spec, coordinated_only=True)
    assert len(pairs) == len(coord) == 2
    res = run_sweep(spec, keep_trials=True)
    for i, (ee, se) in enumerate(coord):
        assert ee == res.rows[i]["ee_stackelberg_sum"]
        # coordinated trials sit at log2(1 + gamma*) unless the leader pushed
        # the follower away with SINR gamma_hat
        coord_se = res.trial_field(i, "se_st")[res.trial_field(i, "st_uncoord") == 0]
        assert se == pytest.approx(np.mean(coord_se))
        assert se >= math.log2(1 + res.gamma_star) * (1 - 1e-12)


def test_theta_one_sweep(cfg4):
    spec = SweepSpec(variable="theta", values=(1.0,), trials=200, base_config=cfg4, seed=2)
    row = run_sweep(spec).rows[0]
    assert row["p_same_best"] == 1.0
    assert row["p_nocoord_stackelberg"] <= row["p_nocoord_bound"] + 3 * math.sqrt(
        row["p_nocoord_bound"] * (1 - row["p_nocoord_bound"]) / 200)


def test_parse_values():
    assert parse_values("2..5", "K") == [2, 3, 4, 5]
    assert parse_values("2,4,8", "K") == [2, 4, 8]
    assert parse_values("0,0.5,1", "theta") == [0.0, 0.5, 1.0]
    with pytest.raises(ValueError):
        parse_values("2.5", "K")


def test_custom_model_runs_serially(hill_model):
    cfg = GameConfig(K=3, sigma2=1.0, model=hill_model)
    spec = SweepSpec(variable="K", values=(3,), trials=20, base_config=cfg)
    assert run_sweep(spec, workers=2).to_csv() == run_sweep(spec, workers=1).to_csv()
