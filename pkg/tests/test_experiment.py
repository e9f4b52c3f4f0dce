import numpy as np
import pytest

from rectgauss.experiment import COLUMNS, ConfigError, ExperimentConfig, rows_to_csv, run_experiment, summarize


def small(**kw):
    base = dict(n_grid=[3000], d_grid=[2], seeds=3, min_steps=3000)
    base.update(kw)
    return ExperimentConfig(**base)


def strip_wall(text):
    i = COLUMNS.index("wall_ms")
    return [",".join(c for j, c in enumerate(line.split(",")) if j != i) for line in text.splitlines()]


def test_deterministic_csv():
    a = rows_to_csv(run_experiment(small(), workers=1))
    b = rows_to_csv(run_experiment(small(), workers=2))
    assert strip_wall(a) == strip_wall(b)
    assert a.splitlines()[0] == ",".join(COLUMNS)


def test_grid_and_order():
    cfg = small(n_grid=[1000, 2000], kappa_grid=[1.0, 4.0], seeds=2)
    rows = run_experiment(cfg, workers=1)
    assert [(r["n"], r["kappa"], r["seed"]) for r in rows] == [
        (n, k, s) for n in (1000, 2000) for k in (1.0, 4.0) for s in range(2)]
    assert all(r["status"] == "ok" for r in rows)


@pytest.mark.parametrize("bad", [dict(n_grid=[]), dict(mode="nope"), dict(kappa_grid=[0.5]),
                                 dict(seeds=0), dict(radius=0.5)])
def test_config_errors(bad):
    with pytest.raises(ConfigError):
        small(**bad)


def test_from_dict_unknown_key():
    with pytest.raises(ConfigError):
        ExperimentConfig.from_dict({"n_grid": [10], "colour": "red"})


def test_error_rows_do_not_stop_sweep():
    # k < d with kappa != 1 cannot be drawn; the run reports an error row
    rows = run_experiment(small(k=1, kappa_grid=[4.0], seeds=1), workers=1)
    assert rows[0]["status"].startswith("error: ValueError")


def test_table1_summary_rows():
    cfg = ExperimentConfig(mode="table1", n_grid=[100], d_grid=[3], seeds=4, bias_mode="zero",
                           outer_dim=6, min_steps=2000)
    rows = run_experiment(cfg, workers=1)
    assert len(rows) == 5 and rows[-1]["status"] == "summary"
    frac = np.mean([r["success"] for r in rows[:4]])
    assert rows[-1]["success"] == frac


def test_summarize():
    rows = [dict(n=1, status="ok", kl=1.0), dict(n=1, status="ok", kl=3.0),
            dict(n=2, status="error: x"), dict(n=2, status="ok", kl=5.0)]
    assert summarize(rows, "n", "kl") == {1: 2.0, 2: 5.0}


def test_csv_cells_are_plain_numbers():
    rows = [dict(mode="single", n=1, kl=np.float64(0.25), sigma_rel_err=0.5, status="ok")]
    line = rows_to_csv(rows).splitlines()[1]
    assert "np." not in line and "0.25" in line
