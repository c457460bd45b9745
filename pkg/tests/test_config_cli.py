import json

import numpy as np
import pytest

from conftest import example4
from stopval import (
    ConfigError,
    DelayedLump,
    ExplicitTree,
    Schedule,
    StoppingProblem,
    Timing,
    Upfront,
    config_from_problem,
    garble,
    parse_config,
    value_of_information,
)
from stopval.cli import main
from stopval.reproduce import EXAMPLE_CONFIGS, TABLE1_S, TABLE1_T


def write(tmp_path, name, data):
    path = tmp_path / name
    path.write_text(json.dumps(data), encoding="utf-8")
    return str(path)


def read_csv(path):
    lines = path.read_text(encoding="utf-8").splitlines()
    header = lines[0].split(",")
    return [dict(zip(header, line.split(","))) for line in lines[1:]]


def kv(text):
    return dict(line.split("=", 1) for line in text.split() if "=" in line)


def base(**overrides):
    data = {
        "states": ["high", "low"],
        "actions": {"labels": ["invest"], "payoffs": [[6.0, -8.0]]},
        "discount": 0.9,
        "horizon": 2,
        "prior": [0.5, 0.5],
        "info_structure": [[0.7, 0.3], [0.3, 0.7]],
    }
    data.update(overrides)
    return data


@pytest.mark.parametrize("fee", [
    None,
    Upfront(0.3, timing=Timing.IMMEDIATE),
    Schedule((0.1, 0.2)),
    DelayedLump(2, 1.5),
    ExplicitTree({(): 0.1, (0,): 0.2, (1,): 0.05}),
])
def test_round_trip(example2, fee):
    for problem in (example2, example2.replace(transition=[[0.9, 0.1], [0.2, 0.8]], include_outside_option=True)):
        config = config_from_problem(problem, fee=fee)
        again = parse_config(config.dumps())
        assert again.to_problem() == problem
        if fee is not None:
            assert again.to_fee() == fee


def test_prior_error_has_field_path(tmp_path, capsys):
    path = write(tmp_path, "bad.json", base(prior=[0.5, 0.4]))
    assert main(["solve", "--config", path]) == 2
    err = capsys.readouterr().err
    assert "prior" in err and "sum to 1" in err
    with pytest.raises(ConfigError) as info:
        parse_config(json.dumps(base(prior=[0.5, 0.4])))
    assert info.value.path == "prior"


def test_shape_and_unknown_field_errors():
    with pytest.raises(ConfigError) as info:
        parse_config(json.dumps(base(prior=[0.2, 0.3, 0.5])))
    assert info.value.path == "prior"
    with pytest.raises(ConfigError) as info:
        parse_config(json.dumps(base(colour="blue")))
    assert info.value.path == "colour"


def test_json_syntax_error_reports_position(tmp_path, capsys):
    path = tmp_path / "broken.json"
    path.write_text('{\n  "states": ["a", "b"],\n  "discount": 0.9,,\n}', encoding="utf-8")
    assert main(["solve", "--config", str(path)]) == 2
    assert "line 3 column" in capsys.readouterr().err


def test_zero_horizon_solve(tmp_path):
    path = write(tmp_path, "h0.json", base(horizon=0, solver={"grid_points": 11}))
    assert main(["solve", "--config", path, "--out", str(tmp_path / "out")]) == 0
    rows = read_csv(tmp_path / "out" / "values.csv")
    assert len(rows) == 11
    for row in rows:
        mu = float(row["mu_high"])
        assert float(row["value"]) == pytest.approx(max(14 * mu - 8, 0.0), abs=1e-9)
        assert float(row["stop_payoff"]) == pytest.approx(14 * mu - 8, abs=1e-9)


def test_solve_reproduces_table(tmp_path):
    for name, want in (("S", TABLE1_S), ("T", TABLE1_T)):
        path = write(tmp_path, f"{name}.json", EXAMPLE_CONFIGS["example5"][name])
        out = tmp_path / name
        assert main(["solve", "--config", path, "--out", str(out)]) == 0
        got = [float(r["threshold"]) for r in read_csv(out / "thresholds.csv")]
        np.testing.assert_allclose(got, want, atol=5e-4)


def test_solve_is_byte_identical(tmp_path):
    path = write(tmp_path, "cfg.json", EXAMPLE_CONFIGS["example1"]["postpone"])
    for run in ("a", "b"):
        assert main(["solve", "--config", path, "--out", str(tmp_path / run)]) == 0
    for name in ("values.csv", "thresholds.csv", "policy.csv", "metadata.json"):
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()
    meta = json.loads((tmp_path / "a" / "metadata.json").read_text())
    assert meta["command"] == "solve" and len(meta["config_sha256"]) == 64


def test_value_of_info(tmp_path, capsys, example2):
    flat = base(info_structure=[[0.5, 0.5], [0.5, 0.5]], include_outside_option=True)
    assert main(["value-of-info", "--config", write(tmp_path, "u.json", flat)]) == 0
    assert float(kv(capsys.readouterr().out)["phi"]) == 0

    phi = value_of_information(example2)
    fee = {"variant": "upfront", "parameters": {"phi": phi - 1e-6}}
    assert main(["value-of-info", "--config", write(tmp_path, "f.json", base(fee=fee))]) == 0
    out = kv(capsys.readouterr().out)
    assert float(out["phi"]) == pytest.approx(phi, abs=1e-9)
    assert out["verdict"] == "accepted"

    cfg = config_from_problem(example4(0.6).replace(horizon=20))
    assert main(["value-of-info", "--config", write(tmp_path, "e4.json", json.loads(cfg.dumps()))]) == 0
    assert float(kv(capsys.readouterr().out)["phi"]) > 0


def test_compare_garbled(tmp_path, capsys, example2):
    t_problem = example2.replace(info=garble(example2.info, [[0.8, 0.2], [0.2, 0.8]]).likelihoods)
    s_path = write(tmp_path, "s.json", base(horizon=3))
    t_path = write(tmp_path, "t.json", json.loads(config_from_problem(t_problem.replace(horizon=3)).dumps()))
    assert main(["compare", "--config", s_path, "--config", t_path]) == 0
    out = capsys.readouterr().out
    assert "blackwell=S_dominates_T" in out
    table = [line.split(",") for line in out.splitlines() if line[:1].isdigit()]
    assert all(float(s) >= float(t) - 1e-9 for _, s, t, _ in table)

    assert main(["compare", "--config", s_path, "--config", s_path]) == 0
    out = capsys.readouterr().out
    assert "blackwell=equivalent" in out and "fosd=equal" in out
    table = [line.split(",") for line in out.splitlines() if line[:1].isdigit()]
    assert all(float(d) == 0 for *_, d in table)


def test_stopping_time_command(tmp_path):
    path = write(tmp_path, "cfg.json", base(horizon=3, solver={"seed": 4}))
    out = tmp_path / "st"
    assert main(["stopping-time", "--config", path, "--out", str(out), "--trials", "20000"]) == 0
    rows = read_csv(out / "stopping_time.csv")
    for row in rows:
        diff = abs(float(row["cdf_exact"]) - float(row["cdf_monte_carlo"]))
        assert diff <= 3 * float(row["cdf_se"]) + 1e-9
    assert json.loads((out / "metadata.json").read_text())["seed"] == 4


def test_error_exit_codes(tmp_path, capsys):
    with pytest.raises(SystemExit) as info:
        main(["reproduce", "example3"])
    assert info.value.code == 2
    big = base(horizon=12, solver={"tree_budget": 50},
               fee={"variant": "flat", "parameters": {"c": 0.01}})
    assert main(["solve", "--config", write(tmp_path, "big.json", big)]) == 3
    assert "TreeTooLarge" in capsys.readouterr().err


def test_reproduce_examples(tmp_path, capsys):
    for example in ("example1", "example2", "example4", "example5"):
        assert main(["reproduce", example, "--out", str(tmp_path / example)]) == 0
        lines = capsys.readouterr().out.splitlines()
        assert lines and all(line.startswith("PASS") for line in lines)
        assert (tmp_path / example / f"{example}_{next(iter(EXAMPLE_CONFIGS[example]))}.json").exists()
