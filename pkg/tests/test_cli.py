"""Command-line interface: exit codes, JSON shapes, determinism."""

import json
import subprocess
import sys

import numpy as np
import pytest
from click.testing import CliRunner

from dictlab.boolfn import BooleanFunction, write_table
from dictlab.cli import main


@pytest.fixture
def runner():
    return CliRunner()


def invoke(runner, args, env=None):
    return runner.invoke(main, args, env=env, catch_exceptions=False)


# -- verify ---------------------------------------------------------------------


def test_verify_green(runner):
    res = invoke(runner, ["verify", "--seed", "0"])
    assert res.exit_code == 0
    payload = json.loads(res.output)
    assert payload["all_pass"] is True
    assert len(payload["checks"]) == 18


def test_verify_corrupt_fails(runner):
    res = invoke(runner, ["verify", "--seed", "0", "--corrupt", "distribution-mass-sum"])
    assert res.exit_code == 1
    payload = json.loads(res.output)
    failed = [c["name"] for c in payload["checks"] if c["status"] == "fail"]
    assert failed == ["distribution-mass-sum"]


def test_verify_unknown_corrupt_usage_error(runner):
    res = runner.invoke(main, ["verify", "--corrupt", "bogus"])
    assert res.exit_code == 2


def test_verify_bad_eps_usage_error(runner):
    res = runner.invoke(main, ["verify", "--eps", "1/10"])
    assert res.exit_code == 2


# -- test run ---------------------------------------------------------------------


def test_run_deterministic_output(runner):
    args = ["test", "run", "--fn", "builtin:random:5", "--n", "6", "--trials", "2000", "--seed", "9"]
    a = invoke(runner, args)
    b = invoke(runner, args)
    assert a.exit_code == b.exit_code == 0
    assert a.output == b.output
    c = invoke(runner, args[:-1] + ["10"])
    assert c.output != a.output


def test_run_dictator_exact(runner):
    res = invoke(
        runner,
        ["test", "run", "--fn", "builtin:dictator:2", "--n", "5",
         "--trials", "1000", "--seed", "1", "--exact"],
    )
    payload = json.loads(res.output)
    assert payload["estimate"] == 1.0
    assert payload["exact"] == {"num": "1", "den": "1"}
    assert payload["baseline"] == {"num": "15", "den": "128"}
    assert payload["folded"] is True
    assert payload["ci"]["level"] == 0.99


def test_run_seed_env_default(runner):
    args = ["test", "run", "--fn", "builtin:parity", "--n", "4", "--trials", "500"]
    via_env = invoke(runner, args, env={"DICTLAB_SEED": "33"})
    explicit = invoke(runner, args + ["--seed", "33"])
    assert via_env.output == explicit.output
    assert json.loads(via_env.output)["seed"] == 33


def test_run_table_file(runner, tmp_path):
    f = BooleanFunction.majority(5)
    path = tmp_path / "maj5.txt"
    write_table(f, path)
    res = invoke(
        runner,
        ["test", "run", "--fn", str(path), "--trials", "500", "--seed", "0"],
    )
    payload = json.loads(res.output)
    assert payload["n"] == 5
    assert payload["folded"] is True


def test_run_bad_fn_spec(runner):
    res = runner.invoke(main, ["test", "run", "--fn", "builtin:nope", "--n", "4"])
    assert res.exit_code == 2
    res = runner.invoke(main, ["test", "run", "--fn", "builtin:dictator:9", "--n", "4"])
    assert res.exit_code == 2


def test_run_majority_junta(runner):
    res = invoke(
        runner,
        ["test", "run", "--fn", "builtin:majority:3", "--n", "6",
         "--trials", "500", "--seed", "4", "--exact"],
    )
    payload = json.loads(res.output)
    assert payload["fn"] == "majority:3"
    assert payload["n"] == 6


# -- test schedule ------------------------------------------------------------------


def test_schedule_canonical_mode(runner):
    res = invoke(runner, ["test", "schedule"])
    assert res.exit_code == 0
    payload = json.loads(res.output)
    assert payload["mode"] == "canonical"
    assert payload["err"] == {"num": "1", "den": "31360"}
    assert payload["r"] == str(219520**2)
    assert payload["identity_check"] is True
    assert payload["interval_check"] is True
    levels = payload["levels"]
    assert [lvl["j"] for lvl in levels] == [0, 1, 2]
    assert levels[1]["symbolic_only"] is True
    assert levels[1]["eps"] is None
    assert levels[1]["log2_eps"] is not None
    assert levels[2]["symbolic_only"] is True


def test_schedule_practical_mode(runner):
    res = invoke(
        runner,
        ["test", "schedule", "--mode", "practical", "--levels", "1/49,1/128,1/1000"],
    )
    payload = json.loads(res.output)
    assert payload["mode"] == "practical"
    assert [lvl["eps"] for lvl in payload["levels"]] == [
        {"num": "1", "den": "49"},
        {"num": "1", "den": "128"},
        {"num": "1", "den": "1000"},
    ]
    assert payload["identity_check"] is True
    assert payload["interval_check"] is True


def test_schedule_bad_chain(runner):
    res = runner.invoke(
        main, ["test", "schedule", "--mode", "practical", "--levels", "1/49,1/40"]
    )
    assert res.exit_code == 2


# -- dist ---------------------------------------------------------------------------


def test_dist_dump(runner):
    res = invoke(runner, ["dist", "dump"])
    payload = json.loads(res.output)
    assert payload["alpha"] == {"num": "6", "den": "49"}
    assert payload["beta"] == {"num": "1", "den": "43"}
    assert payload["min_mass"] == {"num": "1", "den": "344"}
    atoms = payload["atoms"]
    assert len(atoms) == 15
    assert atoms[0]["kind"] == "zero"
    assert atoms[0]["mass"] == {"num": "1", "den": "344"}
    kinds = [a["kind"] for a in atoms]
    assert kinds == ["zero"] + ["hadamard"] * 7 + ["unit"] * 7
    units = [a for a in atoms if a["kind"] == "unit"]
    assert all(a["mass"] == {"num": "1", "den": "43"} for a in units)
    assert all(a["string"].count("1") == 1 for a in units)


def test_dist_verify_green(runner):
    res = invoke(runner, ["dist", "verify", "--seed", "0"])
    assert res.exit_code == 0
    payload = json.loads(res.output)
    assert payload["all_pass"] is True
    names = {c["name"] for c in payload["checks"]}
    assert all(
        n.startswith("distribution-") or n.startswith("correlation-") for n in names
    )
    assert "distribution-mass-sum" in names


# -- predicate ------------------------------------------------------------------------


def test_predicate_dump(runner):
    res = invoke(runner, ["predicate", "dump"])
    payload = json.loads(res.output)
    assert payload["k"] == 7
    assert payload["m"] == 3
    assert payload["size"] == 15
    assert payload["mean"] == {"num": "15", "den": "128"}
    weights = sorted(s["weight"] for s in payload["strings"])
    assert weights == [0] + [1] * 7 + [4] * 7
    assert payload["strings"][0]["string"] == "0000000"


def test_predicate_dump_k15(runner):
    res = invoke(runner, ["predicate", "dump", "--k", "15"])
    payload = json.loads(res.output)
    assert payload["size"] == 31
    assert payload["mean"] == {"num": "31", "den": "32768"}


def test_predicate_bad_k(runner):
    res = runner.invoke(main, ["predicate", "dump", "--k", "9"])
    assert res.exit_code == 2


# -- gauss ------------------------------------------------------------------------------


def test_gauss_verify(runner):
    res = invoke(runner, ["gauss", "verify", "--k", "7"])
    assert res.exit_code == 0
    payload = json.loads(res.output)
    assert payload["all_pass"] is True
    assert len(payload["grid"]) == 5
    assert all(row["status"] == "pass" for row in payload["grid"])
    assert all(row["residual"] <= 1e-12 for row in payload["grid"])


def test_gauss_perturb_small(runner):
    res = invoke(
        runner,
        ["gauss", "perturb", "--degree", "2", "--delta", "0.05",
         "--n", "6", "--trials", "4000", "--seed", "3"],
    )
    assert res.exit_code == 0
    payload = json.loads(res.output)
    assert payload["passes"] is True
    assert payload["bound"] == pytest.approx(0.2)
    assert abs(payload["estimate"] - payload["closed_form"]) <= 5 * payload["sigma"] + 1e-9


def test_gauss_gap_small(runner):
    res = invoke(
        runner,
        ["gauss", "gap", "--t", "2", "--degree", "2", "--n", "5",
         "--trials", "2000", "--seed", "6"],
    )
    assert res.exit_code == 0
    payload = json.loads(res.output)
    assert payload["passes"] is True
    assert payload["delta"] == pytest.approx(2 / 43)


# -- fourier ----------------------------------------------------------------------------


def test_fourier_parity(runner):
    res = invoke(runner, ["fourier", "--fn", "builtin:parity", "--n", "4"])
    payload = json.loads(res.output)
    assert payload["degree"] == 4
    assert payload["folded"] is False  # even parity is not odd
    assert payload["parseval"]["holds"] is True
    assert payload["coefficients"] == [
        {"coords": [1, 2, 3, 4], "value": {"num": "1", "den": "1"}}
    ]
    assert payload["influences"] == [1.0, 1.0, 1.0, 1.0]
    assert payload["degree_influences"]["values"] == [0.0, 0.0, 0.0, 0.0]


def test_fourier_folded_table_file(runner, tmp_path):
    f = BooleanFunction.random_folded(5, np.random.default_rng(8))
    path = tmp_path / "f.txt"
    write_table(f, path)
    payload = json.loads(invoke(runner, ["fourier", "--fn", str(path)]).output)
    assert payload["folded"] is True  # measured from the table, not a flag


# -- experiment ---------------------------------------------------------------------------


def write_config(tmp_path, **kwargs):
    path = tmp_path / "config.json"
    path.write_text(json.dumps(kwargs))
    return str(path)


def test_experiment_csv_stdout(runner, tmp_path):
    cfg = write_config(
        tmp_path, n=4, trials=2000, seed=1, random_count=1, format="csv"
    )
    res = invoke(runner, ["experiment", "run", "--config", cfg])
    assert res.exit_code == 0
    lines = res.output.strip().split("\n")
    header = lines[0].split(",")
    assert header == [
        "function", "n", "k", "eps", "estimate", "ci", "exact",
        "baseline", "max_degree_influence",
    ]
    rows = {line.split(",")[0]: line for line in lines[1:]}
    assert set(rows) == {
        "dictator:1", "dictator:2", "majority:3", "parity", "tribes:2",
        "random:1001",
    }
    # dictators accept always; exact filled in by the auto rule at n=4
    assert ",1.0," in rows["dictator:1"]
    assert ",1/1," in rows["dictator:1"]


def test_experiment_json_file(runner, tmp_path):
    out = tmp_path / "rows.json"
    cfg = write_config(
        tmp_path, n=3, trials=1000, seed=2, random_count=0,
        format="json", output=str(out),
    )
    res = invoke(runner, ["experiment", "run", "--config", cfg])
    assert res.exit_code == 0
    assert "wrote" in res.output
    rows = json.loads(out.read_text())
    labels = [r["function"] for r in rows]
    assert labels == [
        "dictator:1", "dictator:2", "majority:3", "parity", "majority", "tribes:2",
    ]
    for row in rows:
        assert row["baseline"] == "15/128"
        assert 0.0 <= row["estimate"] <= 1.0


def test_experiment_custom_corpus(runner, tmp_path):
    cfg = write_config(
        tmp_path, n=4, trials=500, corpus="builtin:parity,builtin:dictator:1",
        exact=False,
    )
    res = invoke(runner, ["experiment", "run", "--config", cfg])
    lines = res.output.strip().split("\n")
    assert [line.split(",")[0] for line in lines[1:]] == ["parity", "dictator:1"]
    assert all(line.split(",")[6] == "" for line in lines[1:])  # no exact column


def test_experiment_rejects_unknown_field(runner, tmp_path):
    cfg = write_config(tmp_path, n=4, bogus_field=3)
    res = runner.invoke(main, ["experiment", "run", "--config", cfg])
    assert res.exit_code == 2
    assert "bogus_field" in res.output


def test_experiment_rejects_bad_types(runner, tmp_path):
    cfg = write_config(tmp_path, n="four")
    res = runner.invoke(main, ["experiment", "run", "--config", cfg])
    assert res.exit_code == 2
    cfg2 = write_config(tmp_path, format="xml")
    res2 = runner.invoke(main, ["experiment", "run", "--config", cfg2])
    assert res2.exit_code == 2


def test_experiment_missing_config(runner):
    res = runner.invoke(main, ["experiment", "run", "--config", "/no/such/file.json"])
    assert res.exit_code == 2


# -- module entry point ----------------------------------------------------------------


def test_module_entry_point():
    proc = subprocess.run(
        [sys.executable, "-m", "dictlab.cli", "predicate", "dump", "--k", "7"],
        capture_output=True,
        text=True,
    )
    assert proc.returncode == 0
    assert json.loads(proc.stdout)["size"] == 15
