import csv
import io
import json
import math

import pytest

from kmpp_lowerbound import InstanceParams, build_instance
from kmpp_lowerbound.chain import ChainParams, chain_params, hitting_probability_dp
from kmpp_lowerbound.cli import (chain_report, main, records_from_csv, records_to_csv,
                                 report_rows, wilson_interval)
from kmpp_lowerbound.instance import dumps
from kmpp_lowerbound.seeding import run_trials


def run(argv, capsys=None):
    code = main([str(a) for a in argv])
    return code


def test_gen_matches_build_instance(tmp_path):
    out = tmp_path / "i.json"
    assert run(["gen", "--k", 2, "--m", 1, "--r", 1, "--delta", 5, "--out", out]) == 0
    assert out.read_text() == dumps(build_instance(InstanceParams(2, 1, 1, 5)))
    first = out.read_bytes()
    run(["gen", "--k", 2, "--m", 1, "--r", 1, "--delta", 5, "--out", out])
    assert out.read_bytes() == first
    assert len(json.loads(first)["locations"]) == 6


def test_gen_schedule_invalid_exit_code(tmp_path):
    assert run(["gen", "--k", 8, "--delta-from-schedule", "--delta-exp", 0.008, "--out", tmp_path / "x"]) == 3


def test_parameter_error_exit_code(tmp_path):
    assert run(["gen", "--k", 0, "--out", tmp_path / "x"]) == 2


def test_io_error_exit_code(tmp_path):
    assert run(["seed", "--instance", tmp_path / "missing.json"]) == 5


def test_budget_exit_code(tmp_path):
    inst = tmp_path / "i.json"
    run(["gen", "--k", 4, "--out", inst])
    assert run(["oracle", "--instance", inst, "--out", tmp_path / "o.json"]) == 4


def test_seed_and_evaluate(tmp_path):
    inst = tmp_path / "i.json"
    run(["gen", "--k", 3, "--delta", 32, "--out", inst])
    out = tmp_path / "s.json"
    assert run(["seed", "--instance", inst, "--seed", 4, "--trial", 2, "--out", out]) == 0
    s = json.loads(out.read_text())
    assert len(s["centers"]) == 3 and s["trace"][0]["potential_before"] is None
    cpath = tmp_path / "c.json"
    cpath.write_text(json.dumps([0]))
    ev = tmp_path / "e.json"
    assert run(["evaluate", "--instance", inst, "--centers", cpath, "--out", ev]) == 0
    rep = json.loads(ev.read_text())["lemma_report"]
    assert rep["lemma12_ok"] and rep["lemma13_ok"] and rep["s"] == 0
    cpath.write_text(json.dumps([[0, 0], [32, 0], [96, 0]]))
    assert run(["evaluate", "--instance", inst, "--centers", cpath, "--out", ev]) == 0
    assert json.loads(ev.read_text())["ratio"] == 1.0


def test_oracle_command(tmp_path):
    inst = tmp_path / "i.json"
    run(["gen", "--k", 2, "--delta", 5, "--out", inst])
    out = tmp_path / "o.json"
    assert run(["oracle", "--instance", inst, "--exact-seeding", "--out", out]) == 0
    o = json.loads(out.read_text())
    assert o["optimal_cost"] == 4.0 and o["partition"] == [0, 1, 1, 1, 1, 1]
    assert math.isclose(o["p_xi"], 96 / 106.5) and math.isclose(o["total_probability"], 1.0)


def test_chain_command(tmp_path):
    out = tmp_path / "c.json"
    assert run(["chain", "--kbar", 9, "--delta", 0.008, "--geom-delta", 2, "--alpha", 2,
                "--dp", "--mc", 2000, "--check-ineq", "--out", out]) == 0
    c = json.loads(out.read_text())
    assert c["s_star"] == 7
    assert c["dp"] == hitting_probability_dp(chain_params(9, 2.0, 2.0), 9)
    assert abs(c["mc"]["estimate"] - c["dp"]) <= 4 * max(c["mc"]["stderr"], 1e-3)
    assert set(c["inequalities"]) == {"i1", "i2", "i3", "i4", "i5"}
    assert c["theorem_valid"] is False


def test_chain_report_large_kbar():
    rep = chain_report(1e60, 1 / 120, check_ineq=True)
    assert rep["schedule"]["valid"] and 0 < rep["hoeffding_bound"] <= 1


def test_config_file_defaults_and_override(tmp_path):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"m": 3.0, "delta": 7.0}))
    out = tmp_path / "i.json"
    assert run(["gen", "--config", cfg, "--k", 2, "--delta", 9, "--out", out]) == 0
    d = json.loads(out.read_text())
    assert d["m"] == 3.0 and d["delta"] == 9.0


def test_trial_csv_round_trip():
    inst = build_instance(InstanceParams(4, 1.5, 0.7, 16.0))
    recs = run_trials(inst, 300, 8, alpha=3.0)
    text = records_to_csv(recs)
    assert records_from_csv(text) == recs
    header = text.splitlines()[0]
    assert header == "trial,seed,k,m,r,delta,xi,covered,t_centers,ratio,success,lemma11_ok,lemma12_ok,lemma13_ok,psbound_ok"


def test_wilson_interval():
    assert wilson_interval(0, 500)[0] == 0 and wilson_interval(500, 500)[1] == 1
    lo, hi = wilson_interval(0, 100)
    assert lo == 0 and 0 < hi < 0.05
    lo, hi = wilson_interval(50, 100)
    assert lo < 0.5 < hi and math.isclose(lo + hi, 1.0)


def test_experiment_and_report(tmp_path):
    outdir = tmp_path / "res"
    assert run(["experiment", "--k", 6, 4, "--trials", 500, "--seed", 3, "--threads", 2,
                "--out", outdir]) == 0
    s = json.loads((outdir / "summary_k4.json").read_text())
    assert s["alpha"] == pytest.approx(0.008 * math.log(4))
    assert s["trials"] == 500 and s["coverage_lemma_violations"] == 0
    rep = tmp_path / "report.csv"
    assert run(["report", outdir / "summary_k6.json", outdir / "summary_k4.json", "--out", rep]) == 0
    rows = list(csv.DictReader(io.StringIO(rep.read_text())))
    assert [int(r["k"]) for r in rows] == [4, 6]
    single = report_rows([s])
    assert len(single) == 1 and single[0]["dp_hitting"] == s["dp_hitting"]


def test_report_schema_mismatch(tmp_path):
    bad = tmp_path / "bad.json"
    bad.write_text(json.dumps({"k": 3}))
    assert run(["report", bad, "--out", tmp_path / "r.csv"]) == 2
