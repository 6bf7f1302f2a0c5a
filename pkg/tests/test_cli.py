import csv
import io
import json
import subprocess
import sys
from importlib import resources
from pathlib import Path

import pytest

from hcprisk.cli import main

DATA = Path(str(resources.files("hcprisk") / "data"))
MALFORMED = Path(__file__).parent / "data" / "malformed_networks"


def run(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def rows(text):
    return list(csv.DictReader(io.StringIO(text)))


class TestIndividual:
    def test_bundled_sequence(self, capsys):
        code, out, _ = run(capsys, "individual", str(DATA / "seq011_contacts.csv"))
        assert code == 0
        (r,) = rows(out)
        assert float(r["pir"]) == pytest.approx(0.1065, abs=5e-5)
        assert (r["n_IC"], r["n_IS"]) == ("2", "1")

    def test_empty_file(self, capsys, tmp_path):
        p = tmp_path / "c.csv"
        p.write_text("")
        code, out, _ = run(capsys, "individual", str(p))
        assert code == 0
        assert rows(out) == []

    def test_bad_compartment_names_line(self, capsys, tmp_path):
        p = tmp_path / "c.csv"
        p.write_text(
            "hcp_id,contact_id,compartment,start_time,duration_min,prob\n"
            "h,a,IC,2020-04-01T08:00:00,10,0.1\n"
            "h,b,Q,2020-04-01T09:00:00,10,0.1\n"
        )
        code, _, err = run(capsys, "individual", str(p))
        assert code == 2
        assert "line 3" in err

    def test_missing_probability_source(self, capsys, tmp_path):
        p = tmp_path / "c.csv"
        p.write_text(
            "hcp_id,contact_id,compartment,start_time,duration_min,prob\n"
            "h,a,IC,2020-04-01T08:00:00,10,\n"
        )
        code, _, err = run(capsys, "individual", str(p))
        assert code == 3
        assert "line 2" in err

    def test_windows_and_model(self, capsys, tmp_path):
        model = tmp_path / "m.json"
        model.write_text(json.dumps({"format_version": 1, "schema": ["x"], "intercept": 0.0, "coefficients": [1.0]}))
        contacts = tmp_path / "c.csv"
        contacts.write_text(
            "hcp_id,contact_id,compartment,start_time,duration_min,prob,x\n"
            "h,a,IC,2020-04-01T08:00:00Z,10,,0\n"
            "h,b,IS,2020-04-02T08:00:00Z,10,0.3,\n"
        )
        windows = tmp_path / "w.csv"
        windows.write_text("person_id,admit_time,recovery_time\nb,2020-04-01T00:00:00Z,2020-04-01T12:00:00Z\n")
        code, out, _ = run(capsys, "individual", str(contacts), "--model", str(model), "--windows", str(windows))
        assert code == 0
        # contact b falls after the patient's recovery and is dropped
        assert float(rows(out)[0]["pir"]) == pytest.approx(0.5)


class TestTables:
    def test_occupations(self, capsys):
        code, out, _ = run(capsys, "tableiii")
        assert code == 0
        table = rows(out)
        assert len(table) == 6
        assert float(table[0]["pir"]) == pytest.approx(0.2262, abs=5e-5)

    @pytest.mark.parametrize("n, check", [("0", lambda r: float(r["pir"]) == 0.0),
                                          ("1", lambda r: r["pir"] == r["p_hat"])])
    def test_contact_count_edges(self, capsys, n, check):
        code, out, _ = run(capsys, "tableiii", "--n", n)
        assert code == 0
        assert all(check(r) for r in rows(out))

    def test_phi_below_one(self, capsys):
        assert run(capsys, "tableiii", "--phi", "0.5")[0] == 3

    def test_case_study(self, capsys):
        code, out, _ = run(capsys, "tableiv", "--format", "json")
        assert code == 0
        doc = {r["facility"]: r["pir"] for r in json.loads(out)}
        assert doc["Texas"] == pytest.approx(0.0084, abs=2e-4)
        assert doc["California"] == pytest.approx(0.0132, abs=2e-4)

    def test_case_study_errors(self, capsys, tmp_path):
        cfg = json.loads((DATA / "case_study.json").read_text())
        del cfg["shared"]["ORS"]
        p = tmp_path / "c.json"
        p.write_text(json.dumps(cfg))
        code, _, err = run(capsys, "tableiv", str(p))
        assert code == 3 and "ORS" in err
        cfg = json.loads((DATA / "case_study.json").read_text())
        cfg["shared"]["SOH_time"]["bins"][0]["p"] = 0.9
        p.write_text(json.dumps(cfg))
        code, _, err = run(capsys, "tableiv", str(p))
        assert code == 3 and "SOH_time" in err
        p.write_text("{ nope")
        assert run(capsys, "tableiv", str(p))[0] == 2


class TestSensitivity:
    def test_enumerate(self, capsys):
        code, out, err = run(capsys, "sensitivity", "enumerate", "--levels", "0.01,0.05,0.1", "--n", "2")
        assert code == 0
        assert len(rows(out)) == 9
        assert "mean=0.1038" in err and "sd=0.0523" in err

    def test_enumerate_single_level(self, capsys):
        code, out, _ = run(capsys, "sensitivity", "enumerate", "--levels", "0.2", "--n", "4", "--format", "json")
        (doc,) = json.loads(out)
        assert len(doc["sequences"]) == 1 and doc["sd"] == 0.0

    def test_surface_point(self, capsys):
        code, out, _ = run(capsys, "sensitivity", "surface", "--plow", "0.3", "--n", "3")
        assert code == 0
        assert float(rows(out)[0]["mean"]) == pytest.approx(0.8336, abs=5e-4)

    def test_budget(self, capsys):
        assert run(capsys, "sensitivity", "enumerate", "--levels", "0.1,0.2", "--n", "30")[0] == 3


class TestModels:
    def test_predict_default(self, capsys):
        code, out, _ = run(capsys, "predict")
        assert code == 0
        assert float(rows(out)[0]["probability"]) == pytest.approx(0.3554, abs=5e-5)

    def test_predict_unknown_covariate(self, capsys):
        assert run(capsys, "predict", "--set", "Height=2")[0] == 3

    def test_fit_round_trip(self, capsys, tmp_path):
        out_path = tmp_path / "m.json"
        code, _, _ = run(capsys, "fit", "--out", str(out_path))
        assert code == 0
        doc = json.loads(out_path.read_text())
        gen = json.loads((DATA / "synthetic_generator.json").read_text())
        for est, se, truth in zip(doc["coefficients"], doc["std_errors"][1:], gen["coefficients"]):
            assert abs(est - truth) < 3 * se
        code, out, _ = run(capsys, "predict", "--model", str(out_path), "--data", str(DATA / "synthetic_uk_like.csv"))
        assert code == 0 and len(rows(out)) == 5000

    def test_fit_separated(self, capsys, tmp_path):
        p = tmp_path / "d.csv"
        p.write_text("x,outcome\n" + "".join(f"{i},{int(i > 4)}\n" for i in range(10)))
        code, _, err = run(capsys, "fit", str(p))
        assert code == 4 and "ridge" in err

    def test_cv(self, capsys, tmp_path):
        code, out, _ = run(capsys, "cv", "--k", "5")
        assert code == 0
        assert 0.5 < float(rows(out)[0]["accuracy"]) < 1.0
        p = tmp_path / "d.csv"
        p.write_text("x,outcome\n1,0\n2,1\n3,0\n")
        assert run(capsys, "cv", str(p), "--k", "10")[0] == 3


class TestNetwork:
    def test_prior(self, capsys):
        code, out, _ = run(capsys, "bn", "--format", "json")
        assert code == 0
        post = {r["state"]: r["probability"] for r in json.loads(out)}
        assert sum(post.values()) == pytest.approx(1.0)

    def test_evidence_and_risk(self, capsys):
        code, out, _ = run(capsys, "bn", "--evidence", "Ventilation=poor", "--risk", "0.6")
        assert code == 0
        assert len(rows(out)) == 2

    def test_cyclic_network(self, capsys):
        code, _, err = run(capsys, "bn", str(MALFORMED / "01_cycle_two_nodes.json"), "--query", "A")
        assert code == 2 and "cycle" in err

    def test_impossible_evidence(self, capsys, tmp_path):
        doc = {
            "nodes": [{"name": "A", "states": ["n", "y"], "parents": []},
                      {"name": "B", "states": ["n", "y"], "parents": ["A"]}],
            "cpts": [{"node": "A", "rows": [[1.0, 0.0]]},
                     {"node": "B", "rows": [[1.0, 0.0], [0.5, 0.5]]}],
        }
        p = tmp_path / "n.json"
        p.write_text(json.dumps(doc))
        assert run(capsys, "bn", str(p), "--query", "A", "--evidence", "B=y")[0] == 4


def test_mc_validate_fast_tier(capsys):
    code, out, _ = run(capsys, "mc", "validate", "--trials", "10000", "--seed", "1")
    assert code == 0
    assert {r["result"] for r in rows(out)} == {"pass"}


def test_missing_file(capsys):
    assert run(capsys, "tableiv", "/nonexistent/config.json")[0] == 2


def test_deterministic_output(capsys):
    first = run(capsys, "cv", "--k", "4", "--seed", "5")[1]
    assert run(capsys, "cv", "--k", "4", "--seed", "5")[1] == first


def test_console_entry_point():
    proc = subprocess.run(
        [sys.executable, "-m", "hcprisk.cli", "predict", "--format", "json"],
        capture_output=True, text=True, check=False,
    )
    assert proc.returncode == 0
    assert json.loads(proc.stdout)[0]["probability"] == pytest.approx(0.355419714351, abs=1e-12)
    assert proc.stderr == ""
