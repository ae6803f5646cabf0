import json
import subprocess
import sys

import pytest

from gridtest import cli
from gridtest.grid import InvariantViolation, read_function


def run(*args, **kw):
    return subprocess.run([sys.executable, "-m", "gridtest.cli", *args],
                          capture_output=True, text=True, **kw)


def test_json_schema(tmp_path):
    r = run("tester-sim", "--fn", "centrist:3", "--trials", "5000", "--seed", "3")
    assert r.returncode == 0, r.stderr
    doc = json.loads(r.stdout)
    assert doc["schema"] == "gridtest-v1" and doc["verb"] == "tester-sim"
    rec = doc["records"][0]
    assert rec["trials"] == 5000 and 0 <= rec["p_hat"] <= 1


def test_csv_header():
    r = run("influence", "--fn", "random:n=3,d=2,seed=1", "--kind", "total", "--csv")
    assert r.returncode == 0, r.stderr
    lines = r.stdout.splitlines()
    assert lines[0] == "# gridtest-v1" and "," in lines[1]


def test_workers_do_not_change_output():
    args = ("tester-sim", "--fn", "random:n=4,d=3,seed=2", "--trials", "20000", "--seed", "5")
    a = run(*args, "--workers", "1")
    b = run(*args, "--workers", "2")
    assert a.returncode == b.returncode == 0
    assert a.stdout == b.stdout


def test_gen_roundtrip(tmp_path):
    out = tmp_path / "f.txt"
    assert run("gen", "--family", "monotone-random", "--n", "3", "--d", "2",
               "--seed", "4", "--out", str(out)).returncode == 0
    f = read_function(str(out))
    assert (f.n, f.d) == (3, 2)
    r = run("distance", "--fn", str(out), "--exact")
    assert r.returncode == 0, r.stderr
    assert "0" in json.dumps(json.loads(r.stdout)["records"][0])


@pytest.mark.parametrize("argv", [
    ("tester-sim", "--fn", "nosuch:3"),
    ("tester-sim", "--fn", "centrist:3", "--tester", "bogus"),
    ("verify-iso", "--n", "4", "--d", "3", "--exhaustive"),
    ("frobnicate",),
])
def test_usage_errors(argv):
    assert run(*argv).returncode == 2


def test_odd_n_rejected_by_potential_drop():
    r = run("potential-drop", "--n", "3", "--d", "2")
    assert r.returncode == 2 and "even" in r.stderr


def test_config(tmp_path):
    cfg = tmp_path / "c.json"
    saved = tmp_path / "saved.json"
    cfg.write_text(json.dumps({"trials": 3000, "seed": 9}))
    r = run("tester-sim", "--fn", "centrist:3", "--config", str(cfg), "--save-config", str(saved))
    assert r.returncode == 0, r.stderr
    assert json.loads(r.stdout)["records"][0]["trials"] == 3000
    again = run("tester-sim", "--fn", "centrist:3", "--config", str(saved))
    assert again.stdout == r.stdout
    cfg.write_text(json.dumps({"trails": 3000}))
    assert run("tester-sim", "--fn", "centrist:3", "--config", str(cfg)).returncode == 2


def test_invariant_exit_code(monkeypatch, capsys):
    def broken(*a, **k):
        raise InvariantViolation("drop failed", {"point": [1, 2]})
    monkeypatch.setattr(cli, "verify_potential_drop", broken)
    code = cli.main(["potential-drop", "--n", "2", "--d", "2", "--trials", "1"])
    assert code == 1
    err = json.loads(capsys.readouterr().err)
    assert err["witness"]["point"] == [1, 2]


def test_other_verbs():
    for argv in (("verify-iso", "--n", "2", "--d", "2", "--exhaustive"),
                 ("semisort-recolor", "--fn", "random:n=4,d=2,seed=1", "--i", "1"),
                 ("potential-drop", "--n", "4", "--d", "2", "--trials", "3"),
                 ("distance", "--fn", "random:n=3,d=2,seed=0", "--delta"),
                 ("influence", "--fn", "random:n=3,d=2,seed=0", "--kind", "psicol",
                  "--coloring", "adversarial")):
        r = run(*argv)
        assert r.returncode == 0, (argv, r.stderr)


def test_smoke_suite():
    r = run("suite", "--level", "smoke", "--only", "1,2,3")
    assert r.returncode == 0, r.stderr
    recs = json.loads(r.stdout)["records"]
    assert [x["criterion"] for x in recs] == [1, 2, 3] and all(x["passed"] for x in recs)
