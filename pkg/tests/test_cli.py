import json
import subprocess
import sys

import pytest

from hijackguard.cli import SCAN_COLUMNS, bundled_fixtures, cmd_scan, main
from hijackguard.syscatalog import CATALOG_ENV, default_catalog

from conftest import DATA, FIXTURES

BINDER = DATA / "binder"


def run(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def rows(out):
    lines = out.splitlines()
    assert lines[0].split("\t") == list(SCAN_COLUMNS)
    return {ln.split("\t")[0]: ln.split("\t") for ln in lines[1:]}


def test_scan_zirco(capsys):
    code, out, _ = run(capsys, "scan", str(FIXTURES / "zirco.xml"))
    assert code == 2
    row = rows(out)["org.zirco"]
    assert row[7] == "0,0,1,2"
    assert row[8] == "26"


def test_scan_telegram(capsys):
    _, out, _ = run(capsys, "scan", str(FIXTURES / "telegram.xml"))
    row = rows(out)["org.telegram.messenger"]
    assert row[5] == "0"
    assert row[7] == "0,1,4,0"


def test_scan_empty(capsys):
    code, out, _ = run(capsys, "scan")
    assert code == 0
    assert rows(out) == {}


def test_scan_clean_manifest(tmp_path, capsys):
    f = tmp_path / "ok.xml"
    f.write_text('<manifest package="a.b" targetSdk="23"><activity name="M"/></manifest>')
    code, out, _ = run(capsys, "scan", str(f))
    assert code == 0
    assert rows(out)["a.b"][7] == "0,0,0,0"


def test_scan_parse_error(tmp_path, capsys):
    bad = tmp_path / "bad.xml"
    bad.write_text("<manifest")
    code, out, err = run(capsys, "scan", str(bad), str(FIXTURES / "zxing.xml"))
    assert code == 1
    assert "bad.xml" in err
    assert "com.google.zxing.client.android" in rows(out)


def test_scan_bundled_sorted(capsys):
    _, out, _ = run(capsys, "scan", "--bundled")
    names = list(rows(out))
    assert len(names) == 10 and names == sorted(names)


def test_scan_legacy_rules(tmp_path, capsys):
    f = tmp_path / "boot.xml"
    f.write_text(
        '<manifest package="a.b" targetSdk="23"><receiver name="R" exported="true"><intent-filter>'
        '<action name="android.intent.action.BOOT_COMPLETED"/></intent-filter></receiver></manifest>'
    )
    code, new, _ = run(capsys, "scan", str(f))
    assert code == 2 and rows(new)["a.b"][7] == "0,0,1,0"
    code, old, _ = run(capsys, "scan", str(f), "--legacy-rules")
    assert code == 0 and rows(old)["a.b"][7] == "0,0,0,0"
    # the bundled fixtures happen to avoid every cell where the two rule sets disagree
    _, a, _ = run(capsys, "scan", "--bundled")
    _, b, _ = run(capsys, "scan", "--bundled", "--legacy-rules")
    assert a == b


def test_scan_figures(tmp_path, capsys):
    code, _, err = run(capsys, "scan", "--bundled", "--figures", str(tmp_path / "figs"))
    assert code == 2
    png = tmp_path / "figs" / "exposure.png"
    assert png.read_bytes()[:4] == b"\x89PNG"
    assert str(png) in err


def test_scan_is_byte_stable():
    cat = default_catalog()
    a, _ = cmd_scan(bundled_fixtures(), cat)
    b, _ = cmd_scan(list(reversed(bundled_fixtures())), cat)
    assert [r.cells() for r in a] == [r.cells() for r in b]


def test_catalog_flag_and_env(tmp_path, capsys, monkeypatch):
    empty = tmp_path / "empty.txt"
    empty.write_text("")
    # with no system actions every action is custom, so MAIN launchers become risky
    _, out, _ = run(capsys, "scan", str(FIXTURES / "wire.xml"), "--catalog", str(empty))
    flagged = rows(out)["com.waz.zclient"][7]
    monkeypatch.setenv(CATALOG_ENV, str(empty))
    _, out2, _ = run(capsys, "scan", str(FIXTURES / "wire.xml"))
    assert rows(out2)["com.waz.zclient"][7] == flagged != "0,0,1,0"


def test_bad_catalog(tmp_path, capsys):
    f = tmp_path / "c.txt"
    f.write_text("[bogus]\n")
    code, _, err = run(capsys, "scan", "--catalog", str(f))
    assert code == 1 and "bogus" in err


def test_simulate_default(capsys):
    code, out, _ = run(capsys, "simulate")
    assert code == 0
    recs = [json.loads(ln) for ln in out.splitlines()]
    assert [r["policy"] for r in recs] == ["P3", "P4", "P3", "P3", "P1", "P2", "P5", "P6"]
    assert set(recs[0]) == {"id", "verdict", "policy", "executed", "replayed"}


def test_simulate_oracle_override(capsys):
    _, out, _ = run(capsys, "simulate", "--oracle", "allow")
    recs = [json.loads(ln) for ln in out.splitlines()]
    assert recs[0]["replayed"] and recs[0]["executed"]
    assert recs[1]["executed"] and not recs[1]["replayed"]
    assert not any(r["executed"] for r in recs if r["verdict"] == "deny")


def test_simulate_error_record(tmp_path, capsys):
    scenario = json.loads((DATA / "case_studies.json").read_text())
    scenario["installs"] = [str(DATA / p) for p in scenario["installs"]]
    scenario["requests"].append({"caller": "com.evil.hijacker", "callee": "org.zirco",
                                 "component": "org.zirco.Missing", "entry": "onCreate"})
    f = tmp_path / "s.json"
    f.write_text(json.dumps(scenario))
    code, out, _ = run(capsys, "simulate", "--scenario", str(f), "--seed", "3")
    assert code == 1
    last = json.loads(out.splitlines()[-1])
    assert last["request"] == 8 and "UnknownComponent" in last["error"]


def test_simulate_unreadable(tmp_path, capsys):
    code, _, err = run(capsys, "simulate", "--scenario", str(tmp_path / "none.json"))
    assert code == 1 and err.startswith("error:")


def test_binder_ok(capsys):
    code, out, _ = run(capsys, "binder", "--log", str(BINDER / "attack_chain_log.txt"),
                       "--procs", str(BINDER / "attack_chain_procs.txt"), "--callee", "6767")
    assert code == 0
    assert out.split() == ["7569", "10123", "com.evil.hijacker"]


@pytest.mark.parametrize("log, callee, err", [
    ("system_only_log.txt", "6767", "NoAppCallerFound"),
    ("attack_chain_log.txt", "4242", "CalleeNotInLog"),
])
def test_binder_errors(capsys, log, callee, err):
    code, _, stderr = run(capsys, "binder", "--log", str(BINDER / log),
                          "--procs", str(BINDER / "attack_chain_procs.txt"), "--callee", callee)
    assert code == 1 and err in stderr


def test_stub_estimate(capsys):
    code, out, _ = run(capsys, "stub-estimate", "--manifest", str(FIXTURES / "zxing.xml"))
    assert code == 0
    lines = out.splitlines()
    assert lines[-1].split() == ["total", "24"]
    assert len(lines) == 1 + 4 + 1


def test_stub_estimate_bad_file(tmp_path, capsys):
    code, _, _ = run(capsys, "stub-estimate", "--manifest", str(tmp_path / "x.xml"))
    assert code == 1


def test_module_entry_point():
    proc = subprocess.run([sys.executable, "-m", "hijackguard", "scan", str(FIXTURES / "wire.xml")],
                          capture_output=True, text=True)
    assert proc.returncode == 2
    assert "com.waz.zclient" in proc.stdout
