import csv
import json

import pytest

from rollup_lab.cli import main


@pytest.fixture
def out(tmp_path, monkeypatch):
    d = tmp_path / "out"
    monkeypatch.setenv("ROLLUP_LAB_OUT", str(d))
    return d


def read_csv(path):
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


def test_dos_optimism_hour(out):
    assert main(["--svg", "dos", "--rollup", "optimism-throttled", "--duration", "300"]) == 0
    rows = read_csv(out / "dos_optimism-throttled.csv")
    assert len(rows) == 300
    assert list(rows[0]) == ["block", "price_wei", "c_blobs", "c_calldata", "c_txs", "c_batches",
                             "total", "cumulative", "backlog"]
    assert float(rows[-1]["cumulative"]) / 1e18 == pytest.approx(0.87, rel=0.1)
    assert (out / "dos.svg").read_text().startswith("<svg")
    manifest = json.loads((out / "manifest_dos.json").read_text())
    assert str(out / "dos_optimism-throttled.csv") in manifest["outputs"]


def test_dos_scroll_budget(out):
    assert main(["dos", "--rollup", "scroll", "--budget", "2"]) == 0
    assert len(read_csv(out / "dos_scroll.csv")) == pytest.approx(150, rel=0.15)


def test_unknown_rollup_exit_2_no_files(out):
    assert main(["dos", "--rollup", "nosuch", "--duration", "3"]) == 2
    assert not out.exists()


def test_usage_errors(out):
    assert main(["finality", "--mode", "l2", "--budget", "10"]) == 2
    assert main(["dos"]) == 2
    assert main(["nope"]) == 2


def test_io_error_exit_3(tmp_path, monkeypatch):
    blocker = tmp_path / "file"
    blocker.write_text("x")
    monkeypatch.setenv("ROLLUP_LAB_OUT", str(blocker / "sub"))
    assert main(["econ"]) == 3


def test_missing_profile_is_io_error(out, tmp_path):
    assert main(["prover", "--profile", str(tmp_path / "absent.csv")]) == 3


def test_finality_l1_and_l2(out):
    assert main(["finality", "--mode", "l1", "--budget", "10"]) == 0
    row = read_csv(out / "finality_l1.csv")[0]
    assert int(row["total_blocks"]) == 398
    assert main(["--svg", "finality", "--mode", "l2", "--rollup", "base", "--rollup", "linea", "--budget", "10"]) == 0
    base = read_csv(out / "finality_l2_base.csv")[0]
    assert int(base["total_blocks"]) == pytest.approx(1086, rel=0.15)
    assert float(base["amplification"]) == pytest.approx(2.73, rel=0.15)
    assert read_csv(out / "finality_l2_linea.csv")[0]["amplification"] == "not susceptible"


def test_prover_attacks_and_profiles(out, tmp_path):
    assert main(["prover", "--attack", "sha256"]) == 0
    assert float(read_csv(out / "prover.csv")[0]["profit_loss_usd"]) == pytest.approx(-1.32, abs=0.02)
    assert main(["prover", "--attack", "bn_mul"]) == 0
    assert float(read_csv(out / "prover.csv")[0]["profit_loss_usd"]) == pytest.approx(0.47, abs=0.02)
    empty = tmp_path / "empty.csv"
    empty.write_text("opcode,count\n")
    assert main(["prover", "--profile", str(empty)]) == 0
    row = read_csv(out / "prover.csv")[0]
    assert all(float(v) == 0 for k, v in row.items() if k not in ("attack", "latency_delay_s", "latency_delay_pct"))
    bad = tmp_path / "bad.csv"
    bad.write_text("opcode,count\nfrobnicate,3\n")
    assert main(["prover", "--profile", str(bad)]) == 2


def test_prover_unknown_opcode_named(out, tmp_path, capsys):
    bad = tmp_path / "bad.csv"
    bad.write_text("frobnicate,3\n")
    assert main(["prover", "--profile", str(bad)]) == 2
    assert "frobnicate" in capsys.readouterr().err


def test_econ_preset(out):
    assert main(["econ", "--preset", "scroll-appendix-c"]) == 0
    rows = {r["item"]: r["value"] for r in read_csv(out / "econ.csv")}
    assert rows["loss_usd_per_hour"] == "11172.00"
    assert rows["loss_usd_per_batch"] == "9.31"
    assert main(["econ", "--preset", "other"]) == 2
    assert main(["econ", "--preset", "scroll"]) == 0


def test_mitigate(out):
    assert main(["--svg", "mitigate", "--rollup", "linea", "--duration", "300"]) == 0
    rows = read_csv(out / "mitigate_linea.csv")
    ratios = [float(r["cumulative_mitigated"]) / float(r["cumulative_plain"]) for r in rows]
    assert ratios[0] > 1 and all(b > a for a, b in zip(ratios, ratios[1:]))


def test_calldata_sweep(out):
    assert main(["--svg", "calldata", "--zero-ratio", "0.03", "--schedule", "pectra", "--seeds", "10"]) == 0
    row = read_csv(out / "calldata.csv")[0]
    assert float(row["expected_gas"]) == pytest.approx(5_124_950, rel=1e-4)
    assert float(row["mean_gas"]) == pytest.approx(5.125e6, rel=1e-3)
    assert main(["calldata", "--schedule", "nosuch"]) == 2


def test_scenario_file_and_override(out, tmp_path):
    sc = tmp_path / "s.txt"
    sc.write_text("rollup = scroll\nbudget_eth = 2\noverride.commit_cost = 0\n")
    assert main(["dos", "--scenario", str(sc)]) == 0
    rows = read_csv(out / "dos_scroll.csv")
    assert all(float(r["c_batches"]) == 0 for r in rows)
    bad = tmp_path / "bad.txt"
    bad.write_text("budget_eth = -1\n")
    assert main(["dos", "--rollup", "scroll", "--scenario", str(bad)]) == 2


def test_byte_identical_reruns(tmp_path, monkeypatch):
    texts = []
    for i in range(2):
        d = tmp_path / f"run{i}"
        monkeypatch.setenv("ROLLUP_LAB_OUT", str(d))
        assert main(["--svg", "dos", "--rollup", "scroll", "--rollup", "base", "--budget", "5"]) == 0
        texts.append({p.name: p.read_bytes() for p in sorted(d.glob("*.csv"))})
    assert texts[0] == texts[1]


def test_svg_does_not_change_csv(tmp_path, monkeypatch):
    out = {}
    for flag in ([], ["--svg"]):
        d = tmp_path / ("svg" if flag else "plain")
        monkeypatch.setenv("ROLLUP_LAB_OUT", str(d))
        assert main([*flag, "dos", "--rollup", "linea", "--duration", "50"]) == 0
        out[bool(flag)] = (d / "dos_linea.csv").read_bytes()
    assert out[True] == out[False]


def test_missing_scenario_is_io_error(out, tmp_path):
    assert main(["dos", "--rollup", "scroll", "--scenario", str(tmp_path / "absent.txt")]) == 3
