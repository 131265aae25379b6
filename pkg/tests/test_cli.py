import json

import jsonschema
import pytest

from wincss.cli import OUTPUT_SCHEMA, main, read_table

TABLE_I_EZC = {"rectangular": -1.31, "triangular": -2.60, "hamming": -2.36,
               "hann": -3.39, "blackman": -3.82, "gaussian": -2.52}
TABLE_II = {"rectangular": (0.7, 1.3), "triangular": (0.35, 0.65), "hamming": (0.3776, 0.7019),
            "hann": (0.3496, 0.6495), "blackman": (0.2937, 0.5455), "gaussian": (0.3463, 0.6434)}


def run(tmp_path, name, *args):
    out = tmp_path / name
    assert main([*args, "--out", str(out)]) == 0
    return out


def test_windows_table_matches_table_one(tmp_path):
    table = read_table(run(tmp_path, "w.csv", "windows").read_text())
    assert [r["window"] for r in table["rows"]] == list(TABLE_I_EZC)
    for row in table["rows"]:
        assert row["ezc"] == pytest.approx(TABLE_I_EZC[row["window"]], abs=0.02)
    assert table["seed"] == 0 and table["config"]["n"] == 1024


def test_json_matches_csv_and_schema(tmp_path):
    csv_tab = read_table(run(tmp_path, "w.csv", "windows").read_text())
    doc = json.loads(run(tmp_path, "w.json", "windows", "--format", "json").read_text())
    jsonschema.validate(doc, OUTPUT_SCHEMA)
    assert doc["rows"] == csv_tab["rows"]
    assert doc["config"] == csv_tab["config"]


def test_window_filter(tmp_path):
    table = read_table(run(tmp_path, "w.csv", "windows", "--windows", "hann,blackman").read_text())
    assert [r["window"] for r in table["rows"]] == ["hann", "blackman"]


def test_rip_reference_columns_and_determinism(tmp_path):
    args = ("rip", "--trials", "1000", "--n", "256", "--m", "64", "--k", "8")
    first = run(tmp_path, "a.csv", *args)
    second = run(tmp_path, "b.csv", *args)
    assert first.read_bytes() == second.read_bytes()
    rows = read_table(first.read_text())["rows"]
    for row in rows:
        lo, hi = TABLE_II[row["window"]]
        assert row["ul_ref"] == pytest.approx(lo, abs=0.003)  # N=256 shifts WSC by ~0.5/N
        assert row["ub_ref"] == pytest.approx(hi, abs=0.003)
        assert row["mean_ratio"] == pytest.approx(row["mean_w2"], rel=0.1)


def test_rip_reference_columns_at_table_length(tmp_path):
    out = run(tmp_path, "r.csv", "rip", "--n", "1000", "--m", "100", "--k", "4", "--trials", "1000")
    for row in read_table(out.read_text())["rows"]:
        lo, hi = TABLE_II[row["window"]]
        assert row["ul_ref"] == pytest.approx(lo, abs=1e-3)
        assert row["ub_ref"] == pytest.approx(hi, abs=1e-3)


def test_replay_from_embedded_config(tmp_path):
    first = run(tmp_path, "a.json", "rip", "--format", "json", "--n", "128", "--m", "32", "--k", "4",
                "--trials", "1000", "--seed", "7", "--windows", "hann,rectangular")
    replay = run(tmp_path, "b.json", "rip", "--format", "json", "--config", str(first))
    assert first.read_bytes() == replay.read_bytes()
    csv_replay = run(tmp_path, "c.csv", "rip", "--config", str(first))
    assert read_table(csv_replay.read_text())["rows"] == json.loads(first.read_text())["rows"]


def test_leakage_discrepancy(tmp_path):
    table = read_table(run(tmp_path, "l.csv", "leakage", "--n", "64", "--tone-bin", "10.5").read_text())
    assert table["summary"]["max_abs_error_over_n"] < 1e-9
    for row in table["rows"]:
        assert abs(row["closed_form"] - row["dft_magnitude"]) < 1e-9 * row["n"]


def test_subspaces_probabilities_sum_to_one(tmp_path):
    rows = read_table(run(tmp_path, "s.csv", "subspaces", "--n", "100", "--components", "3").read_text())["rows"]
    for b in {r["block_size"] for r in rows}:
        assert sum(r["probability"] for r in rows if r["block_size"] == b) == pytest.approx(1, abs=1e-11)


def test_bounds_ranking(tmp_path):
    rows = read_table(run(tmp_path, "b.csv", "bounds").read_text())["rows"]
    bound = {r["window"]: r["sample_bound"] for r in rows}
    assert min(bound, key=bound.get) == "blackman"
    assert max(bound, key=bound.get) == "rectangular"


def test_recover_command(tmp_path):
    out = run(tmp_path, "r.json", "recover", "--format", "json", "--m-grid", "64,256", "--trials", "20")
    doc = json.loads(out.read_text())
    jsonschema.validate(doc, OUTPUT_SCHEMA)
    rates = {(r["window"], r["m"]): r["rate"] for r in doc["rows"]}
    assert rates[("blackman", 256)] == 1.0
    assert rates[("blackman", 64)] > rates[("rectangular", 64)]


def test_plot_written_and_deterministic(tmp_path):
    a = run(tmp_path, "a.csv", "subspaces", "--plot")
    b = run(tmp_path, "b.csv", "subspaces", "--plot")
    svg_a, svg_b = a.with_suffix(".svg"), b.with_suffix(".svg")
    assert svg_a.read_text().lstrip().startswith("<?xml")
    assert "<svg" in svg_a.read_text()
    assert svg_a.read_bytes() == svg_b.read_bytes()


def test_exit_codes(tmp_path, capsys):
    assert main(["rip", "--m", "2000"]) == 2
    with pytest.raises(SystemExit) as exc:
        main(["windows", "--windows", "kaiser"])
    assert exc.value.code == 2
    with pytest.raises(SystemExit) as exc:
        main(["nonsense"])
    assert exc.value.code == 2
    assert main(["windows", "--out", str(tmp_path / "missing" / "x.csv")]) == 3
    assert "missing" in capsys.readouterr().err
    assert main(["rip", "--config", str(tmp_path / "nope.csv")]) == 3


def test_stdout_output(capsys):
    assert main(["subspaces", "--n", "20", "--max-block", "2"]) == 0
    out = capsys.readouterr().out
    assert out.startswith("# command: subspaces")
