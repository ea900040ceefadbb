import json
from importlib import resources

import jsonschema
import numpy as np
import pytest

from mixcomp.cli import main, parse_groups, read_csv, ParseError, UsageError
from mixcomp.simulate import generate


def schema(name):
    return json.loads(resources.files("mixcomp").joinpath(f"schemas/{name}.schema.json").read_text())


def run(argv, capsys):
    try:
        code = main(argv)
    except SystemExit as exc:
        code = exc.code
    out, err = capsys.readouterr()
    return code, out, err


@pytest.fixture
def design2_csv(tmp_path):
    path = tmp_path / "d2.csv"
    np.savetxt(path, generate("design2", 500, seed=1).to_array(), delimiter=",")
    return path


def test_estimate_design2(design2_csv, capsys):
    code, out, _ = run(["estimate", str(design2_csv), "--groups", "0;1", "--delta", "0.05"], capsys)
    assert code == 0
    doc = json.loads(out)
    jsonschema.validate(doc, schema("estimate"))
    assert doc["m_hat"] == 3
    unit = doc["per_unit"][0]
    assert len(unit["sigmas"]) == 50 and len(unit["tail_norms"]) == 50
    assert unit["indices"] == [[0], [1]]
    assert doc["config"]["delta"] == 0.05


def test_estimate_full_spectrum_and_out_file(design2_csv, tmp_path, capsys):
    dest = tmp_path / "out.json"
    code, out, _ = run(["--out", str(dest), "estimate", str(design2_csv), "--full-spectrum"], capsys)
    assert code == 0 and out == ""
    doc = json.loads(dest.read_text())
    assert len(doc["per_unit"][0]["sigmas"]) == 500


def test_estimate_groups_make_multivariate_components(tmp_path, capsys):
    path = tmp_path / "d5.csv"
    np.savetxt(path, generate("design5", 120, seed=0).to_array(), delimiter=",")
    code, out, _ = run(["estimate", str(path), "--groups", "0-3;4-7"], capsys)
    assert code == 0
    doc = json.loads(out)
    assert len(doc["per_unit"]) == 1
    assert doc["per_unit"][0]["indices"] == [[0], [1]]


def test_header_and_discrete_tags(tmp_path, capsys):
    rng = np.random.default_rng(0)
    z = rng.integers(0, 2, 200)
    X = np.column_stack([z ^ (rng.random(200) < 0.1), z ^ (rng.random(200) < 0.1), z + rng.normal(0, 0.3, 200)])
    path = tmp_path / "mixed.csv"
    path.write_text("a,b,c\n" + "\n".join(",".join(map(str, r)) for r in X) + "\n")
    code, out, _ = run(["estimate", str(path), "--header", "--groups", "0:d;1:d;2", "--bandwidth", "0.3"], capsys)
    assert code == 0
    doc = json.loads(out)
    assert len(doc["per_unit"]) == 3
    assert doc["m_hat"] <= 2


def test_parse_errors_name_line_and_column(tmp_path, capsys):
    bad = tmp_path / "bad.csv"
    bad.write_text("1,2\n3,4\n5\n")
    code, _, err = run(["estimate", str(bad)], capsys)
    assert code == 2 and "line 3" in err
    bad.write_text("1,2\n3,abc\n")
    code, _, err = run(["estimate", str(bad)], capsys)
    assert code == 2 and "line 2" in err and "column 2" in err
    bad.write_text("1,2\nnan,4\n")
    code, _, err = run(["estimate", str(bad)], capsys)
    assert code == 2
    code, _, err = run(["estimate", str(tmp_path / "missing.csv")], capsys)
    assert code == 2


def test_usage_errors(design2_csv, capsys):
    assert run(["montecarlo", "--design", "2", "--n", "100", "--reps", "0"], capsys)[0] == 1
    assert run(["estimate", str(design2_csv), "--delta", "1.5"], capsys)[0] == 1
    assert run(["estimate", str(design2_csv), "--groups", "0;5"], capsys)[0] == 1
    assert run(["estimate", str(design2_csv), "--groups", "0,1;1"], capsys)[0] == 1
    assert run(["frobnicate"], capsys)[0] == 1
    assert run([], capsys)[0] == 1


def test_numerical_errors_exit_3(tmp_path, capsys):
    path = tmp_path / "const.csv"
    path.write_text("1,2\n1,2\n1,2\n")
    code, _, err = run(["estimate", str(path)], capsys)
    assert code == 3 and "DegenerateSample" in err


def test_size_limit_refused(tmp_path, capsys):
    path = tmp_path / "big.csv"
    np.savetxt(path, np.random.default_rng(0).standard_normal((5001, 2)), delimiter=",")
    code, _, err = run(["estimate", str(path)], capsys)
    assert code == 3 and "size" in err


def test_montecarlo_json(capsys):
    argv = ["montecarlo", "--design", "2", "--n", "150", "--reps", "3", "--seed", "1"]
    code, out, _ = run(argv, capsys)
    assert code == 0
    doc = json.loads(out)
    jsonschema.validate(doc, schema("montecarlo"))
    assert sum(doc["counts"].values()) == 3
    assert run(argv, capsys)[1] == out


def test_singvals(capsys):
    code, out, _ = run(["singvals", "--design", "2", "--n", "300", "--seed", "0"], capsys)
    assert code == 0
    doc = json.loads(out)
    jsonschema.validate(doc, schema("singvals"))
    assert doc["tau_solved"] < doc["tau_closed_form"]
    assert len(doc["sigmas"]) == 50
    code, out, _ = run(["singvals", "--design", "2", "--n", "300", "--delta", "0.6"], capsys)
    assert json.loads(out)["tau_closed_form"] is None


def test_singvals_tiny_sample(tmp_path, capsys):
    path = tmp_path / "two.csv"
    path.write_text("0,1\n3,-2\n")
    code, out, _ = run(["singvals", str(path), "--h", "0.5"], capsys)
    assert code == 0
    doc = json.loads(out)
    assert len(doc["sigmas"]) == 2 and all(np.isfinite(doc["sigmas"]))
    assert doc["h"] == [0.5, 0.5]


def test_pdelta(design2_csv, capsys):
    code, out, _ = run(["pdelta", str(design2_csv), "--m0", "3"], capsys)
    assert code == 0
    doc = json.loads(out)
    jsonschema.validate(doc, schema("pdelta"))
    assert np.sum(doc["matrix"]) == pytest.approx(1.0)


def test_simulate_round_trip(tmp_path, capsys):
    dest = tmp_path / "sim.csv"
    code, _, _ = run(["--out", str(dest), "simulate", "--design", "1", "--n", "50", "--seed", "9", "--header"], capsys)
    assert code == 0
    X = read_csv(str(dest), header=True)
    np.testing.assert_array_equal(X, generate("design1", 50, seed=9).to_array())
    code, out, _ = run(["simulate", "--design", "1", "--n", "5", "--labels"], capsys)
    rows = out.strip().splitlines()
    assert len(rows) == 5 and len(rows[0].split(",")) == 3


def test_threads_env_fallback(design2_csv, monkeypatch, capsys):
    monkeypatch.setenv("MIXCOMP_THREADS", "1")
    code, out, _ = run(["estimate", str(design2_csv)], capsys)
    assert code == 0
    assert json.loads(out)["m_hat"] == 3
    assert run(["--threads", "1", "estimate", str(design2_csv)], capsys)[1] == out


def test_parse_groups():
    assert parse_groups("0-3;4-7", 8) == ([[0, 1, 2, 3], [4, 5, 6, 7]], ["continuous"] * 2)
    assert parse_groups("0,2;1:d", 3) == ([[0, 2], [1]], ["continuous", "discrete"])
    assert parse_groups(None, 3)[0] == [[0], [1], [2]]
    for bad in ("0", "0;;1", "3-1;0", "0;1:x", "a;b"):
        with pytest.raises(UsageError):
            parse_groups(bad, 4)


def test_read_csv_skips_blank_lines(tmp_path):
    p = tmp_path / "x.csv"
    p.write_text("1,2\n\n3,4\n")
    np.testing.assert_array_equal(read_csv(str(p)), [[1, 2], [3, 4]])
    p.write_text("")
    with pytest.raises(ParseError):
        read_csv(str(p))
