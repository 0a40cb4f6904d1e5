import csv
import io
import json

import pytest

from qultra.cli import main


def run(capsys, *argv):
    code = main(list(argv))
    out = capsys.readouterr()
    return code, out.out, out.err


def test_eval_value(capsys):
    code, out, _ = run(capsys, "eval", "--q", "0.5", "--c", "1", "--n", "2", "--x", "0.5")
    assert code == 0 and float(out) == pytest.approx(0.125)


def test_eval_both_and_dual(capsys):
    code, out, _ = run(capsys, "eval", "--q", "0.5", "--c", "1", "--n", "4", "--x", "0.3", "--method", "both")
    assert code == 0 and out.startswith("recurrence")
    code, out, _ = run(capsys, "eval", "--q", "0.5", "--c", "1", "--n", "1", "--x", "1", "--dual")
    assert code == 0 and float(out) == pytest.approx(0.5)


@pytest.mark.parametrize(
    "argv",
    [
        ("eval", "--q", "1.5", "--c", "1", "--n", "2", "--x", "0.5"),
        ("eval", "--q", "0.5", "--n", "2", "--x", "0.5"),
        ("eval", "--q", "0.5", "--c", "1", "--n", "2", "--x", "0.5", "--dual"),
        ("spectrum", "--q", "0.5", "--a", "1", "--top", "0"),
        ("measure", "--q", "0.5", "--a", "1", "--size", "1"),
        ("table", "--q", "0.5", "--a", "1", "--rows", "3", "--kind", "nope"),
        ("certify", "--q", "0.5"),
        ("frobnicate",),
    ],
)
def test_invalid_input_exits_2(capsys, argv):
    assert run(capsys, *argv)[0] == 2


def test_spectrum_csv(capsys):
    code, out, _ = run(capsys, "spectrum", "--q", "0.5", "--a", "1", "--top", "6", "--format", "csv")
    rows = list(csv.DictReader(io.StringIO(out)))
    assert code == 0
    assert list(rows[0]) == ["analytic", "computed", "rel_err"]
    assert len(rows) == 6
    assert max(float(r["rel_err"]) for r in rows) <= 1e-8


def test_spectrum_json(capsys):
    code, out, _ = run(capsys, "spectrum", "--q", "0.3", "--a", "4", "--top", "4")
    body = json.loads(out)
    assert code == 0 and len(body["matched"]) == 4 and body["size"] == 80


@pytest.mark.parametrize(
    "kind,header",
    [
        ("primal-weights", ["n", "node_plus", "node_minus", "weight"]),
        ("jacobi", ["n", "offdiag"]),
        ("dual-weights", ["m", "mu", "weight"]),
        ("polynomial-values", ["n", "x", "value"]),
    ],
)
def test_tables(capsys, kind, header):
    code, out, _ = run(capsys, "table", "--q", "0.5", "--a", "1", "--rows", "4", "--kind", kind)
    rows = list(csv.reader(io.StringIO(out)))
    assert code == 0 and rows[0] == header and len(rows) == 5


def test_primal_weight_row(capsys):
    _, out, _ = run(capsys, "table", "--q", "0.5", "--a", "1", "--rows", "2", "--kind", "primal-weights")
    assert float(list(csv.reader(io.StringIO(out)))[2][3]) == pytest.approx(5 / 6)


def test_measure(capsys):
    code, out, _ = run(capsys, "measure", "--q", "0.5", "--a", "1")
    body = json.loads(out)
    assert code == 0
    assert body["ratios"][0]["mass_ratio"] == pytest.approx(1.2, rel=1e-9)
    assert body["mass_sum"] == pytest.approx(1.0, abs=1e-12)


def test_certify_report_and_mutation(capsys, tmp_path):
    out_file = tmp_path / "report.json"
    code, _, err = run(capsys, "certify", "--q", "0.5", "--a", "1", "--out", str(out_file), "--timestamp")
    body = json.loads(out_file.read_text())
    assert code == 0
    assert set(body) == {"params", "checks", "ledger", "verdict", "timestamp"}
    assert body["verdict"] == "pass"
    assert "ledger" in err
    code, out, _ = run(capsys, "certify", "--q", "0.5", "--a", "1", "--inject-weight-bug")
    assert code == 1
    assert list(json.loads(out)) == ["params", "checks", "ledger", "verdict"]


def test_certify_text(capsys):
    code, out, _ = run(capsys, "certify", "--q", "0.3", "--a", "0.25", "--format", "text", "--threads", "2")
    assert code == 0
    assert out.startswith("certification") and "offset" in out
