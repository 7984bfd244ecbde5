import json

import pytest

from rsavg.cli import HAVG_HEADER, main


def run(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def rows(text):
    return [l for l in text.splitlines() if l and not l.startswith("#")]


def test_lvalue_trivial_character(capsys):
    code, out, _ = run(capsys, "lvalue", "--k", "1")
    assert code == 0
    cfg, rec = (json.loads(l) for l in out.splitlines())
    assert "config" in cfg
    assert rec["value_re"] > 0 and abs(rec["value_im"]) < 1e-12
    assert rec["classification"] == "exceptional" and rec["root_number_re"] == -1.0


def test_lvalue_forced_zero(capsys):
    code, out, _ = run(capsys, "lvalue", "--k", "0", "--depletion", "both")
    recs = [json.loads(l) for l in out.splitlines()[1:]]
    assert code == 0 and len(recs) == 2
    assert all(r["verdict"] == "forced-zero" and abs(r["value_re"]) < r["certificate"] for r in recs)


def test_lvalue_ratio_of_depletions(capsys):
    code, out, _ = run(capsys, "lvalue", "--alpha", "1", "--beta", "1", "--rho", "0", "--chi", "1", "--k", "1", "--depletion", "both")
    recs = [json.loads(l) for l in out.splitlines()[1:]]
    assert code == 0 and "ratio_top_own_re" in recs[-1]


@pytest.mark.parametrize(
    "argv",
    [
        ["lvalue", "--prime", "7"],
        ["lvalue", "--disc", "-4"],
        ["lvalue", "--curve", "15a1"],
        ["lvalue", "--curve", "1,2,3"],
        ["lvalue", "--rho", "5"],
        ["havg", "--alpha", "2..1"],
        ["havg", "--k", "2"],
        ["havg", "--seeds", "/nonexistent/seeds.txt"],
        ["havg", "--threads", "0"],
    ],
)
def test_invalid_input_exit_2(capsys, argv):
    code, _, err = run(capsys, *argv)
    assert code == 2 and err.startswith("rsavg:")


def test_tolerance_exit_3(capsys):
    code, _, err = run(capsys, "havg", "--alpha", "2", "--beta", "2", "--n-cap", "1000")
    assert code == 3 and "cap" in err


def test_havg_grid(capsys):
    code, out, _ = run(capsys, "havg", "--alpha", "0..2", "--beta", "0..2", "--k", "1", "--no-main")
    body = rows(out)
    assert code == 0
    assert body[0] == ",".join(HAVG_HEADER)
    assert len(body) == 10
    for line in body[1:]:
        f = line.split(",")
        assert f[-1] == "ok"
        # residual also counts the roundoff imaginary part of the direct mean
        assert abs(float(f[4]) - float(f[5])) <= float(f[6]) + 1e-18 < 1e-12


def test_havg_main_term_column(capsys):
    code, out, _ = run(capsys, "havg", "--alpha", "1", "--beta", "2", "--k", "0")
    f = rows(out)[1].split(",")
    assert code == 0 and abs(float(f[7]) - 1) < 0.1


def test_gavg_and_table(capsys):
    code, out, _ = run(capsys, "gavg", "--alpha", "2", "--beta", "2", "--k", "1")
    body = rows(out)
    assert code == 0 and body[0].startswith("p,alpha,beta,k,tame,h_star")
    # primitive at (9, 9): (h(O_9) - h(O_3)) (phi(9) - phi(3)) = 8 * 4
    assert sum(int(l.split(",")[5]) for l in body[1:]) == 32
    code, out, _ = run(capsys, "table", "--alpha", "1", "--beta", "1", "--k", "0..1", "--depletion", "both", "--no-main")
    body = rows(out)
    assert code == 0 and len(body) == 3
    head = body[0].split(",")
    for line in body[1:]:
        rec = dict(zip(head, line.split(",")))
        assert rec["verdict"] == "ok" and rec["H_own"] != ""


def test_diag(capsys):
    code, out, _ = run(capsys, "diag", "--x-max", "256")
    assert code == 0
    assert rows(out)[0] == "x,S_x" and "fitted exponent" in out.splitlines()[-1]


def test_seeds_file(capsys, tmp_path):
    from rsavg.newform import CURVES, seeds_from_curve, write_seeds

    path = tmp_path / "s.txt"
    write_seeds(seeds_from_curve(CURVES["11a1"], 20000), path)
    _, a, _ = run(capsys, "havg", "--alpha", "1", "--k", "1", "--no-main")
    _, b, _ = run(capsys, "havg", "--alpha", "1", "--k", "1", "--no-main", "--seeds", str(path))
    assert rows(a) == rows(b)


def test_config_file_and_override(capsys, tmp_path):
    cfg = tmp_path / "run.cfg"
    cfg.write_text("# sweep\nalpha = 0..1\nbeta = 1\nk = 1\nno-main = yes\n")
    code, out, _ = run(capsys, "havg", "--config", str(cfg))
    assert code == 0 and len(rows(out)) == 3
    code, out, _ = run(capsys, "havg", "--config", str(cfg), "--alpha", "0")
    assert code == 0 and len(rows(out)) == 2
    assert "# alpha = 0" in out
    bad = tmp_path / "bad.cfg"
    bad.write_text("colour = red\n")
    code, _, _ = run(capsys, "havg", "--config", str(bad))
    assert code == 2


def test_json_round_trip(capsys):
    _, csv_out, _ = run(capsys, "havg", "--alpha", "2", "--beta", "1", "--k", "1", "--no-main")
    _, js, _ = run(capsys, "havg", "--alpha", "2", "--beta", "1", "--k", "1", "--no-main", "--format", "json")
    lines = js.splitlines()
    assert "config" in json.loads(lines[0])
    rec = json.loads(lines[1])
    f = rows(csv_out)[1].split(",")
    assert float(f[4]) == rec["H_direct"] and float(f[5]) == rec["H_formula"]
    assert format(rec["H_direct"], ".17g") == f[4]


def test_byte_identical_across_threads(capsys, tmp_path, monkeypatch):
    outs = []
    for threads in ("1", "8"):
        monkeypatch.setenv("RSAVG_THREADS", threads)
        path = tmp_path / f"out{threads}.csv"
        assert main(["table", "--alpha", "0..2", "--beta", "0..1", "--k", "0..1", "--no-main", "--out", str(path)]) == 0
        outs.append(path.read_bytes())
    assert outs[0] == outs[1]


def test_verify_suites(capsys):
    for suite in ("cutoff", "mobius", "afe"):
        code, out, _ = run(capsys, "verify", suite)
        assert code == 0 and "FAIL" not in out
