import io
import json
import shutil
import subprocess

import pytest

from oac.cli import build_parser, main

SUBCOMMANDS = ["encode", "decode", "cosets", "ccs", "hds", "psi3", "fer-theory", "fer-sim", "tail-sweep", "decode-sw"]


def run(*argv):
    buf = io.StringIO()
    code = main(list(argv), stdout=buf)
    return code, buf.getvalue()


def test_hds_table():
    "Exhaustive HDS of the n=4 code"
    code, out = run("hds", "--n", "4", "--R", "1/2", "--method", "exhaustive")
    assert code == 0
    rows = [line.split(",") for line in out.strip().splitlines()]
    assert rows[0] == ["d", "psi"]
    assert [float(v) for _, v in rows[1:]] == [1.0, 1.25, 1.75, 0.75, 0.375]


def test_fer_theory_line():
    "One unknown symbol at r=1/2 and eps=0.1"
    code, out = run("fer-theory", "--R", "1/2", "--unknown", "1", "--eps-list", "0.1")
    assert code == 0
    eps, fer = out.strip().splitlines()[-1].split(",")
    assert eps == "0.1" and float(fer) == pytest.approx(0.05858, abs=1e-5)


def test_cosets_histogram():
    "Coset sizes 1, 4, 7, 4"
    code, out = run("cosets", "--n", "4", "--R", "1/2")
    assert code == 0
    assert out.strip().splitlines() == ["m,size", "0,1", "1,4", "2,7", "3,4"]


def test_coset_members():
    "Listing coset 2 gives its seven blocks"
    code, out = run("cosets", "--n", "4", "--R", "1/2", "--list", "2")
    assert code == 0
    assert "0101" in out and "1100" in out and "0000" not in out


def test_non_integral_rate_exits_2(capsys):
    "n*R must be an integer"
    code, _ = run("cosets", "--n", "5", "--R", "1/2")
    assert code == 2
    assert "integer" in capsys.readouterr().err


def test_bad_rate_text_exits_2():
    "Unparseable rates are validation errors"
    assert run("cosets", "--n", "4", "--R", "half")[0] == 2


def test_budget_refusal_exits_3(capsys):
    "Shift sums beyond the budget are refused after printing the estimate"
    code, _ = run("hds", "--n", "64", "--R", "1/2", "--method", "th2")
    assert code == 3
    assert "refused" in capsys.readouterr().err


def test_exhaustive_guard_exits_3():
    "Exhaustive HDS refuses n above 20"
    assert run("hds", "--n", "24", "--R", "1/2", "--method", "exhaustive")[0] == 3


def test_missing_file_exits_1(tmp_path):
    "I/O problems map to the generic error code"
    code, _ = run("decode", "--p", "1/3", "--n", "3", "--in", str(tmp_path / "absent.oacb"))
    assert code == 1


def test_encode_decode_roundtrip(tmp_path):
    "A block survives encode then decode through an OACB file"
    block = "0110100111010001101"
    src, packed, back = tmp_path / "x.txt", tmp_path / "x.oacb", tmp_path / "y.txt"
    src.write_text(block + "\n")
    assert run("encode", "--p", "1/3", "--in", str(src), "--out", str(packed))[0] == 0
    assert packed.read_bytes()[:4] == b"OACB"
    code, _ = run("decode", "--p", "1/3", "--n", str(len(block)), "--in", str(packed), "--out", str(back))
    assert code == 0 and back.read_text().strip() == block


def test_table_stream_via_cli(tmp_path):
    "Half-tail encoding of 010 stores an empty stream"
    src, packed = tmp_path / "x.txt", tmp_path / "x.oacb"
    src.write_text("010")
    assert run("encode", "--p", "1/3", "--w", "8", "--mode", "halftail", "--in", str(src), "--out", str(packed))[0] == 0
    assert len(packed.read_bytes()) == 10


def test_psi3_golden():
    "The golden rate reports pair (1, 1) as divergent"
    code, out = run("psi3", "--r", "golden")
    rep = json.loads(out)
    assert code == 0 and [1, 1] in rep["pairs"] and rep["status"] == "divergent"


def test_ccs_csv():
    "A level of the spectrum prints N rows of j,u,f"
    code, out = run("ccs", "--n", "8", "--R", "1/2", "--bins", "64")
    lines = out.strip().splitlines()
    assert code == 0 and lines[0] == "j,u,f" and len(lines) == 65


def test_decode_sw(tmp_path):
    "Side-information decoding of the tie example"
    y = tmp_path / "y.txt"
    y.write_text("0100")
    code, out = run("decode-sw", "--n", "4", "--R", "1/2", "--M", "16", "--eps", "0.1", "--m", "2", "--y", str(y))
    rep = json.loads(out)
    assert code == 0 and rep["block"] == "0101" and rep["flips"] == 1 and rep["in_coset"]


def _config(tmp_path, **extra):
    cfg = {"n": 32, "R": "1/2", "eps_list": [0.03, 0.06], "trials": 300, "seed": 4, "M": 4}
    cfg.update(extra)
    path = tmp_path / "exp.json"
    path.write_text(json.dumps(cfg))
    return str(path)


def test_fer_sim_is_byte_identical(tmp_path):
    "Repeated deterministic runs write identical reports"
    cfg = _config(tmp_path)
    outs = []
    for i in range(2):
        path = tmp_path / f"r{i}.json"
        assert run("fer-sim", "--config", cfg, "--out", str(path), "--deterministic", "--workers", str(i + 1))[0] == 0
        outs.append(path.read_bytes())
    assert outs[0] == outs[1]
    rep = json.loads(outs[0])
    assert [p["eps"] for p in rep["points"]] == [0.03, 0.06]


def test_fer_sim_csv(tmp_path):
    "CSV export has the eps,fer,lo,hi header"
    csv = tmp_path / "r.csv"
    assert run("fer-sim", "--config", _config(tmp_path), "--csv", str(csv), "--deterministic")[0] == 0
    assert csv.read_text().splitlines()[0] == "eps,fer,lo,hi"


def test_tail_sweep_csv(tmp_path):
    "One row per (t, eps) pair"
    code, out = run("tail-sweep", "--config", _config(tmp_path), "--t-list", "0,4")
    lines = out.strip().splitlines()
    assert code == 0 and lines[0] == "t,eps,fer,lo,hi" and len(lines) == 5


def test_bad_config_exits_2(tmp_path):
    "An experiment file with eps=0.5 is rejected"
    assert run("fer-sim", "--config", _config(tmp_path, eps_list=[0.5]))[0] == 2


@pytest.mark.parametrize(
    "argv",
    [
        ("hds", "--n", "12", "--R", "1/2", "--method", "th2"),
        ("ccs", "--n", "16", "--R", "1/2", "--bins", "256"),
        ("fer-theory", "--R", "1/4", "--unknown", "2", "--eps-list", "0.01,0.02,0.04"),
        ("psi3", "--r", "cubic"),
    ],
)
def test_repeat_runs_identical(argv):
    "Same flags, same bytes"
    assert run(*argv) == run(*argv)


@pytest.mark.parametrize("name", SUBCOMMANDS)
def test_help_for_every_subcommand(name, capsys):
    "Each subcommand prints help and exits 0"
    with pytest.raises(SystemExit) as exc:
        main([name, "--help"])
    assert exc.value.code == 0
    assert "usage: oac " + name in capsys.readouterr().out


def test_help_shows_defaults(capsys):
    "Defaults are spelled out in help text"
    with pytest.raises(SystemExit):
        main(["hds", "--help"])
    text = capsys.readouterr().out
    assert "default: th2" in text and "default: 0" in text


def test_parser_knows_all_subcommands():
    "Every documented subcommand is registered"
    sub = next(a for a in build_parser()._actions if a.dest == "command")
    assert set(SUBCOMMANDS) <= set(sub.choices)


def test_version(capsys):
    "--version prints the package version"
    with pytest.raises(SystemExit):
        main(["--version"])
    assert capsys.readouterr().out.startswith("oac 0.1.0")


@pytest.mark.skipif(shutil.which("oac") is None, reason="console script not installed")
def test_console_script():
    "The installed entry point runs"
    res = subprocess.run(["oac", "cosets", "--n", "4", "--R", "1/2"], capture_output=True, text=True)
    assert res.returncode == 0 and res.stdout.splitlines()[3] == "2,7"
