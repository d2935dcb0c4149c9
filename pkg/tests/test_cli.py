# tests/test_cli.py
import json

import pytest

from backend.main import cli_dispatch


def test_generate_then_play(tmp_path, capsys):
    graph = tmp_path / "g.rgg"
    assert cli_dispatch(["generate", "--n", "150", "--r", "2.5", "--seed", "3", "--out", str(graph)]) == 0
    assert graph.read_text().startswith("RGGT 1 150 ")
    transcript = tmp_path / "t.json"
    code = cli_dispatch(["play", "--graph", str(graph), "--k", "150", "--out", str(transcript)])
    assert code == 0
    assert "cop wins in round 1" in capsys.readouterr().out
    doc = json.loads(transcript.read_text())
    assert doc["outcome"] == "cop_win"


def test_play_csv_rounds(capsys):
    assert cli_dispatch(["play", "--n", "80", "--r", "2", "--k", "80", "--format", "csv"]) == 0
    out = capsys.readouterr().out.splitlines()
    assert out[0] == "round,phase,classes,chosen_class_size,flags"
    assert len(out) == 2


def test_exact_zeta_csv(tmp_path, capsys):
    out = tmp_path / "z.csv"
    code = cli_dispatch(["exact-zeta", "--n", "6", "--r", "1.5", "--format", "csv", "--out", str(out)])
    assert code == 0
    lines = capsys.readouterr().out.splitlines()
    assert lines[0].startswith("n,r,seed,trial,quantity,value")
    assert ",exact_zeta," in lines[1]
    assert out.read_text().splitlines()[0] == lines[0]


def test_verify_concentration_passes(capsys):
    assert cli_dispatch(["verify-concentration", "--trials", "2000"]) == 0
    assert "✅" in capsys.readouterr().out


def test_failed_check_exits_one(capsys):
    # eps_c exceeds every torus distance here, so no crown pair is examined
    code = cli_dispatch(["verify-counts", "--n", "400", "--r", "3", "--pairs", "20"])
    assert code == 1
    assert "❌ pairs examined" in capsys.readouterr().out


def test_verify_distance_bound_report_file(tmp_path):
    out = tmp_path / "report.json"
    code = cli_dispatch(["verify-distance-bound", "--n", "1000", "--r", "5", "--pairs", "100", "--out", str(out)])
    assert code == 0
    assert json.loads(out.read_text())["title"].startswith("distance bound")


def test_usage_errors_exit_two():
    assert cli_dispatch(["generate", "--bogus"]) == 2
    assert cli_dispatch(["play", "--k", "2"]) == 2
    assert cli_dispatch([]) == 2
    assert cli_dispatch(["play", "--n", "50", "--r", "-1", "--k", "1"]) == 2


def test_help_exits_zero(capsys):
    assert cli_dispatch(["--help"]) == 0
    assert "rgg-localization" in capsys.readouterr().out


def test_play_is_deterministic(tmp_path):
    graph = tmp_path / "g.rgg"
    assert cli_dispatch(["generate", "--n", "400", "--r", "3", "--seed", "7", "--out", str(graph)]) == 0
    docs = []
    for name in ("a.json", "b.json"):
        out = tmp_path / name
        assert cli_dispatch(["play", "--graph", str(graph), "--k", "4", "--max-rounds", "20", "--out", str(out)]) == 0
        docs.append(out.read_text())
    assert docs[0] == docs[1]


@pytest.mark.slow
def test_verify_geometry_acceptance(capsys):
    assert cli_dispatch(["verify-geometry", "--trials", "200", "--seed", "1"]) == 0
