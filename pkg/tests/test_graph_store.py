# tests/test_graph_store.py
import numpy as np
import pytest

from backend.services.errors import MalformedGraphFileError
from backend.services.game_engine import play
from backend.services.robber_strategies import max_class_robber
from backend.services.cop_strategies import composite_cop
from backend.services.profiles import ConstantsProfile
from database.graph_store import load_document, load_graph, save_document, save_graph, write_rows_csv
from database.models.graph_header import GraphHeader
from database.models.results import ResultRow
from database.models.transcript import GameConfig, Transcript

from tests.builders import path_graph


def test_graph_file_preserves_positions_exactly(tmp_path, square_instance):
    path = save_graph(square_instance, tmp_path / "g.rgg")
    G = load_graph(path)
    assert np.array_equal(G.positions, square_instance.positions)
    assert G.metric == "square" and G.r == square_instance.r and G.side == square_instance.side
    assert G.params.seed == square_instance.params.seed


def test_header_line():
    header = GraphHeader(n=3, r=1.5, side=10.0, seed=4)
    assert header.to_line() == "RGGT 1 3 1.5 10.0 binomial torus 4"
    assert GraphHeader.from_line(header.to_line()) == header


@pytest.mark.parametrize(
    "text",
    [
        "",
        "XXXX 1 1 1.0 2.0 binomial torus 0\n0.5 0.5\n",
        "RGGT 2 1 1.0 2.0 binomial torus 0\n0.5 0.5\n",
        "RGGT 1 2 1.0 2.0 binomial torus 0\n0.5 0.5\n",
        "RGGT 1 1 1.0 2.0 binomial torus 0\n0.5 abc\n",
        "RGGT 1 1 one 2.0 binomial torus 0\n0.5 0.5\n",
    ],
)
def test_malformed_graph_files(tmp_path, text):
    path = tmp_path / "bad.rgg"
    path.write_text(text)
    with pytest.raises(MalformedGraphFileError):
        load_graph(path)


def test_transcript_document(tmp_path):
    G = path_graph(6)
    t = play(G, GameConfig(k=1), composite_cop(ConstantsProfile.desk()), max_class_robber())
    path = save_document(t, tmp_path / "t.json")
    back = load_document(Transcript, path)
    assert back == t
    assert back.cop_won


def test_rows_csv(tmp_path):
    rows = [ResultRow(n=10, r=1.0, seed=0, trial=0, quantity="zeta_upper", value=3.0)]
    path = write_rows_csv(rows, tmp_path / "rows.csv")
    lines = path.read_text().splitlines()
    assert lines[0].startswith("n,r,seed,trial,quantity,value")
    assert lines[1].startswith("10,1.0,0,0,zeta_upper,3.0")
