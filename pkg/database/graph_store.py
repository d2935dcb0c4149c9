# database/graph_store.py
"""Flat-file persistence: graph files, JSON documents and result CSVs."""
from pathlib import Path
from typing import Iterable, Union

import numpy as np
import pandas as pd
from loguru import logger
from pydantic import BaseModel

from backend.services.errors import MalformedGraphFileError
from backend.services.rgg_model import GraphInstance, ModelParams
from database.models.graph_header import GraphHeader
from database.models.results import RESULT_COLUMNS, ResultRow

PathLike = Union[str, Path]


def save_graph(G: GraphInstance, path: PathLike) -> Path:
    params = G.params
    header = GraphHeader(
        n=G.n,
        r=G.r,
        side=G.side,
        mode=params.mode if params else "binomial",
        metric=G.metric,
        seed=params.seed if params else 0,
    )
    path = Path(path)
    with path.open("w", encoding="utf-8") as fh:
        fh.write(header.to_line() + "\n")
        if G.n:
            np.savetxt(fh, G.positions, fmt="%.17g")
    logger.info(f"Saved graph with {G.n} vertices to {path}")
    return path


def load_graph(path: PathLike, profile: str = "desk") -> GraphInstance:
    path = Path(path)
    with path.open("r", encoding="utf-8") as fh:
        header = GraphHeader.from_line(fh.readline())
        lines = [ln for ln in fh.read().splitlines() if ln.strip()]
    if len(lines) != header.n:
        raise MalformedGraphFileError(f"header announces {header.n} positions, file has {len(lines)}")
    try:
        positions = np.array([[float(t) for t in ln.split()] for ln in lines], dtype=float).reshape(-1, 2)
    except ValueError as e:
        raise MalformedGraphFileError(f"bad coordinate line: {e}") from e
    params = ModelParams(
        n=header.n, r=header.r, mode=header.mode, metric=header.metric, seed=header.seed, profile=profile
    )
    G = GraphInstance.from_positions(positions, header.r, side=header.side, metric=header.metric, params=params)
    logger.info(f"Loaded graph with {G.n} vertices from {path}")
    return G


def save_document(doc: BaseModel, path: PathLike) -> Path:
    path = Path(path)
    path.write_text(doc.model_dump_json(indent=2), encoding="utf-8")
    logger.info(f"Wrote {type(doc).__name__} to {path}")
    return path


def load_document(model: type, path: PathLike):
    return model.model_validate_json(Path(path).read_text(encoding="utf-8"))


def rows_frame(rows: Iterable[ResultRow]) -> pd.DataFrame:
    return pd.DataFrame([row.model_dump() for row in rows], columns=RESULT_COLUMNS)


def write_rows_csv(rows: Iterable[ResultRow], path: PathLike) -> Path:
    path = Path(path)
    rows_frame(rows).to_csv(path, index=False)
    logger.info(f"Wrote results CSV to {path}")
    return path
