# Graph Soft Counter - Soft and hard edge counting for knowledge-graph QA, with SparseVD dissection.
# Copyright (C) 2026 - softcounter contributors
# SPDX-License-Identifier: Apache-2.0
"""
Persistence of QA instances, vocabulary configurations and predictions.

Instance files are UTF-8 JSON Lines, one question per line::

    {"id":"q1","label":0,"choices":[{"context_score":0.0,"nodes":[0,1,1,2],
     "edges":[[1,0,34],[3,0,36]]}, ...]}

``nodes`` is the node-type sequence (node 0 is the context node), ``edges``
are ``[src, dst, rel]`` triples and ``context_score`` may be ``null``.

Prediction files are JSON Lines ``{"id": ..., "pred": int, "scores": [...]}``.
"""
import json
from dataclasses import dataclass
from pathlib import Path

from .exception import InstanceParseError
from .exception import InvalidConfigError
from .logging_config import get_logger
from .schema_graph import Choice
from .schema_graph import QAInstance
from .schema_graph import SchemaGraph
from .schema_graph import validate_instance
from .vocabulary import TripletVocabulary

logger = get_logger(__name__)


@dataclass(frozen=True)
class Prediction:
    """Predicted choice of one instance with the score of every choice."""

    id: str
    pred: int
    scores: tuple[float, ...]


def _dumps(record: dict) -> str:
    return json.dumps(record, separators=(",", ":"), ensure_ascii=False)


def _choice_from_record(record) -> Choice:
    if not isinstance(record, dict):
        raise TypeError("a choice must be a JSON object")
    unknown = set(record) - {"context_score", "nodes", "edges"}
    if unknown:
        raise KeyError(f"unknown choice key(s) {sorted(unknown)}")
    score = record.get("context_score")
    bad_type = isinstance(score, bool) or not isinstance(score, int | float)
    if score is not None and bad_type:
        raise TypeError("'context_score' must be a number or null")
    nodes = record["nodes"]
    edges = record.get("edges", [])
    if not all(isinstance(item, int) and not isinstance(item, bool) for item in nodes):
        raise TypeError("'nodes' must be a list of integers")
    for edge in edges:
        if len(edge) != 3 or not all(
            isinstance(item, int) and not isinstance(item, bool) for item in edge
        ):
            raise TypeError("each edge must be an [src, dst, rel] integer triple")
    return Choice(
        graph=SchemaGraph.from_edges(nodes, edges),
        context_score=None if score is None else float(score),
    )


def instance_from_record(record) -> QAInstance:
    """
    Build an instance from its decoded JSON object.

    Raises
    ------
    KeyError, TypeError
        When a field is missing or has the wrong type.
    """
    if not isinstance(record, dict):
        raise TypeError("an instance must be a JSON object")
    unknown = set(record) - {"id", "label", "choices"}
    if unknown:
        raise KeyError(f"unknown instance key(s) {sorted(unknown)}")
    label = record["label"]
    if isinstance(label, bool) or not isinstance(label, int):
        raise TypeError("'label' must be an integer")
    return QAInstance(
        id=str(record["id"]),
        label=label,
        choices=tuple(_choice_from_record(item) for item in record["choices"]),
    )


def instance_to_record(instance: QAInstance) -> dict:
    """Return the JSON object of an instance, keys in file order."""
    return {
        "id": instance.id,
        "label": instance.label,
        "choices": [
            {
                "context_score": choice.context_score,
                "nodes": choice.graph.node_types.tolist(),
                "edges": [list(edge) for edge in choice.graph.edges],
            }
            for choice in instance.choices
        ],
    }


def load_instances(
    path: str | Path, vocab: TripletVocabulary | None = None
) -> list[QAInstance]:
    """
    Load and validate every instance of a JSON Lines file.

    Blank lines are skipped.

    Parameters
    ----------
    path : str | Path
        Instance file.
    vocab : TripletVocabulary | None
        Vocabulary used for validation (default vocabulary when ``None``).

    Raises
    ------
    InstanceParseError
        With the 1-based line number of a malformed line or a repeated id.
    GraphValidationError
        With the id of an instance breaking a graph invariant.
    """
    vocab = vocab if vocab is not None else TripletVocabulary()
    instances = []
    seen: set[str] = set()
    with open(path, "rb") as stream:
        for line_number, raw in enumerate(stream, start=1):
            if not raw.strip():
                continue
            try:
                instance = instance_from_record(json.loads(raw.decode("utf-8")))
            except UnicodeDecodeError as error:
                raise InstanceParseError(
                    str(path), line_number, f"invalid UTF-8 ({error.reason})"
                ) from error
            except json.JSONDecodeError as error:
                raise InstanceParseError(str(path), line_number, error.msg) from error
            except KeyError as error:
                raise InstanceParseError(
                    str(path), line_number, f"missing or unknown field {error}"
                ) from error
            except (TypeError, ValueError, OverflowError) as error:
                raise InstanceParseError(str(path), line_number, str(error)) from error
            if instance.id in seen:
                raise InstanceParseError(
                    str(path), line_number, f"duplicate id {instance.id!r}"
                )
            seen.add(instance.id)
            validate_instance(instance, vocab)
            instances.append(instance)
    logger.debug("loaded {n} instance(s) from {path}", n=len(instances), path=path)
    return instances


def save_instances(instances, path: str | Path) -> None:
    """Write instances as JSON Lines, one compact object per line."""
    Path(path).parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8") as stream:
        for instance in instances:
            stream.write(_dumps(instance_to_record(instance)) + "\n")
    logger.debug("saved instances to {path}", path=path)


def load_vocab_config(path: str | Path) -> TripletVocabulary:
    """
    Read a vocabulary configuration ``{"node_type_count": 4, "relation_count": 38}``.

    Raises
    ------
    InvalidConfigError
        If the file is not a JSON object or holds unknown keys.
    """
    with open(path, encoding="utf-8") as stream:
        try:
            data = json.load(stream)
        except json.JSONDecodeError as error:
            raise InvalidConfigError("vocab", str(path), error.msg) from error
    if not isinstance(data, dict):
        raise InvalidConfigError("vocab", str(path), "expected a JSON object")
    return TripletVocabulary.from_dict(data)


def save_vocab_config(vocab: TripletVocabulary, path: str | Path) -> None:
    with open(path, "w", encoding="utf-8") as stream:
        json.dump(vocab.to_dict(), stream, indent=2)
        stream.write("\n")


def save_predictions(predictions, path: str | Path) -> None:
    """Write a prediction file, one ``{"id", "pred", "scores"}`` object per line."""
    Path(path).parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8") as stream:
        for prediction in predictions:
            record = {
                "id": prediction.id,
                "pred": prediction.pred,
                "scores": list(prediction.scores),
            }
            stream.write(_dumps(record) + "\n")


def load_predictions(path: str | Path) -> list[Prediction]:
    """
    Read a prediction file.

    Raises
    ------
    InstanceParseError
        With the line number of a malformed record or a repeated id.
    """
    predictions = []
    seen: set[str] = set()
    with open(path, "rb") as stream:
        for line_number, raw in enumerate(stream, start=1):
            if not raw.strip():
                continue
            try:
                record = json.loads(raw.decode("utf-8"))
                predictions.append(
                    Prediction(
                        id=str(record["id"]),
                        pred=int(record["pred"]),
                        scores=tuple(float(item) for item in record.get("scores", [])),
                    )
                )
            except UnicodeDecodeError as error:
                raise InstanceParseError(
                    str(path), line_number, f"invalid UTF-8 ({error.reason})"
                ) from error
            except json.JSONDecodeError as error:
                raise InstanceParseError(str(path), line_number, error.msg) from error
            except (KeyError, TypeError, ValueError, OverflowError) as error:
                raise InstanceParseError(
                    str(path), line_number, f"bad prediction record ({error})"
                ) from error
            if predictions[-1].id in seen:
                raise InstanceParseError(
                    str(path), line_number, f"duplicate id {predictions[-1].id!r}"
                )
            seen.add(predictions[-1].id)
    return predictions
