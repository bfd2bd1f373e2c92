# Graph Soft Counter - Soft and hard edge counting for knowledge-graph QA, with SparseVD dissection.
# Copyright (C) 2026 - softcounter contributors
# SPDX-License-Identifier: Apache-2.0
"""
Node-type and relation inventories of schema graphs, and the one-hot layout of
edge triplets.

An edge triplet is ``(head node type, relation, tail node type)``. It is encoded
as the concatenation ``[u_s, e_st, u_t]`` of three one-hot blocks:

- head type at ``[0, N)``
- relation at ``[N, N + R)``
- tail type at ``[N + R, 2N + R)``

Relation layout (default ``R = 38``)
------------------------------------
- ``0..16``  base knowledge-graph relations
- ``17..33`` their reversals (``rev(r) = r + 17``)
- ``34..37`` question link, its reversal, answer link, its reversal

Node types (default ``N = 4``): ``0`` context, ``1`` question entity,
``2`` answer entity, ``3`` other entity.
"""
from dataclasses import dataclass

import numpy as np

from .exception import EncodingError
from .exception import InvalidConfigError

NODE_CONTEXT = 0
NODE_QUESTION = 1
NODE_ANSWER = 2
NODE_OTHER = 3

NODE_ROLE_NAMES = ("context", "Q entity", "A entity", "O entity")

BASE_RELATION_NAMES = (
    "is the antonym of",
    "is at location of",
    "is capable of",
    "causes",
    "is created by",
    "is a",
    "desires",
    "has subevent",
    "is part of",
    "has context",
    "has property",
    "is made of",
    "is not capable of",
    "does not desires",
    "receives action",
    "is related to",
    "is used for",
)

LINK_RELATION_NAMES = (
    "question link",
    "question link (inverse)",
    "answer link",
    "answer link (inverse)",
)

# Relation ids of the QA link edges in the default layout.
REL_QUESTION_LINK = 34
REL_ANSWER_LINK = 36


@dataclass(frozen=True)
class TripletVocabulary:
    """
    Node-type and relation inventories with the triplet one-hot layout.

    Attributes
    ----------
    node_type_count : int
        Number of node types ``N``.
    relation_count : int
        Number of relation types ``R`` (reversals included).
    link_relation_count : int | None
        Number of trailing relations outside the base/reversed blocks.
        ``None`` resolves to 4 (question/answer links and their reversals)
        when the remaining relations split in two equal blocks, else to
        ``R mod 2``.
    pad_to : int | None
        Optional encoder input dimension larger than ``2N + R``; the extra
        positions stay zero.
    """

    node_type_count: int = 4
    relation_count: int = 38
    link_relation_count: int | None = None
    pad_to: int | None = None

    def __post_init__(self):
        if self.node_type_count < 1:
            raise InvalidConfigError(
                "node_type_count", self.node_type_count, "must be >= 1"
            )
        if self.relation_count < 1:
            raise InvalidConfigError(
                "relation_count", self.relation_count, "must be >= 1"
            )
        links = self.link_count
        if links < 0 or links > self.relation_count:
            raise InvalidConfigError(
                "link_relation_count", links, "must lie in [0, relation_count]"
            )
        if (self.relation_count - links) % 2:
            raise InvalidConfigError(
                "link_relation_count",
                links,
                "relation_count - link_relation_count must be even",
            )
        if self.pad_to is not None and self.pad_to < self.natural_dim:
            raise InvalidConfigError(
                "pad_to", self.pad_to, f"must be >= {self.natural_dim}"
            )

    # ------------------------------------------------------------------
    # Layout
    # ------------------------------------------------------------------
    @property
    def link_count(self) -> int:
        if self.link_relation_count is not None:
            return self.link_relation_count
        if self.relation_count >= 4 and (self.relation_count - 4) % 2 == 0:
            return 4
        return self.relation_count % 2

    @property
    def base_relation_count(self) -> int:
        return (self.relation_count - self.link_count) // 2

    @property
    def natural_dim(self) -> int:
        return 2 * self.node_type_count + self.relation_count

    @property
    def onehot_dim(self) -> int:
        return self.pad_to if self.pad_to is not None else self.natural_dim

    @property
    def relation_offset(self) -> int:
        return self.node_type_count

    @property
    def tail_offset(self) -> int:
        return self.node_type_count + self.relation_count

    @property
    def triplet_count(self) -> int:
        """Number of distinct triplet types ``N * R * N``."""
        return self.node_type_count**2 * self.relation_count

    # ------------------------------------------------------------------
    # Relations
    # ------------------------------------------------------------------
    def reverse(self, rel: int) -> int:
        """Return the reversed relation id; ``reverse(reverse(r)) == r``."""
        self._check("rel", rel, self.relation_count)
        base = self.base_relation_count
        if rel < base:
            return rel + base
        if rel < 2 * base:
            return rel - base
        offset = rel - 2 * base
        # Link relations come in (forward, reversed) pairs; an unpaired last
        # relation is its own reversal.
        if offset % 2 == 0:
            return rel + 1 if rel + 1 < self.relation_count else rel
        return rel - 1

    def reverse_table(self) -> np.ndarray:
        """Return the reversal of every relation id as an integer array."""
        return np.array(
            [self.reverse(r) for r in range(self.relation_count)], dtype=np.int64
        )

    def relation_name(self, rel: int) -> str:
        """Return a readable relation name (ids when the layout is not the default one)."""
        self._check("rel", rel, self.relation_count)
        base = self.base_relation_count
        if base == len(BASE_RELATION_NAMES):
            if rel < base:
                return BASE_RELATION_NAMES[rel]
            if rel < 2 * base:
                return f"{BASE_RELATION_NAMES[rel - base]} (inverse)"
            if self.link_count == len(LINK_RELATION_NAMES):
                return LINK_RELATION_NAMES[rel - 2 * base]
        return f"relation {rel}"

    def node_type_name(self, node_type: int) -> str:
        self._check("node_type", node_type, self.node_type_count)
        if self.node_type_count == len(NODE_ROLE_NAMES):
            return NODE_ROLE_NAMES[node_type]
        return f"type {node_type}"

    # ------------------------------------------------------------------
    # Triplet ids
    # ------------------------------------------------------------------
    def triplet_index(self, head_type: int, rel: int, tail_type: int) -> int:
        """Return the dense id of a triplet type, in ``[0, triplet_count)``."""
        self._check("head_type", head_type, self.node_type_count)
        self._check("rel", rel, self.relation_count)
        self._check("tail_type", tail_type, self.node_type_count)
        typed_rel = head_type * self.relation_count + rel
        return typed_rel * self.node_type_count + tail_type

    def triplet_from_index(self, index: int) -> tuple[int, int, int]:
        self._check("triplet", index, self.triplet_count)
        head_rel, tail_type = divmod(index, self.node_type_count)
        head_type, rel = divmod(head_rel, self.relation_count)
        return head_type, rel, tail_type

    def all_triplets(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """Return head types, relations and tail types of every triplet type, in id order."""
        ids = np.arange(self.triplet_count, dtype=np.int64)
        head_rel, tails = np.divmod(ids, self.node_type_count)
        heads, rels = np.divmod(head_rel, self.relation_count)
        return heads, rels, tails

    # ------------------------------------------------------------------
    # Persistence
    # ------------------------------------------------------------------
    def to_dict(self) -> dict:
        data = {
            "node_type_count": self.node_type_count,
            "relation_count": self.relation_count,
        }
        if self.link_relation_count is not None:
            data["link_relation_count"] = self.link_relation_count
        if self.pad_to is not None:
            data["onehot_dim"] = self.pad_to
        return data

    @classmethod
    def from_dict(cls, data: dict) -> "TripletVocabulary":
        known = {
            "node_type_count",
            "relation_count",
            "link_relation_count",
            "onehot_dim",
        }
        unknown = set(data) - known
        if unknown:
            raise InvalidConfigError("vocab", sorted(unknown), "unknown keys")
        return cls(
            node_type_count=int(data.get("node_type_count", 4)),
            relation_count=int(data.get("relation_count", 38)),
            link_relation_count=data.get("link_relation_count"),
            pad_to=data.get("onehot_dim"),
        )

    @staticmethod
    def _check(field: str, value: int, upper: int) -> None:
        if not 0 <= value < upper:
            raise EncodingError(field, value, upper)


def build_triplet_vocab(
    node_type_count: int = 4, relation_count: int = 38, pad_to: int | None = None
) -> TripletVocabulary:
    """
    Build a vocabulary with the deterministic one-hot layout.

    Raises
    ------
    InvalidConfigError
        If a count is lower than 1.
    """
    return TripletVocabulary(
        node_type_count=node_type_count, relation_count=relation_count, pad_to=pad_to
    )


def encode_triplet_onehot(
    head_type: int, rel: int, tail_type: int, vocab: TripletVocabulary
) -> np.ndarray:
    """
    Encode one triplet as the three-hot vector ``[u_s, e_st, u_t]``.

    Raises
    ------
    EncodingError
        Naming the field (``head_type``, ``rel`` or ``tail_type``) that is out
        of range.
    """
    vocab.triplet_index(head_type, rel, tail_type)
    vector = np.zeros(vocab.onehot_dim, dtype=np.float64)
    vector[head_type] = 1.0
    vector[vocab.relation_offset + rel] = 1.0
    vector[vocab.tail_offset + tail_type] = 1.0
    return vector


def decode_triplet_onehot(
    vector: np.ndarray, vocab: TripletVocabulary
) -> tuple[int, int, int]:
    """Inverse of :func:`encode_triplet_onehot`."""
    vector = np.asarray(vector, dtype=np.float64)
    if vector.shape != (vocab.onehot_dim,):
        raise EncodingError("vector", vector.shape[0], vocab.onehot_dim + 1)
    head = int(np.argmax(vector[: vocab.relation_offset]))
    rel = int(np.argmax(vector[vocab.relation_offset : vocab.tail_offset]))
    tail = int(np.argmax(vector[vocab.tail_offset : vocab.natural_dim]))
    return head, rel, tail


def encode_triplets(
    heads: np.ndarray, rels: np.ndarray, tails: np.ndarray, vocab: TripletVocabulary
) -> np.ndarray:
    """Vectorised encoding: one row per triplet, shape ``[E, onehot_dim]``."""
    heads = np.asarray(heads, dtype=np.int64)
    rels = np.asarray(rels, dtype=np.int64)
    tails = np.asarray(tails, dtype=np.int64)
    for field, values, upper in (
        ("head_type", heads, vocab.node_type_count),
        ("rel", rels, vocab.relation_count),
        ("tail_type", tails, vocab.node_type_count),
    ):
        if values.size and (values.min() < 0 or values.max() >= upper):
            bad = values[(values < 0) | (values >= upper)][0]
            raise EncodingError(field, int(bad), upper)
    rows = np.arange(heads.size)
    matrix = np.zeros((heads.size, vocab.onehot_dim), dtype=np.float64)
    matrix[rows, heads] = 1.0
    matrix[rows, vocab.relation_offset + rels] = 1.0
    matrix[rows, vocab.tail_offset + tails] = 1.0
    return matrix
