# Graph Soft Counter - Soft and hard edge counting for knowledge-graph QA, with SparseVD dissection.
# Copyright (C) 2026 - softcounter contributors
# SPDX-License-Identifier: Apache-2.0
"""
This module provides the custom exceptions raised by softcounter. Each exception
builds a message describing what went wrong followed by a tip to fix it, so that
the command line can report errors without a traceback.
"""
from collections.abc import Sequence


class InvalidConfigError(ValueError):
    """Exception raised when a configuration value is out of its allowed range."""

    def __init__(self, field: str, value, reason: str):
        self.field = field
        message = (
            f"Invalid configuration for '{field}': got {value!r} ({reason}).\n"
            f"Tip: Check the value given on the command line or in the JSON "
            f"configuration file."
        )
        super().__init__(message)


class EncodingError(ValueError):
    """Exception raised when a triplet id does not fit the vocabulary."""

    def __init__(self, field: str, value: int, upper: int):
        self.field = field
        message = (
            f"Cannot encode triplet: {field}={value} is outside [0, {upper}).\n"
            f"Tip: The graph and the vocabulary disagree; build the vocabulary "
            f"with the node type and relation counts used to produce the data."
        )
        super().__init__(message)


class GraphValidationError(ValueError):
    """Exception raised when a schema graph or an instance breaks its invariants."""

    def __init__(self, diagnostics: Sequence[str], instance_id: str | None = None):
        self.diagnostics = list(diagnostics)
        self.instance_id = instance_id
        where = f"instance '{instance_id}'" if instance_id is not None else "graph"
        details = "\n".join(f"  - {item}" for item in self.diagnostics)
        message = (
            f"Validation failed for {where} ({len(self.diagnostics)} problem(s)):\n"
            f"{details}\n"
            f"Tip: Node 0 must be the context node and every edge must reference "
            f"existing nodes and known relations."
        )
        super().__init__(message)


class InstanceParseError(ValueError):
    """Exception raised when a line of an instance file cannot be parsed."""

    def __init__(self, path: str, line_number: int, reason: str):
        self.line_number = line_number
        message = (
            f"Cannot parse {path}, line {line_number}: {reason}.\n"
            f'Tip: Each line must be a JSON object like {{"id": "q1", "label": 0, '
            f'"choices": [{{"context_score": null, "nodes": [0, 1], '
            f'"edges": [[1, 0, 34]]}}]}}.'
        )
        super().__init__(message)


class ShapeError(ValueError):
    """Exception raised when two operands of a differentiable operation do not conform."""

    def __init__(self, operation: str, left: tuple, right: tuple):
        message = (
            f"Shape mismatch in '{operation}': {left} and {right}.\n"
            f"Tip: Check the layer dimensions against the feature dimension."
        )
        super().__init__(message)


class GraphIndexError(IndexError):
    """Exception raised when an edge index points outside the node range."""

    def __init__(self, operation: str, index: int, size: int):
        message = (
            f"Index {index} out of range for '{operation}' over {size} entries.\n"
            f"Tip: Validate the graph before running the message passing."
        )
        super().__init__(message)


class ContractError(ValueError):
    """Exception raised when a caller breaks a precondition of an operation."""

    def __init__(self, operation: str, reason: str):
        message = f"Contract violated in '{operation}': {reason}."
        super().__init__(message)


class MissingScoreError(ValueError):
    """Exception raised when a file-provided context score is absent."""

    def __init__(self, instance_id: str, choice: int):
        message = (
            f"Instance '{instance_id}', choice {choice} has no context score.\n"
            f"Tip: Use the 'zero' or 'constant' context provider, or fill "
            f"'context_score' in the instance file."
        )
        super().__init__(message)


class TrainingError(RuntimeError):
    """Exception raised when the optimisation diverges."""

    def __init__(self, parameter: str, reason: str):
        self.parameter = parameter
        message = (
            f"Training failed on parameter '{parameter}': {reason}.\n"
            f"Tip: Lower the learning rate or check the input features."
        )
        super().__init__(message)


class CheckpointError(ValueError):
    """Exception raised when a checkpoint does not match the data or the model kind."""

    def __init__(self, reason: str):
        message = (
            f"Unusable checkpoint: {reason}.\n"
            f"Tip: Evaluate with the vocabulary and model kind used for training."
        )
        super().__init__(message)


class GenerationError(ValueError):
    """Exception raised when a synthetic task configuration cannot be realised."""

    def __init__(self, reason: str):
        message = (
            f"Cannot generate the synthetic corpus: {reason}.\n"
            f"Tip: Increase the node ranges or lower the planted count deltas."
        )
        super().__init__(message)


class AlignmentError(ValueError):
    """Exception raised when prediction files do not cover the same instances."""

    def __init__(self, missing: Sequence[str]):
        shown = ", ".join(list(missing)[:5])
        message = (
            f"Prediction files are not aligned: {len(missing)} id(s) differ "
            f"(e.g. {shown}).\n"
            f"Tip: Compare predictions produced on the same instance file."
        )
        super().__init__(message)
