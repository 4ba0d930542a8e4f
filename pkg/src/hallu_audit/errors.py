"""Domain error hierarchy. Every error here maps to CLI exit code 1."""

from __future__ import annotations


class HalluAuditError(Exception):
    """Base class for all domain errors raised by this package."""


class InvariantViolation(HalluAuditError):
    """A core type was constructed with values that break its invariants."""


# core

class EmptyTripleSet(HalluAuditError):
    """Linearization of an empty triple collection was requested."""


class ZeroAnnotation(HalluAuditError):
    """Rate computation with zero annotated triples."""


class NegativeExcess(HalluAuditError):
    """Rate computation where the text expresses fewer triples than the annotation."""


# ingest

class MalformedXml(HalluAuditError):
    """Input is not well-formed XML or misses required elements."""


class TripleParseError(HalluAuditError):
    """A triple string does not have exactly two ' | ' separators."""


class MalformedJson(HalluAuditError):
    """Input is not valid JSON or misses required document fields."""


class IndexOutOfRange(HalluAuditError):
    """A relation label references an entity index outside the vertex set."""

    def __init__(self, message: str, title: str | None = None):
        super().__init__(message)
        self.title = title


class SchemaViolation(HalluAuditError):
    """A canonical JSONL line does not match the expected record shape."""

    def __init__(self, message: str, line: int | None = None):
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
        self.line = line


class EmptyDataset(HalluAuditError):
    """An operation that needs at least one point got an empty dataset."""


# corrupt

class NoEligibleDonor(HalluAuditError):
    """A point shares at least one triple with every other point."""


class NotATestSplit(HalluAuditError):
    """Fusing is only defined for test-split datasets."""


class TooFewPoints(HalluAuditError):
    """The operation needs more points than the dataset has."""


class InvalidFraction(HalluAuditError):
    """Deletion fraction outside [0, 1)."""


class UnknownPromptId(HalluAuditError):
    """prompt_id is not one of the registered prompt templates."""


class AugmentationRejected(HalluAuditError):
    """The augmentation backend returned an empty or shrunken text."""


# backends

class BackendUnavailable(HalluAuditError):
    """The remote backend cannot be reached or lacks a required capability."""


class ProtocolError(HalluAuditError):
    """The remote backend answered with a malformed or inconsistent payload."""


class EmptyInput(HalluAuditError):
    """A non-empty input string or batch was required."""


# detect / quantify

class EmptyAnnotation(HalluAuditError):
    """Detection needs at least one annotated triple."""


class EmptySchema(HalluAuditError):
    """A relation schema must contain at least one relation."""


# eval

class NotEnoughSamples(HalluAuditError):
    """Balanced sampling asked for more samples than are eligible."""


class IdMismatch(HalluAuditError):
    """Report and gold dataset do not cover the same point ids."""


class IoError(HalluAuditError):
    """Reading or writing an artifact failed at the OS level."""
