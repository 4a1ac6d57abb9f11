"""Domain error hierarchy.

Every domain failure raises a subclass of :class:`VforgeError`; the CLI
maps these to exit code 1 and prints ``ERROR <code>: <message>`` where
``code`` is the class name.
"""

from __future__ import annotations


class VforgeError(Exception):
    """Base class for all domain errors."""

    @property
    def code(self) -> str:
        return type(self).__name__


# --- neutral-format documents ---------------------------------------------

class MalformedDocument(VforgeError):
    pass


class MissingField(VforgeError):
    pass


class AmbiguousAttribute(VforgeError):
    pass


class ReservedName(VforgeError):
    pass


# --- message bus -----------------------------------------------------------

class BusClosed(VforgeError):
    pass


# --- platform registry -----------------------------------------------------

class DuplicateId(VforgeError):
    pass


class InvalidSourceConfig(VforgeError):
    pass


class UnknownFlavour(VforgeError):
    pass


class UnknownSilo(VforgeError):
    pass


class UnknownVThing(VforgeError):
    pass


class AlreadyAdded(VforgeError):
    pass


class NotFound(VforgeError):
    pass


# --- schema extraction -----------------------------------------------------

class EmptyInput(VforgeError):
    pass


class NonObjectSample(VforgeError):
    pass


# --- ontologies ------------------------------------------------------------

class DuplicateConcept(VforgeError):
    pass


class DanglingParent(VforgeError):
    pass


class ParentCycle(VforgeError):
    pass


# --- learning core ---------------------------------------------------------

class DegenerateMatrix(VforgeError):
    pass


class EmptyTrainingSet(VforgeError):
    pass


class ConflictingStrongVotes(VforgeError):
    pass


# --- review and translation ------------------------------------------------

class UnknownConcept(VforgeError):
    pass


class UnknownPair(VforgeError):
    pass


class UnknownSession(VforgeError):
    pass


class InvalidTransition(VforgeError):
    pass


class TargetConflict(VforgeError):
    pass


class NoApprovedPairs(VforgeError):
    pass


class MissingIdField(VforgeError):
    pass


class ConfigNotFound(VforgeError):
    pass
