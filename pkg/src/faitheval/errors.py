"""Exception hierarchy shared by all faitheval modules.

Every error carries enough context (ids, line numbers) to locate the
offending input without a debugger.
"""


class FaithEvalError(Exception):
    """Base class for all toolkit errors."""


class ConfigError(FaithEvalError):
    """Bad run configuration (missing path, malformed flag, bad config file)."""


# --- corpus / ingestion -----------------------------------------------------

class DataError(FaithEvalError):
    """Base class for malformed or inconsistent input data."""


class ParseError(DataError):
    def __init__(self, line_no: int, message: str):
        super().__init__(f"line {line_no}: {message}")
        self.line_no = line_no


class DuplicateKey(DataError):
    def __init__(self, key):
        super().__init__(f"duplicate key: {key!r}")
        self.key = key


class EmptyField(DataError):
    def __init__(self, field: str, line_no: int | None = None):
        where = f" (line {line_no})" if line_no is not None else ""
        super().__init__(f"empty field {field!r}{where}")
        self.field = field
        self.line_no = line_no


class SpanOutOfRange(DataError):
    pass


class VacuousSpan(DataError):
    """A span that overlaps no token at all (whitespace-only cover)."""


class OverlappingSpans(DataError):
    def __init__(self, annotator_id: str, doc_id: str, system_id: str = ""):
        super().__init__(
            f"annotator {annotator_id!r} has overlapping spans on "
            f"({doc_id!r}, {system_id!r})"
        )
        self.annotator_id = annotator_id
        self.doc_id = doc_id
        self.system_id = system_id


class UnknownSystem(DataError):
    def __init__(self, doc_id: str, system_id: str):
        super().__init__(f"no summary for ({doc_id!r}, {system_id!r})")
        self.doc_id = doc_id
        self.system_id = system_id


class IllegalLabel(DataError):
    def __init__(self, label: str, task: str):
        super().__init__(f"label {label!r} is not legal for task {task!r}")
        self.label = label
        self.task = task


class MissingReference(DataError):
    def __init__(self, doc_id: str):
        super().__init__(f"no reference summary for doc {doc_id!r}")
        self.doc_id = doc_id


# --- agreement --------------------------------------------------------------

class InsufficientRaters(DataError):
    pass


class RaggedCounts(DataError):
    pass


class IncompleteAnnotation(DataError):
    def __init__(self, doc_id: str, system_id: str = "", detail: str = ""):
        msg = f"incomplete annotation for ({doc_id!r}, {system_id!r})"
        if detail:
            msg += f": {detail}"
        super().__init__(msg)
        self.doc_id = doc_id
        self.system_id = system_id


# --- correlation ------------------------------------------------------------

class DegenerateSeries(DataError):
    """A constant series has no rank order; the coefficient is undefined."""


# --- scorer gateway ---------------------------------------------------------

class ScorerError(FaithEvalError):
    """Base class for external-scorer problems (wire or file)."""


class SchemaError(ScorerError, DataError):
    def __init__(self, line_no: int, message: str):
        super().__init__(f"line {line_no}: {message}")
        self.line_no = line_no


class ProbabilityNotNormalized(ScorerError, DataError):
    def __init__(self, key, total: float):
        super().__init__(f"probabilities for {key!r} sum to {total!r}, not 1")
        self.key = key
        self.total = total


class EndpointUnavailable(ScorerError):
    pass


class InvalidResponse(ScorerError):
    pass


class MissingScore(DataError):
    def __init__(self, doc_id: str, system_id: str = ""):
        super().__init__(f"no score for ({doc_id!r}, {system_id!r})")
        self.doc_id = doc_id
        self.system_id = system_id


# --- entailment selection / cross-validation --------------------------------

class NoCandidates(DataError):
    def __init__(self, doc_id: str):
        super().__init__(f"no scored candidates for doc {doc_id!r}")
        self.doc_id = doc_id


class MissingAnnotation(DataError):
    def __init__(self, doc_id: str, system_id: str):
        super().__init__(f"no annotation for selected pair ({doc_id!r}, {system_id!r})")
        self.doc_id = doc_id
        self.system_id = system_id


class FoldLeakage(DataError):
    def __init__(self, fold: int, doc_id: str):
        super().__init__(f"score file for fold {fold} contains out-of-fold doc {doc_id!r}")
        self.fold = fold
        self.doc_id = doc_id


class MissingFold(DataError):
    def __init__(self, fold: int):
        super().__init__(f"no score file for fold {fold}")
        self.fold = fold


# --- question answering -----------------------------------------------------

class NoQuestions(DataError):
    def __init__(self, system_id: str):
        super().__init__(f"no question-answer verdicts for system {system_id!r}")
        self.system_id = system_id


class MissingDocument(DataError):
    def __init__(self, doc_id: str):
        super().__init__(f"no document with id {doc_id!r}")
        self.doc_id = doc_id


# --- annotation service -----------------------------------------------------

class ServiceError(FaithEvalError):
    """Base class for annotation-service request errors."""


class UnknownPair(ServiceError):
    def __init__(self, doc_id: str, system_id: str):
        super().__init__(f"pair ({doc_id!r}, {system_id!r}) is not in the corpus")
        self.doc_id = doc_id
        self.system_id = system_id


class FilterViolation(ServiceError):
    pass


class NotAssigned(ServiceError):
    pass


class AlreadySubmitted(ServiceError):
    pass


class UnknownTask(ServiceError):
    def __init__(self, task_id: str):
        super().__init__(f"no task with id {task_id!r}")
        self.task_id = task_id
