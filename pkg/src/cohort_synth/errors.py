"""Errors and warning categories shared across the package."""


class CohortSynthError(Exception):
    """Base class for all package-specific errors."""


class MalformedCsv(CohortSynthError):
    """A CSV row (or header) could not be parsed."""

    def __init__(self, row: int, message: str):
        super().__init__(f"row {row}: {message}")
        self.row = row


class UnknownCode(CohortSynthError):
    """An activity code is absent from the registered lexicon."""

    def __init__(self, code: int, row: int | None = None):
        where = f" (row {row})" if row is not None else ""
        super().__init__(f"activity code {code} not in lexicon{where}")
        self.code = code
        self.row = row


class OverlappingRecords(CohortSynthError):
    def __init__(self, case_id: str):
        super().__init__(f"diary {case_id}: records overlap")
        self.case_id = case_id


class DayNotCovered(CohortSynthError):
    def __init__(self, case_id: str, detail: str = ""):
        extra = f": {detail}" if detail else ""
        super().__init__(f"diary {case_id} does not cover the 1440-minute day{extra}")
        self.case_id = case_id


class InvalidDiary(CohortSynthError):
    """Residual diary invariant violation (e.g. record count out of range)."""

    def __init__(self, case_id: str, detail: str):
        super().__init__(f"diary {case_id}: {detail}")
        self.case_id = case_id


class InfeasibleTemplate(CohortSynthError):
    """A planted archetype template cannot produce a fillable 1440-minute day."""


class EmptyCorpus(CohortSynthError):
    pass


class InconsistentDictionary(CohortSynthError):
    pass


class SchemaMismatch(CohortSynthError):
    """Feature matrix is not column-compatible with a fitted forest."""


class TooFewClasses(CohortSynthError):
    """Label propagation needs at least two labeled classes."""


class NoLargeClass(CohortSynthError):
    """Small-class merging needs at least one class at or above the cutoff."""


class NonFiniteGradient(CohortSynthError):
    def __init__(self, iteration: int):
        super().__init__(f"non-finite gradient at iteration {iteration}")
        self.iteration = iteration


class PerplexityTooLarge(CohortSynthError):
    pass


class EmptySet(CohortSynthError):
    pass


class MissingClass(CohortSynthError):
    def __init__(self, class_ids):
        ids = sorted(class_ids)
        super().__init__(f"no synthetic set for classes: {ids}")
        self.class_ids = ids


class ConfigError(CohortSynthError):
    """Run configuration missing or malformed."""


class DegenerateInputWarning(UserWarning):
    """All feature rows identical; the embedding forest collapses to single leaves."""


class SingleClassWarning(UserWarning):
    """Classifier trained on a single label; predictions are constant."""


class DegenerateCorrelationWarning(UserWarning):
    """A dispersion profile was constant; correlation reported by convention."""
