"""Error types raised by the estimators and the experiment runner."""


class ShiftWeightError(Exception):
    pass


class SingularOperator(ShiftWeightError):
    """Forward operator is rank deficient; carries the singular spectrum."""

    def __init__(self, message, spectrum=None):
        super().__init__(message)
        self.spectrum = spectrum


class IllConditioned(ShiftWeightError):
    """Linear system could not be solved even after jitter escalation."""


class SolverDidNotConverge(ShiftWeightError):
    """Iterative solver hit its iteration cap while still moving."""

    def __init__(self, message, objective_gap=None):
        super().__init__(message)
        self.objective_gap = objective_gap


class ConfigError(ShiftWeightError):
    """Bad experiment config; carries the offending line number and field."""

    def __init__(self, message, line=None, field=None):
        super().__init__(message)
        self.line = line
        self.field = field
