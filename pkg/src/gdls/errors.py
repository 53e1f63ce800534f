"""Exception types shared across the package."""


class DimensionError(ValueError):
    """Parameter or direction vector has the wrong shape."""


class LabelError(ValueError):
    """Labels fall outside the domain required by an objective family."""


class EvaluationRangeError(ArithmeticError):
    """An objective evaluation would overflow float64."""


class LineSearchError(RuntimeError):
    """Backtracking exhausted its trial budget.

    `last_step` is the last trial tried, `iteration` is filled in by the
    optimizer loop when the failure happens inside a run.
    """

    def __init__(self, message, last_step=None, iteration=None):
        super().__init__(message)
        self.last_step = last_step
        self.iteration = iteration
        self.trace = None


class StepSizeError(ValueError):
    """A step-size rule was called outside its domain."""


class ConfigError(ValueError):
    """Experiment configuration failed validation.

    `problems` holds (field path, message) pairs.
    """

    def __init__(self, problems):
        self.problems = list(problems)
        text = "; ".join(f"{path}: {msg}" for path, msg in self.problems)
        super().__init__(text or "invalid configuration")
