"""Exception types shared across the package.

The CLI maps these onto exit codes: ConfigError is a usage fault (exit 2),
everything else raised at runtime is a data/runtime fault (exit 1).
"""


class DomainError(ValueError):
    """An operation received numerically invalid input (non-finite, out of range)."""


class ConfigError(ValueError):
    """A configuration file or object is malformed or incomplete."""


class FormatError(ValueError):
    """A data file does not follow its expected layout.

    Carries the offending path and, when known, the 1-based line number.
    """

    def __init__(self, message, path=None, line=None):
        self.path = path
        self.line = line
        where = ""
        if path is not None:
            where = f"{path}"
            if line is not None:
                where += f":{line}"
            where = f" ({where})"
        super().__init__(f"{message}{where}")


class StateError(RuntimeError):
    """An object was driven through an illegal state transition."""


class TrainingFault(RuntimeError):
    """Training produced a non-finite loss or gradient; carries the step index."""

    def __init__(self, message, step=None):
        self.step = step
        if step is not None:
            message = f"{message} (at step {step})"
        super().__init__(message)


class CheckpointError(ValueError):
    """A checkpoint file is corrupt or does not match its declared digest."""
