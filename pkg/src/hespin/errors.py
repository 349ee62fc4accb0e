"""Exception types shared across the package."""


class DomainError(ValueError):
    """An input lies outside the domain of a physical formula."""


class DegenerateCouplingError(DomainError):
    """The spin-spin strength is undefined because gamma vanishes."""


class LayoutError(ValueError):
    """Operators or states disagree about the tensor-product layout."""


class TruncationError(ValueError):
    """A Fock truncation is too small for the requested process."""


class IntegrationError(RuntimeError):
    """Time integration failed (step underflow or excessive norm drift)."""


class ConfigError(ValueError):
    """Configuration text could not be validated.

    ``errors`` collects every problem found, each as ``(line, message)``
    where ``line`` is ``None`` for problems not tied to one line.
    """

    def __init__(self, errors):
        self.errors = list(errors)
        lines = []
        for line, msg in self.errors:
            lines.append(f"line {line}: {msg}" if line is not None else msg)
        super().__init__("\n".join(lines) if lines else "invalid configuration")
