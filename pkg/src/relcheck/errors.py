"""Exception types shared across the package."""


class RelcheckError(Exception):
    """Base class for input-level failures (parsing, validation, bad judgments)."""


class ParseError(RelcheckError):
    """Malformed concrete syntax; carries a position when one is known."""

    def __init__(self, message: str, pos: int | None = None, line: int | None = None):
        loc = ""
        if line is not None:
            loc = f"line {line}: "
        elif pos is not None:
            loc = f"column {pos + 1}: "
        super().__init__(loc + message)
        self.pos = pos
        self.line = line


class ValidationError(RelcheckError):
    """A proof structure violates its wiring or typing discipline."""

    def __init__(self, violations: list[str]):
        super().__init__("; ".join(violations))
        self.violations = violations


class InputError(RelcheckError):
    """A judgment's inputs do not fit together (arity, groundness, web, types)."""
