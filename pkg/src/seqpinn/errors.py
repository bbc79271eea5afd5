"""Exception types shared across the package."""


class StructureError(ValueError):
    """Shapes, lengths or architectures do not line up."""


class DegenerateInputError(ValueError):
    """Input is well-formed but empty or numerically meaningless (e.g. U = 0)."""


class FormatError(ValueError):
    """A checkpoint or posterior file is corrupt, truncated or of the wrong version."""


class ValidationError(ValueError):
    """A flow-case directory violates its schema or invariants."""
