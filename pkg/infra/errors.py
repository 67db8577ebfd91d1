"""Base exceptions shared by every stage; the CLI turns ``exit_code`` into the process status."""


class ShapeforgeError(Exception):
    exit_code = 1


class ValidationError(ShapeforgeError):
    """Input is well-formed on disk but violates a domain rule."""


class PreconditionError(ValidationError):
    """An operation was called outside its documented precondition."""


class IoFailure(ShapeforgeError):
    exit_code = 2
