"""Exception hierarchy shared across the package.

The CLI maps these onto exit codes: input/model problems exit 2, resource
caps exit 3, missing model families exit 4.  A violated mathematical claim
is not an exception; the harness reports it as a failed verdict (exit 1).
"""


class SyzygyError(Exception):
    """Base class for all package errors."""


class ModelError(SyzygyError):
    """Inconsistent or unusable input: bad model data, malformed strand,
    violated preconditions."""


class H1VanishingError(ModelError):
    """A section-space computation required h^1 of a kernel class to vanish
    and it did not.  Carries the offending divisor class."""

    def __init__(self, divisor_class, h1: int):
        self.divisor_class = divisor_class
        self.h1 = h1
        super().__init__(
            f"h^1 of kernel class {divisor_class} is {h1}, not 0; "
            "section space of the restriction is not computable by the "
            "surface-restriction calculus"
        )


class ResourceCapError(SyzygyError):
    """A computation would exceed the configured memory cap.  Carries a
    sizing report instead of thrashing."""

    def __init__(self, rows: int, cols: int, cap_bytes: int):
        self.rows = rows
        self.cols = cols
        self.cap_bytes = cap_bytes
        need = rows * cols * 8
        super().__init__(
            f"matrix of shape {rows}x{cols} needs {need} bytes "
            f"({need / 2**30:.2f} GiB) which exceeds the cap of "
            f"{cap_bytes} bytes ({cap_bytes / 2**30:.2f} GiB)"
        )


class IndeterminateError(SyzygyError):
    """No model family is available for the requested parameters; the
    verdict is indeterminate rather than pass/fail."""
