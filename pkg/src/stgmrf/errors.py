class StgmrfError(Exception):
    """Base class for library errors."""


class DimensionMismatch(StgmrfError, ValueError):
    pass


class NotPositiveDefinite(StgmrfError, ArithmeticError):
    """A pivot was non-positive or below the relative pivot threshold.

    ``column`` is the failing column in factorization (permuted) order and
    ``original_index`` the corresponding row/column of the input matrix.
    """

    def __init__(self, column: int, original_index: int | None = None, pivot: float | None = None):
        self.column = column
        self.original_index = original_index
        self.pivot = pivot
        msg = f"matrix is not positive definite: pivot failure at column {column}"
        if original_index is not None:
            msg += f" (original index {original_index})"
        if pivot is not None:
            msg += f", pivot {pivot:.3e}"
        super().__init__(msg)


class MatrixMarketError(StgmrfError, ValueError):
    pass


class MeshError(StgmrfError, ValueError):
    pass


class MemoryCapExceeded(StgmrfError, MemoryError):
    pass
