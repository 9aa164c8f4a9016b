"""Sparse Gaussian Markov random field engine.

Sparse Cholesky factorization, triangular solves, selected inversion and
log-determinants on symmetric positive definite precision matrices, together
with SPDE/FEM space-time precision constructions, Gaussian conditioning and
seeded sampling.
"""

from .errors import DimensionMismatch, MatrixMarketError, MemoryCapExceeded, NotPositiveDefinite
from .factor import (
    CholeskyFactor,
    SymbolicFactor,
    analyze,
    cholesky,
    factorize,
    logdet,
    solve_full,
    solve_lower,
    solve_upper,
)
from .ordering import Permutation, order
from .selinv import SelectedInverse, marginal_variances, selected_inverse
from .sparse import (
    ProjectionMatrix,
    SparsityPattern,
    SymmetricSparseMatrix,
    add_scaled,
    kron,
    matvec,
    normal_product,
)

__version__ = "0.1.0"
