"""Space-time precision matrices built from temporal and spatial FEM matrices.

Index layout everywhere: space varies fastest, so the value at spatial node
``s`` and time index ``t`` (both 0-based) sits at ``t * n_space + s``.

Models:

* temporal: first-order (OU-type) process, ``(k^2 M0 + 2 k M1 + M2) / (2 k)``
  with ``k = 2 / range_time``;
* spatial: Matern with alpha = 2, ``(g^2 C0 + 2 g G1 + G2) / (4 pi g)``
  with ``g = 8 / range_space^2``;
* separable: Kronecker product of the two;
* non-separable: diffusion-based model with orders (1, 2, 1) in
  (time, space, noise), a sum of three Kronecker products scaled by ``ge2``.
"""

from __future__ import annotations

from dataclasses import asdict, dataclass
from math import pi

import numpy as np

from .errors import DimensionMismatch
from .fem import FemMatrices, check_compatible
from .factor import cholesky
from .selinv import marginal_variances
from .sparse import SymmetricSparseMatrix, kron, linear_combination

PAPER_RANGE_TIME = 20.0
PAPER_RANGE_SPACE = 6.0
PAPER_SIGMA_U = 1.0
PAPER_GT = 2.23
PAPER_GE2 = 0.0805


@dataclass(frozen=True)
class SpaceTimeHyper:
    range_time: float
    range_space: float
    sigma_u: float
    gt: float
    gs2: float
    ge2: float
    kappa_t: float
    alpha_t: int = 1
    alpha_s: int = 2
    alpha_eps: int = 1

    def __post_init__(self):
        for name in ("range_time", "range_space", "sigma_u", "gt", "gs2", "ge2", "kappa_t"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive")
        if (self.alpha_t, self.alpha_s, self.alpha_eps) != (1, 2, 1):
            raise ValueError("only orders (alpha_t, alpha_s, alpha_eps) = (1, 2, 1) are supported")

    @classmethod
    def from_ranges(
        cls,
        range_time: float = PAPER_RANGE_TIME,
        range_space: float = PAPER_RANGE_SPACE,
        sigma_u: float = PAPER_SIGMA_U,
        gt: float = PAPER_GT,
        ge2: float = PAPER_GE2,
    ) -> "SpaceTimeHyper":
        if not (range_time > 0 and range_space > 0):
            raise ValueError("ranges must be positive")
        return cls(
            range_time=range_time,
            range_space=range_space,
            sigma_u=sigma_u,
            gt=gt,
            gs2=8.0 / range_space**2,
            ge2=ge2,
            kappa_t=2.0 / range_time,
        )

    def to_dict(self) -> dict:
        return asdict(self)


def temporal_precision(tfem: FemMatrices, m1: SymmetricSparseMatrix, kappa_t: float) -> SymmetricSparseMatrix:
    if not kappa_t > 0:
        raise ValueError("kappa_t must be positive")
    check_compatible(tfem, m1)
    k = kappa_t
    return linear_combination([(k * k, tfem.c0), (2 * k, m1), (1.0, tfem.g1)]).scaled(1.0 / (2 * k))


def spatial_precision(sfem: FemMatrices, gs2: float) -> SymmetricSparseMatrix:
    if not gs2 > 0:
        raise ValueError("gs2 must be positive")
    if sfem.order < 2:
        raise ValueError("spatial FEM needs g2 (order >= 2)")
    q = linear_combination([(gs2 * gs2, sfem.c0), (2 * gs2, sfem.g1), (1.0, sfem.g2)])
    return q.scaled(1.0 / (4 * pi * gs2))


def separable_precision(q_t: SymmetricSparseMatrix, q_s: SymmetricSparseMatrix) -> SymmetricSparseMatrix:
    """``kron(q_t, q_s)``: time blocks of spatial fields."""
    return kron(q_t, q_s)


def nonseparable_precision(
    tfem: FemMatrices, m1: SymmetricSparseMatrix, sfem: FemMatrices, h: SpaceTimeHyper
) -> SymmetricSparseMatrix:
    """Three-term Kronecker sum for the diffusion-based model, scaled by ``ge2``.

    ``ge2 * [kron(gt^2 M2, gs2 C0 + G1)
             + kron(M0, gs2^3 C0 + gs2^2 G1 + gs2 G2 + G3)
             + kron(2 gt M1, gs2^2 C0 + 2 gs2 G1 + G2)]``
    """
    if sfem.order < 3:
        raise ValueError("spatial FEM needs g3 (assemble with order >= 3)")
    if tfem.order < 1:
        raise ValueError("temporal FEM needs g1")
    check_compatible(tfem, m1)
    g, gt = h.gs2, h.gt
    c0, g1, g2, g3 = sfem.c0, sfem.g1, sfem.g2, sfem.g3
    s1 = linear_combination([(g, c0), (1.0, g1)])
    s2 = linear_combination([(g**3, c0), (g**2, g1), (g, g2), (1.0, g3)])
    s3 = linear_combination([(g**2, c0), (2 * g, g1), (1.0, g2)])
    terms = [
        (h.ge2, kron(tfem.g1.scaled(gt * gt), s1)),
        (h.ge2, kron(tfem.c0, s2)),
        (h.ge2, kron(m1.scaled(2 * gt), s3)),
    ]
    return linear_combination(terms)


def build_models(tfem: FemMatrices, m1, sfem: FemMatrices, h: SpaceTimeHyper) -> dict:
    """All four precisions; the space-time ones are divided by ``sigma_u^2``."""
    q_t = temporal_precision(tfem, m1, h.kappa_t)
    q_s = spatial_precision(sfem, h.gs2)
    scale = 1.0 / h.sigma_u**2
    return {
        "temporal": q_t,
        "spatial": q_s,
        "separable": separable_precision(q_t, q_s).scaled(scale),
        "nonseparable": nonseparable_precision(tfem, m1, sfem, h).scaled(scale),
    }


def time_slice(field: np.ndarray, n_space: int, t: int) -> np.ndarray:
    """Spatial field at 0-based time index ``t`` from a space-fastest vector."""
    field = np.asarray(field)
    if field.shape[0] % n_space:
        raise DimensionMismatch(f"length {field.shape[0]} is not a multiple of {n_space}")
    return field[t * n_space:(t + 1) * n_space]


def interior_mask(distance_to_boundary: np.ndarray, margin: float) -> np.ndarray:
    """Nodes strictly farther than ``margin`` from the mesh boundary."""
    return np.asarray(distance_to_boundary) > margin


def normalizing_ge2(
    tfem: FemMatrices, m1, sfem: FemMatrices, h: SpaceTimeHyper, interior: np.ndarray
) -> float:
    """``ge2`` giving unit median marginal variance over interior space-time nodes.

    The precision is linear in ``ge2``, so variances scale as ``1 / ge2`` and
    one selected inversion gives the answer exactly.
    """
    q = nonseparable_precision(tfem, m1, sfem, h)
    var = marginal_variances(cholesky(q))
    mask = np.tile(np.asarray(interior, dtype=bool), tfem.n)
    return float(h.ge2 * np.median(var[mask]))
