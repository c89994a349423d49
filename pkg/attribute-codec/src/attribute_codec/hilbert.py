"""Counting-measure inner products, B-spline bases and Gram recursions.

Functions live on the unit cube and are only ever observed on the voxel
origins ``x_i = p_i / 2^d``, so every inner product is a finite sum over the
cloud. Order 1 uses block indicators on the binary x→y→z split tree (levels
0..3d); order 2 uses tri-linear hats on the cubic octree (levels 0..d) whose
shifts are the corners of the occupied blocks. At the finest level the shift
set is the voxel set itself and the Gram matrix is the identity.
"""

import itertools
from dataclasses import dataclass
from typing import Optional

import numpy as np
import scipy.linalg as la
import scipy.sparse as sp
import scipy.sparse.linalg as spla
from bv_shared import (
    DimensionMismatchError,
    LevelRangeError,
    NumericalRankError,
    configure_logging,
    get_settings,
)
from voxel_core import CORNER_OFFSETS, VoxelCloud, axis_bits, corner_codes

logger = configure_logging("attribute-codec")

SUPPORTED_ORDERS = (1, 2)

# Two-scale offsets k in {-1, 0, 1}^3 and their tri-linear weights 2^-|k|_1.
TWO_SCALE_OFFSETS = np.array(list(itertools.product((-1, 0, 1), repeat=3)))
TWO_SCALE_WEIGHTS = 2.0 ** -np.abs(TWO_SCALE_OFFSETS).sum(axis=1)


def _check_order(order: int) -> None:
    if order not in SUPPORTED_ORDERS:
        raise ValueError(f"spline order must be 1 or 2, got {order}")


class ShiftIndex:
    """Exact lookup of integer shifts through Morton codes."""

    def __init__(self, shifts: np.ndarray, bits: int) -> None:
        self.shifts = np.asarray(shifts, dtype=np.int64).reshape(-1, 3)
        self.bits = bits
        codes = corner_codes(self.shifts, bits)
        self._order = np.argsort(codes, kind="stable")
        self._codes = codes[self._order]

    def find(self, queries: np.ndarray) -> np.ndarray:
        """Row of each query in ``shifts``, -1 where absent or off the lattice."""
        queries = np.asarray(queries, dtype=np.int64).reshape(-1, 3)
        result = np.full(len(queries), -1, dtype=np.int64)
        valid = np.all((queries >= 0) & (queries <= (1 << self.bits)), axis=1)
        if not valid.any() or len(self._codes) == 0:
            return result
        codes = corner_codes(queries[valid], self.bits)
        pos = np.minimum(np.searchsorted(self._codes, codes), len(self._codes) - 1)
        hit = self._codes[pos] == codes
        result[np.flatnonzero(valid)[hit]] = self._order[pos[hit]]
        return result


@dataclass(frozen=True, eq=False)
class CountingMeasure:
    """Counting measure supported on the voxel origins of a cloud.

    Attributes:
        points: (N, 3) voxel origins scaled to the unit cube
        depth: Grid depth the points were taken from
    """

    points: np.ndarray
    depth: int

    @classmethod
    def from_cloud(cls, cloud: VoxelCloud) -> "CountingMeasure":
        return cls(cloud.positions / float(1 << cloud.depth), cloud.depth)

    @property
    def num_points(self) -> int:
        return len(self.points)

    def measure(self, lower: np.ndarray, upper: np.ndarray) -> int:
        """Number of support points in the half-open box ``[lower, upper)``."""
        inside = np.all((self.points >= lower) & (self.points < upper), axis=1)
        return int(inside.sum())

    def inner_product(self, f: np.ndarray, g: np.ndarray) -> float:
        if len(f) != self.num_points or len(g) != self.num_points:
            raise DimensionMismatchError(
                f"inner product needs {self.num_points} samples per function"
            )
        return inner_product(f, g)


def inner_product(f: np.ndarray, g: np.ndarray) -> float:
    """Sum of ``f(x_n) g(x_n)`` over the support points.

    Raises:
        DimensionMismatchError: If the sample arrays differ in length
    """
    f = np.asarray(f, dtype=np.float64)
    g = np.asarray(g, dtype=np.float64)
    if f.shape != g.shape:
        raise DimensionMismatchError(f"sample shapes {f.shape} and {g.shape} differ")
    return float(np.sum(f * g))


@dataclass(frozen=True, eq=False)
class BasisSpec:
    """Basis functions of one level.

    Attributes:
        order: 1 for block indicators, 2 for tri-linear hats
        level: Binary tree level for order 1, cubic level for order 2
        shifts: (m, 3) active shifts
    """

    order: int
    level: int
    shifts: np.ndarray

    def __post_init__(self) -> None:
        _check_order(self.order)
        object.__setattr__(
            self, "shifts", np.asarray(self.shifts, dtype=np.int64).reshape(-1, 3)
        )

    @property
    def scale(self) -> np.ndarray:
        """Lattice resolution per axis at this level."""
        if self.order == 1:
            return np.array([1 << b for b in axis_bits(self.level)], dtype=np.float64)
        return np.full(3, float(1 << self.level))

    @property
    def index_bits(self) -> int:
        if self.order == 1:
            return max(axis_bits(self.level))
        return self.level


def _hat(t: np.ndarray) -> np.ndarray:
    return np.maximum(0.0, 1.0 - np.abs(t))


def eval_basis(spec: BasisSpec, n: np.ndarray, x: np.ndarray) -> float:
    """Value of the basis function with shift ``n`` at the point ``x``.

    Examples:
        >>> eval_basis(BasisSpec(2, 1, [[0, 0, 0]]), [0, 0, 0], [0.25] * 3)
        0.125
    """
    t = np.asarray(x, dtype=np.float64) * spec.scale
    n = np.asarray(n, dtype=np.float64)
    if spec.order == 1:
        return float(np.all(np.floor(t) == n))
    return float(np.prod(_hat(t - n)))


def evaluation_matrix(
    points: np.ndarray, shifts: np.ndarray, level: int, order: int = 2
) -> sp.csr_matrix:
    """Sparse (N × m) matrix of basis functions evaluated at points.

    Args:
        points: (N, 3) points in the unit cube
        shifts: (m, 3) shifts of the level's basis functions
        level: Binary level (order 1) or cubic level (order 2)
        order: Spline order

    Returns:
        CSR matrix whose column j samples the function with shift ``shifts[j]``
    """
    spec = BasisSpec(order, level, shifts)
    points = np.asarray(points, dtype=np.float64).reshape(-1, 3)
    index = ShiftIndex(spec.shifts, spec.index_bits)
    t = points * spec.scale
    base = np.floor(t).astype(np.int64)
    shape = (len(points), len(spec.shifts))

    if order == 1:
        col = index.find(base)
        keep = col >= 0
        rows = np.flatnonzero(keep)
        return sp.csr_matrix((np.ones(len(rows)), (rows, col[keep])), shape=shape)

    rows, cols, vals = [], [], []
    for offset in CORNER_OFFSETS:
        corner = base + offset
        weight = np.prod(_hat(t - corner), axis=1)
        col = index.find(corner)
        keep = (weight != 0.0) & (col >= 0)
        rows.append(np.flatnonzero(keep))
        cols.append(col[keep])
        vals.append(weight[keep])
    return sp.csr_matrix(
        (np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))),
        shape=shape,
    )


def evaluate_spline(
    coefficients: np.ndarray,
    shifts: np.ndarray,
    level: int,
    points: np.ndarray,
    order: int = 2,
) -> np.ndarray:
    """Evaluate ``sum_n F_n phi_n`` at the given points."""
    matrix = evaluation_matrix(points, shifts, level, order)
    return matrix @ np.asarray(coefficients, dtype=np.float64)


def two_scale_matrix(
    coarse_shifts: np.ndarray,
    fine_shifts: np.ndarray,
    *,
    level: int,
    depth: int,
    order: int = 2,
) -> sp.csr_matrix:
    """Two-scale coefficients ``A[i, j] = a_{m_j - 2 n_i}`` between levels.

    Order 1 splits axis ``level % 3`` and every child has weight 1. Order 2
    uses ``a_k = 2^-|k|_1`` for ``k`` in ``{-1, 0, 1}^3``; fine shifts missing
    from ``fine_shifts`` carry functions that vanish on every point and are
    skipped.

    Args:
        coarse_shifts: Shifts at ``level``
        fine_shifts: Shifts at ``level + 1``
        level: Coarse level
        depth: Grid depth, bounds the lattice used for lookups
        order: Spline order
    """
    _check_order(order)
    coarse = np.asarray(coarse_shifts, dtype=np.int64).reshape(-1, 3)
    index = ShiftIndex(fine_shifts, depth)
    rows, cols, vals = [], [], []
    if order == 1:
        axis = level % 3
        for child in (0, 1):
            fine = coarse.copy()
            fine[:, axis] = 2 * coarse[:, axis] + child
            col = index.find(fine)
            keep = col >= 0
            rows.append(np.flatnonzero(keep))
            cols.append(col[keep])
            vals.append(np.ones(int(keep.sum())))
    else:
        for offset, weight in zip(TWO_SCALE_OFFSETS, TWO_SCALE_WEIGHTS):
            col = index.find(2 * coarse + offset)
            keep = col >= 0
            rows.append(np.flatnonzero(keep))
            cols.append(col[keep])
            vals.append(np.full(int(keep.sum()), weight))
    return sp.csr_matrix(
        (np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))),
        shape=(len(coarse), len(index.shifts)),
    )


@dataclass(frozen=True, eq=False)
class GramSystem:
    """Normal equations of one level.

    Attributes:
        order: Spline order
        level: Level of the basis
        shifts: (m, 3) shifts of the basis functions
        gram: Sparse symmetric (m × m) matrix of basis inner products
        moments: (m, k) inner products of the basis with the attributes
    """

    order: int
    level: int
    shifts: np.ndarray
    gram: sp.csr_matrix
    moments: np.ndarray

    @property
    def size(self) -> int:
        return len(self.shifts)


def gram_at_voxel_level(cloud: VoxelCloud, order: int = 2) -> GramSystem:
    """Normal equations at the finest level: identity Gram, raw attributes."""
    _check_order(order)
    n = cloud.num_points
    level = cloud.depth if order == 2 else 3 * cloud.depth
    return GramSystem(
        order=order,
        level=level,
        shifts=cloud.positions.copy(),
        gram=sp.identity(n, format="csr"),
        moments=cloud.attributes.copy(),
    )


def gram_recursion(
    fine: GramSystem,
    coarse_shifts: np.ndarray,
    two_scale: Optional[sp.csr_matrix] = None,
    *,
    depth: Optional[int] = None,
) -> tuple[GramSystem, sp.csr_matrix]:
    """Coarsen a system by one level through the two-scale relation.

    Returns:
        The coarse system with ``G = A G' A^T`` and ``m = A m'``, and the
        cross-Gram ``A G'`` between the coarse and fine bases

    Raises:
        LevelRangeError: If the fine system is already at level 0
    """
    if fine.level == 0:
        raise LevelRangeError("level 0 has no coarser level")
    if two_scale is None:
        if depth is None:
            raise ValueError("depth is required to build the two-scale matrix")
        two_scale = two_scale_matrix(
            coarse_shifts,
            fine.shifts,
            level=fine.level - 1,
            depth=depth,
            order=fine.order,
        )
    if two_scale.shape[1] != fine.size:
        raise DimensionMismatchError(
            f"two-scale matrix has {two_scale.shape[1]} columns for {fine.size} shifts"
        )
    cross = (two_scale @ fine.gram).tocsr()
    coarse = GramSystem(
        order=fine.order,
        level=fine.level - 1,
        shifts=np.asarray(coarse_shifts, dtype=np.int64).reshape(-1, 3),
        gram=(cross @ two_scale.T).tocsr(),
        moments=two_scale @ fine.moments,
    )
    return coarse, cross


@dataclass(frozen=True)
class RankReduction:
    """Retained basis indices of a possibly singular Gram matrix.

    ``exact`` is False when only zero-diagonal functions were dropped because
    the matrix exceeded the dense factorization limit.
    """

    indices: np.ndarray
    exact: bool


def retain_full_rank(
    gram: sp.spmatrix,
    *,
    tolerance: Optional[float] = None,
    dense_limit: Optional[int] = None,
) -> RankReduction:
    """Select basis indices whose Gram submatrix has full rank.

    Functions with zero diagonal vanish on every point and are dropped first.
    A diagonal remainder is already full rank; otherwise column-pivoted QR
    keeps the pivots above ``tolerance`` relative to the largest.
    """
    settings = get_settings()
    tolerance = settings.rank_tolerance if tolerance is None else tolerance
    dense_limit = settings.dense_rank_limit if dense_limit is None else dense_limit

    gram = sp.csr_matrix(gram)
    diagonal = gram.diagonal()
    scale = diagonal.max(initial=0.0)
    if scale <= 0.0:
        return RankReduction(np.zeros(0, dtype=np.int64), True)
    structural = np.flatnonzero(diagonal > tolerance * scale)
    sub = gram[structural][:, structural]
    if sp.triu(sub, k=1).count_nonzero() == 0:
        return RankReduction(structural, True)
    if len(structural) > dense_limit:
        logger.warning(
            "Gram matrix too large for dense rank reduction",
            size=len(structural),
            dense_limit=dense_limit,
        )
        return RankReduction(structural, False)

    _, r, pivots = la.qr(sub.toarray(), pivoting=True, mode="economic")
    pivot_sizes = np.abs(np.diag(r))
    rank = int(np.sum(pivot_sizes > tolerance * pivot_sizes[0]))
    kept = np.sort(structural[pivots[:rank]])
    if rank < len(structural):
        logger.debug(
            "Dropped dependent basis functions",
            size=len(structural),
            rank=rank,
        )
    return RankReduction(kept, True)


def solve_normal_equations(
    gram: sp.spmatrix,
    rhs: np.ndarray,
    *,
    direct: bool = True,
    direct_limit: Optional[int] = None,
    cg_tolerance: Optional[float] = None,
) -> np.ndarray:
    """Solve ``gram @ x = rhs`` column by column.

    Sparse direct factorization is used up to ``direct_limit`` unknowns when
    ``direct`` is set; conjugate gradients otherwise.

    Raises:
        NumericalRankError: If the system is singular or CG does not converge
    """
    settings = get_settings()
    if direct_limit is None:
        direct_limit = settings.direct_solver_limit
    if cg_tolerance is None:
        cg_tolerance = settings.cg_tolerance

    rhs = np.asarray(rhs, dtype=np.float64)
    columns = rhs.reshape(len(rhs), -1)
    n = gram.shape[0]
    if n == 0:
        return np.zeros_like(columns).reshape(rhs.shape)
    if direct and n <= direct_limit:
        try:
            solution = spla.splu(sp.csc_matrix(gram)).solve(columns)
        except RuntimeError as exc:
            raise NumericalRankError(f"normal equations are singular: {exc}") from exc
        if not np.all(np.isfinite(solution)):
            raise NumericalRankError("normal equations are singular")
        return solution.reshape(rhs.shape)

    solution = np.zeros_like(columns)
    for channel in range(columns.shape[1]):
        x, info = spla.cg(
            gram, columns[:, channel], rtol=cg_tolerance, atol=0.0, maxiter=10 * n
        )
        if info != 0:
            raise NumericalRankError(
                f"conjugate gradients did not converge (info={info})"
            )
        solution[:, channel] = x
    return solution.reshape(rhs.shape)


def project(
    system: GramSystem,
    reduction: Optional[RankReduction] = None,
    *,
    direct_limit: Optional[int] = None,
    cg_tolerance: Optional[float] = None,
) -> np.ndarray:
    """Least-squares coefficients ``F*`` of the attributes at the system's level.

    Dropped indices get coefficient 0; the projected function is unique even
    when the basis is dependent.

    Returns:
        (m, k) coefficients over all shifts of the system
    """
    if reduction is None:
        reduction = retain_full_rank(system.gram)
    kept = reduction.indices
    gram = system.gram[kept][:, kept]
    solution = solve_normal_equations(
        gram,
        system.moments[kept],
        direct=reduction.exact,
        direct_limit=direct_limit,
        cg_tolerance=cg_tolerance,
    )
    coefficients = np.zeros((system.size,) + system.moments.shape[1:])
    coefficients[kept] = solution
    return coefficients
