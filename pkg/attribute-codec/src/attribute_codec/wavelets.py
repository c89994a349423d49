"""Orthonormal wavelet filter banks between nested spline spaces.

Between levels ``l`` and ``l + 1`` the fine space splits into the coarse space
and its orthogonal complement. With ``Γ`` the fine Gram matrix, ``X`` the
cross-Gram and ``R = Γ^-1/2`` the normalizers of each level, the rows of

    P = R_l X R_{l+1}

are the coarse functions in normalized fine coordinates. The wavelets span
the orthogonal complement of those rows. ``Z`` projects every odd fine
function onto that complement, ``S = (Zᵀ Γ Z)^-1/2`` orthonormalizes it, and

    T̄ = [P; S Zᵀ Γ R_{l+1}]

maps normalized fine coefficients to normalized coarse and detail
coefficients; its transpose synthesizes. The complement comes from an SVD of
``Pᵀ``, which also rounds ``P`` to the nearest matrix with orthonormal rows,
and the detail rows from the polar factor of the projected odd functions.

Functions that share no point never couple, so every level splits into
independent blocks of coarse and fine indices and only the blocks are dense.
"""

from dataclasses import dataclass, replace
from functools import cached_property
from typing import Iterable, Optional

import numpy as np
import scipy.linalg as la
import scipy.sparse as sp
from bv_shared import (
    DimensionMismatchError,
    NumericalRankError,
    RankAccountingError,
    log_stage,
)
from scipy.sparse import csgraph
from voxel_core import OctreeLevels

from .hierarchy import SplineHierarchy, build_hierarchy
from .hilbert import logger

# Relative residual a column needs to enter the even set on the first pass.
SELECTION_TOLERANCE = 1e-6

# Largest deviation of the normalized coarse rows from orthonormality that
# passes without a warning.
ROW_DEFECT_WARNING = 1e-6

Operator = np.ndarray | sp.spmatrix


def inverse_sqrt(matrix: Operator) -> Operator:
    """Symmetric inverse square root of a positive definite matrix.

    Diagonal input, dense or sparse, keeps its format; anything else goes
    through a dense eigendecomposition of the symmetrized matrix.

    Raises:
        NumericalRankError: If the matrix has a non-positive eigenvalue
    """
    if sp.issparse(matrix):
        if matrix.shape[0] == 0:
            return sp.csr_matrix(matrix.shape)
        if sp.triu(matrix, k=1).count_nonzero() == 0:
            return sp.diags(_inverse_sqrt_diagonal(matrix.diagonal())).tocsr()
        matrix = matrix.toarray()
    matrix = np.asarray(matrix, dtype=np.float64)
    if matrix.size == 0:
        return np.zeros_like(matrix)
    diagonal = np.diagonal(matrix)
    if np.count_nonzero(matrix - np.diag(diagonal)) == 0:
        return np.diag(_inverse_sqrt_diagonal(diagonal))
    eigenvalues, eigenvectors = la.eigh(0.5 * (matrix + matrix.T))
    if eigenvalues[0] <= 0.0:
        raise NumericalRankError(
            f"matrix is not positive definite (smallest eigenvalue {eigenvalues[0]})"
        )
    result: np.ndarray = (eigenvectors / np.sqrt(eigenvalues)) @ eigenvectors.T
    return result


def _inverse_sqrt_diagonal(diagonal: np.ndarray) -> np.ndarray:
    if len(diagonal) and diagonal.min() <= 0.0:
        raise NumericalRankError(
            f"matrix is not positive definite (smallest diagonal {diagonal.min()})"
        )
    result: np.ndarray = 1.0 / np.sqrt(diagonal)
    return result


def _times(left: np.ndarray, operator: Operator) -> np.ndarray:
    """``left @ operator`` for a dense or sparse right operand."""
    return np.asarray((operator.T @ left.T).T)


def select_even_columns(
    cross: np.ndarray,
    preferred: Optional[np.ndarray] = None,
    *,
    tolerance: float = 1e-10,
) -> np.ndarray:
    """Greedily choose ``rows`` linearly independent columns of ``cross``.

    Columns in ``preferred`` are tried first, in the given order, then the
    rest in index order. A column is taken when its residual against the
    columns already taken is large relative to its norm; a second pass with
    ``tolerance`` fills any gap left by the strict first pass.

    Raises:
        RankAccountingError: If fewer than ``rows`` independent columns exist
    """
    rows, cols = cross.shape
    preferred = np.zeros(0, dtype=np.int64) if preferred is None else preferred
    preferred = preferred[preferred >= 0]
    rest = np.setdiff1d(np.arange(cols), preferred)
    candidates = np.concatenate([preferred, rest]).astype(np.int64)

    basis = np.zeros((rows, rows))
    selected: list[int] = []
    taken = np.zeros(cols, dtype=bool)
    for threshold in (SELECTION_TOLERANCE, tolerance):
        for column in candidates:
            if len(selected) == rows:
                break
            if taken[column]:
                continue
            vector = cross[:, column]
            norm = np.linalg.norm(vector)
            if norm == 0.0:
                continue
            q = basis[:, : len(selected)]
            residual = vector - q @ (q.T @ vector)
            residual -= q @ (q.T @ residual)
            size = np.linalg.norm(residual)
            if size > threshold * norm:
                basis[:, len(selected)] = residual / size
                selected.append(int(column))
                taken[column] = True
    if len(selected) != rows:
        raise RankAccountingError(
            f"cross-Gram has rank {len(selected)}, coarse level needs {rows}"
        )
    return np.sort(np.array(selected, dtype=np.int64))


def coupled_blocks(
    gamma_coarse: sp.spmatrix, gamma_fine: sp.spmatrix, cross: sp.spmatrix
) -> list[tuple[np.ndarray, np.ndarray]]:
    """Group coarse and fine indices into blocks no Gram entry connects.

    Returns:
        Per block, the sorted coarse and fine indices, ordered by the first
        index of each block
    """
    n_coarse, n_fine = cross.shape
    if n_fine == 0:
        return []
    if n_coarse == 0:
        return [(np.zeros(0, dtype=np.int64), np.arange(n_fine))]
    graph = sp.bmat([[gamma_coarse, cross], [cross.T, gamma_fine]], format="csr")
    graph.eliminate_zeros()
    count, labels = csgraph.connected_components(graph, directed=False)
    order = np.argsort(labels, kind="stable")
    groups = np.split(order, np.cumsum(np.bincount(labels, minlength=count))[:-1])
    return [(g[g < n_coarse], g[g >= n_coarse] - n_coarse) for g in groups]


@dataclass(frozen=True, eq=False)
class FilterBlock:
    """Filters of one block of coupled coarse and fine functions.

    Index arrays are positions in the level's retained sets; ``wavelets`` are
    positions in the detail vector.
    """

    coarse: np.ndarray
    fine: np.ndarray
    odd: np.ndarray
    wavelets: np.ndarray
    ortho_r: Operator
    ortho_r_fine: Operator
    null_basis: np.ndarray
    ortho_s: np.ndarray
    lowpass: np.ndarray
    highpass: np.ndarray


def block_filters(
    coarse: np.ndarray,
    fine: np.ndarray,
    gamma_coarse: sp.spmatrix,
    gamma_fine: sp.spmatrix,
    cross: np.ndarray,
    *,
    preferred: Optional[np.ndarray] = None,
    tolerance: float = 1e-10,
) -> FilterBlock:
    """Filters of one block; ``wavelets`` is left empty for the caller.

    Args:
        coarse: Positions of the block in the coarse retained set
        fine: Positions of the block in the fine retained set
        gamma_coarse: Coarse Gram matrix of the block
        gamma_fine: Fine Gram matrix of the block
        cross: Dense cross-Gram of the block
        preferred: Local fine columns to try first as even columns
        tolerance: Rank tolerance of the complement and the even selection

    Raises:
        RankAccountingError: If the complement of the coarse rows does not
            have dimension ``len(fine) - len(coarse)``
    """
    n_coarse, n_fine = cross.shape
    if n_coarse > n_fine:
        raise RankAccountingError(
            f"block has {n_coarse} coarse functions for {n_fine} fine ones"
        )
    ortho_r = inverse_sqrt(gamma_coarse)
    ortho_r_fine = inverse_sqrt(gamma_fine)
    lowpass = _times(np.asarray(ortho_r @ cross), ortho_r_fine)

    if n_coarse == 0:
        complement = np.eye(n_fine)
        even = np.zeros(0, dtype=np.int64)
    else:
        left, spread, right = la.svd(lowpass.T)
        rank = int(np.sum(spread > tolerance * spread[0]))
        if rank != n_coarse:
            raise RankAccountingError(
                f"null space has {n_fine - rank} columns, "
                f"expected {n_fine - n_coarse}"
            )
        defect = float(np.abs(spread - 1.0).max())
        if defect > ROW_DEFECT_WARNING:
            logger.warning(
                "Normalized coarse functions are not orthonormal",
                defect=defect,
                coarse=n_coarse,
                fine=n_fine,
            )
        # Closest matrix with orthonormal rows; equal to P up to rounding.
        lowpass = (left[:, :n_coarse] @ right).T
        complement = left[:, n_coarse:]
        even = select_even_columns(lowpass, preferred, tolerance=tolerance)
    odd = np.setdiff1d(np.arange(n_fine), even)

    if len(odd) == 0:
        null_basis = np.zeros((n_fine, 0))
        ortho_s = np.zeros((0, 0))
        highpass = np.zeros((0, n_fine))
    else:
        # Complement coordinates of the odd unit vectors, one column per wavelet.
        targets = complement[odd].T
        u, singular, vt = la.svd(targets)
        if singular[-1] <= 0.0:
            raise RankAccountingError("odd functions do not span the wavelet space")
        null_basis = np.asarray(ortho_r_fine @ (complement @ targets))
        ortho_s = (vt.T / singular) @ vt
        highpass = (complement @ (u @ vt)).T

    return FilterBlock(
        coarse=coarse,
        fine=fine,
        odd=fine[odd],
        wavelets=np.zeros(0, dtype=np.int64),
        ortho_r=ortho_r,
        ortho_r_fine=ortho_r_fine,
        null_basis=null_basis,
        ortho_s=ortho_s,
        lowpass=lowpass,
        highpass=highpass,
    )


def _block_matrix(
    shape: tuple[int, int],
    pieces: Iterable[tuple[np.ndarray, np.ndarray, Operator]],
) -> sp.csr_matrix:
    """Assemble dense or sparse blocks placed at the given rows and columns."""
    rows, cols, vals = [], [], []
    for row_index, col_index, block in pieces:
        if 0 in block.shape:
            continue
        entries = sp.coo_matrix(block)
        rows.append(row_index[entries.row])
        cols.append(col_index[entries.col])
        vals.append(entries.data)
    if not rows:
        return sp.csr_matrix(shape)
    return sp.csr_matrix(
        (np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))),
        shape=shape,
    )


@dataclass(frozen=True, eq=False)
class WaveletBasis:
    """Filter bank between one level and the next finer one.

    The operators below are assembled from the blocks on first access.

    Attributes:
        level: Coarse level
        coarse_retained: Retained coarse shift indices
        fine_retained: Retained fine shift indices
        even: Positions in ``fine_retained`` that carry no wavelet
        blocks: Filters of every independent block
    """

    level: int
    coarse_retained: np.ndarray
    fine_retained: np.ndarray
    even: np.ndarray
    blocks: list[FilterBlock]

    @property
    def num_coarse(self) -> int:
        return len(self.coarse_retained)

    @property
    def num_fine(self) -> int:
        return len(self.fine_retained)

    @property
    def num_wavelets(self) -> int:
        return sum(len(block.wavelets) for block in self.blocks)

    @cached_property
    def null_basis(self) -> sp.csr_matrix:
        """Z, (n_fine × n_wavelets) null basis of the cross-Gram."""
        shape = (self.num_fine, self.num_wavelets)
        return _block_matrix(
            shape, ((b.fine, b.wavelets, b.null_basis) for b in self.blocks)
        )

    @cached_property
    def ortho_r(self) -> sp.csr_matrix:
        """R for the coarse level."""
        shape = (self.num_coarse, self.num_coarse)
        return _block_matrix(
            shape, ((b.coarse, b.coarse, b.ortho_r) for b in self.blocks)
        )

    @cached_property
    def ortho_r_fine(self) -> sp.csr_matrix:
        shape = (self.num_fine, self.num_fine)
        return _block_matrix(
            shape, ((b.fine, b.fine, b.ortho_r_fine) for b in self.blocks)
        )

    @cached_property
    def ortho_s(self) -> sp.csr_matrix:
        """S for the wavelet functions."""
        shape = (self.num_wavelets, self.num_wavelets)
        return _block_matrix(
            shape, ((b.wavelets, b.wavelets, b.ortho_s) for b in self.blocks)
        )

    @cached_property
    def analysis(self) -> sp.csr_matrix:
        """Orthonormal T̄, (n_fine × n_fine)."""
        lowpass = ((b.coarse, b.fine, b.lowpass) for b in self.blocks)
        highpass = (
            (self.num_coarse + b.wavelets, b.fine, b.highpass) for b in self.blocks
        )
        shape = (self.num_fine, self.num_fine)
        return _block_matrix(shape, [*lowpass, *highpass])


def build_wavelet_basis(
    coarse_gram: sp.spmatrix,
    fine_gram: sp.spmatrix,
    cross_gram: sp.spmatrix,
    *,
    level: int,
    coarse_retained: np.ndarray,
    fine_retained: np.ndarray,
    preferred: Optional[np.ndarray] = None,
    tolerance: float = 1e-10,
) -> WaveletBasis:
    """Construct Z, R, S and T̄ for one level, block by block.

    Each wavelet belongs to one odd fine function and is the orthonormal
    function closest to that function's projection onto the complement of
    the coarse space; its entry on the odd coordinate is positive. Details
    are ordered by their odd fine index.

    Args:
        coarse_gram: Gram matrix of the coarse level
        fine_gram: Gram matrix of the fine level
        cross_gram: Coarse-by-fine inner products
        level: Coarse level
        coarse_retained: Full-rank subset of the coarse shifts
        fine_retained: Full-rank subset of the fine shifts
        preferred: Positions in ``fine_retained`` to try first as even columns
        tolerance: Rank tolerance of the complement and the even selection

    Raises:
        RankAccountingError: If the null space does not have dimension
            ``len(fine_retained) - len(coarse_retained)``
    """
    gamma_coarse = sp.csr_matrix(coarse_gram)[coarse_retained][:, coarse_retained]
    gamma_fine = sp.csr_matrix(fine_gram)[fine_retained][:, fine_retained]
    cross = sp.csr_matrix(cross_gram)[coarse_retained][:, fine_retained]
    n_coarse, n_fine = cross.shape
    if n_coarse > n_fine:
        raise RankAccountingError(
            f"level {level} has {n_coarse} coarse functions for {n_fine} fine ones"
        )

    groups = coupled_blocks(gamma_coarse, gamma_fine, cross)
    owner = np.zeros(n_fine, dtype=np.int64)
    for index, (_, fine) in enumerate(groups):
        owner[fine] = index
    preferred = np.zeros(0, dtype=np.int64) if preferred is None else preferred
    ranked = preferred[np.argsort(owner[preferred], kind="stable")]
    counts = np.bincount(owner[preferred], minlength=len(groups))
    preferences = np.split(ranked, np.cumsum(counts)[:-1])

    blocks = [
        block_filters(
            coarse,
            fine,
            gamma_coarse[coarse][:, coarse],
            gamma_fine[fine][:, fine],
            cross[coarse][:, fine].toarray(),
            preferred=np.searchsorted(fine, wanted),
            tolerance=tolerance,
        )
        for (coarse, fine), wanted in zip(groups, preferences)
    ]

    odd = np.concatenate([np.zeros(0, dtype=np.int64)] + [b.odd for b in blocks])
    positions = np.empty(len(odd), dtype=np.int64)
    positions[np.argsort(odd, kind="stable")] = np.arange(len(odd))
    sizes = np.cumsum([len(b.odd) for b in blocks], dtype=np.int64)[:-1]
    blocks = [
        replace(block, wavelets=wavelets)
        for block, wavelets in zip(blocks, np.split(positions, sizes))
    ]
    even = np.setdiff1d(np.arange(n_fine), odd)
    if len(odd) != n_fine - n_coarse:
        raise RankAccountingError(
            f"null space has {len(odd)} columns, expected {n_fine - n_coarse}"
        )
    return WaveletBasis(
        level=level,
        coarse_retained=np.asarray(coarse_retained),
        fine_retained=np.asarray(fine_retained),
        even=even,
        blocks=blocks,
    )


def analyze(
    fine: np.ndarray, basis: WaveletBasis
) -> tuple[np.ndarray, np.ndarray]:
    """Split normalized fine coefficients into coarse and detail parts."""
    fine = np.asarray(fine, dtype=np.float64)
    if len(fine) != basis.num_fine:
        raise DimensionMismatchError(
            f"level {basis.level + 1} has {basis.num_fine} coefficients, "
            f"got {len(fine)}"
        )
    coarse = np.zeros((basis.num_coarse,) + fine.shape[1:])
    detail = np.zeros((basis.num_wavelets,) + fine.shape[1:])
    for block in basis.blocks:
        values = fine[block.fine]
        coarse[block.coarse] = block.lowpass @ values
        detail[block.wavelets] = block.highpass @ values
    return coarse, detail


def synthesize(
    coarse: np.ndarray, detail: np.ndarray, basis: WaveletBasis
) -> np.ndarray:
    """Inverse of :func:`analyze`."""
    coarse = np.asarray(coarse, dtype=np.float64)
    detail = np.asarray(detail, dtype=np.float64)
    if len(coarse) != basis.num_coarse or len(detail) != basis.num_wavelets:
        raise DimensionMismatchError(
            f"level {basis.level} needs {basis.num_coarse} coarse and "
            f"{basis.num_wavelets} detail coefficients"
        )
    channels = np.concatenate([coarse, detail], axis=0).shape[1:]
    fine = np.zeros((basis.num_fine,) + channels)
    for block in basis.blocks:
        fine[block.fine] = (
            block.lowpass.T @ coarse[block.coarse]
            + block.highpass.T @ detail[block.wavelets]
        )
    return fine


@dataclass(frozen=True, eq=False)
class BvCoefficients:
    """Orthonormal coefficients of a full cascade.

    Attributes:
        start_level: Level of the base coefficients
        base: (n_start, k) low-pass coefficients
        details: Per level from ``start_level`` up, (n_wavelets, k) details
    """

    start_level: int
    base: np.ndarray
    details: list[np.ndarray]

    @property
    def num_coefficients(self) -> int:
        return len(self.base) + sum(len(d) for d in self.details)

    def flatten(self) -> np.ndarray:
        return np.concatenate([self.base, *self.details], axis=0)


@dataclass(frozen=True, eq=False)
class WaveletCascade:
    """Filter banks of every level from ``start_level`` to the voxels."""

    hierarchy: SplineHierarchy
    start_level: int
    bases: list[WaveletBasis]

    @property
    def order(self) -> int:
        return self.hierarchy.order

    def basis(self, level: int) -> WaveletBasis:
        return self.bases[level - self.start_level]

    def forward(self, attributes: np.ndarray) -> BvCoefficients:
        """Analyze voxel attributes down to the start level."""
        values = np.asarray(attributes, dtype=np.float64)
        if len(values) != len(self.hierarchy.shifts[self.hierarchy.top]):
            raise DimensionMismatchError("attribute rows do not match the voxels")
        details: list[np.ndarray] = []
        for basis in reversed(self.bases):
            values, detail = analyze(values, basis)
            details.append(detail)
        details.reverse()
        return BvCoefficients(self.start_level, values, details)

    def inverse(
        self, coefficients: BvCoefficients, *, keep_below: Optional[int] = None
    ) -> np.ndarray:
        """Synthesize voxel attributes.

        Args:
            coefficients: Output of :meth:`forward`
            keep_below: Zero the details of every level at or above this one
        """
        values = np.asarray(coefficients.base, dtype=np.float64)
        for basis, detail in zip(self.bases, coefficients.details):
            if keep_below is not None and basis.level >= keep_below:
                detail = np.zeros_like(detail)
            values = synthesize(values, detail, basis)
        return values


def build_cascade(
    octree: OctreeLevels,
    order: int = 2,
    start_level: int = 0,
    *,
    hierarchy: Optional[SplineHierarchy] = None,
    tolerance: float = 1e-10,
) -> WaveletCascade:
    """Build the filter banks between ``start_level`` and the voxel level.

    ``start_level`` is in hierarchy units: binary levels for order 1, cubic
    levels for order 2.
    """
    if hierarchy is None:
        hierarchy = build_hierarchy(octree, order, coarsest=start_level)
    hierarchy.check_level(start_level)
    if any(not r.exact for r in hierarchy.reductions[start_level:]):
        logger.warning(
            "Wavelet cascade uses approximate rank reduction",
            order=hierarchy.order,
            start_level=start_level,
        )

    bases: list[WaveletBasis] = []
    for level in range(start_level, hierarchy.top):
        coarse = hierarchy.reductions[level].indices
        fine = hierarchy.reductions[level + 1].indices
        children = hierarchy.even_children(level, coarse)
        preferred = np.searchsorted(fine, children)
        preferred = preferred[(children >= 0) & np.isin(children, fine)]
        bases.append(
            build_wavelet_basis(
                hierarchy.grams[level],
                hierarchy.grams[level + 1],
                hierarchy.cross_gram(level),
                level=level,
                coarse_retained=coarse,
                fine_retained=fine,
                preferred=preferred,
                tolerance=tolerance,
            )
        )
    log_stage(
        logger,
        "cascade",
        order=hierarchy.order,
        start_level=start_level,
        wavelets=[b.num_wavelets for b in bases],
        blocks=[len(b.blocks) for b in bases],
    )
    return WaveletCascade(hierarchy, start_level, bases)
