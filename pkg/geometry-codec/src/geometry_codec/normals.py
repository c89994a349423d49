"""Per-voxel unit normals from local principal components.

The normal of a voxel is the least-variance direction of its k nearest
neighbours. Orientation is made consistent by walking a minimum spanning tree
of the neighbour graph, starting in every connected component from the voxel
farthest from the centroid, whose normal is turned to point away from it.
"""

from dataclasses import dataclass
from typing import Optional

import numpy as np
import scipy.sparse as sp
from bv_shared import configure_logging, get_settings
from scipy.sparse import csgraph
from scipy.spatial import cKDTree
from voxel_core import VoxelCloud

logger = configure_logging("geometry-codec")

# Middle eigenvalue below this fraction of the largest one means collinear.
COLLINEAR_TOLERANCE = 1e-9
# Keeps parallel-normal edges in the sparse graph (zero weights vanish).
_EDGE_FLOOR = 1e-6


@dataclass(frozen=True, eq=False)
class NormalEstimate:
    """Estimated normals and the voxels whose neighbourhood was degenerate.

    Attributes:
        normals: (N, 3) unit normals
        degenerate: (N,) True where the fallback axis was used
    """

    normals: np.ndarray
    degenerate: np.ndarray

    @property
    def num_degenerate(self) -> int:
        return int(np.count_nonzero(self.degenerate))


def estimate_normals(cloud: VoxelCloud, k: Optional[int] = None) -> NormalEstimate:
    """Estimate and orient normals, or pass through the cloud's own.

    Args:
        cloud: Voxel cloud
        k: Neighbourhood size including the voxel itself (default from settings)

    Returns:
        Normals in the cloud's voxel order

    Raises:
        ValueError: If ``k`` is below 3
    """
    if cloud.normals is not None:
        return NormalEstimate(cloud.normals, np.zeros(cloud.num_points, dtype=bool))
    k = get_settings().normal_neighbors if k is None else k
    if k < 3:
        raise ValueError(f"normal estimation needs k >= 3, got {k}")

    points = cloud.positions.astype(np.float64)
    count = min(k, len(points))
    _, neighbors = cKDTree(points).query(points, k=count)
    neighbors = np.asarray(neighbors, dtype=np.int64).reshape(len(points), count)

    local = points[neighbors]
    centered = local - local.mean(axis=1, keepdims=True)
    covariance = np.einsum("nki,nkj->nij", centered, centered) / count
    eigenvalues, eigenvectors = np.linalg.eigh(covariance)
    normals = eigenvectors[:, :, 0].copy()

    degenerate = eigenvalues[:, 1] <= COLLINEAR_TOLERANCE * eigenvalues[:, 2]
    if np.any(degenerate):
        spread = np.diagonal(covariance, axis1=1, axis2=2)[degenerate]
        fallback = np.zeros((len(spread), 3))
        fallback[np.arange(len(spread)), np.argmin(spread, axis=1)] = 1.0
        normals[degenerate] = fallback
        logger.warning(
            "Degenerate normal neighbourhoods",
            count=int(np.count_nonzero(degenerate)),
            neighbors=count,
        )

    normals = orient_normals(points, normals, neighbors)
    return NormalEstimate(normals, degenerate)


def orient_normals(
    points: np.ndarray, normals: np.ndarray, neighbors: np.ndarray
) -> np.ndarray:
    """Flip normals so that neighbours along a spanning tree agree.

    Args:
        points: (N, 3) coordinates
        normals: (N, 3) unit normals of arbitrary sign
        neighbors: (N, k) neighbour indices, as returned by a k-NN query

    Returns:
        (N, 3) consistently oriented normals
    """
    n = len(points)
    rows = np.repeat(np.arange(n), neighbors.shape[1])
    cols = neighbors.ravel()
    keep = rows != cols
    rows, cols = rows[keep], cols[keep]
    agreement = np.abs(np.sum(normals[rows] * normals[cols], axis=1))
    weights = 1.0 - agreement + _EDGE_FLOOR
    graph = sp.csr_matrix((weights, (rows, cols)), shape=(n, n))
    graph = graph.maximum(graph.T)

    tree = csgraph.minimum_spanning_tree(graph)
    tree = tree.maximum(tree.T)
    num_components, labels = csgraph.connected_components(tree, directed=False)

    centroid = points.mean(axis=0)
    outward = points - centroid
    distance = np.linalg.norm(outward, axis=1)
    oriented = normals.copy()
    for component in range(num_components):
        members = np.flatnonzero(labels == component)
        seed = int(members[np.argmax(distance[members])])
        if np.dot(oriented[seed], outward[seed]) < 0:
            oriented[seed] = -oriented[seed]
        order, predecessors = csgraph.breadth_first_order(
            tree, seed, directed=False, return_predecessors=True
        )
        for node in order[1:]:
            if np.dot(oriented[node], oriented[predecessors[node]]) < 0:
                oriented[node] = -oriented[node]
    return oriented
