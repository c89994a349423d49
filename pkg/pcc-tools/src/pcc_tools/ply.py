"""PLY reading and writing for voxel clouds.

Only the ``vertex`` element is used. Positions come from ``x``/``y``/``z``,
colours from ``red``/``green``/``blue`` and normals from ``nx``/``ny``/``nz``;
any other scalar property is carried through a document untouched.
"""

from dataclasses import dataclass
from pathlib import Path
from typing import Optional

import numpy as np
from attribute_codec import to_u8
from bv_shared import (
    PlyHeaderError,
    PlyPropertyError,
    PlyTruncatedError,
    configure_logging,
)
from plyfile import PlyData, PlyElement, PlyElementParseError, PlyHeaderParseError
from voxel_core import VoxelCloud, voxelize

logger = configure_logging("pcc-tools")

POSITION = ("x", "y", "z")
COLOUR = ("red", "green", "blue")
NORMAL = ("nx", "ny", "nz")


@dataclass(frozen=True, eq=False)
class PlyDocument:
    """The vertex element of a PLY file.

    Attributes:
        vertices: Structured array, one field per vertex property
        text: True for ascii, False for binary little-endian
        comments: Header comments
    """

    vertices: np.ndarray
    text: bool = False
    comments: tuple[str, ...] = ()

    def __post_init__(self) -> None:
        names = self.vertices.dtype.names or ()
        missing = [name for name in POSITION if name not in names]
        if missing:
            raise PlyPropertyError(f"vertex element lacks {', '.join(missing)}")
        for name in names:
            if self.vertices.dtype[name].subdtype is not None or (
                self.vertices.dtype[name].kind not in "iuf"
            ):
                raise PlyPropertyError(f"vertex property '{name}' is not a scalar")

    @property
    def num_vertices(self) -> int:
        return len(self.vertices)

    @property
    def property_names(self) -> tuple[str, ...]:
        return tuple(self.vertices.dtype.names or ())

    def _columns(self, names: tuple[str, ...]) -> Optional[np.ndarray]:
        present = [name in self.property_names for name in names]
        if not any(present):
            return None
        if not all(present):
            raise PlyPropertyError(f"incomplete property group {names}")
        return np.column_stack(
            [np.asarray(self.vertices[name], dtype=np.float64) for name in names]
        ).reshape(-1, 3)

    def points(self) -> np.ndarray:
        points = self._columns(POSITION)
        assert points is not None
        return points

    def colours(self) -> Optional[np.ndarray]:
        return self._columns(COLOUR)

    def normals(self) -> Optional[np.ndarray]:
        normals = self._columns(NORMAL)
        if normals is None:
            return None
        lengths = np.linalg.norm(normals, axis=1, keepdims=True)
        if np.any(lengths == 0):
            raise PlyPropertyError("zero-length normal")
        result: np.ndarray = normals / lengths
        return result

    def to_cloud(self, depth: Optional[int] = None, *, fit: bool = False) -> VoxelCloud:
        """Voxelize the vertices.

        Args:
            depth: Grid depth; inferred from the largest coordinate when
                omitted, the coordinates then being voxel units
            fit: Scale the bounding cube of the points onto the grid

        Raises:
            ValueError: If ``fit`` is requested without a depth
        """
        points = self.points()
        if fit:
            if depth is None:
                raise ValueError("fitting the bounding cube needs a depth")
            low = points.min(axis=0) if len(points) else np.zeros(3)
            extent = float(np.max(points.max(axis=0) - low)) if len(points) else 0.0
            size = extent * (1.0 + 1e-9) if extent > 0 else 1.0
            return voxelize(
                points,
                self.colours(),
                depth,
                origin=low,
                size=size,
                normals=self.normals(),
            )
        if depth is None:
            top = int(np.floor(points.max())) if len(points) else 0
            depth = max(1, top.bit_length())
        return voxelize(points, self.colours(), depth, normals=self.normals())

    @classmethod
    def from_cloud(cls, cloud: VoxelCloud, *, text: bool = False) -> "PlyDocument":
        """Integer positions, u8 colours when the cloud has three channels.

        Raises:
            PlyPropertyError: If the attributes are not RGB triplets
        """
        fields: list[tuple[str, str]] = [(name, "<i4") for name in POSITION]
        if cloud.num_channels not in (0, 3):
            raise PlyPropertyError(
                f"{cloud.num_channels} attribute channels cannot be written as RGB"
            )
        if cloud.num_channels:
            fields += [(name, "u1") for name in COLOUR]
        if cloud.normals is not None:
            fields += [(name, "<f8") for name in NORMAL]

        vertices = np.empty(cloud.num_points, dtype=fields)
        for axis, name in enumerate(POSITION):
            vertices[name] = cloud.positions[:, axis]
        if cloud.num_channels:
            colours = to_u8(cloud.attributes)
            for channel, name in enumerate(COLOUR):
                vertices[name] = colours[:, channel]
        if cloud.normals is not None:
            for axis, name in enumerate(NORMAL):
                vertices[name] = cloud.normals[:, axis]
        return cls(vertices, text)


def read_document(path: str | Path) -> PlyDocument:
    """Parse a PLY file.

    Raises:
        PlyHeaderError: If the header is malformed or names no vertex element
        PlyTruncatedError: If the payload ends before the declared vertex count
        PlyPropertyError: If a vertex property is missing or not a scalar
    """
    try:
        data = PlyData.read(str(path), mmap=False)
    except PlyHeaderParseError as exc:
        raise PlyHeaderError(f"{path}: {exc}") from exc
    except PlyElementParseError as exc:
        if "end-of-file" in str(exc):
            raise PlyTruncatedError(f"{path}: {exc}") from exc
        raise PlyPropertyError(f"{path}: {exc}") from exc
    names = [element.name for element in data.elements]
    if "vertex" not in names:
        raise PlyHeaderError(f"{path}: no vertex element")
    document = PlyDocument(
        np.array(data["vertex"].data),
        text=bool(data.text),
        comments=tuple(data.comments),
    )
    logger.debug(
        "PLY read",
        path=str(path),
        vertices=document.num_vertices,
        properties=list(document.property_names),
        ascii=document.text,
    )
    return document


def write_document(document: PlyDocument, path: str | Path) -> None:
    """Write a document as ascii or binary little-endian PLY."""
    element = PlyElement.describe(document.vertices, "vertex")
    PlyData(
        [element],
        text=document.text,
        byte_order="<",
        comments=list(document.comments),
    ).write(str(path))
    logger.debug("PLY written", path=str(path), vertices=document.num_vertices)


def read_ply(
    path: str | Path, depth: Optional[int] = None, *, fit: bool = False
) -> VoxelCloud:
    """Read and voxelize a PLY file; see :meth:`PlyDocument.to_cloud`."""
    return read_document(path).to_cloud(depth, fit=fit)


def write_ply(cloud: VoxelCloud, path: str | Path, *, text: bool = False) -> None:
    """Write a voxel cloud with its colours and normals."""
    write_document(PlyDocument.from_cloud(cloud, text=text), path)
