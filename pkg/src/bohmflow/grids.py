"""Uniform cell-centered grids, spinor fields on them, and the binary field format.

Coordinates on axis ``i`` are cell centers ``-extent_i + (j + 1/2) * h_i`` with
``h_i = 2 * extent_i / n_i``.  Cell-centered placement keeps singular subspaces
and the origin off the quadrature nodes, and the midpoint rule it induces is
spectrally accurate for smooth periodic integrands.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass, field

import numpy as np

from .errors import DimensionMismatch

_MAGIC = b"BFLD"


@dataclass(frozen=True)
class GridSpec:
    """Uniform grid on a box ``[-extent_i, extent_i]`` per axis.

    Parameters
    ----------
    dim : int
        Number of configuration-space dimensions d.
    extent : tuple of float
        Half-width of the box along each axis (length units).
    npoints : tuple of int
        Points per axis; powers of two recommended, minimum 4.
    periodic : tuple of bool
        Periodicity flag per axis (spectral steppers require all True).
    """

    dim: int
    extent: tuple[float, ...]
    npoints: tuple[int, ...]
    periodic: tuple[bool, ...] = ()

    def __post_init__(self):
        if self.dim < 1:
            raise ValueError("dim must be >= 1")
        extent = tuple(float(e) for e in np.atleast_1d(self.extent))
        npoints = tuple(int(n) for n in np.atleast_1d(self.npoints))
        if len(extent) == 1:
            extent = extent * self.dim
        if len(npoints) == 1:
            npoints = npoints * self.dim
        periodic = tuple(self.periodic) if self.periodic else (True,) * self.dim
        if len(extent) != self.dim or len(npoints) != self.dim or len(periodic) != self.dim:
            raise DimensionMismatch("extent/npoints/periodic must match dim")
        if any(n < 4 for n in npoints):
            raise ValueError("need at least 4 points per axis")
        if any(e <= 0 for e in extent):
            raise ValueError("extents must be positive")
        object.__setattr__(self, "extent", extent)
        object.__setattr__(self, "npoints", npoints)
        object.__setattr__(self, "periodic", periodic)

    @property
    def spacing(self) -> tuple[float, ...]:
        return tuple(2.0 * e / n for e, n in zip(self.extent, self.npoints))

    @property
    def cell_volume(self) -> float:
        return float(np.prod(self.spacing))

    @property
    def shape(self) -> tuple[int, ...]:
        return self.npoints

    def axis(self, i: int) -> np.ndarray:
        """Cell-center coordinates along axis i."""
        h = self.spacing[i]
        return -self.extent[i] + (np.arange(self.npoints[i]) + 0.5) * h

    def axes(self) -> list[np.ndarray]:
        return [self.axis(i) for i in range(self.dim)]

    def meshgrid(self) -> list[np.ndarray]:
        return list(np.meshgrid(*self.axes(), indexing="ij"))

    def points(self) -> np.ndarray:
        """All cell centers as an (ncells, dim) array in row-major cell order."""
        mesh = self.meshgrid()
        return np.stack([m.ravel() for m in mesh], axis=-1)

    def kaxis(self, i: int) -> np.ndarray:
        """Angular FFT frequencies along axis i."""
        return 2.0 * np.pi * np.fft.fftfreq(self.npoints[i], d=self.spacing[i])

    def kaxes(self) -> list[np.ndarray]:
        return [self.kaxis(i) for i in range(self.dim)]

    def kmesh(self) -> list[np.ndarray]:
        return list(np.meshgrid(*self.kaxes(), indexing="ij"))


@dataclass
class SpinorField:
    """k-component complex field on a grid at one instant.

    ``values`` has shape ``(k, *grid.shape)``; scalar fields use k = 1.
    """

    grid: GridSpec
    values: np.ndarray
    t: float = 0.0
    k: int = field(init=False)

    def __post_init__(self):
        values = np.asarray(self.values, dtype=np.complex128)
        if values.ndim == self.grid.dim:
            values = values[np.newaxis]
        if values.shape[1:] != self.grid.shape:
            raise DimensionMismatch(
                f"field shape {values.shape[1:]} != grid shape {self.grid.shape}"
            )
        self.values = values
        self.k = values.shape[0]

    def norm(self) -> float:
        """L2 norm with the grid cell measure."""
        return float(np.sqrt(np.sum(np.abs(self.values) ** 2) * self.grid.cell_volume))

    def density(self) -> np.ndarray:
        """Pointwise |psi|^2 contracted over spin components."""
        return np.sum(np.abs(self.values) ** 2, axis=0)

    def normalized(self) -> "SpinorField":
        return SpinorField(self.grid, self.values / self.norm(), t=self.t)


def write_field(path, psi: SpinorField) -> None:
    """Write a spinor field in the binary grid format.

    Layout (all little-endian): magic ``BFLD``, uint32 d, d x uint64 points
    per axis, d x float64 extents, uint32 k, then row-major complex pairs
    (re, im) as float64.
    """
    g = psi.grid
    with open(path, "wb") as fh:
        fh.write(_MAGIC)
        fh.write(struct.pack("<I", g.dim))
        fh.write(struct.pack(f"<{g.dim}Q", *g.npoints))
        fh.write(struct.pack(f"<{g.dim}d", *g.extent))
        fh.write(struct.pack("<I", psi.k))
        flat = np.ascontiguousarray(psi.values, dtype="<c16")
        fh.write(flat.tobytes())


def read_field(path) -> SpinorField:
    """Read a spinor field written by :func:`write_field`."""
    with open(path, "rb") as fh:
        if fh.read(4) != _MAGIC:
            raise ValueError(f"{path}: not a field file (bad magic)")
        (dim,) = struct.unpack("<I", fh.read(4))
        npoints = struct.unpack(f"<{dim}Q", fh.read(8 * dim))
        extent = struct.unpack(f"<{dim}d", fh.read(8 * dim))
        (k,) = struct.unpack("<I", fh.read(4))
        count = k * int(np.prod(npoints))
        data = np.frombuffer(fh.read(16 * count), dtype="<c16", count=count)
    grid = GridSpec(dim=dim, extent=extent, npoints=npoints)
    return SpinorField(grid, data.reshape((k, *npoints)).astype(np.complex128))
