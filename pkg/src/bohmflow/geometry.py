"""Configuration-space geometry: singular subspaces and distance functions.

Singular sets are affine subspaces given by an anchor point and an orthonormal
normal basis (codimension many vectors).  The distance function of such a set
is smooth everywhere off the set, which is stronger than the tube-local
differentiability the admissibility notion requires and covers the coincidence
hyperplanes of interacting particles.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import OnSingularSet

_ORTHO_TOL = 1e-12


@dataclass(frozen=True)
class SingularSubspace:
    """Affine subspace {q : N (q - anchor) = 0} with orthonormal normal rows N."""

    anchor: np.ndarray
    normal_basis: np.ndarray  # (codim, dim), orthonormal rows

    def __post_init__(self):
        anchor = np.atleast_1d(np.asarray(self.anchor, dtype=float))
        normals = np.atleast_2d(np.asarray(self.normal_basis, dtype=float))
        if normals.shape[1] != anchor.shape[0]:
            raise ValueError("normal vectors must live in the anchor's space")
        gram = normals @ normals.T
        if not np.allclose(gram, np.eye(normals.shape[0]), atol=_ORTHO_TOL):
            raise ValueError("normal basis must be orthonormal to 1e-12")
        object.__setattr__(self, "anchor", anchor)
        object.__setattr__(self, "normal_basis", normals)

    @property
    def dim(self) -> int:
        return self.anchor.shape[0]

    @property
    def codim(self) -> int:
        return self.normal_basis.shape[0]

    def normal_coords(self, q: np.ndarray) -> np.ndarray:
        """Project q - anchor onto the normal directions; shape (..., codim)."""
        return (np.asarray(q, dtype=float) - self.anchor) @ self.normal_basis.T

    def distance(self, q: np.ndarray) -> np.ndarray:
        """Euclidean distance to the subspace; vectorized over leading axes."""
        y = self.normal_coords(q)
        return np.sqrt(np.sum(y * y, axis=-1))

    def distance_and_direction(self, q: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        """Distance and the unit vector e = -grad dist pointing at the subspace.

        Where the distance vanishes e is returned as NaN; callers that need a
        defined direction should go through :func:`singular_distance`.
        """
        y = self.normal_coords(q)
        dist = np.sqrt(np.sum(y * y, axis=-1))
        with np.errstate(invalid="ignore", divide="ignore"):
            e = -(y / dist[..., np.newaxis]) @ self.normal_basis
        return dist, e


@dataclass(frozen=True)
class ConfigSpace:
    """Configuration space R^d minus a finite union of affine singular subspaces.

    ``delta`` is the tube radius used by the singular-set condition integral
    and the in-tube path diagnostics.
    """

    dim: int
    singular_subspaces: tuple[SingularSubspace, ...] = field(default_factory=tuple)
    delta: float = 1.0

    def __post_init__(self):
        subs = tuple(self.singular_subspaces)
        for sub in subs:
            if sub.dim != self.dim:
                raise ValueError("subspace dimension mismatch")
            if not (1 <= sub.codim <= self.dim):
                raise ValueError("codimension must be between 1 and dim")
        if not self.delta > 0:
            raise ValueError("delta must be positive")
        object.__setattr__(self, "singular_subspaces", subs)

    @property
    def nsubspaces(self) -> int:
        return len(self.singular_subspaces)

    def min_distance(self, q: np.ndarray) -> np.ndarray:
        """Distance to the nearest singular subspace (inf if there is none)."""
        q = np.asarray(q, dtype=float)
        if not self.singular_subspaces:
            shape = q.shape[:-1]
            return np.full(shape, np.inf) if shape else np.inf
        dists = [sub.distance(q) for sub in self.singular_subspaces]
        return np.min(np.stack(dists, axis=0), axis=0)


def on_set_tolerance(q: np.ndarray) -> float:
    """Distances below this are indistinguishable from zero at double
    precision for a point of this magnitude."""
    return 1e-14 * (1.0 + float(np.max(np.abs(q), initial=0.0)))


def singular_distance(
    space: ConfigSpace, q: np.ndarray, need_direction: bool = True
) -> list[tuple[int, float, np.ndarray | None]]:
    """Distance and inward unit vector for each singular subspace at a point.

    Returns a list of (index, dist, e) with e = -grad dist.  For points on a
    subspace (distance zero up to rounding) the direction is undefined: it is
    returned as None, or :class:`OnSingularSet` is raised when
    ``need_direction`` is set.
    """
    q = np.asarray(q, dtype=float)
    out: list[tuple[int, float, np.ndarray | None]] = []
    tol = on_set_tolerance(q)
    for idx, sub in enumerate(space.singular_subspaces):
        y = sub.normal_coords(q)
        dist = float(np.sqrt(np.dot(y, y)))
        if dist <= tol:
            if need_direction:
                raise OnSingularSet(f"q lies on singular subspace {idx}")
            out.append((idx, dist, None))
        else:
            e = -(y / dist) @ sub.normal_basis
            out.append((idx, dist, e))
    return out
