"""Current vector fields on configuration-space-time and their axioms.

A current is a pair j = (j0, J): a nonnegative density j0 and a flux J whose
ratio J/j0 drives the guidance dynamics dQ/dt = J/j0.  Providers evaluate j at
arbitrary (t, q) inside a declared validity window and carry the quadrature
grid used for normalization checks, sampling and condition integrals.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import (
    AxiomViolation,
    DimensionMismatch,
    NodeEncountered,
    OutOfDomain,
)
from .geometry import ConfigSpace
from .grids import GridSpec, SpinorField


@dataclass(frozen=True)
class CurrentSample:
    """One evaluation of the current: density j0 >= 0 and flux vector J."""

    j0: float
    J: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "J", np.atleast_1d(np.asarray(self.J, dtype=float)))
        if self.j0 < 0:
            raise ValueError("j0 must be nonnegative")


@dataclass(frozen=True)
class NodePolicy:
    """Operational node threshold: j0 below epsilon_node x density scale.

    The guidance law is undefined exactly where the current vanishes; the
    relative threshold makes the cutoff scale-invariant and keeps velocities
    representable while terminating a vanishing fraction of trajectories.
    """

    epsilon_node: float = 1e-9

    def __post_init__(self):
        if not self.epsilon_node > 0:
            raise ValueError("epsilon_node must be positive")

    def threshold(self, density_scale: float) -> float:
        return self.epsilon_node * density_scale

    def is_node(self, j0: float, density_scale: float) -> bool:
        return j0 < self.epsilon_node * density_scale


class CurrentProvider:
    """Evaluator of j = (j0, J) at arbitrary (t, q).

    Subclasses set ``dim``, ``window`` (t_min, t_max), ``density_scale``
    (sup of j0 at t = 0, normalizing the node threshold), ``grid`` (the
    quadrature/sampling grid) and optionally ``space`` (a ConfigSpace), and
    implement ``current_many``.  Providers are immutable after construction
    and safe to share across workers.
    """

    dim: int
    window: tuple[float, float]
    density_scale: float
    grid: GridSpec
    space: ConfigSpace | None = None
    hbar: float = 1.0
    c: float = 1.0

    def current_many(self, t: float, qs: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        """Evaluate at an (n, dim) batch of points; returns (j0 (n,), J (n, dim))."""
        raise NotImplementedError

    def current_at(self, t: float, q: np.ndarray) -> tuple[float, np.ndarray]:
        """Evaluate at a single point; returns (j0, J (dim,))."""
        j0, J = self.current_many(t, np.asarray(q, dtype=float)[np.newaxis])
        return float(j0[0]), J[0]

    def current_grid(self, t: float) -> tuple[np.ndarray, np.ndarray]:
        """Evaluate on the provider grid; returns (j0 (*shape), J (dim, *shape))."""
        pts = self.grid.points()
        j0, J = self.current_many(t, pts)
        shape = self.grid.shape
        return j0.reshape(shape), np.moveaxis(J, -1, 0).reshape((self.dim, *shape))

    def in_window(self, t: float) -> bool:
        return self.window[0] <= t <= self.window[1]


def velocity(
    provider: CurrentProvider, policy: NodePolicy | None, t: float, q: np.ndarray
) -> np.ndarray:
    """Guidance velocity J/j0 at (t, q).

    Raises :class:`OutOfDomain` outside the validity window or on a singular
    subspace, and :class:`NodeEncountered` below the node threshold.  With
    ``policy=None`` the raw ratio is returned whenever j0 > 0.
    """
    if not provider.in_window(t):
        raise OutOfDomain(f"t={t} outside validity window {provider.window}")
    q = np.atleast_1d(np.asarray(q, dtype=float))
    space = provider.space
    if space is not None and space.nsubspaces:
        from .geometry import on_set_tolerance

        if float(space.min_distance(q)) <= on_set_tolerance(q):
            raise OutOfDomain("q lies on a singular subspace")
    j0, J = provider.current_at(t, q)
    if policy is not None and policy.is_node(j0, provider.density_scale):
        raise NodeEncountered(f"j0={j0:.3e} below node threshold at t={t}")
    if j0 <= 0.0:
        raise NodeEncountered(f"j0={j0:.3e} nonpositive at t={t}")
    return J / j0


def _spin_contract(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Sum over the leading spin axis of conj(a) * b."""
    return np.sum(np.conj(a) * b, axis=0)


def schrodinger_current(
    psi: SpinorField,
    grad_psi: np.ndarray,
    A: np.ndarray | None,
    masses: np.ndarray,
    charges_over_c_hbar: np.ndarray | None = None,
    hbar: float = 1.0,
) -> tuple[np.ndarray, np.ndarray]:
    """Nonrelativistic current from a spinor field and its spatial gradient.

    j0 = psi* psi and J_i = (hbar/m_i) Im[psi* (d_i - i kappa_i A_i) psi] with
    kappa_i = e_i / (c hbar); the inner product contracts spin components.
    ``grad_psi`` has shape (dim, k, *grid), ``A`` either (dim,) for a uniform
    potential or (dim, *grid).  Returns (j0 (*grid), J (dim, *grid)).
    """
    g = psi.grid
    d = g.dim
    grad_psi = np.asarray(grad_psi, dtype=np.complex128)
    if grad_psi.shape != (d, psi.k, *g.shape):
        raise DimensionMismatch(
            f"grad_psi shape {grad_psi.shape}, expected {(d, psi.k, *g.shape)}"
        )
    masses = np.broadcast_to(np.asarray(masses, dtype=float), (d,))
    if np.any(masses <= 0):
        raise ValueError("masses must be positive")
    kappa = (
        np.zeros(d)
        if charges_over_c_hbar is None
        else np.broadcast_to(np.asarray(charges_over_c_hbar, dtype=float), (d,))
    )
    j0 = np.real(_spin_contract(psi.values, psi.values))
    J = np.empty((d, *g.shape))
    for i in range(d):
        cov = grad_psi[i]
        if A is not None:
            Ai = np.asarray(A[i], dtype=float)
            if Ai.ndim and Ai.shape != g.shape:
                raise DimensionMismatch(f"A[{i}] shape {Ai.shape} != grid {g.shape}")
            cov = cov - 1j * kappa[i] * Ai * psi.values
        J[i] = (hbar / masses[i]) * np.imag(_spin_contract(psi.values, cov))
    return j0, J


def dirac_current(
    psi: SpinorField, alphas: list[np.ndarray], c: float = 1.0
) -> tuple[np.ndarray, np.ndarray]:
    """Dirac current j0 = psi* psi, J_i = c psi* alpha_i psi.

    The alpha matrices must be Hermitian with spectrum in [-1, 1], which bounds
    |J| <= c sqrt(N) j0 pointwise and hence all velocities by the speed of
    light.
    """
    g = psi.grid
    if len(alphas) != g.dim:
        raise DimensionMismatch(f"{len(alphas)} alpha matrices for dim {g.dim}")
    j0 = np.real(_spin_contract(psi.values, psi.values))
    J = np.empty((g.dim, *g.shape))
    for i, alpha in enumerate(alphas):
        alpha = np.asarray(alpha, dtype=np.complex128)
        if alpha.shape != (psi.k, psi.k):
            raise DimensionMismatch(f"alpha_{i} shape {alpha.shape} != ({psi.k},{psi.k})")
        if not np.allclose(alpha, alpha.conj().T, atol=1e-12):
            raise ValueError(f"alpha_{i} is not Hermitian")
        if np.max(np.abs(np.linalg.eigvalsh(alpha))) > 1.0 + 1e-12:
            raise ValueError(f"alpha_{i} has eigenvalues outside [-1, 1]")
        J[i] = c * np.real(_spin_contract(psi.values, np.tensordot(alpha, psi.values, axes=(1, 0))))
    return j0, J


def divergence_residual(
    provider: CurrentProvider,
    t: float,
    region: GridSpec | np.ndarray,
    h: float,
    dt: float,
) -> np.ndarray:
    """Centered-difference estimate of d_t j0 + div J at the region points.

    The continuity axiom makes the exact value zero; the returned field decays
    at the finite-difference order (plus the provider's own truncation error
    for grid-backed currents) under refinement of h and dt.
    """
    if not (provider.in_window(t - dt) and provider.in_window(t + dt)):
        raise OutOfDomain("time stencil leaves the validity window")
    pts = region.points() if isinstance(region, GridSpec) else np.atleast_2d(region)
    d = provider.dim
    jp, _ = provider.current_many(t + dt, pts)
    jm, _ = provider.current_many(t - dt, pts)
    res = (jp - jm) / (2.0 * dt)
    for i in range(d):
        step = np.zeros(d)
        step[i] = h
        _, Jp = provider.current_many(t, pts + step)
        _, Jm = provider.current_many(t, pts - step)
        res = res + (Jp[:, i] - Jm[:, i]) / (2.0 * h)
    if isinstance(region, GridSpec):
        return res.reshape(region.shape)
    return res


class TimeReversedProvider(CurrentProvider):
    """View of a provider under t -> -t, J -> -J."""

    def __init__(self, inner: CurrentProvider):
        self.inner = inner
        self.dim = inner.dim
        self.window = (-inner.window[1], -inner.window[0])
        self.density_scale = inner.density_scale
        self.grid = inner.grid
        self.space = inner.space
        self.hbar = inner.hbar
        self.c = inner.c

    def current_many(self, t, qs):
        j0, J = self.inner.current_many(-t, qs)
        return j0, -J

    def current_at(self, t, q):
        j0, J = self.inner.current_at(-t, q)
        return j0, -J

    def current_grid(self, t):
        j0, J = self.inner.current_grid(-t)
        return j0, -J


def time_reverse(provider: CurrentProvider) -> CurrentProvider:
    """The time-reversed current (j0(-t, q), -J(-t, q)).

    Applying the reversal twice returns the original provider object, so the
    round trip is exact.
    """
    if isinstance(provider, TimeReversedProvider):
        return provider.inner
    return TimeReversedProvider(provider)


def validate_current(
    provider: CurrentProvider,
    times: int = 5,
    norm_tol: float = 1e-6,
    seed: int = 2024,
) -> None:
    """Check the current axioms on the provider grid; raise AxiomViolation.

    Checks positivity of j0 (10a/10c), absence of degenerate points with
    j0 = 0 but J != 0 (10c), and unit normalization of the grid quadrature of
    j0 at ``times`` deterministic times in the validity window (10d).
    """
    rng = np.random.default_rng(seed)
    t0, t1 = provider.window
    probe = [0.0] if t0 <= 0.0 <= t1 else [0.5 * (t0 + t1)]
    probe += list(rng.uniform(t0, t1, size=max(0, times - 1)))
    vol = provider.grid.cell_volume
    for t in probe:
        j0, J = provider.current_grid(t)
        if np.any(j0 < 0):
            raise AxiomViolation("10a", f"j0 negative at t={t:.6g} (min {j0.min():.3e})")
        speed = np.sqrt(np.sum(J * J, axis=0))
        floor = 1e-14 * provider.density_scale
        bad = (j0 <= floor) & (speed > 1e-9 * provider.density_scale * max(1.0, provider.c))
        if np.any(bad):
            raise AxiomViolation(
                "10c", f"J != 0 where j0 = 0 at t={t:.6g} ({int(bad.sum())} cells)"
            )
        mass = float(np.sum(j0) * vol)
        if abs(mass - 1.0) > norm_tol:
            raise AxiomViolation("10d", f"integral of j0 at t={t:.6g} is {mass:.9f}")
