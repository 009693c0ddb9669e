"""Spectral wavefunction propagators on periodic grids.

Strang splitting with an exact Fourier kinetic step: half potential, full
kinetic, half potential.  Every factor is unitary, so the norm is conserved to
rounding per step and the global error is second order in the time step.

Magnetic fields: a spatially uniform vector potential enters the kinetic
symbol exactly (minimal coupling).  A spatially varying potential is supported
when each component A_i is constant along its own axis (axis-transverse gauge,
e.g. Landau or symmetric gauge, which implies div A = 0); the kinetic step is
then applied exactly axis by axis with an inner Strang split.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DimensionMismatch, UnsupportedField
from .grids import GridSpec, SpinorField

_HERM_TOL = 1e-12


@dataclass(frozen=True)
class HamiltonianSpec:
    """Hamiltonian data for the spectral steppers.

    Parameters
    ----------
    kind : str
        'schrodinger', 'pauli' (k = 2 with a spin coupling term) or 'dirac1d'.
    grid : GridSpec
        Periodic spatial grid.
    potential : ndarray or None
        Scalar field (*grid) or Hermitian matrix field (k, k, *grid),
        energy units.  For dirac1d this excludes the built-in mass term.
    vector_potential : ndarray or None
        Uniform (dim,) or field (dim, *grid) vector potential.
    masses : ndarray
        Positive diagonal mass matrix entries, one per axis.
    couplings : ndarray or None
        e_i / (c hbar) per axis; zero when omitted.
    spin_coupling : ndarray or None
        Extra Hermitian matrix field (k, k, *grid), e.g. the -B.sigma term;
        added to the potential step.
    dirac_mass : float
        Rest mass for dirac1d (enters the exact free-mode exponential).
    """

    kind: str
    grid: GridSpec
    potential: np.ndarray | None = None
    vector_potential: np.ndarray | None = None
    masses: np.ndarray | float = 1.0
    couplings: np.ndarray | float | None = None
    spin_coupling: np.ndarray | None = None
    dirac_mass: float = 0.0
    hbar: float = 1.0
    c: float = 1.0

    def __post_init__(self):
        if self.kind not in ("schrodinger", "pauli", "dirac1d"):
            raise ValueError(f"unknown Hamiltonian kind {self.kind!r}")
        if not all(self.grid.periodic):
            raise UnsupportedField("spectral steppers need periodic grids")
        masses = np.broadcast_to(np.asarray(self.masses, dtype=float), (self.grid.dim,)).copy()
        if np.any(masses <= 0):
            raise ValueError("masses must be positive")
        object.__setattr__(self, "masses", masses)
        if self.couplings is not None:
            kap = np.broadcast_to(np.asarray(self.couplings, dtype=float), (self.grid.dim,)).copy()
            object.__setattr__(self, "couplings", kap)
        for name in ("potential", "spin_coupling"):
            V = getattr(self, name)
            if V is None:
                continue
            V = np.asarray(V, dtype=np.complex128)
            object.__setattr__(self, name, V)
            if V.ndim == self.grid.dim + 2:
                herm_err = np.max(np.abs(V - np.conj(np.swapaxes(V, 0, 1))))
                if herm_err > _HERM_TOL:
                    raise ValueError(f"{name} not Hermitian (max dev {herm_err:.2e})")
            elif V.ndim == self.grid.dim:
                if np.max(np.abs(V.imag)) > _HERM_TOL:
                    raise ValueError(f"scalar {name} must be real")
            else:
                raise DimensionMismatch(f"{name} has shape {V.shape}")


def _uniform_vector_potential(ham: HamiltonianSpec) -> np.ndarray | None:
    """Return the (dim,) uniform A, or None if A varies in space."""
    A = ham.vector_potential
    if A is None:
        return np.zeros(ham.grid.dim)
    A = np.asarray(A, dtype=float)
    if A.shape == (ham.grid.dim,):
        return A
    flat = A.reshape(ham.grid.dim, -1)
    if np.all(flat == flat[:, :1]):
        return flat[:, 0].copy()
    return None


def _transverse_components(ham: HamiltonianSpec) -> list[np.ndarray] | None:
    """Per-axis A_i fields if each is constant along axis i, else None."""
    A = np.asarray(ham.vector_potential, dtype=float)
    if A.shape != (ham.grid.dim, *ham.grid.shape):
        raise DimensionMismatch(f"vector potential shape {A.shape}")
    comps = []
    for i in range(ham.grid.dim):
        Ai = A[i]
        if np.max(np.abs(Ai - np.take(Ai, [0], axis=i))) > 0:
            return None
        comps.append(Ai)
    return comps


def _potential_propagator(ham: HamiltonianSpec, k: int, dt_half: float) -> np.ndarray | None:
    """exp(-i V dt/2 / hbar) as a scalar phase field or a matrix field."""
    g = ham.grid
    total = None
    for V in (ham.potential, ham.spin_coupling):
        if V is None:
            continue
        if V.ndim == g.dim:
            V = np.einsum("ab,...->ab...", np.eye(k, dtype=np.complex128), V)
        if V.shape[0] != k:
            raise DimensionMismatch(f"potential spin dimension {V.shape[0]} != {k}")
        total = V if total is None else total + V
    if total is None:
        return None
    if k == 1:
        return np.exp(-1j * dt_half / ham.hbar * total[0, 0])
    mats = np.moveaxis(total.reshape(k, k, -1), -1, 0)
    evals, evecs = np.linalg.eigh(mats)
    phase = np.exp(-1j * dt_half / ham.hbar * evals)
    prop = np.einsum("nab,nb,ncb->nac", evecs, phase, evecs.conj())
    return np.moveaxis(prop, 0, -1).reshape(k, k, *g.shape)


def _apply_pointwise(prop: np.ndarray, values: np.ndarray) -> np.ndarray:
    if prop.ndim == values.ndim - 1:  # scalar phase
        return prop[np.newaxis] * values
    return np.einsum("ab...,b...->a...", prop, values)


class SplitStepper:
    """Strang split-step propagator for Schrodinger/Pauli Hamiltonians.

    Precomputes all phase factors for a fixed dt; ``step`` maps raw field
    values (k, *grid) one time step forward.
    """

    def __init__(self, ham: HamiltonianSpec, dt: float, k: int = 1, exact_kinetic: bool = False):
        if ham.kind not in ("schrodinger", "pauli"):
            raise UnsupportedField(f"SplitStepper cannot treat kind {ham.kind!r}")
        self.ham = ham
        self.dt = float(dt)
        self.k = k
        g = ham.grid
        kappa = ham.couplings if ham.couplings is not None else np.zeros(g.dim)
        self._vprop = _potential_propagator(ham, k, 0.5 * self.dt)

        A = _uniform_vector_potential(ham)
        if A is not None:
            kmesh = g.kmesh()
            sym = np.zeros(g.shape)
            for i in range(g.dim):
                sym = sym + ham.hbar**2 * (kmesh[i] - kappa[i] * A[i]) ** 2 / (2.0 * ham.masses[i])
            self._kin_full = np.exp(-1j * self.dt / ham.hbar * sym)
            self._kin_axis = None
        else:
            if exact_kinetic:
                raise UnsupportedField(
                    "vector potential varies in space; exact kinetic treatment "
                    "is only available for uniform A"
                )
            comps = _transverse_components(ham)
            if comps is None:
                raise UnsupportedField(
                    "spatially varying vector potential must have each component "
                    "constant along its own axis (axis-transverse gauge)"
                )
            self._kin_full = None
            # inner Strang weights: dt/2 on all axes but the last, dt on the last
            self._kin_axis = []
            for i in range(g.dim):
                ki = g.kaxis(i).reshape([-1 if ax == i else 1 for ax in range(g.dim)])
                sub_dt = self.dt if i == g.dim - 1 else 0.5 * self.dt
                phase = np.exp(
                    -1j
                    * sub_dt
                    / ham.hbar
                    * ham.hbar**2
                    * (ki - kappa[i] * comps[i]) ** 2
                    / (2.0 * ham.masses[i])
                )
                self._kin_axis.append(phase)

    def _kinetic(self, values: np.ndarray) -> np.ndarray:
        g = self.ham.grid
        axes = tuple(range(1, g.dim + 1))
        if self._kin_full is not None:
            return np.fft.ifftn(self._kin_full[np.newaxis] * np.fft.fftn(values, axes=axes), axes=axes)
        order = list(range(g.dim - 1)) + [g.dim - 1] + list(reversed(range(g.dim - 1)))
        out = values
        for i in order:
            out = np.fft.ifft(self._kin_axis[i][np.newaxis] * np.fft.fft(out, axis=1 + i), axis=1 + i)
        return out

    def step(self, values: np.ndarray) -> np.ndarray:
        if self._vprop is not None:
            values = _apply_pointwise(self._vprop, values)
        values = self._kinetic(values)
        if self._vprop is not None:
            values = _apply_pointwise(self._vprop, values)
        return values


class DiracStepper1D:
    """Split-step propagator for the 1+1d Dirac equation.

    The free part (first Pauli matrix kinetic term plus the rest-mass term on
    the third Pauli matrix) is applied exactly in Fourier space via the 2x2
    matrix exponential per mode; any additional potential is Strang split
    around it.
    """

    def __init__(self, ham: HamiltonianSpec, dt: float):
        if ham.kind != "dirac1d":
            raise UnsupportedField(f"DiracStepper1D cannot treat kind {ham.kind!r}")
        if ham.grid.dim != 1:
            raise UnsupportedField("the Dirac stepper is one-dimensional")
        self.ham = ham
        self.dt = float(dt)
        g = ham.grid
        kk = g.kaxis(0)
        px = ham.c * ham.hbar * kk
        pz = ham.dirac_mass * ham.c**2
        E = np.sqrt(px**2 + pz**2)
        theta = E * self.dt / ham.hbar
        with np.errstate(invalid="ignore"):
            n1 = np.where(E > 0, px / np.where(E > 0, E, 1.0), 0.0)
            n3 = np.where(E > 0, pz / np.where(E > 0, E, 1.0), 0.0)
        cos_t, sin_t = np.cos(theta), np.sin(theta)
        self._u00 = cos_t - 1j * sin_t * n3
        self._u01 = -1j * sin_t * n1
        self._u11 = cos_t + 1j * sin_t * n3
        self._vprop = _potential_propagator(ham, 2, 0.5 * self.dt)

    def free_mode_matrix(self, k: float) -> np.ndarray:
        """Exact one-step 2x2 propagator of the single Fourier mode k."""
        px = self.ham.c * self.ham.hbar * k
        pz = self.ham.dirac_mass * self.ham.c**2
        E = float(np.hypot(px, pz))
        theta = E * self.dt / self.ham.hbar
        if E == 0.0:
            return np.eye(2, dtype=np.complex128)
        n1, n3 = px / E, pz / E
        return np.array(
            [
                [np.cos(theta) - 1j * np.sin(theta) * n3, -1j * np.sin(theta) * n1],
                [-1j * np.sin(theta) * n1, np.cos(theta) + 1j * np.sin(theta) * n3],
            ]
        )

    def step(self, values: np.ndarray) -> np.ndarray:
        if self._vprop is not None:
            values = _apply_pointwise(self._vprop, values)
        a = np.fft.fft(values[0])
        b = np.fft.fft(values[1])
        values = np.stack(
            [
                np.fft.ifft(self._u00 * a + self._u01 * b),
                np.fft.ifft(self._u01 * a + self._u11 * b),
            ]
        )
        if self._vprop is not None:
            values = _apply_pointwise(self._vprop, values)
        return values


def make_stepper(ham: HamiltonianSpec, dt: float, k: int | None = None, **kw):
    if ham.kind == "dirac1d":
        return DiracStepper1D(ham, dt)
    return SplitStepper(ham, dt, k=k if k is not None else 1, **kw)


def split_step_schrodinger(
    psi: SpinorField, ham: HamiltonianSpec, dt: float, exact_kinetic: bool = False
) -> SpinorField:
    """Advance a Schrodinger/Pauli spinor field by one Strang step of size dt."""
    stepper = SplitStepper(ham, dt, k=psi.k, exact_kinetic=exact_kinetic)
    return SpinorField(psi.grid, stepper.step(psi.values), t=psi.t + dt)


def dirac_step_1d(psi: SpinorField, ham: HamiltonianSpec, dt: float) -> SpinorField:
    """Advance a two-component 1d Dirac field by one step of size dt."""
    if psi.k != 2:
        raise DimensionMismatch("the 1d Dirac field has two spinor components")
    stepper = DiracStepper1D(ham, dt)
    return SpinorField(psi.grid, stepper.step(psi.values), t=psi.t + dt)


def propagate(psi: SpinorField, ham: HamiltonianSpec, dt: float, n_steps: int) -> SpinorField:
    """Advance by n_steps steps of size dt with a single precomputed stepper."""
    stepper = make_stepper(ham, dt, k=psi.k)
    values = psi.values
    for _ in range(n_steps):
        values = stepper.step(values)
    return SpinorField(psi.grid, values, t=psi.t + n_steps * dt)


def spectral_gradient(values: np.ndarray, grid: GridSpec) -> np.ndarray:
    """Spatial gradient of a (k, *grid) field by Fourier differentiation.

    Returns an array of shape (dim, k, *grid).
    """
    axes = tuple(range(1, grid.dim + 1))
    vhat = np.fft.fftn(values, axes=axes)
    out = np.empty((grid.dim, *values.shape), dtype=np.complex128)
    for i in range(grid.dim):
        ki = grid.kaxis(i).reshape([1] + [-1 if ax == i else 1 for ax in range(grid.dim)])
        out[i] = np.fft.ifftn(1j * ki * vhat, axes=axes)
    return out
