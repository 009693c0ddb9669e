"""Current providers: closed-form scenario backends and PDE-backed grids.

A scenario provider evaluates the exact current of a closed-form wavefunction.
A grid provider stores the Fourier coefficients of every time slice of a
split-step run; between stored slices it co-advances the field with the same
stepper by the fractional step (never interpolating in time, which would
manufacture spurious nodes), and point values come from the trigonometric
interpolant of the stored spectrum, which is exact for the band-limited field.
"""

from __future__ import annotations

from collections import OrderedDict

import numpy as np

from .current import CurrentProvider, validate_current
from .errors import OutOfDomain, ProviderWindow, UnsupportedField
from .grids import SpinorField
from .propagators import HamiltonianSpec, make_stepper, spectral_gradient
from .scenarios import Scenario, get_scenario, hamiltonian_for, initial_field


class ScenarioProvider(CurrentProvider):
    """Current provider backed by a closed-form scenario."""

    def __init__(self, scenario: Scenario, validate: bool = True, norm_tol: float = 1e-6):
        self.scenario = scenario
        self.dim = scenario.dim
        self.window = scenario.window
        self.grid = scenario.grid
        self.space = scenario.space
        self.hbar = scenario.hbar
        self.c = scenario.c
        j0, _ = scenario.current(0.0, self.grid.points())
        self.density_scale = float(np.max(j0))
        if validate:
            validate_current(self, norm_tol=norm_tol)

    def current_many(self, t, qs):
        j0, J = self.scenario.current(t, np.atleast_2d(np.asarray(qs, dtype=float)))
        return np.asarray(j0, dtype=float), np.asarray(J, dtype=float)

    def current_at(self, t, q):
        fast = self.scenario.current_point
        if fast is not None:
            j0, J = fast(t, tuple(np.asarray(q, dtype=float).ravel()))
            return j0, np.asarray(J, dtype=float)
        j0, J = self.scenario.current(t, np.asarray(q, dtype=float)[np.newaxis])
        return float(j0[0]), J[0]


class _LRU(OrderedDict):
    def __init__(self, maxsize):
        super().__init__()
        self.maxsize = maxsize

    def put(self, key, value):
        self[key] = value
        if len(self) > self.maxsize:
            self.popitem(last=False)


class GridProvider(CurrentProvider):
    """Provider backed by a stored split-step run.

    Slices are stored at every step (no temporal subsampling).  ``t0`` is the
    time of the initial field; the validity window is [t0, t0 + n_steps dt].
    """

    def __init__(
        self,
        ham: HamiltonianSpec,
        psi0: SpinorField,
        dt: float,
        n_steps: int,
        space=None,
        validate: bool = True,
        norm_tol: float = 1e-6,
    ):
        if psi0.grid != ham.grid:
            raise UnsupportedField("initial field and Hamiltonian grids differ")
        self.ham = ham
        self.grid = ham.grid
        self.dim = ham.grid.dim
        self.k = psi0.k
        self.dt = float(dt)
        self.t0 = float(psi0.t)
        self.space = space
        self.hbar = ham.hbar
        self.c = ham.c
        self.window = (self.t0, self.t0 + n_steps * self.dt)
        self._axes = tuple(range(1, self.dim + 1))

        A = ham.vector_potential
        if A is not None:
            A = np.asarray(A, dtype=float)
            if A.shape != (self.dim,) and np.ptp(A.reshape(self.dim, -1), axis=1).max() > 0:
                raise UnsupportedField(
                    "grid providers support uniform vector potentials only"
                )
            A = A.reshape(self.dim, -1)[:, 0]
        self._A = A
        kappa = ham.couplings if ham.couplings is not None else np.zeros(self.dim)
        self._kappa = np.asarray(kappa, dtype=float)
        self._masses = np.asarray(ham.masses, dtype=float)

        stepper = make_stepper(ham, self.dt, k=self.k)
        slices = [np.fft.fftn(psi0.values, axes=self._axes)]
        vals = psi0.values
        for _ in range(n_steps):
            vals = stepper.step(vals)
            slices.append(np.fft.fftn(vals, axes=self._axes))
        self._slices = slices
        self._frac_steppers = _LRU(16)
        self._psi_cache = _LRU(64)
        self._kaxes = self.grid.kaxes()
        self._kmesh = self.grid.kmesh()

        j0, _ = self.current_grid(self.t0)
        self.density_scale = float(np.max(j0))
        if validate:
            validate_current(self, norm_tol=norm_tol)

    # -- field access ------------------------------------------------------

    def _psi_hat(self, t: float) -> np.ndarray:
        # one-step grace beyond the window lets event bisection and stage
        # evaluations peek marginally past the last stored slice
        if not (self.window[0] - self.dt <= t <= self.window[1] + self.dt):
            raise OutOfDomain(f"t={t} outside provider window {self.window}")
        s = (t - self.t0) / self.dt
        n = int(round(s))
        if 0 <= n < len(self._slices) and abs(s - n) < 1e-9:
            return self._slices[n]
        key = float(t)
        hit = self._psi_cache.get(key)
        if hit is not None:
            return hit
        base = min(max(int(np.floor(s)), 0), len(self._slices) - 2)
        theta = t - (self.t0 + base * self.dt)
        stepper = self._frac_steppers.get(theta)
        if stepper is None:
            stepper = make_stepper(self.ham, theta, k=self.k)
            self._frac_steppers.put(theta, stepper)
        vals = np.fft.ifftn(self._slices[base], axes=self._axes)
        out = np.fft.fftn(stepper.step(vals), axes=self._axes)
        self._psi_cache.put(key, out)
        return out

    def _interp_field(self, psi_hat: np.ndarray, qs: np.ndarray, derivative: bool):
        """Trig-interpolated psi (k, n) and optionally grad psi (d, k, n)."""
        g = self.grid
        scale = 1.0 / np.prod(g.shape)
        origins = [g.axis(i)[0] for i in range(self.dim)]
        E = [
            np.exp(1j * np.multiply.outer(qs[:, i] - origins[i], self._kaxes[i]))
            for i in range(self.dim)
        ]
        if self.dim == 1:
            psi = (E[0] @ psi_hat.T).T * scale
            grad = None
            if derivative:
                grad = ((E[0] * (1j * self._kaxes[0])) @ psi_hat.T).T[np.newaxis] * scale
            return psi, grad
        if self.dim == 2:
            psi = np.einsum("pa,kab,pb->kp", E[0], psi_hat, E[1]) * scale
            grad = None
            if derivative:
                gx = np.einsum("pa,kab,pb->kp", E[0] * (1j * self._kaxes[0]), psi_hat, E[1])
                gy = np.einsum("pa,kab,pb->kp", E[0], psi_hat, E[1] * (1j * self._kaxes[1]))
                grad = np.stack([gx, gy]) * scale
            return psi, grad
        raise UnsupportedField("grid providers are implemented for d <= 2")

    def _current_from(self, psi, grad):
        """Current at interpolated values: psi (k, n), grad (d, k, n)."""
        j0 = np.sum(np.abs(psi) ** 2, axis=0)
        n = psi.shape[-1]
        J = np.empty((n, self.dim))
        if self.ham.kind == "dirac1d":
            J[:, 0] = 2.0 * self.c * np.real(np.conj(psi[0]) * psi[1])
            return j0, J
        for i in range(self.dim):
            cov = grad[i]
            if self._A is not None:
                cov = cov - 1j * self._kappa[i] * self._A[i] * psi
            J[:, i] = (self.hbar / self._masses[i]) * np.sum(
                np.imag(np.conj(psi) * cov), axis=0
            )
        return j0, J

    # -- provider interface --------------------------------------------------

    def current_many(self, t, qs):
        qs = np.atleast_2d(np.asarray(qs, dtype=float))
        psi_hat = self._psi_hat(t)
        psi, grad = self._interp_field(psi_hat, qs, derivative=self.ham.kind != "dirac1d")
        return self._current_from(psi, grad)

    def current_grid(self, t):
        psi_hat = self._psi_hat(t)
        psi = np.fft.ifftn(psi_hat, axes=self._axes)
        j0 = np.sum(np.abs(psi) ** 2, axis=0)
        J = np.empty((self.dim, *self.grid.shape))
        if self.ham.kind == "dirac1d":
            J[0] = 2.0 * self.c * np.real(np.conj(psi[0]) * psi[1])
            return j0, J
        grad = spectral_gradient(psi, self.grid)
        for i in range(self.dim):
            cov = grad[i]
            if self._A is not None:
                cov = cov - 1j * self._kappa[i] * self._A[i] * psi
            J[i] = (self.hbar / self._masses[i]) * np.sum(np.imag(np.conj(psi) * cov), axis=0)
        return j0, J

    def field_at(self, t: float) -> SpinorField:
        """The co-advanced spinor field at time t."""
        vals = np.fft.ifftn(self._psi_hat(t), axes=self._axes)
        return SpinorField(self.grid, vals, t=t)


def build_provider(
    source,
    backend: str = "analytic",
    dt: float = 1e-3,
    T: float | None = None,
    n_steps: int | None = None,
    psi0: SpinorField | None = None,
    space=None,
    validate: bool = True,
    norm_tol: float = 1e-6,
    **scenario_params,
) -> CurrentProvider:
    """Construct a validated current provider.

    ``source`` is a scenario (name or instance) or, for raw PDE runs, a
    HamiltonianSpec together with ``psi0``.  ``backend='pde'`` turns a
    scenario into a stored split-step run over [0, T].  Axiom validation
    runs at construction and raises :class:`AxiomViolation` naming the
    failing axiom.
    """
    if isinstance(source, str):
        source = get_scenario(source, **scenario_params)
    if isinstance(source, Scenario):
        if backend == "analytic":
            return ScenarioProvider(source, validate=validate, norm_tol=norm_tol)
        if backend == "pde":
            if T is None and n_steps is None:
                raise ValueError("PDE backend needs T or n_steps")
            if n_steps is None:
                n_steps = max(1, int(round(T / dt)))
            return GridProvider(
                hamiltonian_for(source),
                initial_field(source),
                dt,
                n_steps,
                space=space if space is not None else source.space,
                validate=validate,
                norm_tol=norm_tol,
            )
        raise ValueError(f"unknown backend {backend!r}")
    if isinstance(source, HamiltonianSpec):
        if psi0 is None:
            raise ValueError("a HamiltonianSpec source needs psi0")
        if n_steps is None:
            if T is None:
                raise ValueError("PDE runs need T or n_steps")
            n_steps = max(1, int(round(T / dt)))
        return GridProvider(
            source, psi0, dt, n_steps, space=space, validate=validate, norm_tol=norm_tol
        )
    raise TypeError(f"cannot build a provider from {type(source).__name__}")


def require_window(provider: CurrentProvider, T: float) -> None:
    """Raise ProviderWindow unless [0, T] lies inside the validity window."""
    if T > provider.window[1] + 1e-12 or provider.window[0] > 0.0:
        raise ProviderWindow(
            f"horizon [0, {T}] exceeds provider window {provider.window}"
        )
