import math

import numpy as np
import pytest

from bohmflow.current import CurrentProvider
from bohmflow.grids import GridSpec
from bohmflow.providers import build_provider
from bohmflow.scenarios import get_scenario
from bohmflow.trajectories import IntegratorConfig


class UniformBoxProvider(CurrentProvider):
    """Uniform density on the grid box, constant velocity field."""

    def __init__(self, dim=1, extent=4.0, n=64, vel=None, window=(-10.0, 10.0)):
        self.dim = dim
        self.grid = GridSpec(dim, (extent,), (n,))
        self.window = window
        self.space = None
        self.hbar = self.c = 1.0
        self._rho = 1.0 / (2.0 * extent) ** dim
        self._vel = np.zeros(dim) if vel is None else np.asarray(vel, dtype=float)
        self.density_scale = self._rho

    def current_many(self, t, qs):
        qs = np.atleast_2d(qs)
        j0 = np.full(qs.shape[0], self._rho)
        return j0, np.tile(self._rho * self._vel, (qs.shape[0], 1))


class LinearFlowProvider(CurrentProvider):
    """v(t, q) = q: flow phi_t(q) = q e^t with the exactly transported
    standard-normal density."""

    def __init__(self, dim=2):
        self.dim = dim
        self.grid = GridSpec(dim, (12.0,), (64,))
        self.window = (-2.0, 2.0)
        self.space = None
        self.hbar = self.c = 1.0
        self.density_scale = (2.0 * math.pi) ** (-dim / 2.0)

    def current_many(self, t, qs):
        qs = np.atleast_2d(qs)
        x = np.exp(-t) * qs
        j0 = np.exp(-self.dim * t) * np.exp(-0.5 * np.sum(x * x, axis=1)) / (
            (2.0 * math.pi) ** (self.dim / 2.0)
        )
        return j0, j0[:, np.newaxis] * qs


class ScaledProvider(CurrentProvider):
    """(j0, J) -> (lam j0, lam J); breaks normalization on purpose."""

    def __init__(self, inner, lam):
        self.inner, self.lam = inner, lam
        self.dim = inner.dim
        self.window = inner.window
        self.grid = inner.grid
        self.space = inner.space
        self.hbar, self.c = inner.hbar, inner.c
        self.density_scale = lam * inner.density_scale

    def current_many(self, t, qs):
        j0, J = self.inner.current_many(t, qs)
        return self.lam * j0, self.lam * J


class VelocityScaledProvider(CurrentProvider):
    """Same density, velocity multiplied by a factor: wrong dynamics."""

    def __init__(self, inner, factor):
        self.inner, self.factor = inner, factor
        self.dim = inner.dim
        self.window = inner.window
        self.grid = inner.grid
        self.space = inner.space
        self.hbar, self.c = inner.hbar, inner.c
        self.density_scale = inner.density_scale

    def current_many(self, t, qs):
        j0, J = self.inner.current_many(t, qs)
        return j0, self.factor * J


@pytest.fixture(scope="session")
def gauss_scenario():
    return get_scenario("free_gaussian")


@pytest.fixture(scope="session")
def gauss_provider():
    return build_provider("free_gaussian")


@pytest.fixture(scope="session")
def gauss2d_provider():
    return build_provider("free_gaussian_2d")


@pytest.fixture(scope="session")
def osc_provider():
    return build_provider("oscillator_superposition")


@pytest.fixture(scope="session")
def hydro_provider():
    return build_provider("hydrogenic")


@pytest.fixture(scope="session")
def plane_provider():
    return build_provider("plane_wave")


@pytest.fixture(scope="session")
def dirac_provider():
    return build_provider("dirac_packet")


@pytest.fixture(scope="session")
def dirac_massless_provider():
    return build_provider("dirac_packet_massless")


@pytest.fixture(scope="session")
def coin_provider():
    return build_provider("coincidence")


@pytest.fixture(scope="session")
def pde_gauss_provider():
    return build_provider("free_gaussian", backend="pde", dt=1e-3, T=0.5)


@pytest.fixture(scope="session")
def cfg():
    return IntegratorConfig()


@pytest.fixture(scope="session")
def tight_cfg():
    return IntegratorConfig(rel_tol=1e-10, abs_tol=1e-12)
