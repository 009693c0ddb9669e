"""Closed-form wavefunction scenarios used as exact oracles.

Every scenario evaluates psi(t, q) and its exact current in closed form (the
spatial derivatives were done symbolically at implementation time), carries a
recommended grid and horizon, and knows its Hamiltonian so a PDE run can be
cross-checked against it.  The registry is addressable by name from the CLI.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .errors import OutOfDomain
from .geometry import ConfigSpace, SingularSubspace
from .grids import GridSpec, SpinorField

_PI4 = math.pi ** (-0.25)  # oscillator eigenstate normalization


@dataclass(frozen=True)
class Scenario:
    """A named closed-form solution with its exact current.

    ``psi(t, qs)`` maps an (n, dim) batch to a (k, n) complex array;
    ``current(t, qs)`` returns (j0 (n,), J (n, dim)) computed from the exact
    derivative, and ``current_point`` is an optional scalar fast path used by
    the trajectory integrator.
    """

    name: str
    dim: int
    k: int
    kind: str  # 'schrodinger' | 'dirac1d'
    window: tuple[float, float]
    grid: GridSpec
    psi: Callable[[float, np.ndarray], np.ndarray]
    current: Callable[[float, np.ndarray], tuple[np.ndarray, np.ndarray]]
    current_point: Callable | None = None
    potential: Callable[[np.ndarray], np.ndarray] | None = None
    space: ConfigSpace | None = None
    masses: tuple[float, ...] = (1.0,)
    hbar: float = 1.0
    c: float = 1.0
    dirac_mass: float = 0.0
    trajectory: Callable[[np.ndarray, float], np.ndarray] | None = None
    node_times: tuple[float, ...] = ()
    node_positions: Callable[[float], np.ndarray] | None = None
    node_collision_q0: float | None = None
    params: dict = field(default_factory=dict)

    def eval(self, t: float, q: np.ndarray) -> np.ndarray:
        """Spinor value at one point; raises OutOfDomain beyond the horizon."""
        if not (self.window[0] <= t <= self.window[1]):
            raise OutOfDomain(f"t={t} outside scenario horizon {self.window}")
        q = np.atleast_1d(np.asarray(q, dtype=float))
        return self.psi(t, q[np.newaxis])[:, 0]


def scenario_eval(s: Scenario, t: float, q: np.ndarray) -> np.ndarray:
    """Closed-form spinor value of a scenario at (t, q)."""
    return s.eval(t, q)


# ---------------------------------------------------------------------------
# free Gaussian packets


def free_gaussian(sigma0: float = 1.0, extent: float = 12.0, n: int = 512) -> Scenario:
    """Spreading 1d Gaussian, hbar = m = 1; the standard trajectory oracle.

    Width obeys s(t)^2 = sigma0^2 (1 + t^2 / (4 sigma0^4)) and each trajectory
    is the similarity flow Q(t) = q0 s(t) / sigma0.
    """
    s2_0 = sigma0 * sigma0
    norm0 = (2.0 * math.pi * s2_0) ** (-0.25)
    four_s4 = 4.0 * s2_0 * s2_0

    def _alpha(t):
        return 1.0 + 1j * t / (2.0 * s2_0)

    def psi(t, qs):
        x = qs[:, 0]
        a = _alpha(t)
        return (norm0 / np.sqrt(a) * np.exp(-(x * x) / (4.0 * s2_0 * a)))[np.newaxis]

    def current(t, qs):
        x = qs[:, 0]
        s2 = s2_0 + t * t / (4.0 * s2_0)
        j0 = np.exp(-(x * x) / (2.0 * s2)) / np.sqrt(2.0 * math.pi * s2)
        v = x * t / (four_s4 + t * t)
        return j0, (j0 * v)[:, np.newaxis]

    def current_point(t, q):
        x = q[0]
        s2 = s2_0 + t * t / (4.0 * s2_0)
        j0 = math.exp(-(x * x) / (2.0 * s2)) / math.sqrt(2.0 * math.pi * s2)
        return j0, (j0 * x * t / (four_s4 + t * t),)

    def trajectory(q0, t):
        scale = math.sqrt(1.0 + t * t / four_s4)
        return np.atleast_1d(q0) * scale

    return Scenario(
        name="free_gaussian",
        dim=1,
        k=1,
        kind="schrodinger",
        window=(-4.0, 4.0),
        grid=GridSpec(1, (extent,), (n,)),
        psi=psi,
        current=current,
        current_point=current_point,
        potential=None,
        trajectory=trajectory,
        params={"sigma0": sigma0},
    )


def free_gaussian_2d(sigma0: float = 1.0, extent: float = 10.0, n: int = 64) -> Scenario:
    """Isotropic 2d spreading Gaussian (product state), hbar = m = 1."""
    s2_0 = sigma0 * sigma0
    norm0 = (2.0 * math.pi * s2_0) ** (-0.25)
    four_s4 = 4.0 * s2_0 * s2_0

    def psi(t, qs):
        a = 1.0 + 1j * t / (2.0 * s2_0)
        r2 = np.sum(qs * qs, axis=1)
        return (norm0**2 / a * np.exp(-r2 / (4.0 * s2_0 * a)))[np.newaxis]

    def current(t, qs):
        s2 = s2_0 + t * t / (4.0 * s2_0)
        r2 = np.sum(qs * qs, axis=1)
        j0 = np.exp(-r2 / (2.0 * s2)) / (2.0 * math.pi * s2)
        v = qs * (t / (four_s4 + t * t))
        return j0, j0[:, np.newaxis] * v

    def trajectory(q0, t):
        return np.atleast_1d(q0) * math.sqrt(1.0 + t * t / four_s4)

    return Scenario(
        name="free_gaussian_2d",
        dim=2,
        k=1,
        kind="schrodinger",
        window=(-3.0, 3.0),
        grid=GridSpec(2, (extent,), (n,)),
        psi=psi,
        current=current,
        potential=None,
        masses=(1.0, 1.0),
        trajectory=trajectory,
        params={"sigma0": sigma0},
    )


# ---------------------------------------------------------------------------
# plane wave on a periodic box


def plane_wave(mode: int = 1, n: int = 64) -> Scenario:
    """Single Fourier mode exp(i(kx - k^2 t / 2)) / sqrt(L) on a 2 pi box."""
    extent = math.pi
    L = 2.0 * extent
    kw = float(mode)  # modes are integers on a 2 pi box
    omega = 0.5 * kw * kw

    def psi(t, qs):
        return (np.exp(1j * (kw * qs[:, 0] - omega * t)) / math.sqrt(L))[np.newaxis]

    def current(t, qs):
        npts = qs.shape[0]
        j0 = np.full(npts, 1.0 / L)
        return j0, np.full((npts, 1), kw / L)

    def current_point(t, q):
        return 1.0 / L, (kw / L,)

    def trajectory(q0, t):
        return np.atleast_1d(q0) + kw * t

    return Scenario(
        name="plane_wave",
        dim=1,
        k=1,
        kind="schrodinger",
        window=(-100.0, 100.0),
        grid=GridSpec(1, (extent,), (n,)),
        psi=psi,
        current=current,
        current_point=current_point,
        potential=None,
        trajectory=trajectory,
        params={"mode": mode},
    )


# ---------------------------------------------------------------------------
# harmonic oscillator n = 0 / n = 2 superposition (instantaneous moving nodes)

# first time at which the superposition develops nodes, and their location:
# the relative phase reaches -1 at t = pi/2 where psi ~ phi0 - phi2 vanishes
# at 2 x^2 = 1 + sqrt(2).
OSC_NODE_TIME = 0.5 * math.pi
OSC_NODE_X = math.sqrt(0.5 * (1.0 + math.sqrt(2.0)))

# initial point whose trajectory runs into the node at (t, x) =
# (OSC_NODE_TIME, OSC_NODE_X); found by bisection on tightly integrated
# trajectories (see tests for the recomputation oracle).
OSC_NODE_COLLISION_Q0 = 1.8841931008871313


def _osc_u(x):
    return _PI4 * np.exp(-0.5 * x * x)


def _osc_w(x):
    return _PI4 * np.exp(-0.5 * x * x) * (2.0 * x * x - 1.0) / math.sqrt(2.0)


def oscillator_superposition(extent: float = 8.0, n: int = 256) -> Scenario:
    """(phi_0 + phi_2)/sqrt(2) in a unit harmonic trap, hbar = m = omega = 1.

    The density develops instantaneous nodes at t = pi/2 (mod pi) at
    x = +- OSC_NODE_X; trajectories started at +- OSC_NODE_COLLISION_Q0 run
    into them.
    """

    def psi(t, qs):
        x = qs[:, 0]
        val = (_osc_u(x) * np.exp(-0.5j * t) + _osc_w(x) * np.exp(-2.5j * t)) / math.sqrt(2.0)
        return val[np.newaxis]

    def current(t, qs):
        x = qs[:, 0]
        u = _osc_u(x)
        w = _osc_w(x)
        c2, s2 = math.cos(2.0 * t), math.sin(2.0 * t)
        j0 = 0.5 * (u * u + w * w + 2.0 * c2 * u * w)
        # wronskian u w' - w u' = 2 sqrt(2) x exp(-x^2) / sqrt(pi)
        W = 2.0 * math.sqrt(2.0) * x * np.exp(-x * x) / math.sqrt(math.pi)
        return j0, (-0.5 * s2 * W)[:, np.newaxis]

    def current_point(t, q):
        x = q[0]
        g = math.exp(-0.5 * x * x) * _PI4
        u = g
        w = g * (2.0 * x * x - 1.0) / math.sqrt(2.0)
        j0 = 0.5 * (u * u + w * w + 2.0 * math.cos(2.0 * t) * u * w)
        W = 2.0 * math.sqrt(2.0) * x * math.exp(-x * x) / math.sqrt(math.pi)
        return j0, (-0.5 * math.sin(2.0 * t) * W,)

    def node_positions(t):
        # nodes require a real relative phase: exp(-2it) = -1
        phase = math.cos(2.0 * t)
        if abs(math.sin(2.0 * t)) > 1e-12 or phase > 0.0:
            return np.array([])
        return np.array([-OSC_NODE_X, OSC_NODE_X])

    def potential(qs):
        return 0.5 * qs[:, 0] ** 2

    return Scenario(
        name="oscillator_superposition",
        dim=1,
        k=1,
        kind="schrodinger",
        window=(-20.0, 20.0),
        grid=GridSpec(1, (extent,), (n,)),
        psi=psi,
        current=current,
        current_point=current_point,
        potential=potential,
        node_times=(OSC_NODE_TIME,),
        node_positions=node_positions,
        node_collision_q0=OSC_NODE_COLLISION_Q0,
    )


# ---------------------------------------------------------------------------
# hydrogenic ground state with a cusp (stationary real wavefunction)


def hydrogenic(lam: float = 1.0, extent: float = 14.0, n: int = 16384) -> Scenario:
    """1d exponential ground state sqrt(lam) exp(-lam |x|), stationary.

    Real wavefunction, so J = 0 everywhere it is defined; the cusp at the
    origin is carried as a codimension-1 singular subspace.  The fine default
    grid keeps the midpoint quadrature of the kinked density inside the
    normalization tolerance.
    """
    energy = -0.5 * lam * lam

    def psi(t, qs):
        x = qs[:, 0]
        return (math.sqrt(lam) * np.exp(-lam * np.abs(x)) * np.exp(-1j * energy * t))[np.newaxis]

    def current(t, qs):
        x = qs[:, 0]
        j0 = lam * np.exp(-2.0 * lam * np.abs(x))
        return j0, np.zeros((qs.shape[0], 1))

    def current_point(t, q):
        return lam * math.exp(-2.0 * lam * abs(q[0])), (0.0,)

    def trajectory(q0, t):
        return np.atleast_1d(q0).astype(float)

    space = ConfigSpace(
        dim=1,
        singular_subspaces=(SingularSubspace(np.zeros(1), np.array([[1.0]])),),
        delta=0.5,
    )
    return Scenario(
        name="hydrogenic",
        dim=1,
        k=1,
        kind="schrodinger",
        window=(-100.0, 100.0),
        grid=GridSpec(1, (extent,), (n,)),
        psi=psi,
        current=current,
        current_point=current_point,
        potential=None,  # the point interaction lives on the singular set
        space=space,
        trajectory=trajectory,
        params={"lam": lam},
    )


# ---------------------------------------------------------------------------
# 1d Dirac wave packets as finite sums of positive-energy box modes


def _dirac_modes(mass, c, hbar, k0, sigma_k, x0, extent, positive_k_only):
    L = 2.0 * extent
    dk = 2.0 * math.pi / L
    jmax = int(math.ceil((abs(k0) + 6.0 * sigma_k) / dk))
    ks = dk * np.arange(-jmax, jmax + 1)
    if positive_k_only:
        ks = ks[ks > 0]
    g = np.exp(-((ks - k0) ** 2) / (4.0 * sigma_k**2)) * np.exp(-1j * ks * x0)
    keep = np.abs(g) > 1e-10
    ks, g = ks[keep], g[keep]
    g = g / math.sqrt(float(np.sum(np.abs(g) ** 2)))
    E = np.sqrt((c * hbar * ks) ** 2 + (mass * c * c) ** 2)
    up = np.stack([E + mass * c * c, c * hbar * ks])
    if mass == 0.0:  # (E + 0, c hbar k) -> (1, 1)/sqrt(2) for k > 0
        up = np.stack([np.abs(c * hbar * ks), c * hbar * ks])
    up = up / np.sqrt(np.sum(up * up, axis=0))
    return ks, g / math.sqrt(L), up, E / hbar


def _make_dirac_packet(name, mass, c, hbar, k0, sigma_k, x0, extent, n, positive_k_only):
    ks, g, up, omega = _dirac_modes(mass, c, hbar, k0, sigma_k, x0, extent, positive_k_only)
    ga = g * up[0]
    gb = g * up[1]

    def components(t, x):
        phase = np.exp(1j * (np.multiply.outer(np.asarray(x), ks) - t * omega))
        return phase @ ga, phase @ gb

    def psi(t, qs):
        a, b = components(t, qs[:, 0])
        return np.stack([a, b])

    def current(t, qs):
        a, b = components(t, qs[:, 0])
        j0 = np.abs(a) ** 2 + np.abs(b) ** 2
        J = 2.0 * c * np.real(np.conj(a) * b)
        return j0, J[:, np.newaxis]

    def current_point(t, q):
        phase = np.exp(1j * (q[0] * ks - t * omega))
        a = np.dot(phase, ga)
        b = np.dot(phase, gb)
        j0 = (a.real**2 + a.imag**2) + (b.real**2 + b.imag**2)
        return j0, (2.0 * c * (a.conjugate() * b).real,)

    trajectory = None
    if positive_k_only and mass == 0.0:

        def trajectory(q0, t):
            return np.atleast_1d(q0) + c * t

    return Scenario(
        name=name,
        dim=1,
        k=2,
        kind="dirac1d",
        window=(-20.0, 20.0),
        grid=GridSpec(1, (extent,), (n,)),
        psi=psi,
        current=current,
        current_point=current_point,
        potential=None,
        c=c,
        dirac_mass=mass,
        trajectory=trajectory,
        params={"mass": mass, "k0": k0, "sigma_k": sigma_k, "x0": x0},
    )


def dirac_packet(
    mass: float = 1.0,
    k0: float = 1.0,
    sigma_k: float = 0.5,
    x0: float = -4.0,
    extent: float = 16.0,
    n: int = 256,
    c: float = 1.0,
) -> Scenario:
    """Massive positive-energy 1d Dirac packet: velocities strictly inside the
    light cone, built as an exact finite sum of box modes."""
    return _make_dirac_packet("dirac_packet", mass, c, 1.0, k0, sigma_k, x0, extent, n, False)


def dirac_packet_massless(
    k0: float = 1.5,
    sigma_k: float = 0.4,
    x0: float = -8.0,
    extent: float = 16.0,
    n: int = 256,
    c: float = 1.0,
) -> Scenario:
    """Massless right-moving packet: every trajectory translates at exactly c."""
    return _make_dirac_packet(
        "dirac_packet_massless", 0.0, c, 1.0, k0, sigma_k, x0, extent, n, True
    )


# ---------------------------------------------------------------------------
# two 1d fermions in a trap: coincidence hyperplane scenario


def _phi0(x):
    return _PI4 * np.exp(-0.5 * x * x)


def _phi1(x):
    return _PI4 * math.sqrt(2.0) * x * np.exp(-0.5 * x * x)


def _phi3(x):
    return _PI4 * (2.0 * x**3 - 3.0 * x) / math.sqrt(3.0) * np.exp(-0.5 * x * x)


def _dphi0(x):
    return -x * _phi0(x)


def _dphi1(x):
    return _PI4 * math.sqrt(2.0) * (1.0 - x * x) * np.exp(-0.5 * x * x)


def _dphi3(x):
    return _PI4 * (-2.0 * x**4 + 9.0 * x * x - 3.0) / math.sqrt(3.0) * np.exp(-0.5 * x * x)


def coincidence(extent: float = 7.0, n: int = 64) -> Scenario:
    """Two 1d fermions in a unit trap, superposing two Slater determinants.

    Psi(t) = (S_01 e^{-2it} + S_03 e^{-4it}) / sqrt(2) vanishes on the
    coincidence line {q_1 = q_2} (linearly in the normal distance, so the
    density vanishes quadratically there), which is carried as a
    codimension-1 singular subspace with tube radius delta = 0.5.  The two
    determinants have different transverse profiles, so the current has a
    genuine component toward the hyperplane.
    """

    def _slaters(qs):
        x, y = qs[:, 0], qs[:, 1]
        s01 = (_phi0(x) * _phi1(y) - _phi1(x) * _phi0(y)) / math.sqrt(2.0)
        s03 = (_phi0(x) * _phi3(y) - _phi3(x) * _phi0(y)) / math.sqrt(2.0)
        return s01, s03

    def _slater_grads(qs):
        x, y = qs[:, 0], qs[:, 1]
        d01 = np.stack(
            [
                (_dphi0(x) * _phi1(y) - _dphi1(x) * _phi0(y)),
                (_phi0(x) * _dphi1(y) - _phi1(x) * _dphi0(y)),
            ],
            axis=1,
        ) / math.sqrt(2.0)
        d03 = np.stack(
            [
                (_dphi0(x) * _phi3(y) - _dphi3(x) * _phi0(y)),
                (_phi0(x) * _dphi3(y) - _phi3(x) * _dphi0(y)),
            ],
            axis=1,
        ) / math.sqrt(2.0)
        return d01, d03

    def psi(t, qs):
        s01, s03 = _slaters(qs)
        val = (s01 * np.exp(-2j * t) + s03 * np.exp(-4j * t)) / math.sqrt(2.0)
        return val[np.newaxis]

    def current(t, qs):
        s01, s03 = _slaters(qs)
        d01, d03 = _slater_grads(qs)
        c2, s2 = math.cos(2.0 * t), math.sin(2.0 * t)
        j0 = 0.5 * (s01 * s01 + s03 * s03 + 2.0 * c2 * s01 * s03)
        J = 0.5 * s2 * (s03[:, np.newaxis] * d01 - s01[:, np.newaxis] * d03)
        return j0, J

    def potential(qs):
        return 0.5 * np.sum(qs * qs, axis=1)

    space = ConfigSpace(
        dim=2,
        singular_subspaces=(
            SingularSubspace(np.zeros(2), np.array([[1.0, -1.0]]) / math.sqrt(2.0)),
        ),
        delta=0.5,
    )
    return Scenario(
        name="coincidence",
        dim=2,
        k=1,
        kind="schrodinger",
        window=(-20.0, 20.0),
        grid=GridSpec(2, (extent,), (n,)),
        psi=psi,
        current=current,
        potential=potential,
        space=space,
        masses=(1.0, 1.0),
    )


# ---------------------------------------------------------------------------
# registry

SCENARIOS: dict[str, Callable[..., Scenario]] = {
    "free_gaussian": free_gaussian,
    "free_gaussian_2d": free_gaussian_2d,
    "plane_wave": plane_wave,
    "oscillator_superposition": oscillator_superposition,
    "hydrogenic": hydrogenic,
    "dirac_packet": dirac_packet,
    "dirac_packet_massless": dirac_packet_massless,
    "coincidence": coincidence,
}


def get_scenario(name: str, **params) -> Scenario:
    try:
        factory = SCENARIOS[name]
    except KeyError:
        raise KeyError(f"unknown scenario {name!r}; available: {sorted(SCENARIOS)}") from None
    return factory(**params)


def initial_field(s: Scenario) -> SpinorField:
    """psi(0, .) sampled on the scenario grid."""
    vals = s.psi(0.0, s.grid.points())
    return SpinorField(s.grid, vals.reshape((s.k, *s.grid.shape)), t=0.0)


def hamiltonian_for(s: Scenario):
    """HamiltonianSpec reproducing the scenario's evolution, if there is one."""
    from .propagators import HamiltonianSpec

    if s.kind == "dirac1d":
        return HamiltonianSpec(
            kind="dirac1d", grid=s.grid, dirac_mass=s.dirac_mass, hbar=s.hbar, c=s.c
        )
    V = None
    if s.potential is not None:
        V = s.potential(s.grid.points()).reshape(s.grid.shape)
    return HamiltonianSpec(
        kind="schrodinger", grid=s.grid, potential=V, masses=np.asarray(s.masses), hbar=s.hbar
    )


def pde_residual(s: Scenario, t: float, q: np.ndarray, h: float = 5e-3, dt: float = 5e-3):
    """Finite-difference residual of the scenario's PDE at one point.

    Uses fourth-order central stencils on the closed-form evaluator, so it is
    an independent check that each scenario solves its equation.  Returns the
    k-component complex residual.
    """
    q = np.atleast_1d(np.asarray(q, dtype=float))

    def at(tt, qq):
        return s.psi(tt, qq[np.newaxis])[:, 0]

    # d/dt, fourth order
    dpsi_dt = (
        -at(t + 2 * dt, q) + 8 * at(t + dt, q) - 8 * at(t - dt, q) + at(t - 2 * dt, q)
    ) / (12.0 * dt)
    if s.kind == "dirac1d":
        e = np.zeros(1)
        e[0] = 1.0
        dpsi_dx = (
            -at(t, q + 2 * h * e) + 8 * at(t, q + h * e) - 8 * at(t, q - h * e) + at(t, q - 2 * h * e)
        ) / (12.0 * h)
        sigma1 = np.array([[0.0, 1.0], [1.0, 0.0]])
        sigma3 = np.array([[1.0, 0.0], [0.0, -1.0]])
        Hpsi = (
            -1j * s.c * s.hbar * sigma1 @ dpsi_dx
            + s.dirac_mass * s.c**2 * sigma3 @ at(t, q)
        )
    else:
        Hpsi = np.zeros(s.k, dtype=np.complex128)
        psi0 = at(t, q)
        for i in range(s.dim):
            e = np.zeros(s.dim)
            e[i] = 1.0
            d2 = (
                -at(t, q + 2 * h * e)
                + 16 * at(t, q + h * e)
                - 30 * psi0
                + 16 * at(t, q - h * e)
                - at(t, q - 2 * h * e)
            ) / (12.0 * h * h)
            Hpsi = Hpsi - s.hbar**2 / (2.0 * s.masses[i]) * d2
        if s.potential is not None:
            Hpsi = Hpsi + s.potential(q[np.newaxis])[0] * psi0
    return 1j * s.hbar * dpsi_dt - Hpsi
