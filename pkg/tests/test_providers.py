import math

import numpy as np
import pytest

from bohmflow.current import divergence_residual, validate_current
from bohmflow.errors import AxiomViolation, OutOfDomain, ProviderWindow, UnsupportedField
from bohmflow.grids import GridSpec, SpinorField
from bohmflow.propagators import HamiltonianSpec
from bohmflow.providers import GridProvider, ScenarioProvider, build_provider, require_window
from bohmflow.scenarios import SCENARIOS, get_scenario


@pytest.mark.parametrize("name", sorted(SCENARIOS))
def test_all_scenario_providers_pass_axioms(name):
    build_provider(name)  # validates at construction


def test_corrupted_current_rejected_at_construction():
    class Broken:
        pass

    s = get_scenario("free_gaussian")

    def bad_current(t, qs):
        qs = np.atleast_2d(qs)
        return np.zeros(qs.shape[0]), np.ones((qs.shape[0], 1))

    import dataclasses

    corrupted = dataclasses.replace(s, current=bad_current, current_point=None)
    with pytest.raises(AxiomViolation) as err:
        build_provider(corrupted)
    assert err.value.axiom in ("10c", "10d")


def test_scenario_provider_point_and_batch_agree(gauss_provider):
    q = np.array([0.8])
    j0p, Jp = gauss_provider.current_at(0.4, q)
    j0b, Jb = gauss_provider.current_many(0.4, q[np.newaxis])
    assert j0p == pytest.approx(j0b[0], rel=1e-15)
    assert Jp == pytest.approx(Jb[0], rel=1e-15)


def test_grid_provider_matches_analytic_current(pde_gauss_provider, gauss_scenario):
    rng = np.random.default_rng(0)
    qs = rng.uniform(-2, 2, size=(40, 1))
    for t in (0.1234, 0.25, 0.4997):
        j0g, Jg = pde_gauss_provider.current_many(t, qs)
        j0a, Ja = gauss_scenario.current(t, qs)
        assert np.max(np.abs(j0g - j0a)) < 1e-10
        assert np.max(np.abs(Jg - Ja)) < 1e-10


def test_grid_provider_normalization_drift(pde_gauss_provider):
    # stored run over [0, 0.5]: unitary steps keep the mass pinned
    psi0 = pde_gauss_provider.field_at(0.0)
    psiT = pde_gauss_provider.field_at(0.5)
    assert abs(psiT.norm() - psi0.norm()) <= 1e-8


def test_grid_provider_longer_run_norm_drift():
    p = build_provider("oscillator_superposition", backend="pde", dt=1e-3, T=1.0)
    assert abs(p.field_at(1.0).norm() - p.field_at(0.0).norm()) <= 1e-8


def test_grid_provider_window_and_co_advance():
    p = build_provider("free_gaussian", backend="pde", dt=1e-3, T=0.2)
    assert p.window == (0.0, pytest.approx(0.2))
    j0a, _ = p.current_at(0.1004999, np.array([0.3]))  # off-slice co-advance
    j0b, _ = p.current_at(0.1, np.array([0.3]))
    assert j0a == pytest.approx(j0b, rel=1e-3)
    with pytest.raises(OutOfDomain):
        p.current_at(0.5, np.array([0.0]))


def test_grid_provider_divergence_residual_bounded():
    p = build_provider("oscillator_superposition", backend="pde", dt=1e-3, T=0.5)
    pts = np.linspace(-1.5, 1.5, 9)[:, np.newaxis]
    res = divergence_residual(p, 0.25, pts, h=p.grid.spacing[0], dt=1e-3)
    # truncation-scale bound; the refinement ladder lives in the acceptance suite
    assert np.max(np.abs(res)) < 5e-3


def test_dirac_grid_provider_current():
    s = get_scenario("dirac_packet")
    p = build_provider(s, backend="pde", dt=1e-3, T=0.3)
    qs = np.linspace(-6, 2, 17)[:, np.newaxis]
    j0g, Jg = p.current_many(0.25, qs)
    j0a, Ja = s.current(0.25, qs)
    assert np.max(np.abs(j0g - j0a)) < 1e-8
    assert np.max(np.abs(Jg - Ja)) < 1e-8


def test_build_provider_raw_hamiltonian_needs_psi0():
    g = GridSpec(1, (8.0,), (64,))
    ham = HamiltonianSpec("schrodinger", g)
    with pytest.raises(ValueError):
        build_provider(ham, T=0.1)
    x = g.axis(0)
    vals = np.exp(-0.5 * x * x).astype(complex)[np.newaxis]
    psi = SpinorField(g, vals).normalized()
    p = build_provider(ham, psi0=psi, dt=1e-3, n_steps=50)
    assert isinstance(p, GridProvider)
    assert p.window == (0.0, pytest.approx(0.05))


def test_grid_provider_rejects_varying_vector_potential():
    g = GridSpec(2, (6.0,), (16,))
    X, Y = g.meshgrid()
    A = np.stack([-0.5 * Y, np.zeros_like(X)])
    ham = HamiltonianSpec("schrodinger", g, vector_potential=A, couplings=np.ones(2))
    psi = SpinorField(g, np.exp(-0.5 * (X**2 + Y**2)).astype(complex)[np.newaxis]).normalized()
    with pytest.raises(UnsupportedField):
        GridProvider(ham, psi, 1e-3, 10)


def test_require_window(gauss_provider):
    require_window(gauss_provider, 1.0)
    with pytest.raises(ProviderWindow):
        require_window(gauss_provider, 100.0)


def test_density_scale_is_initial_sup(gauss_provider):
    assert gauss_provider.density_scale == pytest.approx(
        (2 * math.pi) ** -0.5, rel=1e-3
    )
