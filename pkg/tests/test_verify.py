import math

import numpy as np
import pytest

from bohmflow.current import NodePolicy
from bohmflow.errors import (
    BoxTooLarge,
    DegenerateDensity,
    TooFewSurvivors,
    WindowExceeded,
    WrongCodimension,
)
from bohmflow.geometry import ConfigSpace, SingularSubspace
from bohmflow.grids import GridSpec, SpinorField
from bohmflow.scenarios import OSC_NODE_COLLISION_Q0
from bohmflow.trajectories import IntegratorConfig, Status
from bohmflow.verify import (
    condition_integrals,
    default_delta,
    equivariance_test,
    expected_distance_check,
    hardy_check,
    pushforward,
    sample_initial,
    transport_check,
)
from conftest import LinearFlowProvider, UniformBoxProvider, VelocityScaledProvider

TIGHT = IntegratorConfig(rel_tol=1e-10, abs_tol=1e-12)


# -- sampling -------------------------------------------------------------------


def test_same_seed_identical_points(gauss_provider):
    a = sample_initial(gauss_provider, 200, seed=13)
    b = sample_initial(gauss_provider, 200, seed=13)
    assert np.array_equal(a.points, b.points)
    c = sample_initial(gauss_provider, 200, seed=14)
    assert not np.array_equal(a.points, c.points)


def test_uniform_box_cell_counts_multinomial():
    p = UniformBoxProvider(dim=1, extent=4.0, n=64)
    n = 100_000
    ens = sample_initial(p, n, seed=5, stratified=False)
    counts = np.histogram(ens.points[:, 0], bins=64, range=(-4, 4))[0]
    expected = n / 64
    assert np.all(np.abs(counts - expected) <= 4 * math.sqrt(expected))
    # stratified sampling concentrates far below the multinomial level
    ens_s = sample_initial(p, n, seed=5)
    counts_s = np.histogram(ens_s.points[:, 0], bins=64, range=(-4, 4))[0]
    assert np.all(np.abs(counts_s - expected) <= 8)


def test_degenerate_density_all_in_one_cell():
    class OneCell(UniformBoxProvider):
        def current_many(self, t, qs):
            qs = np.atleast_2d(qs)
            g = self.grid
            centers = g.points()
            target = centers[17]
            j0 = np.where(
                np.all(np.abs(qs - target) <= g.spacing[0] / 2, axis=1), 1.0, 0.0
            )
            return j0, np.zeros((qs.shape[0], 1))

    p = OneCell(dim=1, extent=4.0, n=64)
    ens = sample_initial(p, 500, seed=3)
    target = p.grid.points()[17]
    assert np.all(np.abs(ens.points - target) <= p.grid.spacing[0] / 2 + 1e-12)


def test_zero_density_rejected():
    class Zero(UniformBoxProvider):
        def current_many(self, t, qs):
            qs = np.atleast_2d(qs)
            return np.zeros(qs.shape[0]), np.zeros((qs.shape[0], 1))

    with pytest.raises(DegenerateDensity):
        sample_initial(Zero(), 10, seed=0)


def test_initial_sample_ks_bound(gauss_provider):
    from bohmflow.verify import _axis_cdf

    n = 2000
    ens = sample_initial(gauss_provider, n, seed=21)
    j0, _ = gauss_provider.current_grid(0.0)
    xs, cdf = _axis_cdf(gauss_provider.grid, j0 * gauss_provider.grid.cell_volume, 0)
    xsort = np.sort(ens.points[:, 0])
    F = np.interp(xsort, xs, cdf)
    hi = np.max(np.abs(np.arange(1, n + 1) / n - F))
    lo = np.max(np.abs(np.arange(0, n) / n - F))
    assert max(hi, lo) <= 2.0 / math.sqrt(n)


# -- pushforward ------------------------------------------------------------------


def test_pushforward_identity_for_zero_velocity(hydro_provider):
    ens = sample_initial(hydro_provider, 300, seed=1)
    pushed = pushforward(ens, hydro_provider, hydro_provider.space, 1.0, IntegratorConfig())
    assert np.array_equal(pushed.terminal, ens.points)
    assert pushed.cemetery_fraction == 0.0
    assert np.all(pushed.survived)
    assert pushed.diag_D == pytest.approx(np.zeros(300), abs=1e-30)


def test_pushforward_gaussian_no_cemetery(gauss_provider):
    ens = sample_initial(gauss_provider, 400, seed=2)
    pushed = pushforward(ens, gauss_provider, None, 1.0, IntegratorConfig())
    assert pushed.cemetery_fraction == 0.0
    # pairing: order preserved, trajectories never cross in 1d
    order0 = np.argsort(ens.points[:, 0])
    orderT = np.argsort(pushed.terminal[:, 0])
    assert np.array_equal(order0, orderT)


def test_pushforward_counts_node_starts_as_cemetery(gauss_provider):
    ens = sample_initial(gauss_provider, 10, seed=4)
    ens.points[3] = np.array([11.8])  # far tail: operational node at t=0
    pushed = pushforward(ens, gauss_provider, None, 0.5, IntegratorConfig())
    assert pushed.statuses[3] is Status.NODE_HIT
    assert pushed.tau[3] == 0.0
    assert pushed.cemetery_fraction == pytest.approx(0.1)


def test_node_scenario_cemetery_fraction_ladder(osc_provider):
    """NodeHit fractions are monotone in the threshold and stay small."""
    ens = sample_initial(osc_provider, 400, seed=11)
    ens.points[0] = np.array([OSC_NODE_COLLISION_Q0])  # seed the collider
    fracs = []
    for eps in (1e-6, 1e-9, 1e-12):
        cfg = IntegratorConfig(rel_tol=1e-12, abs_tol=1e-14, node_policy=NodePolicy(eps))
        pushed = pushforward(ens, osc_provider, None, 2.0, cfg)
        hits = sum(1 for s in pushed.statuses if s is Status.NODE_HIT)
        fracs.append(hits / pushed.n)
    assert fracs[0] >= fracs[1] >= fracs[2]
    assert fracs[0] <= 0.01
    assert fracs[1] >= 1.0 / 400  # the seeded collider does hit at 1e-9


# -- equivariance -------------------------------------------------------------------


def test_equivariance_needs_survivors(gauss_provider):
    ens = sample_initial(gauss_provider, 50, seed=1)
    pushed = pushforward(ens, gauss_provider, None, 0.5, IntegratorConfig())
    with pytest.raises(TooFewSurvivors):
        equivariance_test(pushed, gauss_provider, 0.5, bins=8)


def test_stationary_state_distances_are_pure_sampling_noise(hydro_provider):
    n = 2000
    ens = sample_initial(hydro_provider, n, seed=9)
    pushed = pushforward(ens, hydro_provider, hydro_provider.space, 1.0, IntegratorConfig())
    res_T = equivariance_test(pushed, hydro_provider, 1.0, bins=32)
    import dataclasses

    res_0 = equivariance_test(dataclasses.replace(pushed, T=0.0), hydro_provider, 0.0, bins=32)
    assert res_T.l1_distance == pytest.approx(res_0.l1_distance, abs=1e-14)
    assert res_T.ks_distance == pytest.approx(res_0.ks_distance, abs=1e-14)


def test_wrong_dynamics_flagged(gauss_provider):
    n = 2000
    ens = sample_initial(gauss_provider, n, seed=8)
    good = equivariance_test(
        pushforward(ens, gauss_provider, None, 1.0, IntegratorConfig()),
        gauss_provider,
        1.0,
        bins=32,
    )
    wrong = VelocityScaledProvider(gauss_provider, 2.0)
    bad = equivariance_test(
        pushforward(ens, wrong, None, 1.0, IntegratorConfig()),
        gauss_provider,
        1.0,
        bins=32,
    )
    assert bad.l1_distance > 3.0 * good.l1_distance


def test_dominance_per_bin(gauss_provider):
    """Partial equivariance: empirical mass never exceeds mu_T plus noise."""
    n = 4000
    ens = sample_initial(gauss_provider, n, seed=15)
    pushed = pushforward(ens, gauss_provider, None, 1.0, IntegratorConfig())
    res = equivariance_test(pushed, gauss_provider, 1.0, bins=32)
    se = np.sqrt(res.expected_mass * (1 - res.expected_mass) / n)
    assert np.all(res.observed_counts / n <= res.expected_mass + 3 * se + 1e-12)
    # mass accounting is exact
    assert res.n_effective + round(res.cemetery_fraction * n) == n


def test_2d_equivariance(coin_provider):
    ens = sample_initial(coin_provider, 900, seed=6)
    pushed = pushforward(ens, coin_provider, coin_provider.space, 0.5, IntegratorConfig())
    res = equivariance_test(pushed, coin_provider, 0.5, bins=16)
    assert res.cemetery_fraction <= 0.02
    assert res.l1_distance <= 0.25  # 4x4 bins, n=900: noise-level agreement


# -- transport check ------------------------------------------------------------------


def test_transport_zero_velocity_quadrature_only(hydro_provider):
    boxes = [(np.array([-0.4]), np.array([0.4]))]
    d = transport_check(hydro_provider, None, boxes, 1.0, TIGHT, mesh_points=16)
    assert d[0] <= 1e-8


def test_transport_gaussian_small_box(gauss_provider):
    boxes = [(np.array([-0.5]), np.array([0.2])), (np.array([0.3]), np.array([1.0]))]
    d = transport_check(gauss_provider, None, boxes, 1.0, TIGHT, mesh_points=8)
    assert np.max(d) <= 1e-3


def test_transport_refines_with_mesh_1d(osc_provider):
    boxes = [(np.array([-0.3]), np.array([0.5]))]
    d = [
        transport_check(osc_provider, None, boxes, 1.0, TIGHT, mesh_points=m)[0]
        for m in (4, 8, 16)
    ]
    assert d[2] < d[0]
    assert np.max(d) <= 1e-3


def test_transport_refines_with_mesh_2d(gauss2d_provider):
    boxes = [(np.array([-0.4, -0.2]), np.array([0.3, 0.5]))]
    d = [
        transport_check(gauss2d_provider, None, boxes, 1.0, TIGHT, mesh_points=m)[0]
        for m in (4, 8, 16)
    ]
    assert d[2] < d[1] < d[0]
    assert np.max(d) <= 1e-3


def test_transport_linear_flow_closed_form():
    p = LinearFlowProvider(dim=2)
    boxes = [(np.array([-0.5, -0.4]), np.array([0.4, 0.3]))]
    d = transport_check(p, None, boxes, 0.7, TIGHT, mesh_points=12)
    assert d[0] <= 1e-6


def test_transport_box_with_dying_boundary(osc_provider):
    boxes = [(np.array([OSC_NODE_COLLISION_Q0]), np.array([2.5]))]
    cfg = IntegratorConfig(rel_tol=1e-12, abs_tol=1e-14)
    with pytest.raises(BoxTooLarge):
        transport_check(osc_provider, None, boxes, 2.0, cfg, mesh_points=4)


# -- condition integrals -----------------------------------------------------------------


def test_conditions_stationary_state_all_zero(hydro_provider):
    rep = condition_integrals(hydro_provider, hydro_provider.space, R=5.0, T=1.0, n_time=4)
    assert rep.I_node == 0.0
    assert rep.I_escape == 0.0
    assert rep.I_singular == (0.0,)
    assert rep.ED_bound == 0.0


def test_conditions_gaussian_finite_and_stable(gauss_provider):
    from bohmflow.providers import build_provider

    rep1 = condition_integrals(gauss_provider, None, R=5.0, T=1.0, n_time=8)
    fine = build_provider("free_gaussian", n=1024)
    rep2 = condition_integrals(fine, None, R=5.0, T=1.0, n_time=16)
    for attr in ("I_node", "I_escape", "ED_bound"):
        v1, v2 = getattr(rep1, attr), getattr(rep2, attr)
        assert np.isfinite(v1)
        assert abs(v2 - v1) <= 0.05 * abs(v2)


def test_conditions_monotone_in_R_and_T(coin_provider):
    base = condition_integrals(coin_provider, coin_provider.space, R=4.0, T=1.0, n_time=8)
    bigR = condition_integrals(coin_provider, coin_provider.space, R=6.0, T=1.0, n_time=8)
    bigT = condition_integrals(coin_provider, coin_provider.space, R=4.0, T=1.5, n_time=12)
    for attr in ("I_node", "I_escape", "ED_bound"):
        assert getattr(bigR, attr) >= getattr(base, attr)
        assert getattr(bigT, attr) >= getattr(base, attr)
    assert bigR.I_singular[0] >= base.I_singular[0]
    assert bigT.I_singular[0] >= base.I_singular[0]


def test_conditions_window_guard(gauss_provider):
    with pytest.raises(WindowExceeded):
        condition_integrals(gauss_provider, None, R=5.0, T=100.0)


def test_default_delta_rule(gauss_provider):
    sub = SingularSubspace(np.array([8.0]), np.array([[1.0]]))
    space = ConfigSpace(dim=1, singular_subspaces=(sub,), delta=1.0)
    # effective support of the unit gaussian ends near |x| ~ 6.3 at 1e-9
    d = default_delta(gauss_provider, space)
    assert 0.0 < d < 1.0
    assert default_delta(gauss_provider, ConfigSpace(dim=1)) == 1.0


def test_node_cells_excluded_and_reported(osc_provider):
    rep = condition_integrals(osc_provider, None, R=6.0, T=2.0, n_time=12, epsilon_node=1e-3)
    assert rep.excluded_mass > 0.0
    assert np.isfinite(rep.I_node)


# -- hardy inequality ------------------------------------------------------------------


def _hardy_setup(n=48, extent=8.0):
    g = GridSpec(3, (extent,), (n,))
    sub = SingularSubspace(np.zeros(3), np.eye(3))
    return g, sub


def test_hardy_gaussian_against_radial_oracle():
    from scipy.integrate import quad

    g, sub = _hardy_setup()
    pts = g.points()
    phi = SpinorField(g, np.exp(-0.5 * np.sum(pts**2, axis=1)).reshape(g.shape)[np.newaxis])
    lhs, rhs, ratio = hardy_check(phi, sub)
    assert ratio < 1.0
    lhs_exact = quad(lambda r: math.exp(-(r**2)) / 4.0 * 4 * math.pi, 0, 20)[0]
    rhs_exact = quad(lambda r: r**4 * math.exp(-(r**2)) * 4 * math.pi, 0, 20)[0]
    # the 1/(4 r^2) weight converges first order near the origin cell
    assert lhs == pytest.approx(lhs_exact, rel=0.25)
    assert rhs == pytest.approx(rhs_exact, rel=1e-6)
    assert ratio == pytest.approx(lhs_exact / rhs_exact, rel=0.25)


def test_hardy_far_support_scaling():
    g, sub = _hardy_setup(n=64, extent=16.0)
    pts = g.points()
    center = np.array([12.0, 0.0, 0.0])
    phi_vals = np.exp(-2.0 * np.sum((pts - center) ** 2, axis=1)).reshape(g.shape)
    phi = SpinorField(g, phi_vals[np.newaxis])
    lhs, rhs, ratio = hardy_check(phi, sub)
    norm2 = float(np.sum(phi.density()) * g.cell_volume)
    # support at distance ~12: lhs ~ ||phi||^2 / (4 * 144)
    assert lhs == pytest.approx(norm2 / (4 * 144.0), rel=0.05)
    assert ratio < 0.01


def test_hardy_random_bump_sweep():
    g, sub = _hardy_setup(n=40, extent=8.0)
    pts = g.points()
    rng = np.random.default_rng(123)
    for _ in range(20):
        centers = rng.uniform(-3, 3, size=(3, 3))
        widths = rng.uniform(0.6, 1.5, size=3)
        amps = rng.uniform(0.3, 1.0, size=3)
        vals = np.zeros(len(pts))
        for c, w, a in zip(centers, widths, amps):
            vals += a * np.exp(-np.sum((pts - c) ** 2, axis=1) / (2 * w * w))
        phi = SpinorField(g, vals.reshape(g.shape)[np.newaxis])
        lhs, rhs, ratio = hardy_check(phi, sub)
        assert ratio < 1.0


def test_hardy_wrong_codimension():
    g = GridSpec(2, (4.0,), (16,))
    phi = SpinorField(g, np.ones((1, 16, 16), dtype=complex))
    with pytest.raises(WrongCodimension):
        hardy_check(phi, SingularSubspace(np.zeros(2), np.eye(2)))


# -- expected distance -------------------------------------------------------------------


def test_expected_distance_zero_velocity(hydro_provider):
    ens = sample_initial(hydro_provider, 200, seed=2)
    pushed = pushforward(ens, hydro_provider, hydro_provider.space, 1.0, IntegratorConfig())
    rep = condition_integrals(hydro_provider, hydro_provider.space, R=5.0, T=1.0, n_time=4)
    mean, bound, margin = expected_distance_check(pushed, rep)
    assert mean == 0.0 and bound == 0.0
    assert margin >= -3.0


def test_expected_distance_gaussian(gauss_provider):
    ens = sample_initial(gauss_provider, 2000, seed=3)
    pushed = pushforward(ens, gauss_provider, None, 1.0, IntegratorConfig())
    rep = condition_integrals(gauss_provider, None, R=10.0, T=1.0, n_time=32)
    mean, bound, margin = expected_distance_check(pushed, rep)
    assert margin >= -3.0


def test_expected_distance_scaling_control(gauss_provider):
    """Doubled velocities double both the travel and the bound."""
    wrong = VelocityScaledProvider(gauss_provider, 2.0)
    ens = sample_initial(gauss_provider, 1000, seed=4)
    pushed = pushforward(ens, wrong, None, 1.0, IntegratorConfig())
    rep = condition_integrals(wrong, None, R=10.0, T=1.0, n_time=32)
    base = condition_integrals(gauss_provider, None, R=10.0, T=1.0, n_time=32)
    assert rep.ED_bound == pytest.approx(2.0 * base.ED_bound, rel=1e-12)
    mean, bound, margin = expected_distance_check(pushed, rep)
    assert margin >= -3.0


def test_report_determinism(gauss_provider):
    a = condition_integrals(gauss_provider, None, R=5.0, T=1.0, n_time=8)
    b = condition_integrals(gauss_provider, None, R=5.0, T=1.0, n_time=8)
    assert a == b
    e1 = sample_initial(gauss_provider, 100, seed=5)
    e2 = sample_initial(gauss_provider, 100, seed=5)
    p1 = pushforward(e1, gauss_provider, None, 0.5, IntegratorConfig())
    p2 = pushforward(e2, gauss_provider, None, 0.5, IntegratorConfig())
    assert np.array_equal(p1.terminal, p2.terminal)
    assert np.array_equal(p1.diag_D, p2.diag_D)
