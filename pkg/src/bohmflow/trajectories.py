"""Guidance-ODE integration with event detection and path diagnostics.

The integrator is an embedded Dormand-Prince 5(4) pair with cubic Hermite
dense output.  Termination events (node threshold, singular margin, escape
radius) are bracketed at accepted steps and bisected on the dense output.
Along each path three total-variation diagnostics are accumulated on the
integrator's own steps: the variation of log j0 (diverges on node approach),
of |Q| (diverges on escape to infinity), and of log dist(Q, Sigma_l) inside
the delta-tube (diverges on approach to the singular set).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from .current import CurrentProvider, NodePolicy, time_reverse
from .errors import BadStart, ProviderWindow
from .geometry import ConfigSpace

# Dormand-Prince 5(4) tableau
_C = (0.0, 1 / 5, 3 / 10, 4 / 5, 8 / 9, 1.0, 1.0)
_A = (
    (),
    (1 / 5,),
    (3 / 40, 9 / 40),
    (44 / 45, -56 / 15, 32 / 9),
    (19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729),
    (9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656),
    (35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84),
)
_ERR = (71 / 57600, 0.0, -71 / 16695, 71 / 1920, -17253 / 339200, 22 / 525, -1 / 40)


class Status(Enum):
    COMPLETED = "Completed"
    NODE_HIT = "NodeHit"
    SINGULAR_HIT = "SingularHit"
    ESCAPED = "Escaped"
    STEP_LIMIT = "StepLimit"


@dataclass(frozen=True)
class IntegratorConfig:
    """Adaptive-step and termination parameters for trajectory integration."""

    rel_tol: float = 1e-6
    abs_tol: float = 1e-9
    max_step: float = 0.1
    first_step: float | None = None
    escape_radius: float | None = None  # None: 0.95 x smallest grid half-width
    node_policy: NodePolicy = field(default_factory=NodePolicy)
    singular_margin: float = 1e-8
    max_steps: int = 100_000
    event_rel_tol: float = 1e-10
    density_log_step_cap: float | None = 0.25

    def resolve_escape_radius(self, provider: CurrentProvider) -> float:
        if self.escape_radius is not None:
            return self.escape_radius
        return 0.95 * min(provider.grid.extent)


@dataclass(frozen=True)
class DiagnosticRecord:
    """Accumulated total-variation diagnostics along one trajectory."""

    L: float
    D: float
    V_per_subspace: tuple[float, ...] = ()


@dataclass
class Trajectory:
    """One solution record: accepted-step samples and termination data.

    ``times``/``positions``/``densities`` hold (t, Q(t), j0(t, Q(t))) at the
    integrator's accepted steps, starting at the initial time; ``velocities``
    holds the exact right-hand side at those samples and reconstructs the
    dense cubic between them.  ``status`` is Completed exactly when the final
    sample time reaches the horizon; every other status is a cemetery state
    with ``tau_estimate`` the bisected event time.
    """

    q0: np.ndarray
    times: np.ndarray
    positions: np.ndarray
    densities: np.ndarray
    velocities: np.ndarray
    status: Status
    tau_estimate: float | None
    events_triggered: tuple[str, ...] = ()
    diagnostics: DiagnosticRecord | None = None

    @property
    def final_position(self) -> np.ndarray:
        return self.positions[-1]

    @property
    def final_time(self) -> float:
        return float(self.times[-1])

    def sample_at(self, t: float) -> np.ndarray:
        """Dense cubic-Hermite position at any time inside the sample range."""
        ts = self.times
        if not ts[0] <= t <= ts[-1]:
            raise ValueError(f"t={t} outside sampled range [{ts[0]}, {ts[-1]}]")
        i = min(np.searchsorted(ts, t, side="right") - 1, len(ts) - 2)
        h = ts[i + 1] - ts[i]
        th = (t - ts[i]) / h
        return _hermite(
            th, self.positions[i], self.velocities[i], self.positions[i + 1], self.velocities[i + 1], h
        )


def _hermite(th, y0, f0, y1, f1, h):
    t2 = th * th
    t3 = t2 * th
    return (
        (2 * t3 - 3 * t2 + 1) * y0
        + ((t3 - 2 * t2 + th) * h) * f0
        + (-2 * t3 + 3 * t2) * y1
        + ((t3 - t2) * h) * f1
    )


def _hermite_deriv(th, y0, f0, y1, f1, h):
    t2 = th * th
    return (
        ((6 * t2 - 6 * th) / h) * y0
        + (3 * t2 - 4 * th + 1) * f0
        + ((-6 * t2 + 6 * th) / h) * y1
        + (3 * t2 - 2 * th) * f1
    )


class _Dopri:
    """Low-level adaptive stepper over a (d,) state with FSAL and dense output.

    Besides the embedded error control, an accepted step may not change
    log(aux) by more than ``aux_log_cap`` (aux is the density along the path);
    otherwise narrow density dips would be stepped over, hiding node events
    and corrupting the log-density diagnostic.
    """

    def __init__(
        self, rhs, t0, y0, t_end, rtol, atol, max_step, first_step, max_steps,
        aux_log_cap=None,
    ):
        self.rhs = rhs  # (t, y) -> (f, aux); aux is carried to event checks
        self.t = float(t0)
        self.y = np.asarray(y0, dtype=float).copy()
        self.t_end = float(t_end)
        self.rtol, self.atol = rtol, atol
        self.max_step = max_step
        self.max_steps = max_steps
        self.nsteps = 0
        self.f, self.aux = rhs(self.t, self.y)
        self.extra_cap = np.inf
        self.aux_log_cap = aux_log_cap
        self.h = first_step if first_step is not None else self._initial_step()

    def _initial_step(self):
        scale = self.atol + self.rtol * np.abs(self.y)
        d0 = math.sqrt(float(np.mean((self.y / scale) ** 2)))
        d1 = math.sqrt(float(np.mean((self.f / scale) ** 2)))
        h0 = 0.01 * d0 / d1 if d0 > 1e-5 and d1 > 1e-5 else 1e-6
        return min(h0, self.max_step, self.t_end - self.t)

    def step(self):
        """Advance one accepted step; returns (t0, y0, f0, t1, y1, f1, aux1)."""
        K = [self.f] + [None] * 6
        t0, y0 = self.t, self.y
        h = min(self.h, self.max_step, self.extra_cap, self.t_end - t0)
        while True:
            self.nsteps += 1
            if self.nsteps > self.max_steps:
                return None
            bad = False
            aux = None
            for s in range(1, 7):
                ys = y0.copy()
                a = _A[s]
                for j in range(s):
                    if a[j] != 0.0:
                        ys = ys + (h * a[j]) * K[j]
                K[s], aux = self.rhs(t0 + _C[s] * h, ys)
                if not np.all(np.isfinite(K[s])):
                    bad = True
                    break
            if bad:
                enorm = math.inf
            else:
                y1 = ys  # stage 7 state equals the 5th-order solution (FSAL)
                err = np.zeros_like(y0)
                for j in range(7):
                    if _ERR[j] != 0.0:
                        err = err + (h * _ERR[j]) * K[j]
                scale = self.atol + self.rtol * np.maximum(np.abs(y0), np.abs(y1))
                enorm = math.sqrt(float(np.mean((err / scale) ** 2)))
            if not math.isfinite(enorm):
                h *= 0.25
                if h <= 1e-15 * max(1.0, abs(t0)):
                    return None
                continue
            if enorm <= 1.0:
                if self.aux_log_cap is not None and self.aux > 0:
                    dlog = (
                        abs(math.log(aux) - math.log(self.aux))
                        if aux > 0
                        else math.inf
                    )
                    if dlog > self.aux_log_cap:
                        h *= max(0.1, min(0.5, 0.9 * self.aux_log_cap / dlog))
                        if h <= 1e-15 * max(1.0, abs(t0)):
                            return None
                        continue
                factor = 0.9 * (enorm ** -0.2) if enorm > 0 else 5.0
                self.h = h * min(5.0, max(0.2, factor))
                t1 = t0 + h
                if self.t_end - t1 < 1e-14 * max(1.0, abs(self.t_end)):
                    t1 = self.t_end  # land exactly on the horizon
                self.t, self.y, self.f, self.aux = t1, y1, K[6], aux
                return t0, y0, K[0], t1, y1, K[6], aux
            h *= max(0.2, 0.9 * (enorm ** -0.2))
            if h <= 1e-15 * max(1.0, abs(t0)):
                return None


def _bisect_event(g, t0, t1, tol):
    """First sign change of g in (t0, t1], assuming g(t0) > 0 >= g(t1)."""
    lo, hi = t0, t1
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if g(mid) > 0.0:
            lo = mid
        else:
            hi = mid
    return hi


def integrate(
    provider: CurrentProvider,
    space: ConfigSpace | None,
    q0: np.ndarray,
    T: float,
    cfg: IntegratorConfig | None = None,
    t_start: float = 0.0,
) -> Trajectory:
    """Integrate dQ/dt = J/j0 from (t_start, q0) for a horizon of T time units.

    Terminates at the first node-threshold, singular-margin or escape-radius
    crossing, bisected on the dense output; otherwise runs to t_start + T.
    Identical inputs produce bit-identical trajectories.
    """
    cfg = cfg or IntegratorConfig()
    q0 = np.atleast_1d(np.asarray(q0, dtype=float))
    t_end = t_start + T
    if not (provider.in_window(t_start) and provider.in_window(t_end)):
        raise ProviderWindow(
            f"[{t_start}, {t_end}] exceeds provider window {provider.window}"
        )
    thr = cfg.node_policy.threshold(provider.density_scale)
    escape_r = cfg.resolve_escape_radius(provider)
    subs = space.singular_subspaces if space is not None else ()

    j0_init, _ = provider.current_at(t_start, q0)
    if j0_init < thr:
        raise BadStart(f"initial density {j0_init:.3e} below node threshold {thr:.3e}")
    if subs and float(space.min_distance(q0)) <= cfg.singular_margin:
        raise BadStart("initial point within the singular margin")

    def rhs(t, y):
        j0, J = provider.current_at(t, y)
        if j0 <= 0.0 or not math.isfinite(j0):
            return np.full_like(y, np.nan), j0
        return J / j0, j0

    events: list[tuple[str, Status]] = [("node", Status.NODE_HIT)]
    if subs:
        events.append(("singular", Status.SINGULAR_HIT))
    events.append(("escape", Status.ESCAPED))

    def gval(name, t, y, j0=None):
        if name == "node":
            if j0 is None:
                j0, _ = provider.current_at(t, y)
            return j0 - thr
        if name == "singular":
            return float(space.min_distance(y)) - cfg.singular_margin
        return escape_r - math.sqrt(float(np.dot(y, y)))

    # immediate escapes are legitimate terminations, not bad starts
    if gval("escape", t_start, q0) <= 0.0:
        traj = Trajectory(
            q0=q0,
            times=np.array([t_start]),
            positions=q0[np.newaxis].copy(),
            densities=np.array([j0_init]),
            velocities=np.zeros((1, q0.size)),
            status=Status.ESCAPED,
            tau_estimate=t_start,
            events_triggered=("escape",),
        )
        traj.diagnostics = _collect_diagnostics(traj, provider, space)
        return traj

    stepper = _Dopri(
        rhs, t_start, q0, t_end, cfg.rel_tol, cfg.abs_tol, cfg.max_step,
        cfg.first_step, cfg.max_steps, aux_log_cap=cfg.density_log_step_cap,
    )
    if subs:
        dist0 = float(space.min_distance(q0))
        speed0 = math.sqrt(float(np.dot(stepper.f, stepper.f)))
        if dist0 < space.delta and speed0 > 0.0:
            stepper.extra_cap = 0.2 * dist0 / speed0
    ts, ys, dens, vels = [t_start], [q0.copy()], [j0_init], [stepper.f.copy()]
    g_prev = {name: gval(name, t_start, q0, j0_init) for name, _ in events}
    status = Status.COMPLETED
    tau = None
    triggered: list[str] = []
    ev_tol = cfg.event_rel_tol * max(1.0, abs(t_end))

    while stepper.t < t_end:
        out = stepper.step()
        if out is None:
            status = Status.STEP_LIMIT
            tau = float(ts[-1])
            break
        t0, y0, f0, t1, y1, f1, j1 = out
        g_now = {name: gval(name, t1, y1, j1) for name, _ in events}
        crossed = [name for name, _ in events if g_prev[name] > 0.0 >= g_now[name]]
        if crossed:
            h = t1 - t0

            def dense(t):
                return _hermite((t - t0) / h, y0, f0, y1, f1, h)

            hit_times = {
                name: _bisect_event(lambda t, n=name: gval(n, t, dense(t)), t0, t1, ev_tol)
                for name in crossed
            }
            first = min(crossed, key=lambda n: hit_times[n])
            tau = hit_times[first]
            status = dict(events)[first]
            triggered = sorted(crossed)
            th = (tau - t0) / h
            y_ev = dense(tau)
            j_ev, _ = provider.current_at(tau, y_ev)
            v_ev = _hermite_deriv(th, y0, f0, y1, f1, h)
            ts.append(tau)
            ys.append(y_ev)
            dens.append(j_ev)
            vels.append(v_ev)
            break
        ts.append(t1)
        ys.append(y1.copy())
        dens.append(j1)
        vels.append(f1.copy())
        g_prev = g_now
        # near-node slowdown: resolve the log-density blowup into the record
        cap = np.inf
        if j1 < 1e3 * thr:
            dlog = abs(math.log(max(j1, 1e-300)) - math.log(max(dens[-2], 1e-300)))
            cap = 0.1 * (t1 - t0) / max(dlog, 1e-12)
        if subs:
            # inside the tube, keep the per-step relative distance change
            # small so margin crossings cannot be stepped over
            dist1 = float(space.min_distance(y1))
            if dist1 < space.delta:
                speed = math.sqrt(float(np.dot(f1, f1)))
                if speed > 0.0:
                    cap = min(cap, 0.2 * max(dist1, 0.5 * cfg.singular_margin) / speed)
        stepper.extra_cap = cap

    traj = Trajectory(
        q0=q0,
        times=np.asarray(ts),
        positions=np.asarray(ys),
        densities=np.asarray(dens),
        velocities=np.asarray(vels),
        status=status,
        tau_estimate=tau,
        events_triggered=tuple(triggered),
    )
    traj.diagnostics = _collect_diagnostics(traj, provider, space)
    return traj


# ---------------------------------------------------------------------------
# path diagnostics (shared-step quadrature)


def _midpoints(traj: Trajectory):
    """Cubic-Hermite midpoints of each accepted step: (t_mid, Q_mid) arrays."""
    t0 = traj.times[:-1]
    t1 = traj.times[1:]
    h = (t1 - t0)[:, np.newaxis]
    y0, y1 = traj.positions[:-1], traj.positions[1:]
    f0, f1 = traj.velocities[:-1], traj.velocities[1:]
    qm = _hermite(0.5, y0, f0, y1, f1, h)  # vectorized over steps
    return 0.5 * (t0 + t1), qm


def diag_log_density_variation(traj: Trajectory, provider: CurrentProvider) -> float:
    """Total variation of log j0 along the path up to termination.

    Uses the half-step telescoping sum |dlog j0| over each accepted step split
    at its dense midpoint, which is exact on monotone segments and diverges
    together with the path's node approach.
    """
    if len(traj.times) < 2:
        return 0.0
    tm, qm = _midpoints(traj)
    jm = np.array([provider.current_at(t, q)[0] for t, q in zip(tm, qm)])
    logs0 = np.log(np.maximum(traj.densities[:-1], 1e-300))
    logs1 = np.log(np.maximum(traj.densities[1:], 1e-300))
    logsm = np.log(np.maximum(jm, 1e-300))
    return float(np.sum(np.abs(logsm - logs0) + np.abs(logs1 - logsm)))


def diag_path_variation(traj: Trajectory) -> float:
    """Total variation of |Q(t)| along the path (distance-to-origin travel)."""
    if len(traj.times) < 2:
        return 0.0
    _, qm = _midpoints(traj)
    r = np.linalg.norm(traj.positions, axis=1)
    rm = np.linalg.norm(qm, axis=1)
    return float(np.sum(np.abs(rm - r[:-1]) + np.abs(r[1:] - rm)))


def diag_singular_variation(traj: Trajectory, space: ConfigSpace, ell: int) -> float:
    """Total variation of log dist(Q, Sigma_ell) restricted to the delta-tube.

    Distances are clipped at delta before taking logs, so segments outside the
    tube contribute nothing and tube crossings contribute exactly the in-tube
    variation.
    """
    if len(traj.times) < 2:
        return 0.0
    sub = space.singular_subspaces[ell]
    delta = space.delta
    _, qm = _midpoints(traj)
    d0 = np.minimum(sub.distance(traj.positions), delta)
    dm = np.minimum(sub.distance(qm), delta)
    l0 = np.log(np.maximum(d0[:-1], 1e-300))
    l1 = np.log(np.maximum(d0[1:], 1e-300))
    lm = np.log(np.maximum(dm, 1e-300))
    return float(np.sum(np.abs(lm - l0) + np.abs(l1 - lm)))


def _collect_diagnostics(traj, provider, space) -> DiagnosticRecord:
    V = ()
    if space is not None:
        V = tuple(
            diag_singular_variation(traj, space, ell) for ell in range(space.nsubspaces)
        )
    return DiagnosticRecord(
        L=diag_log_density_variation(traj, provider),
        D=diag_path_variation(traj),
        V_per_subspace=V,
    )


# ---------------------------------------------------------------------------
# reparameterized integral curves (s-parameter form)


@dataclass
class SCurve:
    """Integral curve gamma(s) = (gamma0, Gamma) of dz/ds = j(z), with the
    monotone time map t(s) = gamma0(s)."""

    q0: np.ndarray
    s: np.ndarray
    gamma: np.ndarray  # (n, 1 + d): time component first
    derivs: np.ndarray
    status: Status

    @property
    def t_of_s_samples(self) -> np.ndarray:
        return self.gamma[:, 0]

    def gamma_at(self, s: float) -> np.ndarray:
        if not self.s[0] <= s <= self.s[-1]:
            raise ValueError(f"s={s} outside [{self.s[0]}, {self.s[-1]}]")
        i = min(np.searchsorted(self.s, s, side="right") - 1, len(self.s) - 2)
        h = self.s[i + 1] - self.s[i]
        return _hermite((s - self.s[i]) / h, self.gamma[i], self.derivs[i], self.gamma[i + 1], self.derivs[i + 1], h)

    def t_of_s(self, s: float) -> float:
        return float(self.gamma_at(s)[0])

    def s_of_t(self, t: float) -> float:
        """Invert the strictly increasing map t(s) by bisection."""
        t0s = self.gamma[:, 0]
        if not t0s[0] <= t <= t0s[-1]:
            raise ValueError(f"t={t} outside reachable [{t0s[0]}, {t0s[-1]}]")
        lo, hi = float(self.s[0]), float(self.s[-1])
        for _ in range(200):
            mid = 0.5 * (lo + hi)
            if self.t_of_s(mid) < t:
                lo = mid
            else:
                hi = mid
            if hi - lo <= 1e-14 * max(1.0, abs(hi)):
                break
        return 0.5 * (lo + hi)

    def position_at_time(self, t: float) -> np.ndarray:
        return self.gamma_at(self.s_of_t(t))[1:]


def integrate_s_parameterized(
    provider: CurrentProvider,
    q0: np.ndarray,
    s_max: float,
    cfg: IntegratorConfig | None = None,
    space: ConfigSpace | None = None,
) -> SCurve:
    """Integrate the autonomous (d+1)-dimensional system dgamma/ds = j(gamma).

    The time component gamma0 is strictly increasing wherever j0 > 0, so the
    curve is the s-reparameterization of the guidance trajectory; near nodes
    it slows in t while staying regular in s.
    """
    cfg = cfg or IntegratorConfig()
    q0 = np.atleast_1d(np.asarray(q0, dtype=float))
    thr = cfg.node_policy.threshold(provider.density_scale)
    escape_r = cfg.resolve_escape_radius(provider)
    j0_init, _ = provider.current_at(0.0, q0)
    if j0_init < thr:
        raise BadStart(f"initial density {j0_init:.3e} below node threshold {thr:.3e}")
    t_hi = provider.window[1]

    def rhs(s, z):
        j0, J = provider.current_at(z[0], z[1:])
        if j0 <= 0.0 or not math.isfinite(j0):
            return np.full_like(z, np.nan), j0
        out = np.empty_like(z)
        out[0] = j0
        out[1:] = J
        return out, j0

    def g_node(s, z, j0=None):
        if j0 is None:
            j0, _ = provider.current_at(z[0], z[1:])
        return j0 - thr

    def g_window(s, z, j0=None):
        return t_hi - z[0]

    def g_escape(s, z, j0=None):
        return escape_r - math.sqrt(float(np.dot(z[1:], z[1:])))

    events = [("node", Status.NODE_HIT, g_node), ("window", Status.COMPLETED, g_window), ("escape", Status.ESCAPED, g_escape)]
    if space is not None and space.nsubspaces:
        events.append(
            ("singular", Status.SINGULAR_HIT, lambda s, z, j0=None: float(space.min_distance(z[1:])) - cfg.singular_margin)
        )

    z0 = np.concatenate([[0.0], q0])
    stepper = _Dopri(
        rhs, 0.0, z0, s_max, cfg.rel_tol, cfg.abs_tol, cfg.max_step,
        cfg.first_step, cfg.max_steps, aux_log_cap=cfg.density_log_step_cap,
    )
    ss, zs, fs = [0.0], [z0], [stepper.f.copy()]
    g_prev = {name: g(0.0, z0, j0_init) for name, _, g in events}
    status = Status.COMPLETED
    ev_tol = cfg.event_rel_tol * max(1.0, abs(s_max))

    while stepper.t < s_max:
        out = stepper.step()
        if out is None:
            status = Status.STEP_LIMIT
            break
        s0, z0_, f0, s1, z1, f1, j1 = out
        g_now = {name: g(s1, z1, j1) for name, _, g in events}
        crossed = [(name, st, g) for name, st, g in events if g_prev[name] > 0.0 >= g_now[name]]
        if crossed:
            h = s1 - s0

            def dense(s):
                return _hermite((s - s0) / h, z0_, f0, z1, f1, h)

            hits = [
                (name, st, _bisect_event(lambda s, gg=g: gg(s, dense(s)), s0, s1, ev_tol))
                for name, st, g in crossed
            ]
            name, status, s_ev = min(hits, key=lambda item: item[2])
            th = (s_ev - s0) / h
            ss.append(s_ev)
            zs.append(dense(s_ev))
            fs.append(_hermite_deriv(th, z0_, f0, z1, f1, h))
            break
        ss.append(s1)
        zs.append(z1.copy())
        fs.append(f1.copy())
        g_prev = g_now
        if space is not None and space.nsubspaces:
            dist1 = float(space.min_distance(z1[1:]))
            if dist1 < space.delta:
                speed = math.sqrt(float(np.dot(f1[1:], f1[1:])))
                if speed > 0.0:
                    stepper.extra_cap = 0.2 * max(dist1, 0.5 * cfg.singular_margin) / speed
                    continue
        stepper.extra_cap = np.inf

    return SCurve(
        q0=q0, s=np.asarray(ss), gamma=np.asarray(zs), derivs=np.asarray(fs), status=status
    )


def reverse_roundtrip(
    provider: CurrentProvider,
    q0: np.ndarray,
    T: float,
    cfg: IntegratorConfig | None = None,
    space: ConfigSpace | None = None,
) -> float:
    """Forward for T under j, then T under the time-reversed current; returns
    the distance between the return point and the start."""
    fwd = integrate(provider, space, q0, T, cfg)
    if fwd.status is not Status.COMPLETED:
        raise BadStart(f"forward trajectory terminated early: {fwd.status.value}")
    back = integrate(time_reverse(provider), space, fwd.final_position, T, cfg, t_start=-T)
    return float(np.linalg.norm(back.final_position - np.atleast_1d(q0)))


def write_trajectories_csv(trajectories: list[Trajectory], path) -> None:
    """Dump trajectories as CSV: traj_id,t,q_1..q_d,j0,status (17 digits)."""
    dim = trajectories[0].positions.shape[1] if trajectories else 0
    cols = ",".join(f"q_{i + 1}" for i in range(dim))
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(f"traj_id,t,{cols},j0,status\n")
        for tid, traj in enumerate(trajectories):
            for t, q, j0 in zip(traj.times, traj.positions, traj.densities):
                qtxt = ",".join(f"{x:.17g}" for x in q)
                fh.write(f"{tid},{t:.17g},{qtxt},{j0:.17g},{traj.status.value}\n")
