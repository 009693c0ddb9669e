"""Command-line orchestration: propagate | trajectories | verify | conditions.

Configuration is line-oriented ``key = value`` under ``[section]`` headers
(INI); command-line flags override file values.  Every run writes a manifest
JSON holding the fully materialized config, the seed and timing, and each
artifact is reproducible bit-identically from the manifest's config alone.
All numeric output uses 17 significant digits (round-trip exact for doubles).
"""

from __future__ import annotations

import argparse
import configparser
import dataclasses
import json
import sys
import time
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .current import NodePolicy
from .errors import BohmflowError, ConfigError
from .grids import read_field, write_field
from .providers import build_provider
from .scenarios import SCENARIOS, get_scenario, hamiltonian_for, initial_field
from .trajectories import IntegratorConfig, Status, integrate, write_trajectories_csv
from .verify import (
    condition_integrals,
    equivariance_test,
    expected_distance_check,
    pushforward,
    sample_initial,
    transport_check,
)

_VERSION = "0.1.0"


def fmt(x: float) -> str:
    return f"{x:.17g}"


@dataclass
class RunConfig:
    """Fully materialized run description; serializes to INI and JSON."""

    command: str = "trajectories"
    scenario: str | None = None
    psi0: str | None = None  # binary field file for PDE runs
    backend: str = "analytic"
    T: float = 1.0
    dt: float = 1e-3
    n: int = 100
    seed: int = 0
    bins: int = 64
    out: str = "out"
    tol_rel: float = 1e-6
    tol_abs: float = 1e-9
    epsilon_node: float = 1e-9
    escape_radius: float | None = None
    max_step: float = 0.1
    R: float | None = None
    n_time: int = 16
    delta: float | None = None
    l1_threshold: float = 0.05
    mesh_points: int = 8
    slice_stride: int = 0

    _SECTIONS = {
        "run": ("command", "scenario", "psi0", "backend", "T", "dt", "n", "seed", "bins", "out"),
        "integrator": ("tol_rel", "tol_abs", "epsilon_node", "escape_radius", "max_step"),
        "verify": ("l1_threshold", "mesh_points"),
        "conditions": ("R", "n_time", "delta"),
        "propagate": ("slice_stride",),
    }

    def validate(self, origin: str = "<flags>") -> "RunConfig":
        if self.command not in ("propagate", "trajectories", "verify", "conditions"):
            raise ConfigError(f"{origin}: unknown command {self.command!r}")
        if self.scenario is not None and self.psi0 is not None:
            raise ConfigError(
                f"{origin}: 'scenario' ({self.scenario}) and 'psi0' ({self.psi0}) "
                "are mutually exclusive; give one source only"
            )
        if self.scenario is None and self.psi0 is None:
            raise ConfigError(f"{origin}: one of 'scenario' or 'psi0' is required")
        if self.scenario is not None and self.scenario not in SCENARIOS:
            raise ConfigError(
                f"{origin}: unknown scenario {self.scenario!r}; available: {sorted(SCENARIOS)}"
            )
        if self.backend not in ("analytic", "pde"):
            raise ConfigError(f"{origin}: backend must be 'analytic' or 'pde'")
        if self.psi0 is not None and self.command != "propagate":
            # raw-field runs are PDE-backed by construction
            if self.backend != "pde":
                raise ConfigError(f"{origin}: psi0 runs require backend = pde")
        if self.T <= 0 or self.dt <= 0 or self.n < 1:
            raise ConfigError(f"{origin}: T, dt must be positive and n >= 1")
        return self

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)

    def emit_ini(self) -> str:
        lines = []
        for section, keys in self._SECTIONS.items():
            lines.append(f"[{section}]")
            for key in keys:
                val = getattr(self, key)
                if val is None:
                    lines.append(f"{key} =")
                elif isinstance(val, float):
                    lines.append(f"{key} = {fmt(val)}")
                else:
                    lines.append(f"{key} = {val}")
            lines.append("")
        return "\n".join(lines)


_FLOAT_KEYS = {"T", "dt", "tol_rel", "tol_abs", "epsilon_node", "escape_radius",
               "max_step", "R", "delta", "l1_threshold"}
_INT_KEYS = {"n", "seed", "bins", "n_time", "mesh_points", "slice_stride"}
_OPTIONAL_KEYS = {"escape_radius", "R", "delta", "scenario", "psi0"}


def parse_config(path: str | None = None, overrides: dict | None = None) -> RunConfig:
    """Build a validated RunConfig from an INI file and/or override values.

    Values in ``overrides`` (typically CLI flags) win over file values;
    unknown keys and malformed numbers are reported with their section/flag.
    """
    values: dict = {}
    origin = path or "<flags>"
    if path is not None:
        cp = configparser.ConfigParser()
        cp.optionxform = str  # keys are case-sensitive (T vs t)
        read = cp.read(path)
        if not read:
            raise ConfigError(f"{path}: cannot read config file")
        known = {k for keys in RunConfig._SECTIONS.values() for k in keys}
        for section in cp.sections():
            if section not in RunConfig._SECTIONS:
                raise ConfigError(f"{path}: unknown section [{section}]")
            for key, raw in cp.items(section):
                if key not in known:
                    raise ConfigError(f"{path}: unknown key '{key}' in [{section}]")
                values[key] = raw
    if overrides:
        values.update({k: v for k, v in overrides.items() if v is not None})

    cfg_kwargs = {}
    for key, raw in values.items():
        if raw is None or (isinstance(raw, str) and raw.strip() == ""):
            if key in _OPTIONAL_KEYS:
                cfg_kwargs[key] = None
                continue
            raise ConfigError(f"{origin}: key '{key}' has no value")
        try:
            if key in _FLOAT_KEYS:
                cfg_kwargs[key] = float(raw)
            elif key in _INT_KEYS:
                cfg_kwargs[key] = int(raw)
            else:
                cfg_kwargs[key] = str(raw)
        except ValueError:
            raise ConfigError(f"{origin}: key '{key}' has malformed value {raw!r}") from None
    return RunConfig(**cfg_kwargs).validate(origin)


def _integrator_config(cfg: RunConfig) -> IntegratorConfig:
    return IntegratorConfig(
        rel_tol=cfg.tol_rel,
        abs_tol=cfg.tol_abs,
        max_step=cfg.max_step,
        escape_radius=cfg.escape_radius,
        node_policy=NodePolicy(cfg.epsilon_node),
    )


def _build(cfg: RunConfig):
    """Provider plus the (possibly None) configuration space for the run."""
    if cfg.psi0 is not None:
        raise ConfigError(
            "raw psi0 runs need a Hamiltonian specification; use a scenario "
            "with backend = pde, or load the field through the propagate command"
        )
    scenario = get_scenario(cfg.scenario)
    space = scenario.space
    if space is not None and cfg.delta is not None:
        space = dataclasses.replace(space, delta=cfg.delta)
    provider = build_provider(scenario, backend=cfg.backend, dt=cfg.dt, T=cfg.T)
    return provider, space, scenario


def _write_json(path: Path, payload: dict) -> None:
    path.write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n", encoding="utf-8")


def _text_table(rows: list[tuple[str, str]]) -> str:
    width = max(len(k) for k, _ in rows)
    return "\n".join(f"{k.ljust(width)}  {v}" for k, v in rows) + "\n"


def run(cfg: RunConfig) -> int:
    """Execute one subcommand; returns the process exit status.

    Writes a manifest JSON plus the subcommand artifacts into ``cfg.out`` and
    returns 0 exactly when every enabled check passed (the failing check is
    named on stderr otherwise).
    """
    t_wall = time.time()
    outdir = Path(cfg.out)
    outdir.mkdir(parents=True, exist_ok=True)
    checks: list[tuple[str, bool, str]] = []
    artifacts: list[str] = []

    if cfg.command == "propagate":
        if cfg.psi0 is not None:
            psi = read_field(cfg.psi0)
            scenario = None
            if cfg.scenario is not None:
                raise ConfigError("propagate takes either scenario or psi0")
            raise ConfigError(
                "propagate from a raw field needs a scenario Hamiltonian; "
                "supply scenario and use psi0 only as initial data"
            )
        scenario = get_scenario(cfg.scenario)
        ham = hamiltonian_for(scenario)
        psi = initial_field(scenario)
        from .propagators import make_stepper

        stepper = make_stepper(ham, cfg.dt, k=psi.k)
        n_steps = max(1, int(round(cfg.T / cfg.dt)))
        vals = psi.values
        norm0 = psi.norm()
        for step in range(1, n_steps + 1):
            vals = stepper.step(vals)
            if cfg.slice_stride and step % cfg.slice_stride == 0:
                from .grids import SpinorField

                slice_path = outdir / f"field_{step:06d}.bfld"
                write_field(slice_path, SpinorField(psi.grid, vals, t=step * cfg.dt))
                artifacts.append(slice_path.name)
        from .grids import SpinorField

        final = SpinorField(psi.grid, vals, t=n_steps * cfg.dt)
        write_field(outdir / "field_final.bfld", final)
        artifacts.append("field_final.bfld")
        drift = abs(final.norm() - norm0)
        checks.append(("norm_drift<=1e-8", drift <= 1e-8, fmt(drift)))

    elif cfg.command == "trajectories":
        provider, space, scenario = _build(cfg)
        icfg = _integrator_config(cfg)
        ens = sample_initial(provider, cfg.n, cfg.seed)
        pushed = pushforward(ens, provider, space, cfg.T, icfg)
        trajs = []
        for i in range(cfg.n):
            j0, _ = provider.current_at(0.0, ens.points[i])
            if j0 < icfg.node_policy.threshold(provider.density_scale):
                continue
            trajs.append(integrate(provider, space, ens.points[i], cfg.T, icfg))
        write_trajectories_csv(trajs, outdir / "trajectories.csv")
        artifacts.append("trajectories.csv")
        sidecar = {
            "config": cfg.to_dict(),
            "seed": cfg.seed,
            "statuses": {s.value: int(sum(1 for t in trajs if t.status is s)) for s in Status},
            "diagnostics": {
                "L": [t.diagnostics.L for t in trajs],
                "D": [t.diagnostics.D for t in trajs],
                "V": [list(t.diagnostics.V_per_subspace) for t in trajs],
            },
        }
        _write_json(outdir / "run.json", sidecar)
        artifacts.append("run.json")
        n_limit = sidecar["statuses"][Status.STEP_LIMIT.value]
        checks.append(("no_step_limit", n_limit == 0, str(n_limit)))

    elif cfg.command == "verify":
        provider, space, scenario = _build(cfg)
        icfg = _integrator_config(cfg)
        ens = sample_initial(provider, cfg.n, cfg.seed)
        pushed = pushforward(ens, provider, space, cfg.T, icfg)
        res = equivariance_test(pushed, provider, cfg.T, bins=cfg.bins)
        payload = {
            "l1_distance": res.l1_distance,
            "ks_distance": res.ks_distance,
            "n_effective": res.n_effective,
            "n_total": res.n_total,
            "cemetery_fraction": res.cemetery_fraction,
        }
        _write_json(outdir / "comparison.json", payload)
        artifacts.append("comparison.json")
        with open(outdir / "histogram.csv", "w", encoding="utf-8") as fh:
            fh.write("bin,expected_mass,observed_count\n")
            for i, (em, oc) in enumerate(zip(res.expected_mass, res.observed_counts)):
                fh.write(f"{i},{fmt(em)},{int(oc)}\n")
        artifacts.append("histogram.csv")
        # small transport table around the density center
        g = provider.grid
        w = [0.1 * e for e in g.extent]
        lo = np.array([-x for x in w])
        hi = np.array(w)
        boxes = [(lo, hi), (lo + np.asarray(w), hi + np.asarray(w))]
        disc = transport_check(provider, space, boxes, min(cfg.T, 1.0), icfg, cfg.mesh_points)
        with open(outdir / "transport.csv", "w", encoding="utf-8") as fh:
            fh.write("box,discrepancy\n")
            for i, dd in enumerate(disc):
                fh.write(f"{i},{fmt(dd)}\n")
        artifacts.append("transport.csv")
        (outdir / "comparison.txt").write_text(
            _text_table(
                [
                    ("l1_distance", fmt(res.l1_distance)),
                    ("ks_distance", fmt(res.ks_distance)),
                    ("n_effective", str(res.n_effective)),
                    ("cemetery_fraction", fmt(res.cemetery_fraction)),
                ]
            ),
            encoding="utf-8",
        )
        artifacts.append("comparison.txt")
        checks.append(
            ("l1<=threshold", res.l1_distance <= cfg.l1_threshold, fmt(res.l1_distance))
        )

    elif cfg.command == "conditions":
        provider, space, scenario = _build(cfg)
        R = cfg.R if cfg.R is not None else 0.5 * min(provider.grid.extent)
        rep = condition_integrals(
            provider, space, R=R, T=cfg.T, n_time=cfg.n_time, epsilon_node=cfg.epsilon_node
        )
        _write_json(outdir / "conditions.json", rep.as_dict())
        artifacts.append("conditions.json")
        rows = [
            ("I_node", fmt(rep.I_node)),
            ("I_escape", fmt(rep.I_escape)),
            ("ED_bound", fmt(rep.ED_bound)),
            ("R", fmt(rep.R)),
            ("T", fmt(rep.T)),
            ("delta", fmt(rep.delta)),
            ("excluded_mass", fmt(rep.excluded_mass)),
        ]
        for ell, val in enumerate(rep.I_singular):
            rows.insert(2 + ell, (f"I_singular[{ell}]", fmt(val)))
        (outdir / "conditions.txt").write_text(_text_table(rows), encoding="utf-8")
        artifacts.append("conditions.txt")
        finite = all(
            np.isfinite(v)
            for v in (rep.I_node, rep.I_escape, rep.ED_bound, *rep.I_singular)
        )
        checks.append(("integrals_finite", finite, ""))

    manifest = {
        "config": cfg.to_dict(),
        "seed": cfg.seed,
        "version": _VERSION,
        "wall_time_s": time.time() - t_wall,
        "artifacts": sorted(artifacts),
        "checks": [
            {"name": name, "passed": bool(ok), "value": val} for name, ok, val in checks
        ],
    }
    _write_json(outdir / "manifest.json", manifest)

    failed = [name for name, ok, _ in checks if not ok]
    for name, ok, val in checks:
        print(f"[{'PASS' if ok else 'FAIL'}] {name} {val}")
    if failed:
        print(f"failed checks: {', '.join(failed)}", file=sys.stderr)
        return 1
    return 0


def _add_common(sp: argparse.ArgumentParser) -> None:
    sp.add_argument("--config", help="INI config file; flags override its values")
    sp.add_argument("--scenario", help="registered scenario name")
    sp.add_argument("--psi0", help="binary initial field file")
    sp.add_argument("--backend", choices=("analytic", "pde"))
    sp.add_argument("--grid", help="unused compatibility flag", default=None)
    sp.add_argument("--T", type=float)
    sp.add_argument("--dt", type=float)
    sp.add_argument("--n", type=int)
    sp.add_argument("--seed", type=int)
    sp.add_argument("--bins", type=int)
    sp.add_argument("--tol-rel", dest="tol_rel", type=float)
    sp.add_argument("--tol-abs", dest="tol_abs", type=float)
    sp.add_argument("--epsilon-node", dest="epsilon_node", type=float)
    sp.add_argument("--escape-radius", dest="escape_radius", type=float)
    sp.add_argument("--delta", type=float)
    sp.add_argument("--R", type=float)
    sp.add_argument("--n-time", dest="n_time", type=int)
    sp.add_argument("--l1-threshold", dest="l1_threshold", type=float)
    sp.add_argument("--mesh-points", dest="mesh_points", type=int)
    sp.add_argument("--slice-stride", dest="slice_stride", type=int)
    sp.add_argument("--out")


def main(argv: list[str] | None = None) -> int:
    parser = argparse.ArgumentParser(
        prog="bohmflow",
        description="Bohm-type trajectory simulation and existence-condition checks",
    )
    subs = parser.add_subparsers(dest="command", required=True)
    for name in ("propagate", "trajectories", "verify", "conditions"):
        _add_common(subs.add_parser(name))
    ns = parser.parse_args(argv)
    overrides = {
        k: v
        for k, v in vars(ns).items()
        if k not in ("config", "grid") and v is not None
    }
    try:
        cfg = parse_config(ns.config, overrides)
        return run(cfg)
    except (BohmflowError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
