"""Run configuration: a small ``section.key = value`` format plus snapshots.

The grammar is deliberately tiny: one assignment per line, ``#`` comments,
UTF-8.  Unknown keys are rejected with the offending line number; semantic
errors name the full key path.  A config round-trips losslessly through
``format_config``/``parse_config``.

Snapshots are JSON documents carrying the full solver state, including the
previous step needed by the two-step time integrator, so a restarted run
reproduces an uninterrupted one bit for bit.
"""

import hashlib
import json
import numpy as np
from dataclasses import dataclass, field

from .errors import ConfigError, DomainError

SNAPSHOT_VERSION = 1

# key -> (type, default); None default means "required at use, no default"
_SCHEMA = {
    "problem.n": (int, 2),
    "problem.alpha0": (float, 1.0),
    "problem.kappa": (float, 0.1),
    "problem.datum": (str, "hyperboloid"),   # hyperboloid | cone-smooth | file
    "problem.datum_file": (str, ""),
    "grid.R": (float, 100.0),
    "grid.nodes": (int, 2000),
    "grid.stretch": (float, 1.0),
    "grid.L": (float, 4.0),
    "grid.m": (int, 24),
    "solver.dt": (float, 1e-3),
    "solver.newton_tol": (float, 1e-10),
    "solver.newton_max_iter": (int, 30),
    "solver.h_min": (float, 1e-9),
    "solver.bc_kind": (str, "neumann"),
    "solver.flat_eps": (float, 1e-2),
    "solver.max_damping": (int, 20),
    "solver.sample_interval": (float, 0.0),
    "solver.lifetime_cap": (float, 0.02),
    "solver.time_order": (int, 2),
    "run.t_end": (float, 0.0),               # 0 -> twice the cone lifetime
    "run.seed": (int, 0),
    "output.csv": (str, ""),
    "output.snapshot": (str, ""),
}


@dataclass
class RunConfig:
    """Validated flat view of a parsed config; keys as in the schema."""

    values: dict = field(default_factory=dict)

    def __post_init__(self):
        full = {k: v for k, (_, v) in _SCHEMA.items()}
        full.update(self.values)
        self.values = full

    def __getitem__(self, key):
        return self.values[key]

    def solver_config(self):
        from .radial import SolverConfig
        return SolverConfig(
            dt=self["solver.dt"],
            newton_tol=self["solver.newton_tol"],
            newton_max_iter=self["solver.newton_max_iter"],
            h_min=self["solver.h_min"],
            bc_kind=self["solver.bc_kind"],
            flat_eps=self["solver.flat_eps"],
            max_damping=self["solver.max_damping"],
            sample_interval=self["solver.sample_interval"],
            lifetime_cap=self["solver.lifetime_cap"],
            time_order=self["solver.time_order"],
        )


def _convert(key, raw, line_no):
    typ, _ = _SCHEMA[key]
    try:
        if typ is int:
            v = int(raw, 0) if isinstance(raw, str) else int(raw)
        else:
            v = typ(raw)
    except ValueError:
        raise ConfigError(f"cannot parse {raw!r} as {typ.__name__}",
                          key=key, line=line_no)
    return v


def _validate(key, value, line_no=None):
    positive = {"problem.alpha0", "grid.R", "solver.dt", "solver.newton_tol",
                "solver.h_min", "solver.lifetime_cap"}
    nonneg = {"problem.kappa", "solver.sample_interval", "run.t_end"}
    if key in positive and not value > 0:
        raise ConfigError(f"{key} = {value} must be > 0", key=key, line=line_no)
    if key in nonneg and value < 0:
        raise ConfigError(f"{key} = {value} must be >= 0", key=key, line=line_no)
    if key == "problem.n" and value < 2:
        raise ConfigError(f"problem.n = {value} must be >= 2", key=key,
                          line=line_no)
    if key == "solver.bc_kind" and value not in ("neumann", "dirichlet"):
        raise ConfigError(f"solver.bc_kind = {value!r} unknown", key=key,
                          line=line_no)
    if key == "problem.datum" and value not in ("hyperboloid", "cone-smooth",
                                                "file"):
        raise ConfigError(f"problem.datum = {value!r} unknown", key=key,
                          line=line_no)


def parse_config(text):
    """Parse ``section.key = value`` text into a :class:`RunConfig`."""
    values = {}
    for line_no, raw_line in enumerate(text.splitlines(), start=1):
        line = raw_line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError("expected 'section.key = value'", line=line_no)
        key, _, raw = line.partition("=")
        key = key.strip()
        raw = raw.strip()
        if key not in _SCHEMA:
            raise ConfigError(f"unknown key {key!r}", key=key, line=line_no)
        if key in values:
            raise ConfigError(f"duplicate key {key!r}", key=key, line=line_no)
        v = _convert(key, raw, line_no)
        _validate(key, v, line_no)
        values[key] = v
    return RunConfig(values=values)


def format_config(cfg):
    """Render a config as parseable text, one line per key, schema order."""
    out = []
    for k in _SCHEMA:
        v = cfg.values[k]
        if isinstance(v, str):
            out.append(f"{k} = {v}")
        elif isinstance(v, float):
            out.append(f"{k} = {v!r}")
        else:
            out.append(f"{k} = {v}")
    return "\n".join(out) + "\n"


def config_hash(cfg):
    return hashlib.sha256(format_config(cfg).encode()).hexdigest()[:16]


# ---------------------------------------------------------------------------
# snapshots


def snapshot_radial(sim, cfg=None):
    """Self-describing JSON document of a radial simulation state."""
    doc = {
        "format_version": SNAPSHOT_VERSION,
        "module": "radial",
        "grid": {"r": sim.grid.r.tolist(), "n": sim.grid.n},
        "u": sim.profile.u.tolist(),
        "t": sim.profile.t,
        "cone": {"n": sim.cone.n, "alpha0": sim.cone.alpha0,
                 "kappa": sim.cone.kappa},
        "solver": {
            "dt": sim.config.dt, "newton_tol": sim.config.newton_tol,
            "newton_max_iter": sim.config.newton_max_iter,
            "h_min": sim.config.h_min, "bc_kind": sim.config.bc_kind,
            "flat_eps": sim.config.flat_eps,
            "max_damping": sim.config.max_damping,
            "sample_interval": sim.config.sample_interval,
            "lifetime_cap": sim.config.lifetime_cap,
            "time_order": sim.config.time_order,
        },
        "u0_boundary": sim.u0_boundary,
        "prev": None if sim._prev is None else
                {"u": sim._prev[0].tolist(), "dt": sim._prev[1]},
        "flat_crossings": sim.flat_crossings,
        "last_flat": sim._last_flat,
        "config_hash": config_hash(cfg) if cfg is not None else "",
    }
    return doc


def save_snapshot(sim, path, cfg=None):
    with open(path, "w") as fh:
        json.dump(snapshot_radial(sim, cfg), fh)
        fh.write("\n")


def restore_radial(doc):
    """Rebuild a RadialSim from a snapshot document."""
    from .exact import ConeFamily
    from .geometry import RadialGrid, RadialProfile
    from .radial import RadialSim, SolverConfig

    if doc.get("format_version") != SNAPSHOT_VERSION:
        raise DomainError(
            f"unsupported snapshot version {doc.get('format_version')!r}")
    if doc.get("module") != "radial":
        raise DomainError(f"snapshot holds module {doc.get('module')!r}, "
                          "expected 'radial'")
    grid = RadialGrid(r=np.array(doc["grid"]["r"]), n=doc["grid"]["n"])
    profile = RadialProfile(grid=grid, u=np.array(doc["u"]), t=doc["t"])
    cone = ConeFamily(**doc["cone"])
    config = SolverConfig(**doc["solver"])
    sim = RadialSim(profile, cone, config)
    sim.u0_boundary = doc["u0_boundary"]
    if doc["prev"] is not None:
        sim._prev = (np.array(doc["prev"]["u"]), doc["prev"]["dt"])
    sim.flat_crossings = dict(doc.get("flat_crossings") or {})
    lf = doc.get("last_flat")
    sim._last_flat = tuple(lf) if lf is not None else None
    return sim


def load_snapshot(path):
    with open(path) as fh:
        return restore_radial(json.load(fh))
