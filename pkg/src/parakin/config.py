"""Run configuration: defaults, INI-style config files, flag overrides.

The file format is flat key-value text with sections (mesh, time, parareal,
adaptation, lifting, output, run) chosen for diffability in experiment
sweeps.  Command-line flags override file values, which override defaults.
"""

from __future__ import annotations

import configparser
import io
from dataclasses import dataclass, replace

import numpy as np

from .errors import ConfigError

TWO_PI = 2.0 * np.pi


@dataclass(frozen=True)
class RunConfig:
    # [mesh]
    nx: int = 32
    nvx: int = 32
    nvy: int = 16
    nvz: int = 16
    x_star: float = TWO_PI
    v_star: float = 8.0
    # [time]
    eps: float = 1e-4
    t_final: float = 1.0
    # [parareal]
    parareal: bool = True
    windows: int = 200
    k_max: int = 50
    tol: float = 1e-10
    workers: int = 1
    # [adaptation]
    adaptation: bool = True
    delta0: float = 1e-5
    eta0: float = 1e-5
    combine: str = "or"
    scale_remainder: bool = False
    reinit: str = "lift"
    # [lifting]
    lift_order: int = 2
    time_elim: str = "leading"
    # [output]
    out_dir: str = "out"
    snapshots: int = 8
    snapshot_times: tuple = ()   # explicit times override the count
    trace: bool = False
    # [run]
    mode: str = "hybrid"         # hybrid | fluid (the eps -> 0 dynamics)
    seed: int = 0                # reserved; all methods are deterministic

    def validate(self) -> "RunConfig":
        if self.eps <= 0.0:
            raise ConfigError(
                "time.eps must be > 0 (the eps=0 dynamics is the fluid solver; use run.mode = fluid)"
            )
        if self.t_final <= 0.0:
            raise ConfigError("time.t_final must be > 0")
        if self.nx < 7:
            raise ConfigError("mesh.nx must be >= 7 (stencil support)")
        for key in ("nvx", "nvy", "nvz"):
            if getattr(self, key) < 4:
                raise ConfigError(f"mesh.{key} must be >= 4")
        if self.x_star <= 0.0 or self.v_star <= 0.0:
            raise ConfigError("mesh.x_star and mesh.v_star must be > 0")
        if self.windows < 1:
            raise ConfigError("parareal.windows must be >= 1")
        if self.k_max < 1:
            raise ConfigError("parareal.k_max must be >= 1")
        if self.tol <= 0.0:
            raise ConfigError("parareal.tol must be > 0")
        if self.workers < 1:
            raise ConfigError("parareal.workers must be >= 1")
        if self.delta0 <= 0.0 or self.eta0 <= 0.0:
            raise ConfigError("adaptation.delta0 and adaptation.eta0 must be > 0")
        if self.combine not in ("or", "and"):
            raise ConfigError("adaptation.combine must be 'or' or 'and'")
        if self.reinit not in ("lift", "zero"):
            raise ConfigError("adaptation.reinit must be 'lift' or 'zero'")
        if self.lift_order not in (1, 2):
            raise ConfigError("lifting.order must be 1 or 2")
        if self.time_elim not in ("leading", "higher_order"):
            raise ConfigError("lifting.time_elim must be 'leading' or 'higher_order'")
        if self.snapshots < 1 and not self.snapshot_times:
            raise ConfigError("output.snapshots must be >= 1")
        if self.mode not in ("hybrid", "fluid"):
            raise ConfigError("run.mode must be 'hybrid' or 'fluid'")
        if any(t <= 0.0 or t > self.t_final for t in self.snapshot_times):
            raise ConfigError("output.snapshot_times must lie in (0, t_final]")
        return self


#: (section, key) -> (attribute, parser)
_SCHEMA = {
    ("mesh", "nx"): ("nx", int),
    ("mesh", "nvx"): ("nvx", int),
    ("mesh", "nvy"): ("nvy", int),
    ("mesh", "nvz"): ("nvz", int),
    ("mesh", "x_star"): ("x_star", float),
    ("mesh", "v_star"): ("v_star", float),
    ("time", "eps"): ("eps", float),
    ("time", "t_final"): ("t_final", float),
    ("parareal", "enabled"): ("parareal", "bool"),
    ("parareal", "windows"): ("windows", int),
    ("parareal", "k_max"): ("k_max", int),
    ("parareal", "tol"): ("tol", float),
    ("parareal", "workers"): ("workers", int),
    ("adaptation", "enabled"): ("adaptation", "bool"),
    ("adaptation", "delta0"): ("delta0", float),
    ("adaptation", "eta0"): ("eta0", float),
    ("adaptation", "combine"): ("combine", str),
    ("adaptation", "scale_remainder"): ("scale_remainder", "bool"),
    ("adaptation", "reinit"): ("reinit", str),
    ("lifting", "order"): ("lift_order", int),
    ("lifting", "time_elim"): ("time_elim", str),
    ("output", "directory"): ("out_dir", str),
    ("output", "snapshots"): ("snapshots", int),
    ("output", "snapshot_times"): ("snapshot_times", "times"),
    ("output", "trace"): ("trace", "bool"),
    ("run", "mode"): ("mode", str),
    ("run", "seed"): ("seed", int),
}

_BOOL_WORDS = {
    "1": True, "true": True, "on": True, "yes": True,
    "0": False, "false": False, "off": False, "no": False,
}


def _parse_value(raw: str, kind, where: str):
    raw = raw.strip()
    try:
        if kind == "bool":
            try:
                return _BOOL_WORDS[raw.lower()]
            except KeyError:
                raise ValueError(f"not a boolean: {raw!r}")
        if kind == "times":
            if not raw:
                return ()
            return tuple(float(tok) for tok in raw.replace(",", " ").split())
        return kind(raw)
    except ValueError as exc:
        raise ConfigError(f"{where}: {exc}") from None


def parse_config(path: str | None = None, overrides: dict | None = None) -> RunConfig:
    """Build a validated RunConfig from defaults, an optional config file and
    optional dotted-key overrides ('section.key' -> raw string); overrides
    win over file values."""
    values = {}
    if path is not None:
        cp = configparser.ConfigParser()
        read = cp.read(path)
        if not read:
            raise ConfigError(f"config file not found: {path}")
        for section in cp.sections():
            for key, raw in cp.items(section):
                schema = _SCHEMA.get((section, key))
                if schema is None:
                    raise ConfigError(f"unknown config key [{section}] {key}")
                attr, kind = schema
                values[attr] = _parse_value(raw, kind, f"[{section}] {key}")
    for dotted, raw in (overrides or {}).items():
        section, _, key = dotted.partition(".")
        schema = _SCHEMA.get((section, key))
        if schema is None:
            raise ConfigError(f"unknown config key {dotted}")
        attr, kind = schema
        values[attr] = _parse_value(str(raw), kind, dotted)
    return RunConfig(**values).validate()


def to_ini(cfg: RunConfig) -> str:
    """Serialize with full round-trip precision; parse_config(to_ini(cfg))
    reproduces cfg exactly."""
    cp = configparser.ConfigParser()
    for (section, key), (attr, kind) in _SCHEMA.items():
        if not cp.has_section(section):
            cp.add_section(section)
        val = getattr(cfg, attr)
        if kind == "bool":
            text = "on" if val else "off"
        elif kind == "times":
            text = " ".join(f"{t:.17g}" for t in val)
        elif kind is float:
            text = f"{val:.17g}"
        else:
            text = str(val)
        cp.set(section, key, text)
    out = io.StringIO()
    cp.write(out)
    return out.getvalue()


def write_config(cfg: RunConfig, path) -> None:
    with open(path, "w", newline="\n") as fh:
        fh.write(to_ini(cfg))


def resolve_snapshot_times(cfg: RunConfig) -> np.ndarray:
    """Explicit times, or the default logarithmic spacing in (0, t_final]."""
    if cfg.snapshot_times:
        return np.asarray(sorted(cfg.snapshot_times), dtype=float)
    if cfg.snapshots == 1:
        return np.asarray([cfg.t_final])
    lo = cfg.t_final / 64.0
    return np.geomspace(lo, cfg.t_final, cfg.snapshots)


def engine_config(cfg: RunConfig):
    """Translate the run configuration into the parareal engine's config."""
    from .adaptation import Thresholds
    from .hybrid import HybridOptions
    from .parareal import PararealConfig, resolve_workers

    return PararealConfig(
        eps=cfg.eps,
        t_final=cfg.t_final,
        ng=cfg.windows,
        k_max=cfg.k_max,
        tol=cfg.tol,
        workers=resolve_workers(cfg.workers),
        parareal_enabled=cfg.parareal,
        thresholds=Thresholds(delta0=cfg.delta0, eta0=cfg.eta0),
        options=HybridOptions(
            adaptation=cfg.adaptation,
            combine=cfg.combine,
            scale_remainder=cfg.scale_remainder,
            reinit=cfg.reinit,
            lift_order=cfg.lift_order,
            time_elim=cfg.time_elim,
        ),
    )


def mesh_spec(cfg: RunConfig):
    from .mesh import MeshSpec

    return MeshSpec(
        nx=cfg.nx, nvx=cfg.nvx, nvy=cfg.nvy, nvz=cfg.nvz,
        x_star=cfg.x_star, v_star=cfg.v_star,
    )


def with_overrides(cfg: RunConfig, **kwargs) -> RunConfig:
    return replace(cfg, **kwargs).validate()
