"""Run configuration: a small strictly-validated JSON document.

Schema (all sections and keys optional unless noted):

    {
      "mesh":   { "n_per_face": int >= 1,
                  "p_geom": int in 1..16 (default: solver.p),
                  "strategy": "naive" | "optimized" },
      "solver": { "case": str (meaning depends on the subcommand),
                  "p": int in 1..16,
                  "dt": positive number (default: case-specific),
                  "t_final": number >= 0 (default: case-specific),
                  "alignment": "local" | "spherical",
                  "flux": { "upwind_alpha": number in [0, 1] } },
      "output": { "directory": str,
                  "cadence": int >= 1,
                  "formats": subset of ["csv", "json"] }
    }

Unknown keys are rejected anywhere in the document; a config that
validates is a config whose every entry is consumed.  Command-line
flags override individual entries after the file is parsed.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

from .errors import ConfigError

STRATEGIES = ("naive", "optimized")
ALIGNMENTS = ("local", "spherical")
FORMATS = ("csv", "json")


def _reject_unknown(section: str, given: dict, allowed: tuple):
    unknown = sorted(set(given) - set(allowed))
    if unknown:
        raise ConfigError(f"{section}: unknown key(s) {', '.join(unknown)}; "
                          f"allowed: {', '.join(allowed)}")


def _want(section, key, value, kind):
    if isinstance(value, bool) or not isinstance(value, kind):
        names = kind.__name__ if isinstance(kind, type) \
            else "/".join(k.__name__ for k in kind)
        raise ConfigError(f"{section}.{key}: expected {names}, "
                          f"got {value!r}")
    return value


@dataclass
class MeshConfig:
    n_per_face: int = 4
    p_geom: int | None = None
    strategy: str = "optimized"

    @classmethod
    def from_dict(cls, d: dict) -> "MeshConfig":
        _reject_unknown("mesh", d, ("n_per_face", "p_geom", "strategy"))
        out = cls()
        if "n_per_face" in d:
            out.n_per_face = _want("mesh", "n_per_face", d["n_per_face"], int)
            if out.n_per_face < 1:
                raise ConfigError("mesh.n_per_face must be >= 1")
        if "p_geom" in d:
            out.p_geom = _want("mesh", "p_geom", d["p_geom"], int)
            if not 1 <= out.p_geom <= 16:
                raise ConfigError("mesh.p_geom must be in 1..16")
        if "strategy" in d:
            out.strategy = _want("mesh", "strategy", d["strategy"], str)
            if out.strategy not in STRATEGIES:
                raise ConfigError(f"mesh.strategy must be one of {STRATEGIES}")
        return out


@dataclass
class SolverConfig:
    case: str | None = None
    p: int = 6
    dt: float | None = None
    t_final: float | None = None
    alignment: str = "local"
    flux: dict = field(default_factory=dict)

    @classmethod
    def from_dict(cls, d: dict) -> "SolverConfig":
        _reject_unknown("solver", d,
                        ("case", "p", "dt", "t_final", "alignment", "flux"))
        out = cls()
        if "case" in d:
            out.case = _want("solver", "case", d["case"], str)
        if "p" in d:
            out.p = _want("solver", "p", d["p"], int)
            if not 1 <= out.p <= 16:
                raise ConfigError("solver.p must be in 1..16")
        if "dt" in d:
            out.dt = float(_want("solver", "dt", d["dt"], (int, float)))
            if out.dt <= 0.0:
                raise ConfigError("solver.dt must be positive")
        if "t_final" in d:
            out.t_final = float(_want("solver", "t_final",
                                      d["t_final"], (int, float)))
            if out.t_final < 0.0:
                raise ConfigError("solver.t_final must be >= 0")
        if "alignment" in d:
            out.alignment = _want("solver", "alignment", d["alignment"], str)
            if out.alignment not in ALIGNMENTS:
                raise ConfigError(
                    f"solver.alignment must be one of {ALIGNMENTS}")
        if "flux" in d:
            fd = _want("solver", "flux", d["flux"], dict)
            _reject_unknown("solver.flux", fd, ("upwind_alpha",))
            if "upwind_alpha" in fd:
                alpha = float(_want("solver.flux", "upwind_alpha",
                                    fd["upwind_alpha"], (int, float)))
                if not 0.0 <= alpha <= 1.0:
                    raise ConfigError(
                        "solver.flux.upwind_alpha must be in [0, 1]")
                out.flux = {"upwind_alpha": alpha}
        return out


@dataclass
class OutputConfig:
    directory: str = "."
    cadence: int = 100
    formats: tuple = FORMATS

    @classmethod
    def from_dict(cls, d: dict) -> "OutputConfig":
        _reject_unknown("output", d, ("directory", "cadence", "formats"))
        out = cls()
        if "directory" in d:
            out.directory = _want("output", "directory", d["directory"], str)
        if "cadence" in d:
            out.cadence = _want("output", "cadence", d["cadence"], int)
            if out.cadence < 1:
                raise ConfigError("output.cadence must be >= 1")
        if "formats" in d:
            fmts = _want("output", "formats", d["formats"], list)
            for f in fmts:
                if f not in FORMATS:
                    raise ConfigError(
                        f"output.formats entries must be among {FORMATS}")
            out.formats = tuple(fmts)
        return out


@dataclass
class RunConfig:
    mesh: MeshConfig = field(default_factory=MeshConfig)
    solver: SolverConfig = field(default_factory=SolverConfig)
    output: OutputConfig = field(default_factory=OutputConfig)

    @classmethod
    def from_dict(cls, d: dict) -> "RunConfig":
        if not isinstance(d, dict):
            raise ConfigError("config root must be an object")
        _reject_unknown("config", d, ("mesh", "solver", "output"))
        return cls(
            mesh=MeshConfig.from_dict(
                _want("config", "mesh", d.get("mesh", {}), dict)),
            solver=SolverConfig.from_dict(
                _want("config", "solver", d.get("solver", {}), dict)),
            output=OutputConfig.from_dict(
                _want("config", "output", d.get("output", {}), dict)),
        )

    def geometry_order(self) -> int:
        """Mesh geometry order, defaulting to the solution order."""
        return self.solver.p if self.mesh.p_geom is None else self.mesh.p_geom


def load_run_config(path) -> RunConfig:
    try:
        raw = json.loads(Path(path).read_text())
    except FileNotFoundError:
        raise ConfigError(f"config file not found: {path}")
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: not valid JSON ({exc})")
    return RunConfig.from_dict(raw)


def apply_overrides(config: RunConfig, **overrides) -> RunConfig:
    """Apply non-None command-line overrides onto a parsed config.

    Keys use the flat flag names: n_per_face, p_geom, strategy, case, p,
    dt, t_final, alignment, upwind_alpha, directory, cadence.
    """
    sections = {"n_per_face": config.mesh, "p_geom": config.mesh,
                "strategy": config.mesh,
                "case": config.solver, "p": config.solver,
                "dt": config.solver, "t_final": config.solver,
                "alignment": config.solver,
                "directory": config.output, "cadence": config.output}
    for key, value in overrides.items():
        if value is None:
            continue
        if key == "upwind_alpha":
            config.solver.flux = {"upwind_alpha": float(value)}
            continue
        if key not in sections:
            raise ConfigError(f"unknown override {key}")
        setattr(sections[key], key, value)
    # re-validate through the dict round trip so overrides obey the schema
    return RunConfig.from_dict(config_to_dict(config))


def config_to_dict(config: RunConfig) -> dict:
    mesh = {"n_per_face": config.mesh.n_per_face,
            "strategy": config.mesh.strategy}
    if config.mesh.p_geom is not None:
        mesh["p_geom"] = config.mesh.p_geom
    solver = {"p": config.solver.p, "alignment": config.solver.alignment}
    if config.solver.case is not None:
        solver["case"] = config.solver.case
    if config.solver.dt is not None:
        solver["dt"] = config.solver.dt
    if config.solver.t_final is not None:
        solver["t_final"] = config.solver.t_final
    if config.solver.flux:
        solver["flux"] = dict(config.solver.flux)
    output = {"directory": config.output.directory,
              "cadence": config.output.cadence,
              "formats": list(config.output.formats)}
    return {"mesh": mesh, "solver": solver, "output": output}
