"""Run configuration parsing, validation, and flag overrides."""

import json

import pytest

from mmfsphere.config import (RunConfig, apply_overrides, config_to_dict,
                              load_run_config)
from mmfsphere.errors import ConfigError


def test_defaults():
    cfg = RunConfig.from_dict({})
    assert cfg.mesh.n_per_face == 4
    assert cfg.mesh.strategy == "optimized"
    assert cfg.solver.p == 6
    assert cfg.solver.alignment == "local"
    assert cfg.output.cadence == 100
    assert set(cfg.output.formats) == {"csv", "json"}
    # geometry order follows the solution order unless pinned
    assert cfg.geometry_order() == 6


def test_full_document():
    cfg = RunConfig.from_dict({
        "mesh": {"n_per_face": 6, "p_geom": 3, "strategy": "naive"},
        "solver": {"case": "steady-zonal", "p": 5, "dt": 5e-4,
                   "t_final": 1.0, "alignment": "spherical",
                   "flux": {"upwind_alpha": 0.5}},
        "output": {"directory": "out", "cadence": 10, "formats": ["csv"]},
    })
    assert cfg.geometry_order() == 3
    assert cfg.solver.flux == {"upwind_alpha": 0.5}
    assert cfg.output.formats == ("csv",)


@pytest.mark.parametrize("doc", [
    {"typo_section": {}},
    {"mesh": {"n": 4}},
    {"mesh": {"n_per_face": 0}},
    {"mesh": {"p_geom": 17}},
    {"mesh": {"strategy": "adaptive"}},
    {"solver": {"p": 0}},
    {"solver": {"dt": -1e-4}},
    {"solver": {"t_final": -1.0}},
    {"solver": {"alignment": "cartesian"}},
    {"solver": {"flux": {"upwind_alpha": 1.5}}},
    {"solver": {"flux": {"limiter": "none"}}},
    {"solver": {"p": True}},
    {"output": {"cadence": 0}},
    {"output": {"formats": ["csv", "parquet"]}},
    "not a dict",
])
def test_bad_documents_rejected(doc):
    with pytest.raises(ConfigError):
        RunConfig.from_dict(doc)


def test_load_run_config(tmp_path):
    path = tmp_path / "run.json"
    path.write_text(json.dumps({"solver": {"p": 4}}))
    assert load_run_config(path).solver.p == 4
    with pytest.raises(ConfigError):
        load_run_config(tmp_path / "missing.json")
    path.write_text("{broken")
    with pytest.raises(ConfigError):
        load_run_config(path)


def test_apply_overrides_revalidates():
    cfg = RunConfig.from_dict({})
    cfg = apply_overrides(cfg, n_per_face=2, strategy="naive", p=3,
                          dt=1e-3, upwind_alpha=0.0, cadence=5)
    assert cfg.mesh.n_per_face == 2
    assert cfg.solver.dt == 1e-3
    assert cfg.solver.flux == {"upwind_alpha": 0.0}
    # None means "not given on the command line"
    same = apply_overrides(cfg, p=None)
    assert same.solver.p == 3
    with pytest.raises(ConfigError):
        apply_overrides(cfg, strategy="bogus")
    with pytest.raises(ConfigError):
        apply_overrides(cfg, warp_factor=2)


def test_round_trip_through_dict():
    cfg = RunConfig.from_dict({
        "mesh": {"n_per_face": 3},
        "solver": {"case": "advect", "p": 7},
    })
    again = RunConfig.from_dict(config_to_dict(cfg))
    assert config_to_dict(again) == config_to_dict(cfg)
