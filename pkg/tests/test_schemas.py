import click
import pytest
from marshmallow import ValidationError

from eigenbench.commands.utils import (
    json_pointer,
    merge_config,
    parse_mesh_option,
    parse_metric_option,
    parse_perturbation_option,
    parse_t_option,
    validate_experiment,
)
from eigenbench.errors import ConfigError
from eigenbench.schemas.experiment_schema import ClusterSchema, ExperimentSchema
from eigenbench.schemas.metric_schema import PerturbationSchema


def test_defaults():
    experiment = ExperimentSchema().load({"command": "eigs"})
    assert experiment["mesh"] == {"shape": "square", "n": 16, "rings": 8, "inner_radius": 0.5, "reorient": False}
    assert experiment["metric"]["preset"] == "identity"
    assert experiment["perturbation"]["kind"] == "zero"
    assert experiment["cluster"] == {"index": 1}
    assert experiment["tolerances"] == {}
    assert "eigen_count" not in experiment


def test_nested_error_pointer():
    with pytest.raises(ConfigError) as excinfo:
        validate_experiment({"command": "eigs", "mesh": {"n": 0}})
    assert excinfo.value.pointer == "/mesh/n"


def test_unknown_key_is_rejected():
    with pytest.raises(ConfigError) as excinfo:
        validate_experiment({"command": "eigs", "colour": "blue"})
    assert excinfo.value.pointer == "/colour"


def test_unknown_command():
    with pytest.raises(ConfigError) as excinfo:
        validate_experiment({"command": "plot"})
    assert excinfo.value.pointer == "/command"


def test_non_object_config():
    with pytest.raises(ConfigError) as excinfo:
        validate_experiment([1, 2])
    assert excinfo.value.pointer == "/"


def test_schema_level_error_points_at_parent():
    assert json_pointer({"cluster": {"_schema": ["give exactly one"]}}) == ("/cluster", "give exactly one")
    assert json_pointer({"t_values": {0: ["Not a valid number."]}}) == ("/t_values/0", "Not a valid number.")


def test_cluster_selector_needs_exactly_one():
    assert ClusterSchema().load({"near": 9.8}) == {"near": 9.8}
    with pytest.raises(ValidationError):
        ClusterSchema().load({})
    with pytest.raises(ValidationError):
        ClusterSchema().load({"index": 1, "near": 9.8})


def test_constant_perturbation_needs_a_component():
    with pytest.raises(ValidationError):
        PerturbationSchema().load({"kind": "constant"})
    assert PerturbationSchema().load({"kind": "constant", "h12": 0.5})["h12"] == 0.5


def test_file_mesh_needs_path():
    with pytest.raises(ConfigError) as excinfo:
        validate_experiment({"command": "mesh", "mesh": {"shape": "file"}})
    assert excinfo.value.pointer == "/mesh/path"


def test_branch_grid_must_straddle_zero():
    with pytest.raises(ConfigError) as excinfo:
        validate_experiment({"command": "branches", "tmin": 0.01})
    assert excinfo.value.pointer == "/tmin"
    validate_experiment({"command": "eigs", "tmin": 0.01})


def test_list_validators():
    with pytest.raises(ConfigError) as excinfo:
        validate_experiment({"command": "ls", "t_values": []})
    assert excinfo.value.pointer == "/t_values"
    with pytest.raises(ConfigError) as excinfo:
        validate_experiment({"command": "verify-calculus", "fd_steps": [1e-3]})
    assert excinfo.value.pointer == "/fd_steps"


def test_merge_config():
    base = {"command": "eigs", "mesh": {"shape": "disk", "rings": 4}, "cluster": {"near": 3.0}}
    merged = merge_config(base, {"mesh": {"rings": 8}, "cluster": {"index": 2}})
    assert merged["mesh"] == {"shape": "disk", "rings": 8}
    assert merged["cluster"] == {"index": 2}
    assert base["mesh"]["rings"] == 4


def test_option_parsers():
    assert parse_mesh_option("square:12") == {"shape": "square", "n": 12}
    assert parse_mesh_option("disk:6") == {"shape": "disk", "rings": 6}
    assert parse_mesh_option("meshes/hex.txt") == {"shape": "file", "path": "meshes/hex.txt"}
    assert parse_metric_option("diag:4,9") == {"preset": "diag", "a": 4.0, "b": 9.0}
    assert parse_metric_option("conformal:bump,0.5") == {"preset": "conformal", "rho": "bump", "strength": 0.5}
    assert parse_perturbation_option("random:3") == {"kind": "random", "seed": 3}
    assert parse_perturbation_option("constant:1,0,2") == {"kind": "constant", "h11": 1.0, "h12": 0.0, "h22": 2.0}
    assert parse_t_option("0.01,0.02") == [0.01, 0.02]
    assert parse_t_option("-0.02:0.02:5") == pytest.approx([-0.02, -0.01, 0.0, 0.01, 0.02])
    with pytest.raises(click.BadParameter):
        parse_mesh_option("square:big")
    with pytest.raises(click.BadParameter):
        parse_perturbation_option("diag:1")
