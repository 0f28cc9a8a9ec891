"""
Experiment orchestration shared by the command groups: config validation,
builders for meshes, metrics and perturbations, one handler per command and
the run() entry point with its exit codes.
"""
import json
import logging
from pathlib import Path

import click
import numpy as np
from marshmallow import ValidationError

from config import Config
from eigenbench.commands.utils.report_utils import write_csv, write_report
from eigenbench.core import chart_calculus, fem, liapunov_schmidt, perturbation
from eigenbench.core import mesh as meshes
from eigenbench.core import metric
from eigenbench.core.eigensolver import lowest_clusters, select_cluster, simplicity_report, spectrum_rows
from eigenbench.errors import ConfigError, InputError, MetricError, NumericalError
from eigenbench.models import SymTensorField
from eigenbench.schemas.experiment_schema import ExperimentSchema

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_INPUT = 2
EXIT_NUMERICAL = 3

SETTINGS = ("OUTPUT_DIR", "THREADS", "LOG_LEVEL", "DETERMINISTIC", "CLUSTER_TOL", "GAP_TOL", "FD_STEP",
            "EIGEN_COUNT")

# flat command-line option -> path inside the experiment config
OPTION_PATHS = {
    "cluster_tol": ("tolerances", "cluster_tol"),
    "gap_tol": ("tolerances", "gap_tol"),
    "fd_step": ("tolerances", "fd_step"),
    "amplitude": ("perturbation", "amplitude"),
}


def default_settings():
    return {key: getattr(Config, key) for key in SETTINGS}


def json_pointer(messages, prefix=""):
    """First offending field of a marshmallow error dict as (pointer, message), e.g. ("/mesh/n", ...)."""
    if isinstance(messages, dict) and messages:
        key = sorted(messages, key=str)[0]
        child = prefix if key == "_schema" else f"{prefix}/{key}"
        return json_pointer(messages[key], child)
    if isinstance(messages, list) and messages:
        return json_pointer(messages[0], prefix)
    return prefix or "/", str(messages)


def validate_experiment(config):
    """Load a raw config dict through ExperimentSchema, raising ConfigError with a pointer."""
    if not isinstance(config, dict):
        raise ConfigError("/", "experiment config must be a JSON object")
    try:
        return ExperimentSchema().load(config)
    except ValidationError as error:
        raise ConfigError(*json_pointer(error.messages))


def load_config_file(path):
    try:
        with open(path, encoding="utf-8") as handle:
            return json.load(handle)
    except json.JSONDecodeError as error:
        raise ConfigError("/", f"invalid JSON at line {error.lineno}: {error.msg}")
    except OSError as error:
        raise ConfigError("/", f"cannot read {path}: {error}")


def merge_config(base, overrides):
    """Overlay command-line values onto a file config, one nesting level deep."""
    merged = {key: dict(value) if isinstance(value, dict) else value for key, value in (base or {}).items()}
    for key, value in overrides.items():
        if isinstance(value, dict) and key != "cluster":
            merged[key] = {**merged.get(key, {}), **value}
        else:
            merged[key] = value
    return merged


def _numbers(text, option):
    try:
        return [float(part) for part in text.split(",") if part.strip()]
    except ValueError:
        raise click.BadParameter(f"expected comma-separated numbers, got {text!r}", param_hint=option)


def parse_mesh_option(text):
    """'square:16', 'disk:24', 'annulus:8' or a path to a mesh file."""
    shape, _, value = text.partition(":")
    if shape in ("square", "disk", "annulus"):
        section = {"shape": shape}
        if value:
            if not value.isdigit():
                raise click.BadParameter(f"resolution must be an integer, got {value!r}", param_hint="--mesh")
            section["n" if shape == "square" else "rings"] = int(value)
        return section
    return {"shape": "file", "path": text}


def parse_metric_option(text):
    """'identity', 'diag:a,b' or 'conformal:rho[,strength]'."""
    preset, _, value = text.partition(":")
    if preset == "diag":
        numbers = _numbers(value, "--metric")
        if len(numbers) != 2:
            raise click.BadParameter("diag needs two values, e.g. diag:4,9", param_hint="--metric")
        return {"preset": "diag", "a": numbers[0], "b": numbers[1]}
    if preset == "conformal":
        rho, _, strength = value.partition(",")
        section = {"preset": "conformal", "rho": rho or "constant"}
        if strength:
            section["strength"] = _numbers(strength, "--metric")[0]
        return section
    return {"preset": preset}


def parse_perturbation_option(text):
    """'zero', 'diag:a,b', 'constant:h11,h12,h22', 'random:seed', 'conformal:c' or 'residual'."""
    kind, _, value = text.partition(":")
    numbers = _numbers(value, "--perturb") if value else []
    if kind == "diag" and len(numbers) == 2:
        return {"kind": "diag", "a": numbers[0], "b": numbers[1]}
    if kind == "constant" and len(numbers) == 3:
        return {"kind": "constant", "h11": numbers[0], "h12": numbers[1], "h22": numbers[2]}
    if kind == "random" and len(numbers) <= 1:
        return {"kind": "random", "seed": int(numbers[0])} if numbers else {"kind": "random"}
    if kind == "conformal" and len(numbers) <= 1:
        return {"kind": "conformal", "scale": numbers[0]} if numbers else {"kind": "conformal"}
    if kind in ("zero", "residual") and not numbers:
        return {"kind": kind}
    raise click.BadParameter(f"cannot parse perturbation {text!r}", param_hint="--perturb")


def parse_t_option(text):
    """A single value, a comma list, or 'start:stop:count'."""
    if text.count(":") == 2:
        start, stop, count = text.split(":")
        try:
            return [float(v) for v in np.linspace(float(start), float(stop), int(count))]
        except ValueError:
            raise click.BadParameter(f"expected start:stop:count, got {text!r}", param_hint="--t")
    return _numbers(text, "--t")


def build_mesh(section):
    if section["shape"] == "square":
        return meshes.generate_square(section["n"])
    if section["shape"] == "disk":
        return meshes.generate_disk(section["rings"])
    if section["shape"] == "annulus":
        return meshes.generate_annulus(section["rings"], section["inner_radius"])
    return meshes.load_mesh(section["path"], reorient=section["reorient"])


def build_perturbation(mesh, g, selected, section):
    kind = section["kind"]
    if kind == "zero":
        T = metric.constant_tensor(mesh, 0.0, 0.0, 0.0)
    elif kind == "diag":
        T = metric.constant_tensor(mesh, section["a"], 0.0, section["b"])
    elif kind == "constant":
        T = metric.constant_tensor(mesh, section["h11"], section["h12"], section["h22"])
    elif kind == "random":
        T = metric.random_perturbation(mesh, section["seed"], section["amplitude"], section["frequency_cap"])
    elif kind == "conformal":
        T = SymTensorField(g.components)
    else:
        T = perturbation.splitting_perturbation(mesh, g, selected, seed=section["seed"])
    return T.scaled(section["scale"])


def _tolerance(experiment, settings, name):
    return experiment["tolerances"].get(name, settings[name.upper()])


def solve_clusters(mesh, g, experiment, settings):
    """Assemble, solve and cluster; returns (K, M, pairs, clusters, selected cluster)."""
    K, M = fem.assemble_stiffness(mesh, g), fem.assemble_mass(mesh, g)
    count = min(experiment.get("eigen_count") or settings["EIGEN_COUNT"], mesh.n_vertices)
    pairs, clusters = lowest_clusters(K, M, count, _tolerance(experiment, settings, "cluster_tol"))
    selected = select_cluster(clusters, **experiment["cluster"])
    logger.info("selected cluster %.6g with multiplicity %d", selected.mean, selected.multiplicity)
    return K, M, pairs, clusters, selected


def _check_deformation(g, T, t_values, pointer):
    """g + t T is linear in t, so checking the extreme t values covers the grid."""
    for t in (min(t_values), max(t_values)):
        try:
            metric.metric_at_t(g, T, t)
        except MetricError as error:
            raise ConfigError(pointer, f"t grid leaves the positive definite cone: {error}")


def _setup(experiment):
    mesh = build_mesh(experiment["mesh"])
    g = metric.sample_preset(mesh, experiment["metric"])
    return mesh, g


def handle_mesh(experiment, settings, out):
    mesh, g = _setup(experiment)
    target = Path(experiment["mesh_file"]) if experiment.get("mesh_file") else out / "mesh.txt"
    target.parent.mkdir(parents=True, exist_ok=True)
    meshes.save_mesh(mesh, target)
    metric.export_field_csv(g, out / "metric.csv")
    return {"mesh": mesh.to_dict(), "mesh_size": mesh.mesh_size, "boundary_loops": len(mesh.boundary_loops())}


def handle_eigs(experiment, settings, out):
    mesh, g = _setup(experiment)
    _, _, pairs, clusters, _ = solve_clusters(mesh, g, experiment, settings)
    write_csv(out / "spectrum.csv", ["index", "eigenvalue", "cluster", "multiplicity"], spectrum_rows(clusters),
              settings["DETERMINISTIC"])
    gap_tol = _tolerance(experiment, settings, "gap_tol")
    return {
        "mesh": mesh.to_dict(),
        "clusters": [c.to_dict() for c in clusters],
        "simplicity": simplicity_report(pairs, gap_tol, pairs[-1].value),
    }


def handle_hadamard(experiment, settings, out):
    mesh, g = _setup(experiment)
    _, M, _, _, selected = solve_clusters(mesh, g, experiment, settings)
    T = build_perturbation(mesh, g, selected, experiment["perturbation"])
    geometric = perturbation.hadamard_matrix(mesh, g, selected, T)
    K_prime, M_prime = fem.assemble_derivatives(mesh, g, T)
    discrete = perturbation.discrete_branch_matrix(selected, K_prime, M_prime, M)
    rows = [
        {"provenance": branch.provenance, "i": i, "j": j, "value": branch.matrix[i, j]}
        for branch in (geometric, discrete)
        for i in range(selected.multiplicity)
        for j in range(selected.multiplicity)
    ]
    write_csv(out / "matrix.csv", ["provenance", "i", "j", "value"], rows, settings["DETERMINISTIC"])
    return {
        "cluster": selected.to_dict(),
        "geometric_slopes": geometric.slopes,
        "discrete_slopes": discrete.slopes,
        "boundary_flux_max": float(np.max(np.abs(perturbation.boundary_flux(mesh, g, selected, T)))),
    }


def handle_branches(experiment, settings, out):
    mesh, g = _setup(experiment)
    _, _, _, _, selected = solve_clusters(mesh, g, experiment, settings)
    T = build_perturbation(mesh, g, selected, experiment["perturbation"])
    grid = np.linspace(experiment["tmin"], experiment["tmax"], experiment["steps"])
    _check_deformation(g, T, grid, "/tmax")

    curves = perturbation.track_branches(mesh, g, T, selected.mean, grid, experiment.get("window"),
                                         settings["THREADS"])
    rows = [
        {"t": t, "branch": k, "eigenvalue": curves.values[row, k], "overlap": curves.overlaps[row, k]}
        for row, t in enumerate(curves.t)
        for k in range(curves.multiplicity)
    ]
    write_csv(out / "branches.csv", ["t", "branch", "eigenvalue", "overlap"], rows, settings["DETERMINISTIC"])

    slopes = curves.slopes()
    predicted = perturbation.hadamard_matrix(mesh, g, selected, T).slopes
    scale = np.maximum(np.abs(predicted), 1e-12)
    return {
        "cluster": selected.to_dict(),
        "fd_slopes": slopes,
        "hadamard_slopes": predicted,
        "max_relative_deviation": float(np.max(np.abs(slopes - predicted) / scale)),
        "min_overlap": float(np.min(curves.overlaps)),
    }


def handle_ls(experiment, settings, out):
    mesh, g = _setup(experiment)
    _, _, _, _, selected = solve_clusters(mesh, g, experiment, settings)
    T = build_perturbation(mesh, g, selected, experiment["perturbation"])
    t_values = experiment["t_values"]
    _check_deformation(g, T, list(t_values) + [0.0], "/t_values")

    window = experiment.get("window")
    rows = liapunov_schmidt.root_sweep(mesh, g, T, selected, t_values, window, settings["THREADS"])
    write_csv(out / "roots.csv", ["t", "root_index", "root", "pencil", "difference"], rows,
              settings["DETERMINISTIC"])

    reduction = liapunov_schmidt.Reduction(mesh, g, T, selected, fd_step=_tolerance(experiment, settings, "fd_step"))
    K_prime, M_prime = fem.assemble_derivatives(mesh, g, T)
    branch = perturbation.discrete_branch_matrix(selected, K_prime, M_prime)
    slope_defect = reduction.derivative("t", 0.0, reduction.lam0) + branch.matrix
    return {
        "cluster": selected.to_dict(),
        "max_root_difference": max(row["difference"] for row in rows),
        "dA_dt_defect": float(np.max(np.abs(slope_defect))),
        "roots_per_t": {repr(float(t)): sum(1 for row in rows if row["t"] == t) for t in t_values},
    }


def handle_generic(experiment, settings, out):
    mesh, g = _setup(experiment)
    _, _, _, _, selected = solve_clusters(mesh, g, experiment, settings)
    gap_tol = _tolerance(experiment, settings, "gap_tol") * max(1.0, abs(selected.mean))
    report = perturbation.genericity_experiment(
        mesh, g, selected, experiment["samples"], experiment["seed"], t_probe=experiment["t_probe"],
        gap_tol=gap_tol, confirm=experiment["confirm"], amplitude=experiment["perturbation"]["amplitude"],
        family=experiment["family"], threads=settings["THREADS"],
    )
    columns = ["sample", "seed", "min_gap", "split", "probe_gap", "confirmed"]
    write_csv(out / "generic.csv", columns, report.rows, settings["DETERMINISTIC"])
    return {
        "cluster": selected.to_dict(),
        "split_fraction": report.split_fraction,
        "confirmed_fraction": report.confirmed_fraction,
        "samples": report.samples,
        "gap_tol": gap_tol,
    }


def handle_calculus(experiment, settings, out):
    rows = chart_calculus.run_suite(experiment["suite"], experiment["fd_steps"])
    write_csv(out / "calculus.csv", ["identity", "point", "step", "residual", "order"], rows,
              settings["DETERMINISTIC"])
    finest = min(experiment["fd_steps"])
    return {
        "suite": experiment["suite"],
        "max_finest_residual": max(row["residual"] for row in rows if row["step"] == finest),
        "min_order": min((row["order"] for row in rows if np.isfinite(row["order"])), default=float("nan")),
    }


HANDLERS = {
    "mesh": handle_mesh,
    "eigs": handle_eigs,
    "hadamard": handle_hadamard,
    "branches": handle_branches,
    "ls": handle_ls,
    "generic": handle_generic,
    "verify-calculus": handle_calculus,
}


def run(config, settings=None):
    """
    Validate an experiment config, run it and write its report files.

    Args:
        config: Raw experiment dict (as read from JSON)
        settings: Overrides of the Config defaults (OUTPUT_DIR, THREADS, ...)

    Returns:
        Exit code: 0 on success, 2 on invalid input, 3 on a numerical failure
    """
    settings = {**default_settings(), **(settings or {})}
    try:
        experiment = validate_experiment(config)
        out = Path(experiment.get("output_dir") or settings["OUTPUT_DIR"])
        out.mkdir(parents=True, exist_ok=True)
        logger.info("running %s into %s", experiment["command"], out)
        summary = HANDLERS[experiment["command"]](experiment, settings, out)
        summary["command"] = experiment["command"]
        summary["config"] = experiment
        write_report(out / "report.json", summary, settings["DETERMINISTIC"])
    except InputError as error:
        click.echo(f"error: {error}", err=True)
        return EXIT_INPUT
    except NumericalError as error:
        click.echo(f"numerical failure in {error.module}: {error}", err=True)
        return EXIT_NUMERICAL
    return EXIT_OK


def invoke(ctx, command, overrides):
    """Merge command-line overrides onto the file config of the group and run it."""
    nested = {}
    for key, value in overrides.items():
        if value is None or value == ():
            continue
        if key in OPTION_PATHS:
            section, field = OPTION_PATHS[key]
            nested.setdefault(section, {})[field] = value
        elif isinstance(value, dict):
            nested.setdefault(key, {}).update(value)
        else:
            nested[key] = value
    config = merge_config(ctx.obj.get("experiment"), {**nested, "command": command})
    ctx.exit(run(config, ctx.obj["settings"]))
