"""
Reusable click option sets for the command groups
"""
import click

from eigenbench.commands.utils import (
    parse_mesh_option,
    parse_metric_option,
    parse_perturbation_option,
)


def _callback(parser):
    def convert(ctx, param, value):
        return None if value is None else parser(value)
    return convert


def _stack(*decorators):
    def apply(function):
        for decorator in reversed(decorators):
            function = decorator(function)
        return function
    return apply


mesh_option = click.option("--mesh", callback=_callback(parse_mesh_option),
                           help="square:N, disk:RINGS, annulus:RINGS or a mesh file")

metric_option = click.option("--metric", callback=_callback(parse_metric_option),
                             help="identity, diag:A,B or conformal:RHO[,STRENGTH]")

perturbation_option = click.option("--perturb", "perturbation", callback=_callback(parse_perturbation_option),
                                   help="zero, diag:A,B, constant:H11,H12,H22, random:SEED, conformal:C or residual")

cluster_options = _stack(
    click.option("--cluster-index", type=int, help="Position of the cluster in the ascending spectrum"),
    click.option("--near", type=float, help="Select the cluster whose mean is closest to this value"),
    click.option("--cluster-tol", type=float, help="Relative gap that separates clusters"),
    click.option("--eigen-count", type=int, help="Minimum number of eigenpairs; the last cluster is always complete"),
)


def selector(cluster_index, near):
    """Cluster override for the experiment config, or None to keep the file's choice."""
    if cluster_index is not None and near is not None:
        raise click.UsageError("--cluster-index and --near are mutually exclusive")
    if cluster_index is not None:
        return {"index": cluster_index}
    if near is not None:
        return {"near": near}
    return None


def overrides(options):
    """Command-line options as experiment config overrides."""
    options = dict(options)
    options["cluster"] = selector(options.pop("cluster_index", None), options.pop("near", None))
    return options
