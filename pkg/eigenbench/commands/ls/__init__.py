import click

from eigenbench.commands.utils import invoke, parse_t_option
from eigenbench.commands.utils.option_utils import (
    cluster_options,
    mesh_option,
    metric_option,
    overrides,
    perturbation_option,
)


@click.command("ls")
@mesh_option
@metric_option
@perturbation_option
@cluster_options
@click.option("--t", "t_values", callback=lambda ctx, param, value: None if value is None else parse_t_option(value),
              help="t value, comma list or start:stop:count")
@click.option("--window", type=float, help="Half-width of the root window around the cluster")
@click.option("--fd-step", type=float, help="Step of the dA/dt check")
@click.pass_context
def ls_cli(ctx, **options):
    """Roots of the reduced matrix against direct eigensolves into roots.csv"""
    invoke(ctx, "ls", overrides(options))
