import click

from eigenbench.commands.utils import invoke
from eigenbench.commands.utils.option_utils import (
    cluster_options,
    mesh_option,
    metric_option,
    overrides,
    perturbation_option,
)


@click.command("branches")
@mesh_option
@metric_option
@perturbation_option
@cluster_options
@click.option("--tmin", type=float)
@click.option("--tmax", type=float)
@click.option("--steps", type=int, help="Number of t values between tmin and tmax")
@click.option("--window", type=float, help="Half-width of the tracking window")
@click.pass_context
def branches_cli(ctx, **options):
    """Track the eigenvalue branches of a cluster in t into branches.csv"""
    invoke(ctx, "branches", overrides(options))
