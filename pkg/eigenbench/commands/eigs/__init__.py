import click

from eigenbench.commands.utils import invoke
from eigenbench.commands.utils.option_utils import cluster_options, mesh_option, metric_option, overrides


@click.command("eigs")
@mesh_option
@metric_option
@cluster_options
@click.option("--gap-tol", type=float, help="Relative gap below which eigenvalues count as multiple")
@click.pass_context
def eigs_cli(ctx, **options):
    """Lowest Neumann eigenvalues, clustered, into spectrum.csv"""
    invoke(ctx, "eigs", overrides(options))
