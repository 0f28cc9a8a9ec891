import click

from eigenbench.commands.utils import invoke
from eigenbench.commands.utils.option_utils import (
    cluster_options,
    mesh_option,
    metric_option,
    overrides,
    perturbation_option,
)


@click.command("hadamard")
@mesh_option
@metric_option
@perturbation_option
@cluster_options
@click.option("--amplitude", type=float, help="Amplitude of random perturbations")
@click.pass_context
def hadamard_cli(ctx, **options):
    """Geometric and discrete branch matrices of a cluster into matrix.csv"""
    invoke(ctx, "hadamard", overrides(options))
