import click

from eigenbench.commands.utils import invoke
from eigenbench.commands.utils.option_utils import cluster_options, mesh_option, metric_option, overrides


@click.command("generic")
@mesh_option
@metric_option
@cluster_options
@click.option("--samples", type=int)
@click.option("--seed", type=int, help="Seed of the first sample; sample s uses seed + s")
@click.option("--t-probe", type=float, help="t at which split verdicts are confirmed")
@click.option("--confirm", type=int, help="Number of samples confirmed by a direct solve")
@click.option("--family", type=click.Choice(["random", "conformal"]))
@click.option("--amplitude", type=float)
@click.option("--gap-tol", type=float, help="Split threshold relative to max(1, lambda)")
@click.pass_context
def generic_cli(ctx, **options):
    """Fraction of sampled perturbations that split a cluster into generic.csv"""
    invoke(ctx, "generic", overrides(options))
