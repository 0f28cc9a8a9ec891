import click

from eigenbench.commands.utils import invoke
from eigenbench.core.chart_calculus import SUITES


def _steps(ctx, param, value):
    if value is None:
        return None
    try:
        return [float(part) for part in value.split(",") if part.strip()]
    except ValueError:
        raise click.BadParameter(f"expected comma-separated steps, got {value!r}")


@click.command("verify-calculus")
@click.option("--suite", type=click.Choice(SUITES))
@click.option("--steps", "fd_steps", callback=_steps, help="Comma-separated finite-difference steps")
@click.pass_context
def calculus_cli(ctx, suite, fd_steps):
    """Residuals and convergence orders of the variation identities into calculus.csv"""
    invoke(ctx, "verify-calculus", {"suite": suite, "fd_steps": fd_steps})
