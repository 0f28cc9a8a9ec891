import logging
import sys

import click

from eigenbench.commands.utils import EXIT_INPUT, default_settings, load_config_file, run
from eigenbench.errors import ConfigError


def create_cli():
    @click.group()
    @click.option("--config", "config_path", help="JSON experiment config")
    @click.option("--out", "output_dir", help="Output directory for CSV tables and report.json")
    @click.option("--deterministic", is_flag=True, default=None, help="Omit timestamps from outputs")
    @click.option("--threads", type=click.IntRange(min=1), help="Worker threads for independent solves")
    @click.option("--log-level", type=click.Choice(["DEBUG", "INFO", "WARNING", "ERROR"], case_sensitive=False))
    @click.pass_context
    def cli(ctx, config_path, output_dir, deterministic, threads, log_level):
        """Neumann eigenvalue perturbation experiments on triangulated surfaces"""
        settings = default_settings()
        experiment = {}
        if config_path:
            try:
                experiment = load_config_file(config_path)
            except ConfigError as error:
                click.echo(f"error: {error}", err=True)
                ctx.exit(EXIT_INPUT)
            if not isinstance(experiment, dict):
                click.echo("error: /: experiment config must be a JSON object", err=True)
                ctx.exit(EXIT_INPUT)
        for key, value in (("OUTPUT_DIR", output_dir), ("DETERMINISTIC", deterministic),
                           ("THREADS", threads), ("LOG_LEVEL", log_level)):
            if value is not None:
                settings[key] = value
        if output_dir is not None:
            experiment.pop("output_dir", None)

        logging.basicConfig(
            level=str(settings["LOG_LEVEL"]).upper(),
            stream=sys.stderr,
            format="%(asctime)s %(levelname)s %(name)s: %(message)s",
        )
        ctx.obj = {"settings": settings, "experiment": experiment}

    @cli.command("run")
    @click.pass_context
    def run_config(ctx):
        """Run the command named in the --config file"""
        ctx.exit(run(ctx.obj["experiment"], ctx.obj["settings"]))

    from eigenbench.commands.mesh import mesh_cli
    cli.add_command(mesh_cli)

    from eigenbench.commands.eigs import eigs_cli
    cli.add_command(eigs_cli)

    from eigenbench.commands.hadamard import hadamard_cli
    cli.add_command(hadamard_cli)

    from eigenbench.commands.branches import branches_cli
    cli.add_command(branches_cli)

    from eigenbench.commands.ls import ls_cli
    cli.add_command(ls_cli)

    from eigenbench.commands.generic import generic_cli
    cli.add_command(generic_cli)

    from eigenbench.commands.calculus import calculus_cli
    cli.add_command(calculus_cli)

    return cli
