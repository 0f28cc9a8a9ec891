import click

from eigenbench.commands.utils import invoke
from eigenbench.commands.utils.option_utils import mesh_option, metric_option


@click.group("mesh")
def mesh_cli():
    """Parameter domains"""


@mesh_cli.command("gen")
@mesh_option
@click.option("--shape", type=click.Choice(["square", "disk", "annulus"]), help="Generated domain")
@click.option("--n", "resolution", type=int, help="Subdivisions of the square, or rings of a disk or annulus")
@click.option("--rings", type=int, help="Rings of a disk or annulus")
@click.option("--inner-radius", type=float, help="Hole radius of the annulus")
@click.option("--reorient", is_flag=True, default=None, help="Flip clockwise triangles of a loaded mesh")
@metric_option
@click.option("--out", "mesh_file", type=click.Path(dir_okay=False), help="Mesh file to write (default <out>/mesh.txt)")
@click.pass_context
def generate(ctx, mesh, shape, resolution, rings, inner_radius, reorient, metric, mesh_file):
    """Generate or load a mesh, validate it and write it with metric.csv"""
    if mesh and (shape or resolution is not None or rings is not None):
        raise click.UsageError("--mesh cannot be combined with --shape, --n or --rings")
    mesh = dict(mesh or {})
    if shape:
        mesh["shape"] = shape
    if resolution is not None:
        mesh["n" if shape in (None, "square") else "rings"] = resolution
    if rings is not None:
        mesh["rings"] = rings
    if inner_radius is not None:
        mesh["inner_radius"] = inner_radius
    if reorient:
        mesh["reorient"] = True
    invoke(ctx, "mesh", {"mesh": mesh or None, "metric": metric, "mesh_file": mesh_file})
