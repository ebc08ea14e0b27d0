"""Command-line batch renderer: plot <kind> --in <csv> --out <img>."""

import sys

import click

from .render import KINDS, PlotJob, RenderError, render


@click.command()
@click.argument("kind", type=click.Choice(KINDS))
@click.option("--in", "in_csv", required=True, type=click.Path(), help="Input CSV.")
@click.option("--out", "out_img", required=True, type=click.Path(),
              help="Output image (.png or .svg).")
@click.option("--title", default=None, help="Optional plot title.")
def main(kind, in_csv, out_img, title):
    """Render a harness CSV to a static image."""
    try:
        summary = render(PlotJob(kind=kind, in_csv=in_csv, out_img=out_img, title=title))
    except RenderError as exc:
        click.echo(f"plot error: {exc}", err=True)
        sys.exit(2)
    click.echo(f"wrote {out_img} ({summary})")


if __name__ == "__main__":
    main()
