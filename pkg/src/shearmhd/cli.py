"""Command-line entry point.

Every subcommand reads an optional TOML config and accepts flag overrides for
the most common fields.  Exit codes: 0 ok, 2 config error, 3 numeric failure,
4 budget exhausted.
"""

import sys

import click

from . import __version__, harness
from .harness import ConfigError, EXIT_CONFIG, EXIT_NUMERIC
from .linear import ModeIntegrationError


def _load(config, overrides):
    try:
        return harness.load_config(config, overrides)
    except ConfigError as exc:
        click.echo(f"config error: {exc}", err=True)
        sys.exit(EXIT_CONFIG)


_config_opt = click.option(
    "--config", type=click.Path(), default=None, help="TOML run configuration."
)


@click.group()
def main():
    """Spectral toolkit for shear-frame MHD perturbations."""


@main.command("version")
def version_cmd():
    """Print the package version."""
    click.echo(__version__)


@main.command("mode-solve")
@_config_opt
@click.option("--nu", type=float, default=None)
@click.option("--kappa", type=float, default=None)
@click.option("--alpha", type=float, default=None)
@click.option("--k", type=int, default=None)
@click.option("--xi", type=float, default=None)
@click.option("--p1", "p1_0", type=float, default=None)
@click.option("--p2", "p2_0", type=float, default=None)
@click.option("--t-end", "mode_t_end", type=float, default=None)
@click.option("--out", required=True, type=click.Path(), help="Output CSV path.")
@click.option("--trace", type=click.Path(), default=None, help="Optional trace CSV.")
def mode_solve_cmd(config, out, trace, **overrides):
    """Integrate one linear Fourier mode and record its growth statistics."""
    cfg = _load(config, overrides)
    try:
        code = harness.cmd_mode_solve(cfg, out, trace_csv=trace)
    except ModeIntegrationError as exc:
        click.echo(f"integration failure: {exc}", err=True)
        sys.exit(EXIT_NUMERIC)
    sys.exit(code)


@main.command("linear-sweep")
@_config_opt
@click.option("--alpha", type=float, default=None)
@click.option("--seed", type=int, default=None)
@click.option("--out", required=True, type=click.Path(), help="Output CSV path.")
def linear_sweep_cmd(config, out, **overrides):
    """Sweep linear modes over a parameter grid and fit scaling exponents."""
    cfg = _load(config, overrides)
    sys.exit(harness.cmd_linear_sweep(cfg, out))


@main.command("simulate")
@_config_opt
@click.option("--nu", type=float, default=None)
@click.option("--kappa", type=float, default=None)
@click.option("--alpha", type=float, default=None)
@click.option("--nx", type=int, default=None)
@click.option("--ny", type=int, default=None)
@click.option("--t-end", "t_end", type=float, default=None)
@click.option("--eps", type=float, default=None)
@click.option("--eps-tilde", "eps_tilde", type=float, default=None)
@click.option("--seed", type=int, default=None)
@click.option("--linear-only/--nonlinear", "linear_only", default=None)
@click.option("--checkpoint", type=click.Path(), default=None)
@click.option("--resume", type=click.Path(), default=None)
@click.option("--out", required=True, type=click.Path(), help="Diagnostics CSV path.")
def simulate_cmd(config, out, **overrides):
    """Run the nonlinear pseudo-spectral simulation with diagnostics."""
    cfg = _load(config, overrides)
    code = harness.cmd_simulate(cfg, out)
    if code == EXIT_NUMERIC:
        click.echo("numeric failure: resolution overflow (see .error.json)", err=True)
    sys.exit(code)


@main.command("threshold-search")
@_config_opt
@click.option("--eps-lo", "eps_lo", type=float, default=None)
@click.option("--eps-hi", "eps_hi", type=float, default=None)
@click.option("--budget", type=int, default=None)
@click.option("--out", required=True, type=click.Path(), help="Result JSON path.")
def threshold_search_cmd(config, out, **overrides):
    """Bisect the stability threshold amplitude at fixed horizon."""
    cfg = _load(config, overrides)
    code = harness.cmd_threshold_search(cfg, out)
    if code == harness.EXIT_BUDGET:
        click.echo("budget exhausted before bracket closed", err=True)
    sys.exit(code)


@main.command("weights-check")
@_config_opt
@click.option("--nu", type=float, default=None)
@click.option("--kappa", type=float, default=None)
@click.option("--alpha", type=float, default=None)
@click.option("--n-samples", "n_samples", type=int, default=None)
@click.option("--seed", type=int, default=None)
@click.option("--out", required=True, type=click.Path(), help="Report JSON path.")
def weights_check_cmd(config, out, **overrides):
    """Monte-Carlo check of the weight-function inequality suite."""
    cfg = _load(config, overrides)
    sys.exit(harness.cmd_weights_check(cfg, out))


if __name__ == "__main__":
    main()
