"""Command line interface.

Exit codes: 0 ok, 1 usage error, 2 validation error, 3 a certificate
disagrees with its simulation outside the documented open questions.
"""

from __future__ import annotations

import math
import sys
from pathlib import Path

import click

from gfcstab import catalog, stab_a, stab_b
from gfcstab.config import ScenarioConfig, load_config, parse_quantity
from gfcstab.equilibrium import solve_equilibria
from gfcstab.errors import CertificateRefused, GfcStabError
from gfcstab.model import derived_quantities, headroom_pu, matching_droop
from gfcstab.runner import emit_report, run_scenario

EXIT_OK, EXIT_USAGE, EXIT_VALIDATION, EXIT_CONSISTENCY = 0, 1, 2, 3

FORMATS = click.Choice(["csv", "svg", "both"])


def _power(value: str) -> float:
    return parse_quantity(value, "W", "u_bar")


def _base_config(config_path, scenario_name) -> ScenarioConfig:
    if config_path:
        return load_config(config_path)
    if scenario_name:
        return catalog.scenario(scenario_name)
    return ScenarioConfig(id="default", model="class_a_dc")


@click.group()
def cli():
    """Stability certificates and simulations for grids with grid-forming converters."""


@cli.command("list")
def list_scenarios():
    """List the built-in scenarios."""
    for name in sorted(catalog.SOURCES):
        click.echo(f"{name:<20} {catalog.scenario(name).description}")


@cli.command()
@click.option("--config", "config_path", type=click.Path(exists=True, dir_okay=False))
@click.option("--u-bar", "u_bar", help="converter load, e.g. 175000 or '175 kW'")
def equilibria(config_path, u_bar):
    """Print both dc-link equilibria of a class-A converter."""
    cfg = _base_config(config_path, None)
    u = _power(u_bar) if u_bar else cfg.u_bar
    cp = cfg.converter
    rep = solve_equilibria(u, cp)
    dq = derived_quantities(cp)
    click.echo(f"u_bar               {u:.6f} W")
    click.echo(f"characteristic case {rep.characteristic_case}")
    click.echo(f"x_m                 {dq.x_m:.9f} V")
    click.echo(f"x_tilde             {dq.x_tilde:.9f} V")
    click.echo(f"P_c_max             {dq.P_c_max:.6f} W")
    click.echo(f"u_max               {rep.u_max:.6f} W at {rep.x_at_max:.9f} V")
    if not rep.exists:
        click.echo("no equilibrium: the load exceeds the converter characteristic")
        return
    click.echo(f"x_bar_1             {rep.x_bar_1:.9f} V ({rep.branch_1})")
    if rep.x_bar_2 is not None:
        click.echo(f"x_bar_2             {rep.x_bar_2:.9f} V ({rep.branch_2})")
    if rep.merged:
        click.echo("the two equilibria coincide")


def _show(name, fn):
    try:
        cert = fn()
    except CertificateRefused as exc:
        click.echo(f"{name}: refused")
        for c in exc.conditions:
            click.echo(f"  {c.describe()}")
        return None
    click.echo(f"{name}:")
    for key, value in vars(cert).items():
        if key != "conditions":
            click.echo(f"  {key} = {value}")
    for c in getattr(cert, "conditions", ()):
        click.echo(f"  {c.describe()}")
    return cert


@cli.command()
@click.option("--config", "config_path", type=click.Path(exists=True, dir_okay=False))
@click.option("--u-bar", "u_bar", help="class-A converter load")
@click.option("--u-new", "u_new", help="load after a step, for the instability test")
@click.option("--v-sup", "v_sup", type=float, default=2000.0, show_default=True,
              help="input bound (W) for the L_p bound")
@click.option("--theta", type=float, default=None)
@click.option("--w", "w", type=float, default=0.08, show_default=True,
              help="|w| (p.u.) at which to evaluate the ISS gains")
def certify(config_path, u_bar, u_new, v_sup, theta, w):
    """Print the class-A and class-B certificates for a parameter set."""
    cfg = _base_config(config_path, None)
    cp, mp, net = cfg.converter, cfg.machine, cfg.network
    u = _power(u_bar) if u_bar else cfg.u_bar
    click.echo(f"class-A converter at u_bar = {u:.6g} W")
    _show("region of attraction", lambda: stab_a.roa_certificate(u, cp))
    rate = _show("exponential rate", lambda: stab_a.exp_rate(u, cp))
    _show("L_inf bound", lambda: stab_a.lp_bound(u, cp, math.inf, 0.0, v_sup))
    if rate is not None:
        target = _power(u_new) if u_new else u
        inst = stab_a.chetaev_instability(target, cp, rate.equilibrium)
        click.echo(f"instability at {target:.6g} W from x = {rate.equilibrium:.9f} V:")
        for key, value in vars(inst).items():
            click.echo(f"  {key} = {value}")
    d_pc, p_max = matching_droop(cp, mp, net), headroom_pu(cp, net)
    click.echo(f"class-B converter: d_pc = {d_pc:.6g} p.u., headroom = {p_max:.6g} p.u.")
    click.echo(f"  globally asymptotically stable: {stab_b.gas_check(mp.d_pg, d_pc)}")
    cert = stab_b.iss_gains(theta or cfg.theta, mp, d_pc, p_max)
    click.echo(f"  ISS: c = {cert.c:.6g}, |w| limit = {cert.w_limit:.6g} p.u.")
    click.echo(f"  chi1({w}) = {cert.chi1(w):.6g}, chi2({w}) = {cert.chi2(w):.6g}, "
               f"gamma({w}) = {cert.gamma(w):.6g}")


@cli.command()
@click.option("--config", "config_path", type=click.Path(exists=True, dir_okay=False))
@click.option("--scenario", "scenario_name", type=click.Choice(sorted(catalog.SOURCES)))
@click.option("--out", "out_dir", type=click.Path(file_okay=False), default="out", show_default=True)
@click.option("--tol", type=float, default=None)
@click.option("--format", "fmt", type=FORMATS, default="csv", show_default=True)
def simulate(config_path, scenario_name, out_dir, tol, fmt):
    """Run one scenario and write its trajectory."""
    if not (config_path or scenario_name):
        raise click.UsageError("give --config or --scenario")
    cfg = _base_config(config_path, scenario_name)
    res = run_scenario(cfg, out_dir, fmt, tol)
    click.echo(f"{cfg.id}: {res.outcome}")
    row = res.row
    click.echo(f"certificate {row.certificate}: predicts {row.prediction} ({row.status})")
    for key, value in row.margins.items():
        click.echo(f"  {key} = {value:.9g}")
    for path in res.files:
        click.echo(f"wrote {path}")
    return EXIT_CONSISTENCY if row.status == "DISAGREE" else EXIT_OK


@cli.command()
@click.option("--config", "config_path", type=click.Path(exists=True, dir_okay=False))
@click.option("--u-bar", "u_bar", help="converter load")
@click.option("--lo", type=float, required=True, help="lower end of the bracket (V)")
@click.option("--hi", type=float, required=True, help="upper end of the bracket (V)")
@click.option("--tol-v", "tol_v", type=float, default=0.01, show_default=True)
@click.option("--tol", type=float, default=1e-9, show_default=True)
def roa(config_path, u_bar, lo, hi, tol_v, tol):
    """Locate the region-of-attraction boundary of the class-A dc link by bisection."""
    from gfcstab.sim import empirical_roa_boundary

    cfg = _base_config(config_path, None)
    u = _power(u_bar) if u_bar else cfg.u_bar
    x = empirical_roa_boundary(cfg.converter, u, (lo, hi), tol_V=tol_v, tol=tol)
    rep = solve_equilibria(u, cfg.converter)
    click.echo(f"empirical boundary {x:.6f} V")
    if rep.x_bar_2 is not None:
        click.echo(f"certificate bound  {rep.x_bar_2:.6f} V (difference {x - rep.x_bar_2:+.6f} V)")


@cli.command()
@click.option("--config", "config_paths", multiple=True, type=click.Path(exists=True, dir_okay=False),
              help="scenario file; repeatable. Defaults to the built-in catalog")
@click.option("--only", multiple=True, help="restrict the catalog to these scenario ids")
@click.option("--out", "out_dir", type=click.Path(file_okay=False), default="out", show_default=True)
@click.option("--tol", type=float, default=None)
@click.option("--format", "fmt", type=FORMATS, default="csv", show_default=True)
def batch(config_paths, only, out_dir, tol, fmt):
    """Run many scenarios and write the consistency report."""
    if config_paths:
        configs = [load_config(p) for p in config_paths]
    else:
        configs = catalog.all_scenarios()
    if only:
        unknown = set(only) - {c.id for c in configs}
        if unknown:
            raise click.UsageError(f"unknown scenario ids: {', '.join(sorted(unknown))}")
        configs = [c for c in configs if c.id in only]
    rows = []
    for cfg in sorted(configs, key=lambda c: c.id):
        click.echo(f"running {cfg.id} ...", err=True)
        rows.append(run_scenario(cfg, out_dir, fmt, tol).row)
    text, doc, code = emit_report(rows, out_dir)
    click.echo(text)
    click.echo(f"report written to {Path(out_dir) / 'report.json'}")
    return code


def main(argv=None) -> int:
    try:
        rv = cli.main(args=argv, prog_name="gfcstab", standalone_mode=False)
    except click.exceptions.Exit as exc:
        return exc.exit_code
    except click.UsageError as exc:
        exc.show()
        return EXIT_USAGE
    except click.Abort:
        click.echo("aborted", err=True)
        return EXIT_USAGE
    except (GfcStabError, ValueError, KeyError) as exc:
        click.echo(f"error: {exc}", err=True)
        return EXIT_VALIDATION
    return rv if isinstance(rv, int) else EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
