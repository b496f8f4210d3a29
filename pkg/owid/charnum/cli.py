"""``charnum`` command line: compute, verify, sweep and chart-norm.

Results go to stdout as JSON (and to ``--out`` when given); progress and errors go to stderr. Exit codes are 0 on
success, 1 when a verification fails, 2 for configuration errors and 3 for atlas or numerical errors.
"""
import functools
import logging
import sys
from typing import Any, Callable, Dict, Optional, Tuple, Type

import click
import structlog

from owid.charnum import ui
from owid.charnum.atlas.builtins import FAMILIES, builtin_manifold
from owid.charnum.atlas.charts import AtlasManifold
from owid.charnum.atlas.partition import build_partition_of_unity
from owid.charnum.atlas.regularity import transition_regularity_report
from owid.charnum.atlas.spec import load_manifold_spec
from owid.charnum.chern_weil import CONNECTIONS, integrate_characteristic_number, parse_polynomial
from owid.charnum.common import AtlasError, CharnumError, ConfigError, DimensionError, VerificationError
from owid.charnum.config import RunConfig
from owid.charnum.holder import chart_norm_report
from owid.charnum.io.df import to_file
from owid.charnum.io.json import save_json, to_jsonable
from owid.charnum.sweep import HARMONIC_TOLERANCE, rows_to_frame, summary, sweep
from owid.charnum.verify import SUITES, run_suite

EXIT_CODES: Tuple[Tuple[Type[Exception], int], ...] = (
    (VerificationError, 1),
    (ConfigError, 2),
    (AtlasError, 3),
    (DimensionError, 3),
)


def exit_code(error: Exception) -> int:
    return next((code for kind, code in EXIT_CODES if isinstance(error, kind)), 3)


def handle_errors(func: Callable[..., Any]) -> Callable[..., Any]:
    """Turn library errors into an error report on stderr and the matching exit code."""

    @functools.wraps(func)
    def wrapper(*args: Any, **kwargs: Any) -> Any:
        try:
            return func(*args, **kwargs)
        except CharnumError as error:
            ui.bail(str(error), exit_code(error), type(error).__name__)

    return wrapper


def _run_config(config_file: Optional[str], **options: Any) -> RunConfig:
    base = RunConfig.from_yaml(config_file) if config_file else RunConfig()
    return base.merged(**options)


def _manifold(run: RunConfig) -> AtlasManifold:
    if run.manifold and run.spec:
        raise ConfigError("Give either --manifold or --spec, not both.")
    if run.spec:
        return load_manifold_spec(run.spec)
    if run.manifold:
        return builtin_manifold(run.manifold)
    raise ConfigError("No manifold given; use --manifold or --spec.")


def _write(payload: Dict[str, Any], out: Optional[str]) -> None:
    payload = to_jsonable(payload)
    ui.emit(payload)
    if out:
        save_json(payload, out)
        ui.log("saved", str(out))


config_option = click.option(
    "--config",
    "config_file",
    type=click.Path(exists=True, dir_okay=False),
    help="YAML run configuration; options given on the command line take precedence.",
)
manifold_option = click.option("--manifold", help="Builtin manifold, e.g. s2, cp2 or t2_perturbed(0.3).")
spec_option = click.option(
    "--spec", type=click.Path(exists=True, dir_okay=False), help="Manifold-spec JSON file (instead of --manifold)."
)
poly_option = click.option("--poly", help="Invariant polynomial: euler, p<j>, c<j> or tr-power:<k1,k2,...>.")
connection_option = click.option(
    "--connection", type=click.Choice(sorted(CONNECTIONS)), help="Levi-Civita (lc) or piecewise Euclidean (pe)."
)
h_option = click.option("--h", type=float, help="Relative quadrature step (cells per support box axis = 1/h).")
out_option = click.option("--out", type=click.Path(dir_okay=False), help="Output file.")


@click.group()
@click.option("-v", "--verbose", is_flag=True, help="Print informational log events to stderr.")
@click.version_option(package_name="owid-charnum")
def cli(verbose: bool) -> None:
    """Characteristic numbers of closed manifolds given by chart atlases."""
    structlog.configure(
        wrapper_class=structlog.make_filtering_bound_logger(logging.INFO if verbose else logging.WARNING),
        logger_factory=structlog.PrintLoggerFactory(sys.stderr),
    )


@cli.command()
@config_option
@manifold_option
@spec_option
@poly_option
@connection_option
@h_option
@out_option
@handle_errors
def compute(config_file: Optional[str], **options: Any) -> None:
    """Integrate an invariant polynomial of the curvature over a manifold."""
    run = _run_config(config_file, **options)
    manifold = _manifold(run)
    polynomial = parse_polynomial(run.poly)
    ui.log("compute", f"{polynomial.name} of {manifold.name}, {CONNECTIONS.get(run.connection, run.connection)}")
    pou = build_partition_of_unity(manifold)
    result = integrate_characteristic_number(manifold, pou, polynomial, run.connection, run.step)
    _write(result.to_dict(), run.out)


@cli.command()
@click.argument("suite", type=click.Choice(list(SUITES)))
@config_option
@click.option("--manifold", "manifolds", multiple=True, help="Builtin manifold to check (repeatable).")
@spec_option
@click.option("--h", type=float, help="Quadrature step of the connection-independence suite.")
@out_option
@handle_errors
def verify(
    suite: str,
    config_file: Optional[str],
    manifolds: Tuple[str, ...],
    spec: Optional[str],
    h: Optional[float],
    out: Optional[str],
) -> None:
    """Run a verification suite; exits with 1 if a check fails."""
    run = _run_config(config_file, spec=spec, h=h, out=out)
    names = list(manifolds) or ([run.manifold] if run.manifold else [])
    atlases = [builtin_manifold(name) for name in names]
    if run.spec:
        atlases.append(load_manifold_spec(run.spec))
    options = {"h": run.h} if run.h is not None and suite == "connection-independence" else {}
    ui.log("verify", f"{suite} on {', '.join(a.name for a in atlases) if atlases else 'all builtin manifolds'}")
    report = run_suite(suite, atlases or None, **options)
    _write(report.to_dict(), run.out)
    if not report.passed:
        failed = report.failures()
        for check in failed:
            ui.warn("failed", f"{check.manifold}: {check.check} ({check.max_deviation:.3g} > {check.tolerance:.3g})")
        raise VerificationError(f"{len(failed)} of {len(report.checks)} checks of {suite} failed.")


@cli.command("sweep")
@config_option
@click.option("--family", type=click.Choice(FAMILIES), help="Manifold family.")
@click.option("--eps", help="Parameter range start:stop:step (stop included).")
@poly_option
@connection_option
@h_option
@out_option
@click.option("--harmonic-only", is_flag=True, help="Estimate Q from charts with small harmonic residual only.")
@click.option("--iota", type=float, help="Injectivity radius floor (label only).")
@click.option("--kappa-lower", type=float, help="Lower curvature bound (label only).")
@click.option("--kappa-upper", type=float, help="Upper curvature bound (label only).")
@handle_errors
def sweep_command(config_file: Optional[str], harmonic_only: bool, **options: Any) -> None:
    """Characteristic number, volume and ratio over a family of metrics, as CSV."""
    run = _run_config(config_file, harmonic_only=harmonic_only or None, **options)
    if run.family is None:
        raise ConfigError("A sweep needs --family.")
    polynomial = parse_polynomial(run.poly)
    values = run.eps_values
    ui.log("sweep", f"{polynomial.name} over {run.family} for {len(values)} values of eps")
    rows = sweep(run.family, values, polynomial, run.connection, run.step, run.harmonic_only)
    out = run.out or f"{run.family}_sweep.csv"
    to_file(rows_to_frame(rows), out)
    ui.log("saved", out)
    ui.emit(to_jsonable(summary(run.family, rows, run.metadata())))


@cli.command("chart-norm")
@config_option
@manifold_option
@spec_option
@click.option("--m", type=int, default=1, show_default=True, help="Highest derivative order.")
@click.option("--alpha", type=float, default=0.5, show_default=True, help="Hölder exponent.")
@click.option("--step", type=float, help="Lattice step (default: a tenth of the chart radius).")
@click.option("--sobolev-p", type=float, help="Also report the scaled Sobolev seminorms for this p.")
@click.option("--transitions", is_flag=True, help="Also report C^{2,α} norms of the transitions.")
@click.option("--harmonic-only", is_flag=True, help="Take Q over charts with small harmonic residual only.")
@out_option
@handle_errors
def chart_norm(
    config_file: Optional[str],
    m: int,
    alpha: float,
    step: Optional[float],
    sobolev_p: Optional[float],
    transitions: bool,
    harmonic_only: bool,
    **options: Any,
) -> None:
    """Harmonic chart norm components and residuals of every chart."""
    run = _run_config(config_file, harmonic_only=harmonic_only or None, **options)
    manifold = _manifold(run)
    ui.log("chart-norm", f"{manifold.name}, m={m}, alpha={alpha:g}")
    reports = [chart_norm_report(chart, m, alpha, step, sobolev_p, chart.index) for chart in manifold.charts]
    counted = [r for r in reports if not run.harmonic_only or r.harmonic_residual <= HARMONIC_TOLERANCE]
    payload: Dict[str, Any] = {
        "manifold": manifold.name,
        "q_total": max((r.q_total for r in counted), default=float("nan")),
        "charts": [r.to_dict() for r in reports],
    }
    if transitions:
        payload["transitions"] = [r.to_dict() for r in transition_regularity_report(manifold, alpha)]
    _write(payload, run.out)


if __name__ == "__main__":
    cli()
