"""
isoprofile - Command Line
Profile tables, sharpness sweeps, density certificates, oracle comparisons and
needle verification reports.

Usage:
    python -m isoprofile profile --K 0 --N 2 --D 1 --v-log 1e-6:0.5:20
    python -m isoprofile density-check --K 1 --N 2 --D 3 --constant
    python -m isoprofile sharpness --K 0 --N 2 --D 1 --a-log 1e-2:1e-4:3
    python -m isoprofile oracle --K 0 --N 2 --D 1 --v 0.05 --v 0.3
    python -m isoprofile verify --K 0 --N 2 --D 1 --needles 5 --seed 7

Exit status: 0 success, 1 a checked assertion failed, 2 invalid input.
"""

import dataclasses
import io
import json
import logging
import math
import sys
from contextlib import closing
from dataclasses import dataclass, field
from typing import Optional

import click
import numpy as np
import pandas as pd

from .config import DEFAULT_CONFIG
from .density import (
    ModelDensityParams, check_mcp_density, constant_density, density_sup_bound,
    load_tabulated_csv, model_density,
)
from .exceptions import DomainError, InputError, NumericError
from .geometry import IntervalSet, brute_force_min_content
from .kernels import CurvatureParams
from .models import get_db, init_db, record_run
from .needles import (
    check_localized_inequality, load_decomposition, mass_accounting, needle_ball_fraction,
    random_decomposition, sharpness_family, sharpness_ratio, split_by_length,
    verify_theorem_conclusion,
)
from .profile import isoperimetric_profile, log_range, needle_mass, profile_sweep

logger = logging.getLogger(__name__)

LOG_FORMAT = "%(levelname)-5.5s [%(name)s] %(message)s"
FLOAT_FORMAT = "%.17g"
COMMANDS = ("profile", "density-check", "sharpness", "verify", "oracle")

EXIT_OK, EXIT_FAILED, EXIT_INPUT = 0, 1, 2

# Violations listed in a density-check report; the count is always complete
MAX_LISTED_VIOLATIONS = 50
ORACLE_RTOL = 1e-4
DEFAULT_MCP_GRID = 40
DEFAULT_ORACLE_GRID = 512


# ============================================================================
# RUN CONFIGURATION
# ============================================================================

@dataclass
class RunConfig:
    """Everything one invocation needs; built from flags, replayable from the ledger"""

    command: str
    K: float
    N: float
    D: Optional[float] = None
    boundary: bool = False
    v_grid: list = field(default_factory=list)
    a_grid: list = field(default_factory=list)
    output: Optional[str] = None
    fmt: str = "csv"
    tol_quad: Optional[float] = None
    tol_inv: Optional[float] = None
    grid_n: Optional[int] = None
    seed: int = 0
    workers: int = 1
    extended: bool = False
    constant: bool = False
    table: Optional[str] = None
    decomposition: Optional[str] = None
    needles: int = 5
    delta: float = 0.01
    eta: Optional[float] = None
    family: str = "all"
    db: Optional[str] = None

    def __post_init__(self):
        if self.command not in COMMANDS:
            raise InputError(f"Unknown command '{self.command}'")
        if self.fmt not in ("csv", "json"):
            raise InputError(f"Unknown format '{self.fmt}'")
        for name in ("tol_quad", "tol_inv", "grid_n"):
            value = getattr(self, name)
            if value is not None and not value > 0:
                raise InputError(f"--{name.replace('_', '-')} must be positive, got {value}")
        if self.command in ("profile", "oracle") and not self.v_grid:
            raise InputError(f"{self.command} needs a nonempty v grid (--v or --v-log)")
        if self.command == "sharpness" and not self.a_grid:
            raise InputError("sharpness needs a nonempty a grid (--a or --a-log)")
        if self.D is None and not (self.boundary or self.table or self.decomposition):
            raise InputError("--D is required")

    def numerics(self):
        return DEFAULT_CONFIG.with_overrides(
            quad_rel=self.tol_quad, inv_tol=self.tol_inv, workers=self.workers, extended=self.extended,
        )

    def params(self):
        if self.boundary:
            if not self.K > 0:
                raise DomainError(f"--boundary needs K > 0, got {self.K}")
            radius = math.pi / math.sqrt(self.K / (self.N - 1))
            D = radius if self.D is None else self.D
            return CurvatureParams(K=self.K, N=self.N, D=D, boundary=True)
        return CurvatureParams(K=self.K, N=self.N, D=self.D)


# ============================================================================
# OUTPUT
# ============================================================================

def render_table(frame, fmt):
    if fmt == "csv":
        buffer = io.StringIO()
        frame.to_csv(buffer, index=False, float_format=FLOAT_FORMAT, lineterminator="\n")
        return buffer.getvalue()
    return json.dumps(frame.to_dict(orient="records"), indent=2) + "\n"


def render_report(report):
    return json.dumps(report, indent=2) + "\n"


def emit(text, output):
    """Write to the output file (UTF-8, LF) or to stdout"""
    if output:
        with open(output, "w", encoding="utf-8", newline="\n") as handle:
            handle.write(text)
        logger.info("Wrote %s", output)
    else:
        click.echo(text, nl=False)


# ============================================================================
# COMMANDS
# ============================================================================

def _run_profile(config, numerics):
    frame = profile_sweep(config.params(), config.v_grid, numerics)
    emit(render_table(frame, config.fmt), config.output)
    return EXIT_OK, None, frame


def _check_density(config, numerics):
    grid_n = config.grid_n or DEFAULT_MCP_GRID
    if config.table:
        h = load_tabulated_csv(config.table, numerics)
        params = CurvatureParams(K=config.K, N=config.N, D=h.domain_length)
    elif config.constant:
        params = config.params()
        h = constant_density(params.D, config=numerics)
    else:
        params = config.params()
        if len(config.a_grid) != 1:
            raise InputError("density-check needs one of --constant, --table or a single --a")
        h = model_density(ModelDensityParams(params, config.a_grid[0]), numerics)

    mcp = check_mcp_density(h, params, grid_n, numerics)
    integral = h.integral(config=numerics)
    bound = density_sup_bound(params, params.D, numerics)
    normalized = abs(integral - 1) <= 1e-8
    within = h.grid_max() <= bound + 1e-9
    # the sup bound only constrains normalized densities
    passed = mcp.passed and (within or not normalized)
    listed = mcp.to_dict()
    listed["violation_count"] = len(mcp.violations)
    listed["violations"] = listed["violations"][:MAX_LISTED_VIOLATIONS]
    report = {
        "params": params.to_dict(),
        "density": h.to_dict(),
        "integral": integral,
        "normalized": normalized,
        "sup": h.grid_max(),
        "sup_bound": bound,
        "within_sup_bound": within,
        "mcp": listed,
        "passed": passed,
    }
    emit(render_report(report), config.output)
    return (EXIT_OK if passed else EXIT_FAILED), report, None


def _run_sharpness(config, numerics):
    params = config.params()
    rows = []
    for a in config.a_grid:
        v = needle_mass(ModelDensityParams(params, a), numerics)
        ratio = sharpness_ratio(params, a, numerics)
        rows.append({"K": params.K, "N": params.N, "D": params.D, "a": a, "v": v,
                     "ratio": ratio, "deviation": abs(ratio - 1)})
    frame = pd.DataFrame(rows, columns=["K", "N", "D", "a", "v", "ratio", "deviation"])
    emit(render_table(frame, config.fmt), config.output)
    smallest = frame.loc[frame["a"].idxmin()]
    passed = smallest["deviation"] <= numerics.asymptotic_band
    if not passed:
        logger.warning("Sharpness ratio %.6g at a=%g is outside the band", smallest["ratio"], smallest["a"])
    return (EXIT_OK if passed else EXIT_FAILED), {"rows": rows, "passed": bool(passed)}, None


def _run_oracle(config, numerics):
    params = config.params()
    grid_n = config.grid_n or DEFAULT_ORACLE_GRID
    rows = []
    for v in config.v_grid:
        point = isoperimetric_profile(params, v, numerics)
        h = model_density(ModelDensityParams(params, point.a), numerics)
        content, best = brute_force_min_content(h, v, grid_n, config.family, numerics)
        left, right = best.intervals[0]
        rows.append({"K": params.K, "N": params.N, "D": params.D, "v": v, "a": point.a, "I": point.I,
                     "oracle": content, "left": left, "right": right,
                     "rel_err": abs(content - point.I) / point.I})
    frame = pd.DataFrame(rows)
    emit(render_table(frame, config.fmt), config.output)
    passed = bool((frame["rel_err"] <= ORACLE_RTOL).all())
    return (EXIT_OK if passed else EXIT_FAILED), {"rows": rows, "passed": passed}, None


def _run_verify(config, numerics):
    if config.decomposition:
        dec = load_decomposition(config.decomposition, numerics)
    else:
        rng = np.random.default_rng(config.seed)
        dec = random_decomposition(config.params(), config.delta, config.needles, rng, numerics)

    localized = check_localized_inequality(dec, numerics)
    report = {
        "params": dec.params.to_dict(),
        "delta": dec.delta,
        "seed": None if config.decomposition else config.seed,
        "localized": localized.to_dict(),
        "mass_accounting": mass_accounting(dec, numerics),
        "length_split": split_by_length(dec, config.eta or 0.0, numerics),
        "ball_fractions": [needle_ball_fraction(n, numerics) if n.ball_trace is not None else None
                           for n in dec.needles],
    }
    passed = localized.passed
    if config.a_grid:
        theorems = []
        for a in config.a_grid:
            space = sharpness_family(dec.params, a, numerics)
            E = IntervalSet.from_pairs([(0.0, a)], dec.params.D)
            result = verify_theorem_conclusion(space, E, a, eta=config.eta, model_family=True, config=numerics)
            theorems.append(dict(result.to_dict(), a=a))
            passed = passed and result.ok
        report["theorem"] = theorems
    report["passed"] = passed
    emit(render_report(report), config.output)
    return (EXIT_OK if passed else EXIT_FAILED), report, None


DISPATCH = {
    "profile": _run_profile,
    "density-check": _check_density,
    "sharpness": _run_sharpness,
    "oracle": _run_oracle,
    "verify": _run_verify,
}


def _record(config, code, report, frame):
    factory = init_db(config.db)
    with closing(get_db(factory)) as sessions:
        db = next(sessions)
        record_run(db, config.command, dataclasses.asdict(config), code, report, frame)


def run(config):
    """Dispatch one command; returns the exit status"""
    try:
        numerics = config.numerics()
        code, report, frame = DISPATCH[config.command](config, numerics)
    except (InputError, DomainError) as e:
        click.echo(f"Error: {e}", err=True)
        code, report, frame = EXIT_INPUT, {"error": str(e)}, None
    except NumericError as e:
        click.echo(f"Numerical failure: {e}", err=True)
        code, report, frame = EXIT_FAILED, {"error": str(e)}, None
    if config.db:
        _record(config, code, report, frame)
    return code


# ============================================================================
# CLICK SURFACE
# ============================================================================

class LogRange(click.ParamType):
    """lo:hi:n, expanded to n log-spaced values"""

    name = "lo:hi:n"

    def convert(self, value, param, ctx):
        if isinstance(value, list):
            return value
        try:
            lo, hi, n = value.split(":")
            return log_range(float(lo), float(hi), int(n))
        except (ValueError, DomainError) as e:
            self.fail(f"{value!r} is not a valid lo:hi:n log range ({e})", param, ctx)


def curvature_options(func):
    for decorator in reversed([
        click.option("--K", "K", type=float, required=True, help="Ricci lower bound K"),
        click.option("--N", "N", type=float, required=True, help="Dimension bound N > 1"),
        click.option("--D", "D", type=float, default=None, help="Diameter D"),
        click.option("--boundary", is_flag=True, help="Use D = pi*sqrt((N-1)/K) (sphere boundary case)"),
    ]):
        func = decorator(func)
    return func


def numeric_options(func):
    for decorator in reversed([
        click.option("--tol-quad", type=float, default=None, help="Relative quadrature tolerance"),
        click.option("--tol-inv", type=float, default=None, help="Inversion residual tolerance"),
        click.option("--workers", type=int, default=1, show_default=True, help="Parallel sweep workers"),
        click.option("--extended", is_flag=True, help="Extended precision quadrature (mpmath)"),
        click.option("--out", "output", type=click.Path(dir_okay=False), default=None,
                     help="Output file (default: stdout)"),
        click.option("--db", default=None, help="SQLAlchemy URL of a run ledger, e.g. sqlite:///runs.db"),
    ]):
        func = decorator(func)
    return func


def _v_grid(v_values, v_log):
    return list(v_values) + list(v_log or [])


def _launch(ctx, **kwargs):
    try:
        config = RunConfig(**kwargs)
    except InputError as e:
        raise click.UsageError(str(e), ctx=ctx) from e
    ctx.exit(run(config))


@click.group()
@click.option("--verbose", "-v", is_flag=True, help="Debug logging on stderr")
def cli(verbose):
    """
    Local isoperimetric profiles of MCP(K,N) needles.

    Examples:

        isoprofile profile --K 0 --N 2 --D 1 --v-log 1e-6:0.5:20

        isoprofile sharpness --K 0 --N 2 --D 1 --a-log 1e-2:1e-4:3
    """
    logging.basicConfig(level=logging.DEBUG if verbose else logging.WARNING,
                        format=LOG_FORMAT, stream=sys.stderr)


@cli.command()
@curvature_options
@click.option("--v", "v_values", type=float, multiple=True, help="Mass value (repeatable)")
@click.option("--v-log", type=LogRange(), default=None, help="Log-spaced masses lo:hi:n")
@click.option("--format", "fmt", type=click.Choice(["csv", "json"]), default="csv", show_default=True)
@numeric_options
@click.pass_context
def profile(ctx, K, N, D, boundary, v_values, v_log, fmt, **numeric):
    """Tabulate I_{K,N,D}(v) with its small-volume asymptote."""
    _launch(ctx, command="profile", K=K, N=N, D=D, boundary=boundary,
            v_grid=_v_grid(v_values, v_log), fmt=fmt, **numeric)


@cli.command("density-check")
@curvature_options
@click.option("--constant", is_flag=True, help="Check the normalized constant density")
@click.option("--table", type=click.Path(exists=True, dir_okay=False), default=None,
              help="Check a tabulated density (CSV columns x, h)")
@click.option("--a", "a_values", type=float, multiple=True, help="Check the model density h_a")
@click.option("--grid-n", type=int, default=None, help=f"MCP lattice size [default: {DEFAULT_MCP_GRID}]")
@numeric_options
@click.pass_context
def density_check(ctx, K, N, D, boundary, constant, table, a_values, grid_n, **numeric):
    """Certify a density against the MCP(K,N) condition; exit 1 on violations."""
    _launch(ctx, command="density-check", K=K, N=N, D=D, boundary=boundary, constant=constant,
            table=table, a_grid=list(a_values), grid_n=grid_n, fmt="json", **numeric)


@cli.command()
@curvature_options
@click.option("--a", "a_values", type=float, multiple=True, help="Split point (repeatable)")
@click.option("--a-log", type=LogRange(), default=None, help="Log-spaced split points lo:hi:n")
@click.option("--format", "fmt", type=click.Choice(["csv", "json"]), default="csv", show_default=True)
@numeric_options
@click.pass_context
def sharpness(ctx, K, N, D, boundary, a_values, a_log, fmt, **numeric):
    """Ratio of the model content to the sharp constant bound along shrinking a."""
    _launch(ctx, command="sharpness", K=K, N=N, D=D, boundary=boundary,
            a_grid=list(a_values) + list(a_log or []), fmt=fmt, **numeric)


@cli.command()
@curvature_options
@click.option("--v", "v_values", type=float, multiple=True, help="Mass value (repeatable)")
@click.option("--v-log", type=LogRange(), default=None, help="Log-spaced masses lo:hi:n")
@click.option("--grid-n", type=int, default=None, help=f"Oracle lattice size [default: {DEFAULT_ORACLE_GRID}]")
@click.option("--family", type=click.Choice(["all", "anchored", "interior"]), default="all", show_default=True)
@click.option("--format", "fmt", type=click.Choice(["csv", "json"]), default="csv", show_default=True)
@numeric_options
@click.pass_context
def oracle(ctx, K, N, D, boundary, v_values, v_log, grid_n, family, fmt, **numeric):
    """Compare the profile with a brute-force search over intervals."""
    _launch(ctx, command="oracle", K=K, N=N, D=D, boundary=boundary, v_grid=_v_grid(v_values, v_log),
            grid_n=grid_n, family=family, fmt=fmt, **numeric)


@cli.command()
@curvature_options
@click.option("--decomposition", type=click.Path(exists=True, dir_okay=False), default=None,
              help="Needle decomposition JSON (default: a random one)")
@click.option("--needles", type=int, default=5, show_default=True, help="Needles in a random decomposition")
@click.option("--delta", type=float, default=0.01, show_default=True, help="Ball radius delta")
@click.option("--seed", type=int, default=0, show_default=True, help="Seed of the random decomposition")
@click.option("--eta", type=float, default=None, help="Mass relaxation eta (enables the K=N-1 density ratio)")
@click.option("--theorem-a", "a_values", type=float, multiple=True,
              help="Also verify the local conclusion on the model family with E=[0,a]")
@numeric_options
@click.pass_context
def verify(ctx, K, N, D, boundary, decomposition, needles, delta, seed, eta, a_values, **numeric):
    """Check the localized inequality on a needle decomposition; exit 1 when it fails."""
    _launch(ctx, command="verify", K=K, N=N, D=D, boundary=boundary, decomposition=decomposition,
            needles=needles, delta=delta, seed=seed, eta=eta, a_grid=list(a_values), fmt="json", **numeric)


def main():
    """Entry point for the CLI."""
    cli()
