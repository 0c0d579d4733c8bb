"""``fisherlens`` command line: sweeps, figure curves, least-separation tables,
oracle cross-checks and Cramér-Rao experiments.

Settings come from built-in defaults, then an optional ``key = value`` config
file (``--config``), then command-line flags, later sources winning.
Exit codes: 0 success, 2 bad arguments, 3 numeric non-convergence,
4 failed check.
"""

from __future__ import annotations

import argparse
import itertools
import math
import re
import sys
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Sequence

from . import __version__
from .estimator import crb_experiment
from .fisher import (
    characteristic_residual,
    f_balanced,
    f_eta,
    f_tot,
    f_unentangled,
    s_least_mapped,
    s_least_numeric,
)
from .model import AnalyzerBasis, SourceModel
from .numerics import ConvergenceError
from .oracle import Grid, GridError, f_tot_numeric, f_weights
from .output import SweepResult, csv_text, svg_plot, write_csv

EXIT_OK, EXIT_USAGE, EXIT_NUMERIC, EXIT_CHECK = 0, 2, 3, 4

COMMANDS = ("sweep", "reproduce", "sleast", "oracle-check", "crb")
FIGURES = ("fig2a", "fig2b", "fig3a", "fig3b")
ORACLE_TOL = 1e-6
GRID_CONVERGENCE_TOL = 1e-8


class ConfigError(ValueError):
    pass


# ---------------------------------------------------------------- parsing

_TOKEN = re.compile(r"\s*(pi|π|(?:\d+\.?\d*|\.\d+)(?:[eE][-+]?\d+)?|[*/+-])")


def parse_expr(text: str) -> float:
    """Parse a real or a simple pi fraction such as ``pi/6``, ``3*pi/8``, ``-0.25``."""
    src = str(text).strip()
    tokens, pos = [], 0
    while pos < len(src):
        m = _TOKEN.match(src, pos)
        if not m:
            raise ConfigError(f"cannot parse number {text!r}")
        tokens.append(m.group(1))
        pos = m.end()
        while pos < len(src) and src[pos].isspace():
            pos += 1
    if not tokens:
        raise ConfigError(f"empty number {text!r}")

    sign = 1.0
    while tokens and tokens[0] in "+-":
        sign = -sign if tokens.pop(0) == "-" else sign

    def factor(tok: str) -> float:
        if tok in ("pi", "π"):
            return math.pi
        if tok in "*/+-":
            raise ConfigError(f"cannot parse number {text!r}")
        return float(tok)

    if not tokens:
        raise ConfigError(f"cannot parse number {text!r}")
    value = factor(tokens[0])
    rest = tokens[1:]
    if len(rest) % 2:
        raise ConfigError(f"cannot parse number {text!r}")
    for op, tok in zip(rest[::2], rest[1::2]):
        if op == "*":
            value *= factor(tok)
        elif op == "/":
            value /= factor(tok)
        else:
            raise ConfigError(f"only * and / are supported in {text!r}")
    return sign * value


def parse_list(text: str) -> list[float]:
    return [parse_expr(part) for part in str(text).split(",") if part.strip()]


_BOOL = {"1": True, "true": True, "yes": True, "on": True, "0": False, "false": False, "no": False, "off": False}


def _as_bool(v) -> bool:
    if isinstance(v, bool):
        return v
    try:
        return _BOOL[str(v).strip().lower()]
    except KeyError:
        raise ConfigError(f"not a boolean: {v!r}") from None


def _as_int(v) -> int:
    try:
        return int(str(v).strip())
    except ValueError:
        raise ConfigError(f"not an integer: {v!r}") from None


def _as_float(v) -> float:
    try:
        return float(str(v).strip())
    except ValueError:
        raise ConfigError(f"not a number: {v!r}") from None


# key -> converter; shared by the config file and the flags
CONVERTERS = {
    "sigma": _as_float,
    "r": parse_expr,
    "alpha": parse_expr,
    "phi": parse_expr,
    "s_min": _as_float,
    "s_max": _as_float,
    "points": _as_int,
    "figure": str,
    "seed": _as_int,
    "out": str,
    "svg": _as_bool,
    "with_oracle": _as_bool,
    "s_true": _as_float,
    "samples": _as_int,
    "trials": _as_int,
    "grid_points": _as_int,
    "alphas": parse_list,
    "rs": parse_list,
    "phis": parse_list,
}


def read_config_file(path: str | Path) -> dict:
    """Read ``key = value`` lines; ``#`` starts a comment; unknown keys are errors."""
    values = {}
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from None
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{path}:{lineno}: expected 'key = value'")
        key, value = (p.strip() for p in line.split("=", 1))
        key = key.replace("-", "_")
        if key not in CONVERTERS:
            raise ConfigError(f"{path}:{lineno}: unknown key {key!r}")
        values[key] = CONVERTERS[key](value)
    return values


# ---------------------------------------------------------------- config


@dataclass
class RunConfig:
    command: str
    sigma: float = 1.0
    r: float = 1.0
    alpha: float = math.pi / 6
    phi: float = 0.0
    s_min: float = 0.0
    s_max: float = 5.0
    points: int = 501
    figure_id: str | None = None
    seed: int = 0
    output_path: str | None = None
    emit_svg: bool = False
    with_oracle: bool = False
    s_true: float = 1.0
    samples: int = 1000
    trials: int = 500
    grid_points: int = 4001
    alphas: list[float] | None = None
    rs: list[float] | None = None
    phis: list[float] | None = None

    def __post_init__(self):
        if self.command not in COMMANDS:
            raise ConfigError(f"unknown command {self.command!r}")
        if self.s_min < 0:
            raise ConfigError(f"s_min must be >= 0, got {self.s_min}")
        if not self.s_max > self.s_min:
            raise ConfigError(f"s_max must exceed s_min ({self.s_min}), got {self.s_max}")
        if self.points < 2:
            raise ConfigError(f"points must be >= 2, got {self.points}")
        if not self.sigma > 0:
            raise ConfigError(f"sigma must be positive, got {self.sigma}")
        if self.r < 0:
            raise ConfigError(f"r must be >= 0, got {self.r}")
        if self.figure_id is not None and self.figure_id not in FIGURES:
            raise ConfigError(f"figure must be one of {', '.join(FIGURES)}")

    def canonical(self) -> dict:
        """Settings that determine the numbers; output location is excluded."""
        d = asdict(self)
        d.pop("output_path")
        d.pop("emit_svg")
        return d

    def model(self) -> SourceModel:
        return SourceModel(sigma=self.sigma, r=self.r, phi=self.phi)

    def basis(self) -> AnalyzerBasis:
        return AnalyzerBasis(self.alpha)

    def s_grid(self) -> list[float]:
        span = self.s_max - self.s_min
        n = self.points - 1
        return [self.s_min + span * i / n for i in range(self.points)]


# per-command defaults that differ from the RunConfig ones
COMMAND_DEFAULTS = {
    "oracle-check": {"s_min": 0.1, "s_max": 4.0, "points": 40},
    "sleast": {"alphas": [math.pi / 12, math.pi / 8, math.pi / 6, math.pi / 4], "rs": [1.0], "phis": [0.0, math.pi / 2]},
}

_KEY_TO_FIELD = {"figure": "figure_id", "out": "output_path", "svg": "emit_svg"}


def build_config(command: str, file_values: dict, flag_values: dict) -> RunConfig:
    merged = dict(COMMAND_DEFAULTS.get(command, {}))
    merged.update(file_values)
    merged.update({k: v for k, v in flag_values.items() if v is not None})
    kwargs = {_KEY_TO_FIELD.get(k, k): v for k, v in merged.items()}
    return RunConfig(command=command, **kwargs)


# ---------------------------------------------------------------- commands


def run_sweep(config: RunConfig) -> SweepResult:
    model, basis = config.model(), config.basis()
    columns = ("s", "f_tot", "f_unentangled") + (("f_oracle",) if config.with_oracle else ())
    result = SweepResult(columns=columns, meta=config.canonical())
    for s in config.s_grid():
        row = [s, f_tot(model, basis, s), f_unentangled(model, s)]
        if config.with_oracle:
            row.append(f_tot_numeric(model, basis, s))
        result.rows.append(tuple(row))
    return result


@dataclass
class Curve:
    name: str
    label: str
    result: SweepResult


_R_SET = ((0.0, "0", "0"), (0.25, "1/4", "1-4"), (0.5, "1/2", "1-2"), (1.0, "1", "1"))
_ANGLE_SET = (
    (math.pi / 12, "pi/12", "pi-12"),
    (math.pi / 8, "pi/8", "pi-8"),
    (math.pi / 6, "pi/6", "pi-6"),
    (math.pi / 4, "pi/4", "pi-4"),
)


def figure_curves(figure_id: str) -> list[Curve]:
    """Curves of one figure over ``s`` in [0, 5] (501 points), ``sigma = 1``, ``phi = 0``."""
    if figure_id not in FIGURES:
        raise ConfigError(f"figure must be one of {', '.join(FIGURES)}")
    s_values = [5.0 * i / 500 for i in range(501)]
    curves = []

    def curve(name, label, fn, extra):
        meta = {"figure": figure_id, "curve": label, "sigma": 1.0, "phi": 0.0, **extra}
        res = SweepResult(columns=("s", "f"), meta=meta)
        res.rows = [(s, fn(s)) for s in s_values]
        curves.append(Curve(name, label, res))

    if figure_id in ("fig2a", "fig2b"):
        for r, label, slug in _R_SET:
            model = SourceModel(r=r)
            if figure_id == "fig2a":
                basis = AnalyzerBasis(math.pi / 6)
                fn = lambda s, m=model, b=basis: f_tot(m, b, s)  # noqa: E731
                extra = {"r": r, "alpha": math.pi / 6, "formula": "entangled"}
            else:
                fn = lambda s, m=model: f_unentangled(m, s)  # noqa: E731
                extra = {"r": r, "formula": "unentangled"}
            curve(f"{figure_id}_r_{slug}", f"r={label}", fn, extra)
    elif figure_id == "fig3a":
        for a, label, slug in _ANGLE_SET:
            fn = lambda s, a=a: f_balanced(a, 0.0, 1.0, s)  # noqa: E731
            extra = {"alpha": a, "r": 1.0, "formula": "balanced", "preset": "alpha set chosen here"}
            curve(f"fig3a_alpha_{slug}", f"alpha={label}", fn, extra)
    else:
        for e, label, slug in _ANGLE_SET:
            fn = lambda s, e=e: f_eta(e, 0.0, 1.0, s)  # noqa: E731
            extra = {"eta": e, "r": math.tan(e), "alpha": math.pi / 4, "formula": "eta", "preset": "r set chosen here"}
            curve(f"fig3b_eta_{slug}", f"r=tan({label})", fn, extra)
    return curves


def run_reproduce(config: RunConfig) -> list[Path]:
    if config.figure_id is None:
        raise ConfigError("reproduce needs a figure: " + ", ".join(FIGURES))
    out_dir = Path(config.output_path or ".")
    out_dir.mkdir(parents=True, exist_ok=True)
    curves = figure_curves(config.figure_id)
    written = [write_csv(out_dir / f"{c.name}.csv", c.result) for c in curves]
    if config.emit_svg:
        svg = svg_plot(
            [(c.label, c.result.column("s"), c.result.column("f")) for c in curves],
            xlabel="s / sigma",
            ylabel="Fisher information",
            title=config.figure_id,
        )
        path = out_dir / f"{config.figure_id}.svg"
        path.write_text(svg, encoding="utf-8")
        written.append(path)
    return written


def run_sleast(config: RunConfig) -> SweepResult:
    columns = ("alpha", "r", "phi", "s_least_analytic", "s_least_numeric", "f_min", "residual")
    result = SweepResult(columns=columns, meta=config.canonical())
    for alpha, r, phi in itertools.product(config.alphas, config.rs, config.phis):
        model = SourceModel(sigma=config.sigma, r=r, phi=phi)
        basis = AnalyzerBasis(alpha)
        analytic = s_least_mapped(model, basis)
        num = s_least_numeric(model, basis)
        residual = characteristic_residual(model, basis, num.s) if num.interior else None
        result.rows.append((alpha, r, phi, analytic, num.s, num.f_min, residual))
    return result


@dataclass
class CheckReport:
    passed: bool
    lines: list[str] = field(default_factory=list)
    table: SweepResult | None = None


def run_oracle_check(config: RunConfig) -> CheckReport:
    """Closed form vs grid oracle over the standard parameter sweep."""
    alphas = config.alphas or [0.0, math.pi / 8, math.pi / 6, math.pi / 4, 3 * math.pi / 8]
    rs = config.rs or [0.0, 0.25, 0.5, 1.0, 2.0]
    phis = config.phis or [0.0, math.pi / 4, math.pi / 2, math.pi]
    s_values = config.s_grid()
    sigma = config.sigma
    report = CheckReport(passed=True)
    table = SweepResult(
        columns=("s", "alpha", "r", "phi", "f_tot", "f_oracle", "rel_dev", "f_weights"),
        meta=config.canonical(),
    )
    worst, worst_at = 0.0, None
    try:
        for s, alpha, r, phi in itertools.product(s_values, alphas, rs, phis):
            model = SourceModel(sigma=sigma, r=r, phi=phi)
            basis = AnalyzerBasis(alpha)
            grid = Grid.default(s, sigma, config.grid_points)
            exact = f_tot(model, basis, s)
            numeric = f_tot_numeric(model, basis, s, grid)
            dev = abs(exact - numeric) / max(exact, 1e-3 / sigma ** 2)
            table.rows.append((s, alpha, r, phi, exact, numeric, dev, f_weights(model, basis, s)))
            if dev > worst:
                worst, worst_at = dev, (s, alpha, r, phi)
    except GridError as exc:
        report.passed = False
        report.lines.append(f"FAIL grid-convergence: {exc}")
        report.table = table
        return report

    ok = worst <= ORACLE_TOL
    report.passed &= ok
    where = "" if worst_at is None else " at s={:.4g}, alpha={:.4g}, r={:.4g}, phi={:.4g}".format(*worst_at)
    report.lines.append(
        f"{'PASS' if ok else 'FAIL'} oracle agreement: {len(table.rows)} points, "
        f"worst relative deviation {worst:.3e}{where} (tol {ORACLE_TOL:g})"
    )

    # doubling the grid density must not move the oracle
    probes = [(s_values[len(s_values) // 2], math.pi / 6, 0.5, 0.0), (s_values[0], math.pi / 4, 1.0, 0.0)]
    conv_worst = 0.0
    for s, alpha, r, phi in probes:
        model = SourceModel(sigma=sigma, r=r, phi=phi)
        basis = AnalyzerBasis(alpha)
        g1 = Grid.default(s, sigma, config.grid_points)
        g2 = Grid.default(s, sigma, 2 * config.grid_points - 1)
        conv_worst = max(conv_worst, abs(f_tot_numeric(model, basis, s, g1) - f_tot_numeric(model, basis, s, g2)))
    ok = conv_worst < GRID_CONVERGENCE_TOL
    report.passed &= ok
    report.lines.append(
        f"{'PASS' if ok else 'FAIL'} grid convergence: max change {conv_worst:.3e} on doubling n "
        f"(tol {GRID_CONVERGENCE_TOL:g})"
    )

    zero_rows = [row for row in table.rows if abs(math.cos(row[3])) < 1e-15 or row[2] == 0.0]
    if zero_rows:
        w_max = max(row[7] for row in zero_rows)
        ok = w_max == 0.0
        report.passed &= ok
        report.lines.append(
            f"{'PASS' if ok else 'FAIL'} weight information vanishes when r cos(phi) = 0: "
            f"max {w_max:.3e} over {len(zero_rows)} points"
        )
    report.table = table
    return report


def run_crb(config: RunConfig):
    model, basis = config.model(), config.basis()
    report = crb_experiment(model, basis, config.s_true, config.samples, config.trials, config.seed)
    fields = asdict(report)
    table = SweepResult(
        columns=tuple(fields) + ("normalized_variance",),
        rows=[tuple(fields.values()) + (report.normalized_variance,)],
        meta=config.canonical(),
    )
    return report, table


# ---------------------------------------------------------------- entry point


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    g = common.add_argument_group("parameters")
    g.add_argument("--sigma", type=_as_float, help="PSF width")
    g.add_argument("--r", type=parse_expr, help="amplitude ratio b/a")
    g.add_argument("--alpha", type=parse_expr, help="analyzer angle, e.g. pi/6")
    g.add_argument("--phi", type=parse_expr, help="relative phase, e.g. pi/2")
    g.add_argument("--s-min", dest="s_min", type=_as_float)
    g.add_argument("--s-max", dest="s_max", type=_as_float)
    g.add_argument("--points", type=_as_int)
    g.add_argument("--with-oracle", dest="with_oracle", action="store_const", const=True)
    g.add_argument("--seed", type=_as_int)
    g.add_argument("--out", help="output file (directory for reproduce)")
    g.add_argument("--svg", action="store_const", const=True, help="also write an SVG plot")
    g.add_argument("--config", help="key = value settings file")
    g.add_argument("--alphas", type=parse_list, help="comma-separated analyzer angles")
    g.add_argument("--rs", type=parse_list, help="comma-separated amplitude ratios")
    g.add_argument("--phis", type=parse_list, help="comma-separated phases")
    g.add_argument("--grid-points", dest="grid_points", type=_as_int)
    g.add_argument("--s-true", dest="s_true", type=_as_float)
    g.add_argument("--samples", type=_as_int, help="outcomes per trial")
    g.add_argument("--trials", type=_as_int)

    parser = argparse.ArgumentParser(prog="fisherlens", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"fisherlens {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)
    sub.add_parser("sweep", parents=[common], help="F(s) sweep to CSV")
    rp = sub.add_parser("reproduce", parents=[common], help="write the curves of one figure")
    rp.add_argument("figure", nargs="?", choices=FIGURES)
    sub.add_parser("sleast", parents=[common], help="least resolvable separation table")
    sub.add_parser("oracle-check", parents=[common], help="closed forms vs grid oracle")
    sub.add_parser("crb", parents=[common], help="Monte-Carlo Cramer-Rao experiment")
    return parser


def _emit(result: SweepResult, config: RunConfig, stdout) -> None:
    if config.output_path:
        write_csv(config.output_path, result)
    else:
        stdout.write(csv_text(result))


def main(argv: Sequence[str] | None = None, stdout=None, stderr=None) -> int:
    stdout = stdout or sys.stdout
    stderr = stderr or sys.stderr
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code) if exc.code is not None else EXIT_OK

    flags = {k: v for k, v in vars(args).items() if k not in ("command", "config")}
    try:
        file_values = read_config_file(args.config) if args.config else {}
        config = build_config(args.command, file_values, flags)
    except (ConfigError, ValueError) as exc:
        print(f"fisherlens: error: {exc}", file=stderr)
        return EXIT_USAGE

    try:
        if config.command == "sweep":
            result = run_sweep(config)
            _emit(result, config, stdout)
            if config.emit_svg and config.output_path:
                curves = [("f_tot", result.column("s"), result.column("f_tot")),
                          ("unentangled", result.column("s"), result.column("f_unentangled"))]
                Path(config.output_path).with_suffix(".svg").write_text(
                    svg_plot(curves, "s", "Fisher information"), encoding="utf-8"
                )
        elif config.command == "reproduce":
            for path in run_reproduce(config):
                print(path, file=stdout)
        elif config.command == "sleast":
            _emit(run_sleast(config), config, stdout)
        elif config.command == "oracle-check":
            report = run_oracle_check(config)
            for line in report.lines:
                print(line, file=stdout)
            if config.output_path and report.table is not None:
                write_csv(config.output_path, report.table)
            return EXIT_OK if report.passed else EXIT_CHECK
        elif config.command == "crb":
            report, table = run_crb(config)
            if config.output_path:
                write_csv(config.output_path, table)
            print(
                f"s_true={report.s_true:g} trials={report.trials} m={report.samples_per_trial}\n"
                f"mean estimate     {report.mean_estimate:.6g}\n"
                f"variance          {report.variance:.6g}\n"
                f"CRB (position)    {report.crb_classical:.6g}\n"
                f"CRB (branch QFI)  {report.crb_branch:.6g}\n"
                f"m Var F_cl        {report.normalized_variance:.4f}",
                file=stdout,
            )
    except ConvergenceError as exc:
        print(f"fisherlens: numeric failure: {exc}", file=stderr)
        return EXIT_NUMERIC
    except ConfigError as exc:
        print(f"fisherlens: error: {exc}", file=stderr)
        return EXIT_USAGE
    except OSError as exc:
        print(f"fisherlens: cannot write output: {exc}", file=stderr)
        return EXIT_USAGE
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
