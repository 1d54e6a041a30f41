"""Command-line interface: preprocess, fit, simulate, prior-density.

Every subcommand echoes its fully resolved configuration as a JSON record
on the first output line, then writes byte-stable CSV/JSON results (and
PNG figures unless ``--no-figures``).  Options may also come from a
``--config`` file of ``key = value`` lines; explicit flags win over the
file, which wins over built-in defaults.  The ``GEREG_OUTDIR`` environment
variable supplies the default output directory only.

Exit codes: 0 success, 1 usage, 2 input schema, 3 empty or degenerate
data, 4 numerical failure.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Callable

import numpy as np

from . import __version__, ingest, model, simlab
from .priors import AlphaPrior, GammaPrior, PCPrior
from .sampler import ChainConfig, effective_sample_size

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_SCHEMA = 2
EXIT_EMPTY = 3
EXIT_NUMERICAL = 4


class UsageError(Exception):
    pass


class EmptyDataError(Exception):
    pass


class NumericalError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):  # usage problems exit 1, not argparse's 2
        self.print_usage(sys.stderr)
        raise SystemExit(EXIT_USAGE)


def _parse_alpha_prior(text: str) -> AlphaPrior:
    family, _, params = text.partition(":")
    try:
        if family == "pc":
            return PCPrior(float(params))
        if family == "gamma":
            a, b = (float(v) for v in params.split(","))
            return GammaPrior(a, b)
    except (ValueError, TypeError) as exc:
        raise UsageError(f"bad alpha prior {text!r}: {exc}") from exc
    raise UsageError(f"unknown alpha prior family {family!r}; use pc:THETA or gamma:A,B")


def _parse_grid(text: str) -> np.ndarray:
    try:
        start, stop, step = (float(v) for v in text.split(":"))
    except ValueError as exc:
        raise UsageError(f"bad grid {text!r}; use START:STOP:STEP") from exc
    if step <= 0 or stop < start:
        raise UsageError(f"bad grid {text!r}: need step > 0 and stop >= start")
    count = int(math.floor((stop - start) / step + 1e-9)) + 1
    return start + step * np.arange(count)


def _parse_probs(text: str) -> tuple[float, ...]:
    try:
        probs = tuple(float(v) for v in text.split(","))
    except ValueError as exc:
        raise UsageError(f"bad probability list {text!r}") from exc
    if any(not 0 < p < 1 for p in probs):
        raise UsageError("probabilities must lie strictly inside (0, 1)")
    return probs


@dataclass(frozen=True)
class _Opt:
    name: str
    type: Callable[[str], Any]
    default: Any
    help: str
    flag: bool = False  # boolean switch


_COMMON = [_Opt("config", str, None, "key=value file; flags override it")]

_OPTIONS: dict[str, list[_Opt]] = {
    "preprocess": [
        _Opt("region", str, None, "region label to extract (required)"),
        _Opt("out", str, None, "output wet-day series CSV (required)"),
    ],
    "fit": [
        _Opt("model", str, "spline", "rate model: linear or spline"),
        _Opt("K", int, 12, "number of spline basis functions"),
        _Opt("alpha_prior", str, "pc:2.5", "shape prior, pc:THETA or gamma:A,B"),
        _Opt("iters", int, 10000, "MCMC iterations"),
        _Opt("burnin", int, 3000, "burn-in iterations"),
        _Opt("thin", int, 5, "thinning interval"),
        _Opt("seed", int, 0, "RNG seed"),
        _Opt("theta_grid", str, None, "START:STOP:STEP grid of pc-prior rates; "
                                      "the minimum-WAIC rate is selected"),
        _Opt("probs", str, "0.3,0.5,0.7", "probability-rainfall levels"),
        _Opt("outdir", str, None, "output directory"),
        _Opt("no_figures", None, False, "skip PNG figure rendering", flag=True),
    ],
    "simulate": [
        _Opt("setting", int, None, "study setting 1..8 (required)"),
        _Opt("replicates", int, 1000, "replicates per cell"),
        _Opt("seed", int, 0, "base RNG seed"),
        _Opt("jobs", int, os.cpu_count() or 1, "parallel worker processes"),
        _Opt("outdir", str, None, "output directory"),
        _Opt("no_figures", None, False, "skip PNG figure rendering", flag=True),
    ],
    "prior-density": [
        _Opt("theta", float, None, "pc-prior rate (required)"),
        _Opt("grid", str, "0.01:5:0.01", "shape grid START:STOP:STEP"),
        _Opt("out", str, None, "output CSV (required)"),
        _Opt("no_figures", None, False, "skip PNG figure rendering", flag=True),
    ],
}

_REQUIRED = {
    "preprocess": ("region", "out"),
    "fit": ("outdir",),
    "simulate": ("setting", "outdir"),
    "prior-density": ("theta", "out"),
}


def _read_config_file(path: str) -> dict[str, str]:
    values = {}
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise UsageError(f"cannot read config file {path}: {exc}") from exc
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        key, sep, value = line.partition("=")
        if not sep:
            raise UsageError(f"config line {lineno}: expected key = value, got {raw!r}")
        values[key.strip().replace("-", "_")] = value.strip()
    return values


def _resolve(command: str, args: argparse.Namespace) -> dict[str, Any]:
    """flag > config file > environment (outdir only) > default."""
    opts = _COMMON + _OPTIONS[command]
    file_values = _read_config_file(args.config) if args.config else {}
    known = {o.name for o in opts}
    for key in file_values:
        if key not in known:
            print(f"warning: config key {key!r} is not an option of {command}; ignored",
                  file=sys.stderr)
    resolved: dict[str, Any] = {}
    for opt in opts:
        if opt.name == "config":
            resolved["config"] = args.config
            continue
        flag_value = getattr(args, opt.name)
        if flag_value is not None and not (opt.flag and flag_value is False):
            resolved[opt.name] = flag_value
        elif opt.name in file_values:
            raw = file_values[opt.name]
            if opt.flag:
                resolved[opt.name] = raw.lower() in ("1", "true", "yes")
            else:
                try:
                    resolved[opt.name] = opt.type(raw)
                except ValueError as exc:
                    raise UsageError(f"config value {opt.name}={raw!r}: {exc}") from exc
        elif opt.name == "outdir" and os.environ.get("GEREG_OUTDIR"):
            resolved[opt.name] = os.environ["GEREG_OUTDIR"]
        else:
            resolved[opt.name] = opt.default
    for name in _REQUIRED[command]:
        if resolved.get(name) is None:
            raise UsageError(f"missing required option --{name.replace('_', '-')}")
    return resolved


def _echo_provenance(command: str, resolved: dict[str, Any], extra: dict | None = None) -> None:
    record = {"command": command, "version": __version__, **resolved}
    if extra:
        record.update(extra)
    print(json.dumps(record, sort_keys=True, default=str))


def _write_csv(path, header: list[str], rows) -> None:
    with open(path, "w", newline="") as fh:
        fh.write(",".join(header) + "\n")
        for row in rows:
            fh.write(",".join(repr(v) if isinstance(v, float) else str(v) for v in row) + "\n")


def _write_json(path, payload: dict) -> None:
    with open(path, "w") as fh:
        json.dump(payload, fh, sort_keys=True, indent=2)
        fh.write("\n")


# ---------------------------------------------------------------------------
# subcommands


def cmd_preprocess(input_path: str, resolved: dict[str, Any]) -> int:
    records = ingest.read_daily_csv(input_path)
    _echo_provenance("preprocess", {**resolved, "input": input_path})
    print(f"rows read: {len(records)}")
    records = ingest.filter_jjas(records)
    print(f"after monsoon-month filter: {len(records)}")
    records = ingest.drop_dry_days(records)
    print(f"after dry-day removal: {len(records)}")
    if not records:
        raise EmptyDataError("no wet days")
    series = ingest.build_series(records, resolved["region"])
    print(f"series rows for {resolved['region']!r}: {len(series)}")
    if len(series) < 5:
        raise EmptyDataError("too few wet days for outlier screening")
    keep_mask = ingest.adjusted_keep_mask(series.rainfall_mm)
    filtered = ingest.WetDaySeries(region=series.region,
                                   year=series.year[keep_mask],
                                   rainfall_mm=series.rainfall_mm[keep_mask])
    print(f"after outlier removal: {len(filtered)} (removed {int((~keep_mask).sum())})")
    if not len(filtered):
        raise EmptyDataError("no wet days")
    ingest.write_series_csv(resolved["out"], filtered)
    print(f"wrote {resolved['out']}")
    return EXIT_OK


def _fit_once(spec: model.ModelSpec, y, x, config: ChainConfig) -> model.FittedModel:
    fitted = model.fit_model(spec, y, x, config)
    if fitted.draws.failed:
        raise NumericalError("chain flagged zero post-burn-in acceptance: "
                             + ", ".join(fitted.draws.flags))
    return fitted


def cmd_fit(series_path: str, resolved: dict[str, Any]) -> int:
    years, rain = ingest.read_series_csv(series_path)
    if years.size == 0:
        raise EmptyDataError("series file has no rows")
    domain = (float(years.min()), float(years.max()))
    if domain[0] == domain[1]:
        raise EmptyDataError("all rows share one year; covariate domain is degenerate")
    if resolved["model"] not in (model.LINEAR, model.SPLINE):
        raise UsageError(f"unknown model {resolved['model']!r}; use linear or spline")

    try:
        config = ChainConfig(n_iter=resolved["iters"], burn_in=resolved["burnin"],
                             thin=resolved["thin"], seed=resolved["seed"])
    except ValueError as exc:
        raise UsageError(str(exc)) from exc
    if config.n_retained < 2:
        raise UsageError("fewer than 2 draws would be retained; lengthen the chain")
    prior = _parse_alpha_prior(resolved["alpha_prior"])
    probs = _parse_probs(resolved["probs"])
    _echo_provenance("fit", {**resolved, "series": series_path, "domain": list(domain),
                             "n_obs": int(years.size)})

    def build_spec(alpha_prior: AlphaPrior) -> model.ModelSpec:
        if resolved["model"] == model.LINEAR:
            return model.ModelSpec.linear(domain, alpha_prior)
        return model.ModelSpec.spline(resolved["K"], domain, alpha_prior)

    theta_grid_results = []
    theta_selected = None
    if resolved["theta_grid"] is not None:
        if not isinstance(prior, PCPrior):
            raise UsageError("--theta-grid applies to the pc alpha prior only")
        best = None
        for theta in _parse_grid(resolved["theta_grid"]):
            candidate = _fit_once(build_spec(PCPrior(float(theta))), rain, years, config)
            theta_grid_results.append({"theta": float(theta), "waic": candidate.waic})
            if best is None or candidate.waic < best.waic:
                best, theta_selected = candidate, float(theta)
        fitted = best
    else:
        fitted = _fit_once(build_spec(prior), rain, years, config)

    outdir = Path(resolved["outdir"])
    outdir.mkdir(parents=True, exist_ok=True)
    draws = fitted.draws
    K = draws.beta.shape[1]
    _write_csv(outdir / "draws.csv",
               ["alpha"] + [f"beta_{k + 1}" for k in range(K)],
               (tuple(float(v) for v in row)
                for row in np.column_stack([draws.alpha, draws.beta])))

    grid = np.arange(int(domain[0]), int(domain[1]) + 1, dtype=float)
    mu = model.mean_curve(fitted, grid)
    prob_curves = model.probability_rainfall(fitted, grid, probs)
    if fitted.spec.rate_form == model.SPLINE:
        roc = model.rate_of_change(fitted, grid)
    else:
        roc = model.linear_trend_slope(fitted, grid)

    header = ["year", "mu_mean", "mu_lo95", "mu_hi95"]
    columns = [grid, mu.mean, mu.lo, mu.hi]
    for p in probs:
        tag = f"prain{int(round(100 * p))}"
        header += [f"{tag}_mean", f"{tag}_lo95", f"{tag}_hi95"]
        columns += [prob_curves[p].mean, prob_curves[p].lo, prob_curves[p].hi]
    header += ["dmu_dt_mean", "dmu_dt_lo95", "dmu_dt_hi95"]
    columns += [roc.mean, roc.lo, roc.hi]
    _write_csv(outdir / "summary.csv", header,
               ((int(row[0]),) + tuple(float(v) for v in row[1:])
                for row in np.column_stack(columns)))

    shift = model.decadal_shift(fitted)
    payload = {
        "waic": fitted.waic,
        "theta_selected": theta_selected,
        "theta_grid": theta_grid_results or None,
        "acceptance_rates": {
            "alpha": float(draws.acceptance_rates[0]),
            "beta": [float(v) for v in draws.acceptance_rates[1:]],
        },
        "ess": {
            "alpha": effective_sample_size(draws.alpha),
            "beta": [effective_sample_size(draws.beta[:, k]) for k in range(K)],
        },
        "decadal_shift": {"mean": shift.mean, "lo95": shift.lo, "hi95": shift.hi},
        "model": resolved["model"],
        "alpha_posterior_mean": float(draws.alpha.mean()),
        "alpha_posterior_sd": float(draws.alpha.std(ddof=1)),
    }
    _write_json(outdir / "waic.json", payload)

    if not resolved["no_figures"]:
        from . import report
        annual_years = np.unique(years)
        annual_means = np.array([rain[years == yr].mean() for yr in annual_years])
        report.save_mean_curve_figure(outdir / "fig_mean_curve.png", grid, mu,
                                      annual_years, annual_means)
        report.save_probability_rainfall_figure(outdir / "fig_probability_rainfall.png",
                                                grid, prob_curves)
        report.save_rate_of_change_figure(outdir / "fig_rate_of_change.png", grid, roc)

    print(f"waic: {fitted.waic!r}" + ("" if theta_selected is None
                                      else f" (theta selected: {theta_selected:g})"))
    print(f"wrote {outdir / 'draws.csv'}, {outdir / 'summary.csv'}, {outdir / 'waic.json'}")
    return EXIT_OK


def cmd_simulate(resolved: dict[str, Any]) -> int:
    catalog = simlab.setting_catalog()
    if resolved["setting"] not in catalog:
        raise UsageError(f"setting must be one of {sorted(catalog)}")
    setting = catalog[resolved["setting"]]
    _echo_provenance("simulate", {**resolved, "truth": setting.truth,
                                  "fits": list(setting.fits),
                                  "priors": [p.label for p in setting.priors]})
    records = simlab.run_setting(setting, resolved["replicates"], resolved["seed"],
                                 jobs=resolved["jobs"])
    rows = simlab.aggregate(records)
    outdir = Path(resolved["outdir"])
    outdir.mkdir(parents=True, exist_ok=True)
    simlab.write_replicates_csv(outdir / "replicates.csv", records)
    simlab.write_aggregate_csv(outdir / "aggregate.csv", rows)
    n_failed = sum(r.failed for r in records)
    print(f"replicate rows: {len(records)} (failed chains: {n_failed})")
    if not resolved["no_figures"]:
        from . import report
        report.save_simulation_figures(outdir, rows)
    print(f"wrote {outdir / 'replicates.csv'}, {outdir / 'aggregate.csv'}")
    return EXIT_OK


def cmd_prior_density(resolved: dict[str, Any]) -> int:
    from .priors import pc_log_density

    theta = resolved["theta"]
    if theta <= 0:
        raise UsageError("theta must be positive")
    alphas = _parse_grid(resolved["grid"])
    if np.any(alphas <= 0):
        raise UsageError("shape grid must be strictly positive")
    _echo_provenance("prior-density", resolved)
    density = np.exp(pc_log_density(alphas, theta))
    _write_csv(resolved["out"], ["alpha", "density"],
               ((float(a), float(d)) for a, d in zip(alphas, density)))
    if not resolved["no_figures"]:
        from . import report
        report.save_prior_density_figure(str(Path(resolved["out"]).with_suffix(".png")),
                                         alphas, density, theta)
    print(f"wrote {resolved['out']}")
    return EXIT_OK


# ---------------------------------------------------------------------------
# entry point


def build_parser() -> _Parser:
    parser = _Parser(prog="gereg",
                     description="Bayesian GE regression for wet-day rainfall trends")
    parser.add_argument("--version", action="version", version=f"gereg {__version__}")
    sub = parser.add_subparsers(dest="subcommand", metavar="SUBCOMMAND")

    def add_options(p: argparse.ArgumentParser, command: str) -> None:
        for opt in _COMMON + _OPTIONS[command]:
            flag = "--" + opt.name.replace("_", "-")
            if opt.flag:
                p.add_argument(flag, action="store_const", const=True, default=None,
                               help=opt.help)
            else:
                p.add_argument(flag, type=opt.type, default=None, help=opt.help)

    p = sub.add_parser("preprocess", help="daily CSV -> wet-day series CSV")
    p.add_argument("input", help="daily rainfall CSV (date,region,rainfall_mm)")
    add_options(p, "preprocess")

    p = sub.add_parser("fit", help="fit the GE regression to a wet-day series")
    p.add_argument("series", help="wet-day series CSV (year,rainfall_mm)")
    add_options(p, "fit")

    p = sub.add_parser("simulate", help="run one simulation-study setting")
    add_options(p, "simulate")

    p = sub.add_parser("prior-density", help="tabulate the shape-prior density")
    add_options(p, "prior-density")
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.subcommand is None:
        parser.print_usage(sys.stderr)
        return EXIT_USAGE
    try:
        resolved = _resolve(args.subcommand, args)
        if args.subcommand == "preprocess":
            return cmd_preprocess(args.input, resolved)
        if args.subcommand == "fit":
            return cmd_fit(args.series, resolved)
        if args.subcommand == "simulate":
            return cmd_simulate(resolved)
        return cmd_prior_density(resolved)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except ingest.SchemaError as exc:
        print(f"input error: {exc}", file=sys.stderr)
        return EXIT_SCHEMA
    except FileNotFoundError as exc:
        print(f"input error: {exc}", file=sys.stderr)
        return EXIT_SCHEMA
    except EmptyDataError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_EMPTY
    except NumericalError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL


if __name__ == "__main__":
    sys.exit(main())
