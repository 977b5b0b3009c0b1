"""Command-line front end.

Thin client over the service handlers: every command parses files/flags into
the same pydantic payloads the HTTP endpoints accept, delegates to
`sigcast.service.handlers`, and renders the response as CSV (stdout or
--output). Results go to the output stream only; errors go to stderr with
exit codes 0 = success, 1 = usage/config error, 2 = data error,
3 = numerical failure.
"""
from __future__ import annotations

import argparse
import json
import sys
from typing import Sequence

from pydantic import ValidationError

from .errors import ConfigError, ConvergenceError, DataError
from .ingest import ingest_csv, panel_to_csv
from .pipeline import FactorPanel
from .service import handlers, schemas

_EXIT_OK = 0
_EXIT_USAGE = 1
_EXIT_DATA = 2
_EXIT_NUMERICAL = 3


class _Parser(argparse.ArgumentParser):
    # argparse exits with status 2 on usage errors; 2 is reserved for data errors here
    def error(self, message: str):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(_EXIT_USAGE)


def _fmt(value: float) -> str:
    return format(float(value), ".12g")


def _fmt_pct(fraction: float | None) -> str:
    return "" if fraction is None else f"{100.0 * fraction:.2f}"


def _emit(text: str, output: str | None) -> None:
    if output:
        with open(output, "w", newline="\n", encoding="utf-8") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def load_config(path: str) -> schemas.RunConfig:
    try:
        with open(path, encoding="utf-8") as fh:
            raw = json.load(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read config file {path!r}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config file {path!r} is not valid JSON: {exc}") from exc
    try:
        return schemas.RunConfig.model_validate(raw)
    except ValidationError as exc:
        raise ConfigError(f"invalid config {path!r}: {exc}") from exc


def _load_panel(config: schemas.RunConfig) -> FactorPanel:
    return ingest_csv(
        config.input,
        date_column=config.date_column,
        target_column=config.target_column,
        factor_columns=config.factor_columns,
        exclude_columns=config.exclude_columns,
        frequency=config.frequency,
    )


def _settings_echo(config: schemas.ModelSettings) -> list[str]:
    return [
        f"# horizons={config.horizons} window={config.window} depth={config.depth}",
        f"# gamma={_fmt(config.gamma)} lambda_grid={','.join(_fmt(v) for v in config.lambda_grid)}",
        f"# rho_min={_fmt(config.rho_min)} rho_max={_fmt(config.rho_max)} screen={str(config.screen).lower()}",
        (
            f"# augment_features={str(config.augment_features).lower()} "
            f"augment_kernel={str(config.augment_kernel).lower()} "
            f"weight_windows={config.weight_windows}"
        ),
    ]


def _run_echo(config: schemas.RunConfig) -> list[str]:
    # file locations deliberately left out so outputs are byte-stable across directories
    return [
        f"# schema={schemas.SCHEMA_VERSION}",
        *_settings_echo(config),
        (
            f"# date_column={config.date_column} target_column={config.target_column} "
            f"frequency={config.frequency or 'none'}"
        ),
    ]


def _screening_echo(lines: list[str]) -> list[str]:
    return [f"# screening: {line}" for line in lines]


def _maybe_report(lines: list[str], verbosity: int) -> None:
    if verbosity >= 1:
        for line in lines:
            print(line, file=sys.stderr)


def _cmd_sig(args: argparse.Namespace) -> None:
    panel = ingest_csv(args.input, date_column=args.date_column, target_column=args.column)
    values = list(panel.target)
    if args.window is not None:
        if args.window < 1:
            raise ConfigError("--window must be >= 1")
        if len(values) < args.window + 1:
            raise DataError(
                f"need {args.window + 1} rows for window {args.window}, got {len(values)}"
            )
        values = values[-(args.window + 1) :]
    req = schemas.SignatureRequest(
        series=schemas.SeriesPayload(values=[float(v) for v in values]),
        depth=args.depth,
        augment=args.augment,
    )
    resp = handlers.handle_signature(req)
    lines = [
        f"# sigcast sig column={args.column} depth={args.depth} "
        f"window={'full' if args.window is None else args.window} "
        f"augment={str(args.augment).lower()}",
        "level,multi_index,value",
    ]
    lines += [f"{e.level},{e.multi_index},{_fmt(e.value)}" for e in resp.entries]
    _emit("\n".join(lines) + "\n", args.output)


def _series_from_csv(path: str, column: str, date_column: str, window: int | None) -> list[float]:
    panel = ingest_csv(path, date_column=date_column, target_column=column)
    values = list(panel.target)
    if window is not None:
        if len(values) < window + 1:
            raise DataError(f"need {window + 1} rows for window {window}, got {len(values)}")
        values = values[-(window + 1) :]
    return [float(v) for v in values]


def _cmd_kernel(args: argparse.Namespace) -> None:
    column_b = args.column_b or args.column
    a = _series_from_csv(args.input_a, args.column, args.date_column, args.window)
    b = _series_from_csv(args.input_b, column_b, args.date_column, args.window)
    req = schemas.KernelRequest(
        a=schemas.SeriesPayload(values=a),
        b=schemas.SeriesPayload(values=b),
        depth=args.depth,
        augment=args.augment,
    )
    resp = handlers.handle_kernel(req)
    lines = [
        f"# sigcast kernel depth={args.depth} augment={str(args.augment).lower()}",
        "metric,value",
        f"kernel,{_fmt(resp.kernel)}",
        f"distance,{_fmt(resp.distance)}",
    ]
    _emit("\n".join(lines) + "\n", args.output)


def _cmd_weights(args: argparse.Namespace) -> None:
    config = load_config(args.config)
    panel = _load_panel(config)
    req = schemas.WeightsRequest(
        panel=handlers.payload_from_panel(panel), settings=config, horizon=args.horizon
    )
    resp = handlers.handle_weights(req)
    _maybe_report(resp.screening, config.verbosity)
    lines = ["# sigcast weights", *_run_echo(config), f"# horizon={resp.horizon}"]
    lines += _screening_echo(resp.screening)
    lines.append("date,weight")
    lines += [f"{d},{_fmt(w)}" for d, w in zip(resp.dates, resp.weights)]
    _emit("\n".join(lines) + "\n", args.output or config.output)


def _cmd_fit(args: argparse.Namespace) -> None:
    config = load_config(args.config)
    panel = _load_panel(config)
    req = schemas.FitRequest(panel=handlers.payload_from_panel(panel), settings=config)
    resp = handlers.handle_fit(req)
    _maybe_report(resp.screening, config.verbosity)
    lines = ["# sigcast fit", *_run_echo(config)]
    lines += _screening_echo(resp.screening)
    lines.append("horizon,lambda,feature,coefficient")
    for fit in resp.fits:
        for entry in fit.support:
            lines.append(f"{fit.horizon},{_fmt(fit.lam)},{entry.feature},{_fmt(entry.coefficient)}")
    _emit("\n".join(lines) + "\n", args.output or config.output)


def _cmd_forecast(args: argparse.Namespace) -> None:
    config = load_config(args.config)
    panel = _load_panel(config)
    req = schemas.ForecastServiceRequest(
        panel=handlers.payload_from_panel(panel), settings=config
    )
    resp = handlers.handle_forecast(req)
    _maybe_report(resp.screening, config.verbosity)
    lines = ["# sigcast forecast", *_run_echo(config)]
    lines += _screening_echo(resp.screening)
    lines.append("origin_date,horizon,forecast")
    lines += [f"{r.origin_date},{r.horizon},{_fmt(r.forecast)}" for r in resp.rows]
    _emit("\n".join(lines) + "\n", args.output or config.output)


def _cmd_backtest(args: argparse.Namespace) -> None:
    config = load_config(args.config)
    panel = _load_panel(config)
    req = schemas.BacktestRequest(
        panel=handlers.payload_from_panel(panel), settings=config, origins=list(args.origins)
    )
    resp = handlers.handle_backtest(req)
    _maybe_report(resp.screening, config.verbosity)
    lines = [
        "# sigcast backtest",
        *_run_echo(config),
        f"# origins={','.join(args.origins)}",
    ]
    lines += _screening_echo(resp.screening)
    # relative errors are percentages at 2 decimal places
    lines.append("origin_date,horizon,actual,forecast,relative_error")
    for r in resp.rows:
        actual = "" if r.actual is None else _fmt(r.actual)
        lines.append(
            f"{r.origin_date},{r.horizon},{actual},{_fmt(r.forecast)},{_fmt_pct(r.relative_error)}"
        )
    lines.append("")
    lines.append("# aggregate mean relative error per horizon (percent)")
    lines.append("horizon,mean_relative_error,n,n_undefined")
    for agg in resp.aggregates:
        lines.append(
            f"{agg.horizon},{_fmt_pct(agg.mean_relative_error)},{agg.n},{agg.n_undefined}"
        )
    _emit("\n".join(lines) + "\n", args.output or config.output)


def _cmd_synth(args: argparse.Namespace) -> None:
    spec_payload = None
    if args.spec:
        try:
            with open(args.spec, encoding="utf-8") as fh:
                raw = json.load(fh)
            spec_payload = schemas.SynthSpecPayload.model_validate(raw)
        except OSError as exc:
            raise ConfigError(f"cannot read spec file {args.spec!r}: {exc}") from exc
        except json.JSONDecodeError as exc:
            raise ConfigError(f"spec file {args.spec!r} is not valid JSON: {exc}") from exc
        except ValidationError as exc:
            raise ConfigError(f"invalid synthetic spec: {exc}") from exc
    resp = handlers.handle_synth(schemas.SynthRequest(seed=args.seed, spec=spec_payload))
    panel = handlers.panel_from_payload(resp)
    _emit(panel_to_csv(panel, date_column=args.date_column), args.output)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="sigcast", description="Signature-transform forecasting toolkit")
    sub = parser.add_subparsers(dest="command", required=True)

    sig = sub.add_parser("sig", help="signature of a column's trailing window")
    sig.add_argument("input", help="panel CSV")
    sig.add_argument("--column", default="y", help="column to sign (default: y)")
    sig.add_argument("--date-column", default="date")
    sig.add_argument("--depth", type=int, default=2)
    sig.add_argument("--window", type=int, default=None, help="trailing window size l (l+1 points)")
    sig.add_argument("--augment", action=argparse.BooleanOptionalAction, default=False)
    sig.add_argument("--output", default=None)
    sig.set_defaults(func=_cmd_sig)

    kernel = sub.add_parser("kernel", help="signature kernel and distance of two series")
    kernel.add_argument("input_a")
    kernel.add_argument("input_b")
    kernel.add_argument("--column", default="y")
    kernel.add_argument("--column-b", default=None, help="column for the second file")
    kernel.add_argument("--date-column", default="date")
    kernel.add_argument("--depth", type=int, default=2)
    kernel.add_argument("--window", type=int, default=None)
    kernel.add_argument("--augment", action=argparse.BooleanOptionalAction, default=True)
    kernel.add_argument("--output", default=None)
    kernel.set_defaults(func=_cmd_kernel)

    weights = sub.add_parser("weights", help="adaptive sample weights for one horizon")
    weights.add_argument("--config", required=True)
    weights.add_argument("--horizon", type=int, default=1)
    weights.add_argument("--output", default=None)
    weights.set_defaults(func=_cmd_weights)

    fit = sub.add_parser("fit", help="fitted coefficients per horizon")
    fit.add_argument("--config", required=True)
    fit.add_argument("--output", default=None)
    fit.set_defaults(func=_cmd_fit)

    fc = sub.add_parser("forecast", help="multi-horizon forecast from the last row")
    fc.add_argument("--config", required=True)
    fc.add_argument("--output", default=None)
    fc.set_defaults(func=_cmd_forecast)

    bt = sub.add_parser("backtest", help="rolling-origin backtest at given origin dates")
    bt.add_argument("--config", required=True)
    bt.add_argument("--origins", nargs="+", required=True, help="origin dates (YYYY-MM-DD)")
    bt.add_argument("--output", default=None)
    bt.set_defaults(func=_cmd_backtest)

    synth = sub.add_parser("synth", help="generate a synthetic panel CSV")
    synth.add_argument("--seed", type=int, required=True)
    synth.add_argument("--spec", default=None, help="regime spec JSON (default: built-in demo)")
    synth.add_argument("--date-column", default="date")
    synth.add_argument("--output", default=None)
    synth.set_defaults(func=_cmd_synth)

    return parser


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        args.func(args)
    except ConfigError as exc:
        print(f"sigcast: config error: {exc}", file=sys.stderr)
        return _EXIT_USAGE
    except ConvergenceError as exc:
        print(f"sigcast: numerical failure: {exc}", file=sys.stderr)
        return _EXIT_NUMERICAL
    except (DataError, ValueError) as exc:
        print(f"sigcast: data error: {exc}", file=sys.stderr)
        return _EXIT_DATA
    except OSError as exc:
        print(f"sigcast: {exc}", file=sys.stderr)
        return _EXIT_DATA
    return _EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
