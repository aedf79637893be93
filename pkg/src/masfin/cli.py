"""Command line entry points.

The CLI is a thin client over the run director and the gateway; all
state lives under the configured data directory, so commands can be
mixed freely with a running server on the same directory.
"""
from __future__ import annotations

import json
import os
import sys
from datetime import date
from pathlib import Path

import click

from .config import (
    RunConfig,
    build_provider,
    load_config,
    load_universe_file,
    require_chat_environment,
)
from .errors import EXIT_USAGE, MasfinError, MissingEnvironment
from .evaluation import evaluate_runs
from .marketdata.service import MarketDataService, SnapshotSpec
from .marketdata.synthetic import generate_fixture_dir
from .metrics import MetricConfig, Unavailable, compute_metric_vector
from .pipeline.runner import AWAITING_PUBLISH, AWAITING_REVIEW, PUBLISHED, RunDirector


def _director(config: RunConfig) -> RunDirector:
    return RunDirector(config.out_dir)


def _load(config_path: str, **overrides) -> RunConfig:
    config = load_config(config_path)
    supplied = {k: v for k, v in overrides.items() if v is not None}
    if supplied:
        config = config.model_copy(update=supplied)
    return config


def _echo_state(state) -> None:
    click.echo(f"run {state.run_id}: {state.status} (stage {state.current_stage})")


@click.group(name="masfin")
def cli() -> None:
    """Weekly portfolio pipeline with human review gates."""


@cli.command()
@click.option("--config", "config_path", required=True, type=click.Path(exists=True))
@click.option("--dest", type=click.Path(), default=None,
              help="Snapshot directory (default <out-dir>/snapshots/<as-of>).")
def snapshot(config_path: str, dest: str | None) -> None:
    """Pin a market snapshot without starting a run."""
    config = _load(config_path)
    symbols, _ = load_universe_file(config.universe_file)
    service = MarketDataService(
        build_provider(config.provider), cache_dir=Path(config.out_dir) / "cache"
    )
    spec = SnapshotSpec(
        universe=symbols,
        as_of=config.as_of,
        window_days=config.snapshot.window_days,
        headline_lookback_days=config.snapshot.headline_lookback_days,
        benchmarks=tuple(config.snapshot.benchmarks),
    )
    target = Path(dest) if dest else Path(config.out_dir) / "snapshots" / config.as_of.isoformat()
    snap = service.pin_snapshot(spec, target)
    click.echo(f"pinned {snap.snapshot_id} ({len(snap.universe)} tickers) at {target}")


@cli.command()
@click.option("--config", "config_path", required=True, type=click.Path(exists=True))
@click.option("--seed", type=int, default=None, help="Override the configured seed.")
@click.option("--backend", type=click.Choice(["scripted", "chat"]), default=None)
@click.option("--auto-approve", is_flag=True, default=None,
              help="Approve every checkpoint and publish without review.")
@click.option("--out-dir", type=click.Path(), default=None)
def run(config_path: str, seed, backend, auto_approve, out_dir) -> None:
    """Start a run and advance it as far as review allows."""
    config = _load(
        config_path,
        seed=seed, backend=backend, auto_approve=auto_approve, out_dir=out_dir,
    )
    require_chat_environment(config)
    director = _director(config)
    state = director.start_run(config)
    click.echo(f"run {state.run_id} created (as of {state.as_of})")
    state = director.advance(state.run_id)
    _echo_state(state)
    if state.status == AWAITING_REVIEW:
        done = state.stages_done[str(state.current_stage)]
        click.echo(
            f"checkpoint {done['checkpoint_id']} awaits review; "
            f"serve the gateway or decide via the API"
        )
    elif state.status == AWAITING_PUBLISH:
        click.echo("allocation ready; publish to release it")
    elif state.status == PUBLISHED:
        _echo_allocation(director, state.run_id)
    elif state.error:
        raise SystemExit(_fail(state.error))


def _fail(message: str) -> int:
    click.echo(f"error: {message}", err=True)
    return 3


def _echo_allocation(director: RunDirector, run_id: str) -> None:
    allocation = director.allocation(run_id)
    if allocation is None:
        return
    click.echo(f"published allocation ({len(allocation.positions)} positions):")
    for pos in allocation.positions:
        click.echo(f"  {pos.symbol:<8} {pos.weight:>8.4f}  {pos.sector}")
    click.echo(f"  weight sum: {allocation.weight_sum():.10f}")


@cli.command()
@click.option("--config", "config_path", required=True, type=click.Path(exists=True))
def runs(config_path: str) -> None:
    """List runs under the configured data directory."""
    director = _director(_load(config_path))
    entries = director.list_runs()
    if not entries:
        click.echo("no runs")
        return
    for state in entries:
        click.echo(
            f"{state.run_id}  {state.status:<17} stage {state.current_stage}  "
            f"as of {state.as_of}"
        )


@cli.command()
@click.argument("checkpoint_id")
@click.argument("verdict", type=click.Choice(["approve", "edit", "reject"]))
@click.option("--config", "config_path", required=True, type=click.Path(exists=True))
@click.option("--note", default="", help="Reviewer note recorded with the decision.")
@click.option("--reviewer", default="cli")
@click.option("--edited-report", "edited_path", type=click.Path(exists=True), default=None,
              help="JSON file with the edited report (verdict 'edit').")
@click.option("--advance/--no-advance", "do_advance", default=True,
              help="Advance the run after the decision lands.")
def decide(checkpoint_id, verdict, config_path, note, reviewer, edited_path, do_advance) -> None:
    """Record a review decision on a pending checkpoint."""
    director = _director(_load(config_path))
    edited = None
    if edited_path:
        edited = json.loads(Path(edited_path).read_text("utf-8"))
    record = director.submit_decision(
        checkpoint_id, verdict, reviewer=reviewer, note=note, edited_report=edited,
    )
    click.echo(f"checkpoint {record.checkpoint_id}: {record.state}")
    if do_advance:
        _echo_state(director.advance(record.run_id))


@cli.command()
@click.argument("run_id")
@click.option("--config", "config_path", required=True, type=click.Path(exists=True))
def publish(run_id: str, config_path: str) -> None:
    """Release the final allocation of a run awaiting publication."""
    director = _director(_load(config_path))
    state = director.publish(run_id, reviewer="cli")
    _echo_state(state)
    _echo_allocation(director, run_id)


@cli.command()
@click.option("--config", "config_path", required=True, type=click.Path(exists=True))
@click.option("--bind", default=None, help="host:port (default from config).")
@click.option("--console", "console_dir", type=click.Path(), default=None,
              help="Directory with a built review console to serve at /.")
def serve(config_path: str, bind: str | None, console_dir: str | None) -> None:
    """Run the review gateway with its background worker."""
    import uvicorn

    from .service import RunWorker, create_app

    config = _load(config_path)
    token = os.environ.get(config.gateway.token_env, "")
    if not token:
        raise MissingEnvironment(
            f"gateway requires {config.gateway.token_env} in the environment"
        )
    director = _director(config)
    console = console_dir or config.gateway.console_dir
    app = create_app(director, token=token, console_dir=console)
    worker = RunWorker(director, poll_interval=config.gateway.poll_interval)
    host, _, port = (bind or config.gateway.bind).rpartition(":")
    if not host or not port.isdigit():
        raise click.UsageError(f"--bind must be host:port, got {bind or config.gateway.bind}")
    worker.start()
    try:
        uvicorn.run(app, host=host, port=int(port), log_level="warning")
    finally:
        worker.stop()


@cli.command()
@click.option("--config", "config_path", required=True, type=click.Path(exists=True))
@click.option("--out", "out_path", type=click.Path(), default=None,
              help="Report directory (default <out-dir>/evaluation).")
def evaluate(config_path: str, out_path: str | None) -> None:
    """Score published runs against the index trackers."""
    config = _load(config_path)
    service = MarketDataService(
        build_provider(config.provider), cache_dir=Path(config.out_dir) / "cache"
    )
    out = Path(out_path) if out_path else Path(config.out_dir) / "evaluation"
    report = evaluate_runs(Path(config.out_dir) / "runs", out, service)
    click.echo(f"evaluated {report['weeks']} weeks -> {out}")
    cumulative = report["cumulative_return"]
    for name in ("masfin", "spy", "qqq", "dia"):
        click.echo(f"  {name:<7} cumulative {cumulative[name]:+.4%}")
    click.echo(f"  win rate {report['win_rate']:.0%}")


@cli.command()
@click.argument("ticker")
@click.option("--config", "config_path", required=True, type=click.Path(exists=True))
@click.option("--as-of", "as_of_text", default=None, help="Override the config date.")
def metrics(ticker: str, config_path: str, as_of_text: str | None) -> None:
    """Print the metric vector for one ticker."""
    config = _load(config_path)
    as_of = date.fromisoformat(as_of_text) if as_of_text else config.as_of
    service = MarketDataService(
        build_provider(config.provider), cache_dir=Path(config.out_dir) / "cache"
    )
    metric_config = MetricConfig(risk_free_annual=config.pipeline.risk_free_annual)
    series = service.fetch_price_history(
        ticker.upper(), as_of, config.snapshot.window_days
    )
    benchmark = None
    if ticker.upper() != metric_config.benchmark_ticker:
        benchmark = service.fetch_price_history(
            metric_config.benchmark_ticker, as_of, config.snapshot.window_days
        )
    vector = compute_metric_vector(series, benchmark, metric_config)
    click.echo(f"{vector.ticker} as of {vector.as_of}:")
    for name, value in vector.items():
        if isinstance(value, Unavailable):
            click.echo(f"  {name:<18} unavailable ({value.reason})")
        else:
            click.echo(f"  {name:<18} {value:+.6f}")


@cli.command(name="gen-fixtures")
@click.argument("dest", type=click.Path())
@click.option("--tickers", default=150, show_default=True)
@click.option("--days", default=120, show_default=True)
@click.option("--seed", default=7, show_default=True)
def gen_fixtures(dest: str, tickers: int, days: int, seed: int) -> None:
    """Write a synthetic price and headline fixture tree for development."""
    path = generate_fixture_dir(Path(dest), n_tickers=tickers, sessions=days, seed=seed)
    click.echo(f"fixtures at {path}")


def main(argv: list[str] | None = None) -> int:
    try:
        cli.main(args=argv, prog_name="masfin", standalone_mode=False)
    except click.UsageError as exc:
        click.echo(f"error: {exc.format_message()}", err=True)
        return EXIT_USAGE
    except click.ClickException as exc:
        exc.show()
        return exc.exit_code
    except click.exceptions.Abort:
        return EXIT_USAGE
    except MasfinError as exc:
        click.echo(f"error: {exc}", err=True)
        return exc.exit_code
    except SystemExit as exc:
        return int(exc.code or 0)
    return 0


if __name__ == "__main__":
    sys.exit(main())
