"""Command-line front door.

Exit codes: 0 success; 2 invalid input (bad profiles/labels/config);
3 policy invariant violation during simulation; 4 nothing fittable.
"""

from __future__ import annotations

import csv
import io
import json
import os
import sys
import threading
import time
from pathlib import Path

import click

from .calibration import (
    ColdStartError,
    ModelRegistry,
    PerceptionLabel,
    evaluate_population,
    fit_ols,
)
from .sensing import LookbackFeature
from .server import RealClock, ServerConfig, StudyServer, VirtualClock
from .server.api import create_app
from .simkit import default_population, profiles_from_json, run_study

LABELS_HEADER = ["participant_id", "as_of_ms", "mean_energy", "windows_present", "rating"]


def _read_labels_csv(path: str) -> list[PerceptionLabel]:
    with open(path, encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames != LABELS_HEADER:
            raise click.ClickException(
                f"{path}: expected header {','.join(LABELS_HEADER)}"
            )
        out = []
        for i, r in enumerate(reader, start=2):
            try:
                feature = LookbackFeature(
                    int(r["as_of_ms"]), float(r["mean_energy"]), int(r["windows_present"])
                )
                out.append(
                    PerceptionLabel(r["participant_id"], int(r["as_of_ms"]), int(r["rating"]), feature)
                )
            except (KeyError, ValueError) as e:
                raise click.ClickException(f"{path}:{i}: {e}")
        return out


def write_labels_csv(labels, path: str) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(LABELS_HEADER)
        for l in labels:
            w.writerow(
                [l.participant_id, l.as_of_ms, repr(l.feature.mean_energy),
                 l.feature.windows_present, l.rating]
            )


def _load_config(config_path: str | None) -> dict:
    if config_path is None:
        return {}
    try:
        with open(config_path, encoding="utf-8") as fh:
            cfg = json.load(fh)
    except (OSError, json.JSONDecodeError) as e:
        raise click.ClickException(f"config {config_path}: {e}")
    if not isinstance(cfg, dict):
        raise click.ClickException(f"config {config_path}: expected a JSON object")
    return cfg


def _setting(explicit, config: dict, key: str, default):
    """Explicit flags beat config-file values beat defaults."""
    if explicit is not None:
        return explicit
    if key in config:
        return config[key]
    return default


@click.group()
def main():
    """Calm-moment prompting service, simulator, and evaluation tools."""


@main.command()
@click.option("--seed", type=int, required=True, help="study seed; fixes every random draw")
@click.option("--profiles", "profiles_path", type=click.Path(), default=None,
              help="JSON list of family profiles (default: built-in 12-family population)")
@click.option("--data-dir", type=click.Path(), default=None, help="event-log directory")
@click.option("--out", "out_dir", type=click.Path(), default=None, help="report output directory")
@click.option("--threshold", type=float, default=None, help="calm trigger threshold (default 3)")
@click.option("--cap", type=int, default=None, help="calm-only daily cap (default 5)")
@click.option("--split", type=float, default=None, help="train fraction (default 0.8)")
@click.option("--weeks", type=int, default=4)
@click.option("--config", "config_path", type=click.Path(), default=None)
def simulate(seed, profiles_path, data_dir, out_dir, threshold, cap, split, weeks, config_path):
    """Run the full virtual four-week study against an in-process server."""
    cfg = _load_config(config_path)
    threshold = float(_setting(threshold, cfg, "threshold", 3.0))
    cap = int(_setting(cap, cfg, "cap", 5))
    split = float(_setting(split, cfg, "split", 0.8))
    data_dir = _setting(data_dir, cfg, "data_dir", None)
    data_dir = os.environ.get("CALMKIT_DATA_DIR", data_dir) if data_dir is None else data_dir
    profiles_path = _setting(profiles_path, cfg, "profiles", None)

    if profiles_path is None:
        profiles = default_population(seed=seed)
    else:
        try:
            profiles = profiles_from_json(Path(profiles_path).read_text(encoding="utf-8"))
        except (OSError, ValueError, json.JSONDecodeError) as e:
            click.echo(f"invalid profiles file: {e}", err=True)
            sys.exit(2)

    log_path = None
    if data_dir is not None:
        os.makedirs(data_dir, exist_ok=True)
        log_path = os.path.join(data_dir, "events.ndjson")
    server_cfg = ServerConfig(
        study_seed=seed, calm_threshold=threshold, calm_cap=cap, study_weeks=weeks
    )
    report, server = run_study(
        profiles, seed, weeks=weeks, log_path=log_path, config=server_cfg, split_ratio=split
    )
    click.echo(f"# run: seed={seed} families={len(profiles)} weeks={weeks}")
    click.echo(report.render_text())
    if out_dir is not None:
        os.makedirs(out_dir, exist_ok=True)
        Path(out_dir, "report.json").write_text(report.to_json(), encoding="utf-8")
        Path(out_dir, "report.txt").write_text(report.render_text(), encoding="utf-8")
        Path(out_dir, "models.json").write_text(server.registry.to_json(), encoding="utf-8")
        write_labels_csv(server.labels, str(Path(out_dir, "labels.csv")))
    server.close()
    if report.invariant_violations:
        click.echo(f"{len(report.invariant_violations)} invariant violations", err=True)
        sys.exit(3)


def _fit_scopes(labels, min_per_scope: int = 5):
    by_scope: dict[str, list] = {"global": list(labels)}
    for l in labels:
        by_scope.setdefault(l.participant_id, []).append(l)
    fitted, skipped = {}, []
    for scope in sorted(by_scope):
        rows = by_scope[scope]
        if len(rows) < min_per_scope:
            skipped.append((scope, len(rows)))
            continue
        fitted[scope] = fit_ols(rows, scope)
    return fitted, skipped


@main.command()
@click.argument("labels_file", type=click.Path(exists=True))
@click.option("--out", "out_path", type=click.Path(), default=None, help="model registry JSON")
def fit(labels_file, out_path):
    """Fit global and per-participant models from a labels CSV."""
    labels = _read_labels_csv(labels_file)
    fitted, skipped = _fit_scopes(labels)
    for scope, n in skipped:
        click.echo(f"skip {scope}: only {n} labels (< 5)")
    for scope in sorted(fitted):
        m = fitted[scope]
        click.echo(f"{scope}: slope={m.slope:.6g} intercept={m.intercept:.6g} n={m.n_train}")
    if not fitted:
        click.echo("no scope has enough labels to fit", err=True)
        sys.exit(4)
    if out_path is not None:
        reg = ModelRegistry()
        for m in fitted.values():
            reg.put(m)
        Path(out_path).write_text(reg.to_json(), encoding="utf-8")


@main.command()
@click.argument("labels_file", type=click.Path(exists=True))
@click.option("--split", type=float, default=0.8, show_default=True)
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--out", "out_path", type=click.Path(), default=None)
def evaluate(labels_file, split, seed, out_path):
    """Shuffled-split R^2: one pooled split shared by global and per-scope fits."""
    labels = _read_labels_csv(labels_file)
    try:
        pop = evaluate_population(labels, split, seed)
    except ColdStartError as e:
        click.echo(str(e), err=True)
        sys.exit(4)
    g = pop.global_report

    def fmt(r):
        return "undefined" if r is None else f"{r:.4f}"

    click.echo(f"global: R^2={fmt(g.r_squared)} n_train={g.n_train} n_test={g.n_test}")
    for rep in pop.participant_reports:
        click.echo(f"{rep.scope}: R^2={fmt(rep.r_squared)} n_train={rep.n_train} n_test={rep.n_test}")
    click.echo(f"mean personalized R^2: {fmt(pop.mean_participant_r_squared)}")
    if out_path is not None:
        fitted, _ = _fit_scopes(labels)
        reg = ModelRegistry()
        for m in fitted.values():
            reg.put(m)
        Path(out_path).write_text(reg.to_json(), encoding="utf-8")


@main.command()
@click.option("--data-dir", type=click.Path(), required=True)
@click.option("--split", type=float, default=0.8, show_default=True)
@click.option("--seed", type=int, default=0, show_default=True)
def report(data_dir, split, seed):
    """Render response-rate and calm-ratio tables from a stored run."""
    log_path = os.path.join(data_dir, "events.ndjson")
    if not os.path.exists(log_path):
        click.echo(f"no event log at {log_path}", err=True)
        sys.exit(2)
    server = StudyServer.replay(log_path, clock=VirtualClock(1 << 62))
    metrics = server.metrics()
    evaluation = {"n_labels": len(server.labels)}
    try:
        pop = evaluate_population(server.labels, split, seed)
        evaluation["global_r_squared"] = pop.global_report.r_squared
        evaluation["mean_personalized_r_squared"] = pop.mean_participant_r_squared
    except ColdStartError:
        evaluation["global_r_squared"] = None
        evaluation["mean_personalized_r_squared"] = None
    from .simkit.study import StudyRunReport

    rep = StudyRunReport(
        seed=seed, n_participants=len(server.participants), weeks=0,
        metrics=metrics, evaluation=evaluation, conservation={},
        invariant_violations=[], response_logs={}, transport_logs={},
    )
    gaps = [
        c for c in ("none", "hourly", "random", "calm_only")
        if metrics[c]["intraday"]["sent"] == 0 and metrics[c]["end_of_day"]["sent"] == 0
    ]
    click.echo(f"# report: data-dir={data_dir} participants={len(server.participants)}")
    click.echo(rep.render_text())
    if gaps:
        click.echo(f"incomplete run: no data for conditions: {', '.join(gaps)}")


@main.command()
@click.option("--host", default="127.0.0.1", show_default=True)
@click.option("--port", type=int, default=8008, show_default=True)
@click.option("--data-dir", type=click.Path(), default=None)
@click.option("--clock", "clock_mode", type=click.Choice(["real", "virtual"]), default="real",
              show_default=True)
@click.option("--study-seed", type=int, default=0, show_default=True)
@click.option("--frontend", "frontend_dir", type=click.Path(), default=None,
              help="static directory for the dashboard SPA")
@click.option("--config", "config_path", type=click.Path(), default=None)
def serve(host, port, data_dir, clock_mode, study_seed, frontend_dir, config_path):
    """Run the real service (dashboard backend)."""
    cfg = _load_config(config_path)
    host = _setting(None, cfg, "host", host)
    port = int(_setting(None, cfg, "port", port))
    data_dir = _setting(data_dir, cfg, "data_dir", None)
    data_dir = os.environ.get("CALMKIT_DATA_DIR", data_dir)
    clock = RealClock() if clock_mode == "real" else VirtualClock(RealClock().now_ms())
    server_cfg = ServerConfig(study_seed=study_seed)
    log_path = None
    if data_dir is not None:
        os.makedirs(data_dir, exist_ok=True)
        log_path = os.path.join(data_dir, "events.ndjson")
    if log_path is not None and os.path.exists(log_path):
        server = StudyServer.replay(log_path, clock=clock, config=server_cfg,
                                    new_log_path=log_path)
    else:
        server = StudyServer(clock=clock, log_path=log_path, config=server_cfg)

    if clock_mode == "real":
        def ticker():
            while True:
                time.sleep(1.0)
                server.tick()

        threading.Thread(target=ticker, daemon=True).start()

    import uvicorn

    app = create_app(server, static_dir=frontend_dir)
    uvicorn.run(app, host=host, port=port, log_level="warning")


if __name__ == "__main__":
    main()
