"""Command-line surface: batch generation, standalone validation, prompt
inspection and serving the HTTP API.

Machine-readable output goes to stdout, diagnostics to stderr. Usage errors
exit with 64.
"""

from __future__ import annotations

import json
import sys
import time
from pathlib import Path

import click

from . import massprod, model, prompting, validation
from .generation import HttpBackend, StubBackend, stub_from_fixtures
from .massprod import BackendUnavailable, BatchPolicy
from .store import open_workspace

EXIT_OK = 0
EXIT_WARN = 1
EXIT_FAIL = 2
EXIT_USAGE = 64


def _build_backend(backend: str, fixtures: str | None, fallback: bool):
    if backend == "stub":
        if fixtures:
            return stub_from_fixtures(fixtures, fallback=fallback)
        return StubBackend({}, fallback=fallback)
    return HttpBackend()


def _load_template(path: str | None) -> prompting.PromptTemplate:
    if path:
        return prompting.load_template(path)
    return prompting.default_template()


@click.group()
def cli():
    """Rewrite math problems around student interests, with validation."""


@cli.command()
@click.option("--problems", "problems_path", required=True, type=click.Path(exists=True))
@click.option("--interests", "interests_csv", default=None, help="Comma-separated labels; defaults to the problem set's interests.")
@click.option("--backend", type=click.Choice(["stub", "http"]), default="stub", show_default=True)
@click.option("--fixtures", type=click.Path(exists=True), default=None, help="Stub fixture file.")
@click.option("--fallback", is_flag=True, default=False, help="Let the stub rewrap unknown pairs (flagged for review).")
@click.option("--out", "out_dir", required=True, type=click.Path())
@click.option("--max-attempts", type=int, default=3, show_default=True)
@click.option("--parallelism", type=int, default=4, show_default=True)
@click.option("--accept-on", type=click.Choice(list(massprod.ACCEPT_MODES)), default="pass_or_warn", show_default=True)
@click.option("--template", "template_path", type=click.Path(exists=True), default=None)
def generate(problems_path, interests_csv, backend, fixtures, fallback, out_dir,
             max_attempts, parallelism, accept_on, template_path):
    """Run the problem x interest batch and export it as CSV."""
    problems, set_interests = model.load_problem_set(problems_path)
    if interests_csv:
        wanted = [label.strip() for label in interests_csv.split(",") if label.strip()]
        by_label = {i.label.strip().lower(): i for i in set_interests}
        interests = [by_label.get(w.lower(), model.Interest(label=w)) for w in wanted]
    else:
        interests = set_interests
    if not interests:
        raise click.UsageError("no interests given (use --interests or add them to the problem set)")
    policy = BatchPolicy(max_attempts=max_attempts, parallelism=parallelism, accept_on=accept_on)
    gen_backend = _build_backend(backend, fixtures, fallback)
    template = _load_template(template_path)

    started = time.monotonic()
    with open_workspace(out_dir) as workspace:
        for problem in problems:
            workspace.put_problem(problem, actor="cli")
        for interest in interests:
            workspace.put_interest(interest, actor="cli")
        try:
            table = massprod.run_batch(
                problems, interests, policy, gen_backend, template,
                store=workspace, actor="cli",
            )
        except BackendUnavailable as exc:
            click.echo(f"backend unavailable: {exc}", err=True)
            if exc.table is None:
                sys.exit(EXIT_FAIL)
            table = exc.table
        export_path = Path(out_dir) / "export.csv"
        massprod.export_table(table, workspace, "csv", export_path)
    summary = massprod.batch_summary(table, time.monotonic() - started)
    click.echo(json.dumps(summary))
    click.echo(f"workspace written to {out_dir}, export at {export_path}", err=True)
    sys.exit(EXIT_OK if summary["failed"] == 0 else EXIT_FAIL)


@cli.command()
@click.option("--original", "original_path", required=True, type=click.Path(exists=True), help="Problem JSON file.")
@click.option("--variant", "variant_path", required=True, type=click.Path(exists=True), help="Variant text file.")
@click.option("--interest", "interest_label", required=True)
@click.option("--keywords", "keywords_csv", default=None, help="Comma-separated extra match tokens for the interest.")
def validate(original_path, variant_path, interest_label, keywords_csv):
    """Validate one variant text against its original problem."""
    problem = model.load_problem(original_path)
    variant_text = Path(variant_path).read_text(encoding="utf-8")
    keywords = tuple(k.strip() for k in keywords_csv.split(",") if k.strip()) if keywords_csv else ()
    interest = model.Interest(label=interest_label, keywords=keywords)
    report = validation.validate(problem, variant_text, interest)
    click.echo(json.dumps(report.to_dict(), indent=2, ensure_ascii=False))
    sys.exit({"pass": EXIT_OK, "warn": EXIT_WARN, "fail": EXIT_FAIL}[report.overall])


@cli.command()
@click.option("--problem", "problem_path", required=True, type=click.Path(exists=True))
@click.option("--interest", "interest_label", required=True)
@click.option("--template", "template_path", type=click.Path(exists=True), default=None)
def prompt(problem_path, interest_label, template_path):
    """Print the exact generation prompt for a problem and interest."""
    problem = model.load_problem(problem_path)
    template = _load_template(template_path)
    text = prompting.build_prompt(template, problem, model.Interest(label=interest_label))
    sys.stdout.write(text)
    sys.stdout.flush()


@cli.command()
@click.option("--workspace", "workspace_dir", required=True, type=click.Path())
@click.option("--port", type=int, default=8080, show_default=True)
@click.option("--host", default="127.0.0.1", show_default=True)
@click.option("--backend", type=click.Choice(["stub", "http"]), default="stub", show_default=True)
@click.option("--fixtures", type=click.Path(exists=True), default=None)
@click.option("--fallback", is_flag=True, default=False)
@click.option("--template", "template_path", type=click.Path(exists=True), default=None)
@click.option("--ui-dir", type=click.Path(), default=None, help="Directory of built web UI files to serve under /ui.")
def serve(workspace_dir, port, host, backend, fixtures, fallback, template_path, ui_dir):
    """Run the HTTP API (and web UI, if built) until interrupted."""
    import uvicorn

    from .api import create_app

    gen_backend = _build_backend(backend, fixtures, fallback)
    template = _load_template(template_path)
    with open_workspace(workspace_dir) as workspace:
        app = create_app(workspace, gen_backend, template=template, ui_dir=ui_dir)
        click.echo(f"serving on http://{host}:{port} (workspace {workspace_dir})", err=True)
        uvicorn.run(app, host=host, port=port, log_level="warning")


def main() -> None:
    try:
        cli(standalone_mode=False)
    except click.UsageError as exc:
        click.echo(f"error: {exc.format_message()}", err=True)
        sys.exit(EXIT_USAGE)
    except click.ClickException as exc:
        exc.show()
        sys.exit(exc.exit_code)
    except click.exceptions.Abort:
        sys.exit(130)


if __name__ == "__main__":
    main()
