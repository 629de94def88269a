"""Command-line entry points.

Subcommands are thin adapters over the library: parse flags, dispatch,
format.  Result documents go to stdout as JSON so they are pipeable;
progress and errors go to stderr.  Exit codes: 0 success, 1 domain
error, 2 usage error.
"""

from __future__ import annotations

import importlib.resources as resources
import json
import math
import pathlib
import sys

import click

from .command import (
    CommandError,
    Utterance,
    default_vocabulary,
    load_vocabulary,
    match_utterance,
)
from .detection import ClassList, MalformedLine, summarize_dataset
from .geometry import WorldPoint
from .kinematics import ArmGeometry, ik_all_solutions
from .scenario import ScenarioParseError
from .simulator import report_json, run_scenario

USAGE_ERROR = 2
DOMAIN_ERROR = 1


def _fail(error: Exception) -> None:
    click.echo(f"{type(error).__name__}: {error}", err=True)
    sys.exit(DOMAIN_ERROR)


def _parse_triple(value: str, name: str) -> tuple[float, float, float]:
    parts = value.split(",")
    if len(parts) != 3:
        raise click.BadParameter(f"{name} expects three comma-separated numbers")
    try:
        return tuple(float(p) for p in parts)
    except ValueError:
        raise click.BadParameter(f"{name} has a non-numeric value") from None


@click.group()
def main():
    """Deterministic pick-and-place simulator and tools."""


@main.group()
def sim():
    """Scenario simulation."""


@sim.command("run")
@click.argument("scenario_path", type=click.Path(exists=True, dir_okay=False))
@click.option("--seed", type=int, default=None, help="Override the scenario seed.")
@click.option("--report", "report_path", type=click.Path(dir_okay=False), default=None,
              help="Also write the report to this file.")
def sim_run(scenario_path, seed, report_path):
    """Run a scenario file and print the JSON report."""
    text = pathlib.Path(scenario_path).read_text(encoding="utf-8")
    if seed is not None:
        text = _override_seed(text, seed)
    try:
        report = run_scenario(text)
    except ScenarioParseError as exc:
        _fail(exc)
    doc = report_json(report)
    click.echo(doc)
    if report_path:
        pathlib.Path(report_path).write_text(doc + "\n", encoding="utf-8")


def _override_seed(text: str, seed: int) -> str:
    lines = text.splitlines()
    out = []
    in_run = False
    replaced = False
    for line in lines:
        stripped = line.strip()
        if stripped.startswith("["):
            in_run = stripped == "[run]"
        if in_run and stripped.startswith("seed"):
            out.append(f"seed = {seed}")
            replaced = True
            continue
        out.append(line)
    if not replaced:
        out += ["[run]", f"seed = {seed}"]
    return "\n".join(out) + "\n"


@main.command()
@click.argument("scenario_path", type=click.Path(exists=True, dir_okay=False))
@click.option("--host", default="127.0.0.1", show_default=True)
@click.option("--port", type=int, default=8000, show_default=True)
@click.option("--static", "static_dir", type=click.Path(file_okay=False), default=None,
              help="Serve the operator console bundle from this directory.")
def serve(scenario_path, host, port, static_dir):
    """Serve the scenario over HTTP with live telemetry (trusted LAN, no auth)."""
    import uvicorn

    from .service import SimRunner, create_app

    runner = SimRunner(paced=True)
    try:
        runner.load(pathlib.Path(scenario_path).read_text(encoding="utf-8"))
    except ScenarioParseError as exc:
        _fail(exc)
    runner.start()
    app = create_app(runner, static_dir=static_dir)
    try:
        uvicorn.run(app, host=host, port=port, log_level="warning")
    finally:
        runner.stop()


@main.command()
@click.option("--links", required=True, help="L1,L2,L3 link lengths in meters.")
@click.option("--target", required=True, help="x,y,z target in meters.")
def ik(links, target):
    """Print all elbow-branch solutions for a target position."""
    l1, l2, l3 = _parse_triple(links, "--links")
    x, y, z = _parse_triple(target, "--target")
    try:
        geometry = ArmGeometry(l1, l2, l3)
    except ValueError as exc:
        raise click.BadParameter(str(exc)) from None
    solutions = ik_all_solutions(geometry, WorldPoint(x, y, z))
    if not solutions:
        click.echo(f"Unreachable: no feasible solution for target ({x}, {y}, {z})", err=True)
        sys.exit(DOMAIN_ERROR)
    doc = {
        "target": [x, y, z],
        "links": [l1, l2, l3],
        "solutions": [
            {
                "branch": branch.value,
                "radians": list(q.as_tuple()),
                "degrees": [math.degrees(a) for a in q.as_tuple()],
            }
            for branch, q in solutions
        ],
    }
    click.echo(json.dumps(doc, indent=2))


@main.group()
def dataset():
    """Label-file dataset tools."""


@dataset.command("summarize")
@click.argument("directory", type=click.Path(exists=True, file_okay=False))
def dataset_summarize(directory):
    """Summarize YOLO label files (*.txt) in a directory as JSON."""
    root = pathlib.Path(directory)
    names_file = root / "classes.names"
    classes = ClassList()
    if names_file.exists():
        names = [line.strip() for line in names_file.read_text(encoding="utf-8").splitlines() if line.strip()]
        classes = ClassList(tuple(names))
    label_files = {
        p.name: p.read_text(encoding="utf-8")
        for p in sorted(root.glob("*.txt"))
    }
    try:
        summary = summarize_dataset(label_files, classes)
    except MalformedLine as exc:
        _fail(exc)
    click.echo(
        json.dumps(
            {
                "images": summary.images,
                "per_class": summary.per_class_object_counts,
                "objects_per_image": {
                    str(k): v for k, v in summary.objects_per_image_histogram.items()
                },
            },
            indent=2,
            sort_keys=True,
        )
    )


@main.command()
@click.argument("utterance")
@click.option("--vocab", "vocab_path", type=click.Path(exists=True, dir_okay=False),
              default=None, help="Vocabulary file (default: shipped vocabulary).")
@click.option("-n", "n_best", type=int, default=3, show_default=True)
def match(utterance, vocab_path, n_best):
    """Show the n-best command interpretations of an utterance."""
    if vocab_path:
        vocabulary = load_vocabulary(pathlib.Path(vocab_path).read_text(encoding="utf-8"))
    else:
        vocabulary = default_vocabulary()
    try:
        matches = match_utterance(vocabulary, Utterance.from_text(utterance), n_best)
    except CommandError as exc:
        _fail(exc)
    click.echo(
        json.dumps(
            [
                {
                    "verb": m.action.verb,
                    "target_class": m.action.target_class,
                    "score": m.score,
                }
                for m in matches
            ],
            indent=2,
        )
    )


def demo_scenario_path() -> str:
    return str(resources.files("agribot") / "data" / "demo.scn")


if __name__ == "__main__":
    main()
