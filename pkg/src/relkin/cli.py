"""Command line front end: validate a config, run the experiment it names,
and seal the output directory with a manifest.

Exit codes: 0 when every verdict passes, 1 when the run completed but a
verdict failed, 2 when the config cannot be loaded or violates the schema
(the error message names the offending key by its JSON path).

The default output root is the RELKIN_OUT_ROOT environment variable, or
./relkin-runs when unset; each run owns the subdirectory
<experiment>-seed<seed>.  --out overrides the run directory itself.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

import jsonschema

from . import __version__
from .experiments import EXPERIMENTS
from .reporting import RunDirectory

EXIT_OK = 0
EXIT_VERDICT_FAIL = 1
EXIT_CONFIG_ERROR = 2

OUT_ROOT_ENV = "RELKIN_OUT_ROOT"

__all__ = [
    "ConfigurationError",
    "RunReport",
    "load_config",
    "validate_config",
    "run",
    "list_experiments",
    "main",
    "EXIT_OK",
    "EXIT_VERDICT_FAIL",
    "EXIT_CONFIG_ERROR",
]


class ConfigurationError(ValueError):
    """Config file missing, unparsable, or out of schema."""


@dataclass(frozen=True)
class RunReport:
    """What one run produced: directory, manifest, artifacts, verdicts."""

    experiment: str
    seed: int
    run_dir: Path
    manifest_path: Path
    artifact_paths: tuple = ()
    verdicts: tuple = field(default_factory=tuple)

    @property
    def passed(self) -> bool:
        return all(v.passed for v in self.verdicts)


def load_schema() -> dict:
    text = resources.files("relkin").joinpath("config_schema.json").read_text()
    return json.loads(text)


def bundled_config_names() -> list[str]:
    root = resources.files("relkin").joinpath("configs")
    return sorted(p.name for p in root.iterdir() if p.name.endswith(".json"))


def load_config(spec) -> dict:
    """Read a config from a path, falling back to the bundled set by name."""
    path = Path(spec)
    if path.is_file():
        text = path.read_text()
    else:
        name = path.name if path.name.endswith(".json") else path.name + ".json"
        bundle = resources.files("relkin").joinpath("configs").joinpath(name)
        if not bundle.is_file():
            raise ConfigurationError(
                f"no config file at {spec!r} and no bundled config named {name!r}")
        text = bundle.read_text()
    try:
        cfg = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigurationError(f"config is not valid JSON: {exc}") from exc
    return cfg


def _json_path(error: jsonschema.exceptions.ValidationError) -> str:
    parts = ["$"]
    for p in error.absolute_path:
        parts.append(f"[{p}]" if isinstance(p, int) else f".{p}")
    return "".join(parts)


def validate_config(cfg: dict) -> None:
    """Raise ConfigurationError naming the offending key on any violation."""
    validator = jsonschema.Draft202012Validator(load_schema())
    errors = list(validator.iter_errors(cfg))
    if errors:
        best = jsonschema.exceptions.best_match(errors)
        raise ConfigurationError(
            f"config invalid at {_json_path(best)}: {best.message}")


def run(config_spec, seed: int | None = None, out=None,
        workers: int = 1) -> RunReport:
    """Validate, dispatch, and seal one experiment run.

    seed overrides the config's seed; the manifest echoes the effective
    value.  The worker count only schedules the work and never enters
    the config identity, so artifacts are byte-identical for any value.
    """
    cfg = load_config(config_spec)
    validate_config(cfg)
    effective = dict(cfg)
    if seed is not None:
        effective["seed"] = int(seed)
    run_seed = effective["seed"]
    name = effective["experiment"]
    info = EXPERIMENTS[name]

    if out is None:
        root = Path(os.environ.get(OUT_ROOT_ENV, "relkin-runs"))
        out = root / f"{name}-seed{run_seed}"
    rundir = RunDirectory(out)
    verdicts = info.runner(effective["params"], run_seed, rundir,
                           workers=workers)
    rundir.write_verdicts(verdicts)
    manifest_path = rundir.write_manifest(name, effective, run_seed, verdicts)
    return RunReport(
        experiment=name, seed=run_seed, run_dir=rundir.root,
        manifest_path=manifest_path,
        artifact_paths=tuple(rundir.root / a for a in rundir.artifact_names),
        verdicts=tuple(verdicts),
    )


def list_experiments() -> str:
    """Fixed-order table: name, what it checks, and the physics it exercises."""
    rows = [(info.name, info.summary, info.topic)
            for info in EXPERIMENTS.values()]
    width_name = max(len(r[0]) for r in rows)
    width_topic = max(len(r[2]) for r in rows)
    lines = [
        f"{name:<{width_name}}  {topic:<{width_topic}}  {summary}"
        for name, summary, topic in rows
    ]
    return "\n".join(lines)


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="relkin",
        description="Desk-scale numerical laboratory for relativistic "
                    "stochastic kinetics.")
    parser.add_argument("--version", action="version",
                        version=f"relkin {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser(
        "run", help="run one experiment from a JSON config (a path, or the "
                    "name of a bundled config)")
    p_run.add_argument("config", help="config file path or bundled name")
    p_run.add_argument("--seed", type=int, default=None,
                       help="override the config's seed")
    p_run.add_argument("--out", default=None,
                       help="run directory (default: "
                            f"${OUT_ROOT_ENV} or ./relkin-runs, plus "
                            "<experiment>-seed<seed>)")
    p_run.add_argument("--workers", type=int, default=1,
                       help="worker processes for ensemble parts; never "
                            "changes results")

    sub.add_parser("list", help="list the available experiments")
    return parser


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    if args.command == "list":
        print(list_experiments())
        return EXIT_OK

    try:
        report = run(args.config, seed=args.seed, out=args.out,
                     workers=args.workers)
    except ConfigurationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG_ERROR

    for verdict in report.verdicts:
        print(verdict.line())
    print(f"manifest: {report.manifest_path}")
    failing = [v for v in report.verdicts if not v.passed]
    if failing:
        print(f"error: {len(failing)} verdict(s) failed, first: "
              f"{failing[0].name}", file=sys.stderr)
        return EXIT_VERDICT_FAIL
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
