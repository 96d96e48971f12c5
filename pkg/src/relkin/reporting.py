"""Deterministic artifact plumbing for experiment runs.

All writers go through one atomic path: the payload is rendered to text,
written to a temporary file in the target directory, and moved into place
with os.replace.  Reproducibility rules, applied uniformly:

* floats are rendered with repr (shortest round-trip form),
* JSON objects are serialized with sorted keys,
* nothing records wall-clock time or absolute paths,

so a run directory's bytes are a pure function of (config, seed).  A
RunDirectory keeps a checksum ledger of everything it wrote; the manifest,
written last, lists the full effective config, the seed, and that ledger.
"""

from __future__ import annotations

import csv
import hashlib
import io
import json
import os
import tempfile
from dataclasses import dataclass
from pathlib import Path

import numpy as np

MANIFEST_SCHEMA = "relkin/manifest/1"
VERDICT_SCHEMA = "relkin/verdict/1"
MANIFEST_NAME = "manifest.json"
VERDICTS_NAME = "verdicts.ndjson"

__all__ = [
    "MANIFEST_SCHEMA",
    "VERDICT_SCHEMA",
    "MANIFEST_NAME",
    "VERDICTS_NAME",
    "Verdict",
    "RunDirectory",
    "format_cell",
    "plain",
    "sha256_of",
]


def plain(obj):
    """Recursively convert numpy scalars and arrays to built-in types."""
    if isinstance(obj, np.bool_):
        return bool(obj)
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, np.floating):
        return float(obj)
    if isinstance(obj, np.ndarray):
        return [plain(v) for v in obj.tolist()]
    if isinstance(obj, dict):
        return {str(k): plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [plain(v) for v in obj]
    return obj


def format_cell(value) -> str:
    """CSV cell text: repr for floats, str for everything else."""
    if isinstance(value, (bool, np.bool_)):
        return str(bool(value)).lower()
    if isinstance(value, (float, np.floating)):
        return repr(float(value))
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    return str(value)


def sha256_of(path) -> str:
    digest = hashlib.sha256()
    with open(path, "rb") as fh:
        for block in iter(lambda: fh.read(1 << 16), b""):
            digest.update(block)
    return digest.hexdigest()


def _atomic_write(path: Path, text: str) -> None:
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.")
    try:
        with os.fdopen(fd, "w", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _csv_text(header, rows) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow([format_cell(v) for v in row])
    return buf.getvalue()


def _ndjson_text(records, schema: str) -> str:
    lines = []
    for rec in records:
        body = {"schema": schema, **plain(rec)}
        lines.append(json.dumps(body, sort_keys=True))
    return "\n".join(lines) + "\n"


def _json_text(obj) -> str:
    return json.dumps(plain(obj), sort_keys=True, indent=2) + "\n"


@dataclass(frozen=True)
class Verdict:
    """One acceptance check outcome, tied to its criterion id."""

    criterion: str
    name: str
    passed: bool
    measured: float
    bound: float
    comparison: str = "<="
    detail: str = ""

    def line(self) -> str:
        status = "PASS" if self.passed else "FAIL"
        text = (f"[{self.criterion}] {status} {self.name}: "
                f"measured {format_cell(self.measured)} "
                f"{self.comparison} {format_cell(self.bound)}")
        if self.detail:
            text += f" ({self.detail})"
        return text

    def record(self) -> dict:
        return {
            "criterion": self.criterion,
            "name": self.name,
            "passed": bool(self.passed),
            "measured": float(self.measured),
            "bound": float(self.bound),
            "comparison": self.comparison,
            "detail": self.detail,
        }


class RunDirectory:
    """One experiment run's exclusive output directory.

    Artifacts register themselves in a checksum ledger as they are
    written; write_manifest seals the run and must come last, after the
    verdict file, so the manifest can vouch for every other byte.
    """

    def __init__(self, root) -> None:
        self.root = Path(root)
        self.root.mkdir(parents=True, exist_ok=True)
        self._ledger: list[dict] = []

    def _register(self, name: str) -> None:
        path = self.root / name
        self._ledger.append({
            "name": name,
            "sha256": sha256_of(path),
            "bytes": path.stat().st_size,
        })

    def write_csv(self, name: str, header, rows) -> Path:
        path = self.root / name
        _atomic_write(path, _csv_text(header, rows))
        self._register(name)
        return path

    def write_ndjson(self, name: str, records, schema: str) -> Path:
        path = self.root / name
        _atomic_write(path, _ndjson_text(records, schema))
        self._register(name)
        return path

    def adopt(self, name: str, writer) -> Path:
        """Route an external file writer through the atomic path.

        writer(tmp_path) must produce the file; it is then moved into
        place and checksummed like any native artifact.
        """
        path = self.root / name
        fd, tmp = tempfile.mkstemp(dir=self.root, prefix=f".{name}.")
        os.close(fd)
        try:
            writer(tmp)
            os.replace(tmp, path)
        except BaseException:
            if os.path.exists(tmp):
                os.unlink(tmp)
            raise
        self._register(name)
        return path

    def write_verdicts(self, verdicts) -> Path:
        return self.write_ndjson(VERDICTS_NAME,
                                 [v.record() for v in verdicts],
                                 VERDICT_SCHEMA)

    def write_manifest(self, experiment: str, config: dict, seed: int,
                       verdicts) -> Path:
        manifest = {
            "schema": MANIFEST_SCHEMA,
            "experiment": experiment,
            "seed": int(seed),
            "config": config,
            "artifacts": sorted(self._ledger, key=lambda a: a["name"]),
            "verdicts": {
                "total": len(verdicts),
                "passed": sum(1 for v in verdicts if v.passed),
                "criteria": sorted({v.criterion for v in verdicts}),
            },
        }
        path = self.root / MANIFEST_NAME
        _atomic_write(path, _json_text(manifest))
        return path

    @property
    def artifact_names(self) -> list[str]:
        return [a["name"] for a in self._ledger]
