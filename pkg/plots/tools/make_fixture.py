"""Rebuild the static fixture report under tests/fixtures/report.

Runs six bundled experiments from the primary package and assembles one
report directory holding every table the figure builders consume, with a
manifest whose checksums match the copied files.  Needs relkin importable;
run from the plots directory:

    python3 tools/make_fixture.py
"""

import hashlib
import json
import shutil
import tempfile
from pathlib import Path

from relkin.cli import run

HERE = Path(__file__).resolve().parent
REPORT = HERE.parent / "tests" / "fixtures" / "report"

PICKS = {
    "field_stats.json": ["correlation.csv"],
    "madelung_check.json": ["residuals.csv"],
    "kg_conservation.json": ["conservation.csv"],
    "wigner_check.json": ["wigner_map.csv"],
    "lump_check.json": ["lump_slice.csv", "transport.csv"],
    "packet_compare.json": ["packet_track.csv", "packet_summary.csv"],
}


def main():
    REPORT.mkdir(parents=True, exist_ok=True)
    for old in REPORT.iterdir():
        old.unlink()
    with tempfile.TemporaryDirectory() as tmp:
        for config, picks in PICKS.items():
            report = run(config, out=Path(tmp) / config)
            for name in picks:
                shutil.copyfile(report.run_dir / name, REPORT / name)
    entries = []
    for path in sorted(REPORT.iterdir()):
        digest = hashlib.sha256(path.read_bytes()).hexdigest()
        entries.append({"name": path.name, "sha256": digest,
                        "bytes": path.stat().st_size})
    manifest = {
        "schema": "relkin/manifest/1",
        "experiment": "fixture-suite",
        "seed": 0,
        "config": {"assembled_from": sorted(PICKS)},
        "artifacts": entries,
        "verdicts": {"criteria": [], "passed": 0, "total": 0},
    }
    (REPORT / "manifest.json").write_text(
        json.dumps(manifest, indent=2, sort_keys=True) + "\n")
    print(f"fixture rebuilt: {len(entries)} artifacts in {REPORT}")


if __name__ == "__main__":
    main()
