"""Figure builders over the documented run-artifact tables.

Every figure is derived from CSV files named in the run's manifest; nothing
else in the run directory is opened, and nothing there is written.  Outputs
are deterministic: the style is pinned below, the SVG id salt is fixed, and
no dates or absolute paths enter the files, so rerunning on the same inputs
reproduces identical bytes.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass, field
from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np
from matplotlib.colors import LogNorm

MANIFEST_NAME = "manifest.json"
MANIFEST_SCHEMA = "relkin/manifest/1"
INDEX_NAME = "figures_index.json"
INDEX_SCHEMA = "relkin-plots/index/1"

KINDS = ("correlation", "convergence", "norm", "wigner", "lump", "packet")

STYLE = {
    "figure.dpi": 110,
    "savefig.dpi": 110,
    "figure.figsize": (6.4, 4.2),
    "font.size": 9.0,
    "font.family": "DejaVu Sans",
    "axes.grid": True,
    "grid.alpha": 0.3,
    "lines.linewidth": 1.4,
    "lines.markersize": 4.0,
    "legend.fontsize": 8.0,
    "svg.fonttype": "none",
    "svg.hashsalt": "relkin-plots",
}

# convergence tables: file, abscissa column, residual columns
CONVERGENCE_TABLES = (
    ("residuals.csv", "dt", ("continuity_sup", "hj_sup")),
    ("drift_scaling.csv", "dt", ("max_drift",)),
    ("mixed_residual.csv", "h", ("equal_mass_sup", "mixed_mass_sup")),
    ("hierarchy.csv", "h",
     ("div_first_sup", "div_second_sup", "div_third_sup")),
    ("transport.csv", "spacing", ("sup_ratio_common",)),
)


class RenderError(Exception):
    """The report directory or the requested kind cannot be rendered."""


@dataclass(frozen=True)
class FigureSpec:
    """A render request: where to read, what to draw, where to write."""

    report_dir: Path
    kind: str = "all"
    out_dir: Path | None = None
    style: dict = field(default_factory=dict)

    def resolved_out(self) -> Path:
        if self.out_dir is not None:
            return Path(self.out_dir)
        return Path(self.report_dir) / "figures"


def load_manifest(report_dir: Path) -> tuple[dict, set[str]]:
    """Parse the run manifest and return it with its artifact name set."""
    path = Path(report_dir) / MANIFEST_NAME
    if not path.is_file():
        raise RenderError(f"no {MANIFEST_NAME} in {report_dir}")
    try:
        manifest = json.loads(path.read_text())
    except json.JSONDecodeError as exc:
        raise RenderError(f"{MANIFEST_NAME} is not valid JSON: {exc}")
    if manifest.get("schema") != MANIFEST_SCHEMA:
        raise RenderError(
            f"{MANIFEST_NAME} schema {manifest.get('schema')!r} is not "
            f"{MANIFEST_SCHEMA!r}")
    artifacts = manifest.get("artifacts")
    if not isinstance(artifacts, list):
        raise RenderError(f"{MANIFEST_NAME} has no artifact list")
    names = set()
    for entry in artifacts:
        if not isinstance(entry, dict) or "name" not in entry:
            raise RenderError(f"{MANIFEST_NAME} artifact entries need names")
        names.add(entry["name"])
    return manifest, names


def read_table(report_dir: Path, name: str,
               artifact_names: set[str]) -> dict[str, list[str]] | None:
    """Columns of a manifest-listed CSV, or None if the run lacks it."""
    if name not in artifact_names:
        return None
    path = Path(report_dir) / name
    if not path.is_file():
        raise RenderError(f"manifest lists {name} but the file is missing")
    with open(path, newline="") as handle:
        reader = csv.DictReader(handle)
        columns: dict[str, list[str]] = {f: [] for f in reader.fieldnames or ()}
        for row in reader:
            for key, value in row.items():
                columns[key].append(value)
    if not columns:
        raise RenderError(f"{name} has no header row")
    return columns


def _floats(table: dict[str, list[str]], column: str) -> np.ndarray:
    return np.array([float(v) for v in table[column]])


def _fitted_slope(x: np.ndarray, y: np.ndarray) -> float | None:
    good = (x > 0) & (y > 0)
    if np.count_nonzero(good) < 2:
        return None
    return float(np.polyfit(np.log(x[good]), np.log(y[good]), 1)[0])


def _build_correlation(report_dir, names):
    table = read_table(report_dir, "correlation.csv", names)
    if table is None:
        return []
    oracle = _floats(table, "oracle")
    mc = _floats(table, "mc")
    sigma = _floats(table, "sigma")
    z = _floats(table, "z")
    fig, ax = plt.subplots()
    ax.errorbar(oracle, mc, yerr=sigma, fmt="o", capsize=2, elinewidth=0.8,
                label="sampled, with standard error")
    span = np.concatenate([oracle, mc])
    lo, hi = float(span.min()), float(span.max())
    pad = 0.05 * (hi - lo or 1.0)
    ax.plot([lo - pad, hi + pad], [lo - pad, hi + pad], "k--", linewidth=1.0,
            label="sampled = oracle")
    max_z = float(np.max(np.abs(z)))
    ax.set_xlabel("phase-average oracle")
    ax.set_ylabel("Monte Carlo estimate")
    ax.set_title(f"two-point function, {len(mc)} entries, "
                 f"max |z| = {max_z:.2f}")
    ax.legend()
    meta = {"n_rows": len(mc), "max_abs_z": max_z}
    return [("correlation", fig, meta)]


def _build_convergence(report_dir, names):
    figures = []
    for fname, xcol, ycols in CONVERGENCE_TABLES:
        table = read_table(report_dir, fname, names)
        if table is None:
            continue
        x = _floats(table, xcol)
        fig, ax = plt.subplots()
        slopes: dict[str, float] = {}
        for ycol in ycols:
            y = _floats(table, ycol)
            slope = _fitted_slope(x, y)
            if slope is None:
                label = f"{ycol}: no slope (non-positive data)"
            else:
                slopes[ycol] = slope
                label = f"{ycol}: slope {slope:.2f}"
            ax.loglog(x, y, "o-", label=label)
        ax.set_xlabel(xcol)
        ax.set_ylabel("residual sup norm")
        stem = fname[:-len(".csv")]
        ax.set_title(f"convergence, {stem}")
        ax.legend()
        meta = {"table": fname, "slopes": slopes}
        figures.append((f"convergence_{stem}", fig, meta))
    return figures


def _build_norm(report_dir, names):
    table = read_table(report_dir, "conservation.csv", names)
    if table is None:
        return []
    series = table["series"]
    time = _floats(table, "time")
    total = _floats(table, "total")
    labels = list(dict.fromkeys(series))  # first-appearance order
    fig, axes = plt.subplots(len(labels), 1, sharex=True,
                             figsize=(6.4, 2.4 * len(labels)))
    axes = np.atleast_1d(axes)
    spans = {}
    for ax, label in zip(axes, labels):
        mask = np.array([s == label for s in series])
        ax.plot(time[mask], total[mask])
        mean = float(np.mean(total[mask]))
        span = float(np.ptp(total[mask]))
        rel = span / abs(mean) if mean else float("inf")
        spans[label] = rel
        ax.set_ylabel(f"{label} norm")
        ax.set_title(f"relative span {rel:.3g}", fontsize=8)
    axes[-1].set_xlabel("time")
    fig.suptitle("total norm against time, per series")
    fig.tight_layout()
    meta = {"series": labels, "relative_span": spans}
    return [("norm", fig, meta)]


def _build_wigner(report_dir, names):
    table = read_table(report_dir, "wigner_map.csv", names)
    if table is None:
        return []
    x = _floats(table, "x")
    p = _floats(table, "p")
    value = _floats(table, "value")
    xs = np.unique(x)
    ps = np.unique(p)
    grid = np.full((ps.size, xs.size), np.nan)
    grid[np.searchsorted(ps, p), np.searchsorted(xs, x)] = value
    vmax = float(np.nanmax(np.abs(grid))) or 1.0
    fig, ax = plt.subplots()
    # diverging palette centered at zero so sign changes stay visible
    mesh = ax.pcolormesh(xs, ps, grid, cmap="RdBu_r", vmin=-vmax, vmax=vmax,
                         shading="nearest")
    fig.colorbar(mesh, ax=ax, label="value")
    ax.set_xlabel("x")
    ax.set_ylabel("p")
    ax.set_title("phase-space map")
    meta = {
        "vmin": -vmax,
        "vmax": vmax,
        "min_value": float(np.nanmin(grid)),
        "max_value": float(np.nanmax(grid)),
    }
    return [("wigner", fig, meta)]


def _build_lump(report_dir, names):
    table = read_table(report_dir, "lump_slice.csv", names)
    if table is None:
        return []
    x1 = _floats(table, "x1")
    x2 = _floats(table, "x2")
    psi = _floats(table, "psi")
    ratio = _floats(table, "residual_ratio")
    kept = _floats(table, "kept") > 0
    xs = np.unique(x1)
    ys = np.unique(x2)
    shape = (xs.size, ys.size)
    i = np.searchsorted(xs, x1)
    j = np.searchsorted(ys, x2)
    psi_grid = np.full(shape, np.nan)
    psi_grid[i, j] = psi
    ratio_grid = np.full(shape, np.nan)
    ratio_grid[i, j] = np.where(kept, ratio, np.nan)

    fig, (ax_psi, ax_res) = plt.subplots(1, 2, figsize=(9.0, 3.8))
    finite = psi_grid[np.isfinite(psi_grid) & (psi_grid > 0)]
    norm = LogNorm(vmin=float(finite.min()), vmax=float(finite.max()))
    mesh = ax_psi.pcolormesh(xs, ys, psi_grid.T, cmap="viridis", norm=norm,
                             shading="nearest")
    fig.colorbar(mesh, ax=ax_psi, label="density")
    ax_psi.set_title("lump density, mid plane")
    ax_psi.set_xlabel("x1")
    ax_psi.set_ylabel("x2")

    masked = np.ma.masked_invalid(ratio_grid.T)
    worst = float(np.nanmax(np.abs(ratio_grid)))
    mesh2 = ax_res.pcolormesh(xs, ys, masked, cmap="magma",
                              shading="nearest")
    fig.colorbar(mesh2, ax=ax_res, label="relative transport residual")
    ax_res.set_title(f"transport residual, kept cells, max {worst:.2e}")
    ax_res.set_xlabel("x1")
    fig.tight_layout()
    meta = {
        "n_kept": int(np.count_nonzero(kept)),
        "n_excluded": int(np.count_nonzero(~kept)),
        "max_kept_ratio": worst,
    }
    return [("lump", fig, meta)]


def _build_packet(report_dir, names):
    track = read_table(report_dir, "packet_track.csv", names)
    if track is None:
        return []
    summary = read_table(report_dir, "packet_summary.csv", names)
    fits = {}
    if summary is not None:
        for idx, regime in enumerate(summary["regime"]):
            fits[regime] = (float(summary["velocity_fit"][idx]),
                            float(summary["velocity_target"][idx]))
    series = track["regime"]
    time = _floats(track, "time")
    centroid = _floats(track, "centroid")
    width = _floats(track, "width")
    fig, ax = plt.subplots()
    meta_fits = {}
    for regime in dict.fromkeys(series):
        mask = np.array([s == regime for s in series])
        label = regime
        if regime in fits:
            vfit, vtarget = fits[regime]
            label = f"{regime}: fit {vfit:.4f}, target {vtarget:.4f}"
            meta_fits[regime] = {"velocity_fit": vfit,
                                 "velocity_target": vtarget}
        line, = ax.plot(time[mask], centroid[mask], "o-", label=label)
        ax.fill_between(time[mask], (centroid - width)[mask],
                        (centroid + width)[mask], alpha=0.2,
                        color=line.get_color())
    ax.set_xlabel("time")
    ax.set_ylabel("packet centroid (band: one width)")
    ax.set_title("centroid track against the group velocity")
    ax.legend()
    meta = {"velocities": meta_fits}
    return [("packet", fig, meta)]


BUILDERS = {
    "correlation": _build_correlation,
    "convergence": _build_convergence,
    "norm": _build_norm,
    "wigner": _build_wigner,
    "lump": _build_lump,
    "packet": _build_packet,
}


def render(report_dir, kind: str = "all", out_dir=None,
           style: dict | None = None) -> list[Path]:
    """Render one kind (or all) from a finished run into figure files.

    Returns the written paths, the sidecar index last.  Nothing is written
    until the manifest and the kind have been validated; a kind whose
    backing table is absent from the run simply contributes no figure.
    """
    spec = FigureSpec(Path(report_dir), kind, out_dir, dict(style or {}))
    if spec.kind != "all" and spec.kind not in KINDS:
        known = ", ".join(KINDS + ("all",))
        raise RenderError(f"unknown kind {spec.kind!r}; choose from {known}")
    manifest, names = load_manifest(spec.report_dir)
    selected = KINDS if spec.kind == "all" else (spec.kind,)

    written: list[Path] = []
    entries = []
    with plt.rc_context({**STYLE, **spec.style}):
        built = []
        for k in selected:
            built.extend((k, *item) for item in BUILDERS[k](spec.report_dir,
                                                            names))
        out = spec.resolved_out()
        out.mkdir(parents=True, exist_ok=True)
        for k, name, fig, meta in built:
            files = []
            for ext in ("png", "svg"):
                path = out / f"{name}.{ext}"
                # the SVG writer stamps a creation date unless told not to
                metadata = {"Date": None} if ext == "svg" else None
                fig.savefig(path, format=ext, metadata=metadata)
                files.append(path.name)
                written.append(path)
            plt.close(fig)
            entries.append({"kind": k, "name": name, "files": files,
                            "meta": meta})
    index = {
        "schema": INDEX_SCHEMA,
        "source_experiment": manifest.get("experiment"),
        "kind_requested": spec.kind,
        "figures": entries,
    }
    index_path = out / INDEX_NAME
    index_path.write_text(json.dumps(index, sort_keys=True, indent=2) + "\n")
    written.append(index_path)
    return written
