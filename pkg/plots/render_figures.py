#!/usr/bin/env python3
"""Render convergence figures from experiment CSV traces.

Reads the harness's CSV contract only:
  aggregate CSV: header "k,median,q25,q75,mean,var"
  run CSV:       header "k,gap,z_energy,restart"

A panel plots one curve per series (aggregate median, or a single run's gap)
against the iteration count with a log-scaled gap axis, marks restart
iterations, and embeds machine-readable series metadata in the PNG text
chunk under the key "panel" (JSON: series labels, counts, restart marks).

Script usage:
  render_figures.py --sweep-dir OUT --out-dir FIGS
      one image per noise level plus a combined multi-panel figure
  render_figures.py --csv path.csv=label [--csv ...] --out-dir FIGS
      a single panel from explicit CSVs
"""
from __future__ import annotations

import argparse
import csv
import json
import sys
from dataclasses import dataclass, field
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402

RUN_HEADER = ["k", "gap", "z_energy", "restart"]
AGG_HEADER = ["k", "median", "q25", "q75", "mean", "var"]


@dataclass
class Series:
    label: str
    k: list[float]
    gap: list[float]
    restart_marks: list[float] = field(default_factory=list)


@dataclass
class PanelSpec:
    """One output image: a list of (csv path, label) pairs plus axis scales."""

    series: list[tuple[str, str]]
    out_path: str
    title: str = ""
    x_scale: str = "linear"
    y_scale: str = "log"
    marker_csvs: list[str] = field(default_factory=list)


def read_series(path, label) -> Series:
    """Parse either CSV flavor into a plottable series."""
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    if not rows:
        raise ValueError(f"{path}: empty file")
    header = rows[0]
    body = rows[1:]
    if header == AGG_HEADER:
        k = [float(r[0]) for r in body]
        gap = [float(r[1]) for r in body]
        return Series(label, k, gap)
    if header == RUN_HEADER:
        k = [float(r[0]) for r in body]
        gap = [float(r[1]) for r in body]
        marks = [float(r[0]) for r in body if int(r[3])]
        return Series(label, k, gap, restart_marks=marks)
    raise ValueError(f"{path}: unrecognized header {header}")


def read_restart_marks(path) -> list[float]:
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    if not rows or rows[0] != RUN_HEADER:
        raise ValueError(f"{path}: not a run trace CSV")
    return [float(r[0]) for r in rows[1:] if int(r[3])]


def render(panels: list[PanelSpec]) -> tuple[list[Path], list[str]]:
    """Render each panel to its image; skip unreadable CSVs with a warning.

    Returns (written image paths, warnings).  A panel whose series all fail
    still produces an empty-axes image so figure grids stay complete.
    """
    written: list[Path] = []
    warnings: list[str] = []
    for panel in panels:
        fig, ax = plt.subplots(figsize=(5.2, 4.0))
        meta = _draw_panel(ax, panel, warnings)
        out = Path(panel.out_path)
        out.parent.mkdir(parents=True, exist_ok=True)
        fig.savefig(out, dpi=110, metadata={"panel": json.dumps(meta)})
        plt.close(fig)
        written.append(out)
    return written, warnings


def _draw_panel(ax, panel: PanelSpec, warnings: list[str]) -> dict:
    plotted: list[Series] = []
    for path, label in panel.series:
        try:
            plotted.append(read_series(path, label))
        except (OSError, ValueError, IndexError) as exc:
            warnings.append(f"{panel.out_path}: skipped series {label!r}: {exc}")
    marks: list[tuple[float, float]] = []
    for s in plotted:
        line, = ax.plot(s.k, s.gap, label=s.label, linewidth=1.4)
        for mk in s.restart_marks:
            idx = s.k.index(mk)
            marks.append((mk, s.gap[idx]))
            ax.plot(mk, s.gap[idx], marker="v", color=line.get_color(),
                    markersize=7, zorder=5)
    for path in panel.marker_csvs:
        try:
            for mk in read_restart_marks(path):
                marks.append((mk, None))
                ax.axvline(mk, color="0.55", linestyle=":", linewidth=1.0, zorder=1)
        except (OSError, ValueError, IndexError) as exc:
            warnings.append(f"{panel.out_path}: skipped markers from {path}: {exc}")
    if plotted and any(s.gap for s in plotted):
        ax.set_yscale(panel.y_scale)
    else:
        warnings.append(f"{panel.out_path}: no plottable data, empty axes")
    ax.set_xscale(panel.x_scale)
    ax.set_xlabel("iteration")
    ax.set_ylabel("objective gap")
    if panel.title:
        ax.set_title(panel.title)
    if plotted:
        ax.legend(loc="best", fontsize=8)
    return {"title": panel.title,
            "series": [s.label for s in plotted],
            "series_count": len(plotted),
            "restart_marks": len(marks)}


def sweep_panels(sweep_dir, out_dir) -> list[PanelSpec]:
    """Build one panel per noise level from a sweep output directory.

    Prefers the sweep.json manifest; falls back to globbing
    sigma_*/<algorithm>/aggregate.csv.  Each algorithm contributes its
    aggregate median curve; restart markers come from its first run trace.
    """
    sweep_dir = Path(sweep_dir)
    manifest = sweep_dir / "sweep.json"
    cells: list[tuple[str, str, Path]] = []  # (sigma label, algorithm, dir)
    if manifest.exists():
        spec = json.loads(manifest.read_text())
        for cell in spec["cells"]:
            cells.append((f"{cell['sigma']:g}", cell["algorithm"],
                          sweep_dir / cell["dir"]))
    else:
        for agg in sorted(sweep_dir.glob("sigma_*/*/aggregate.csv")):
            cells.append((agg.parent.parent.name.removeprefix("sigma_"),
                          agg.parent.name, agg.parent))
    if not cells:
        raise FileNotFoundError(f"no sweep cells found under {sweep_dir}")
    panels: list[PanelSpec] = []
    for sigma in dict.fromkeys(sig for sig, _, _ in cells):  # keep order
        series = []
        markers = []
        for sig, algo, cell_dir in cells:
            if sig != sigma:
                continue
            series.append((str(cell_dir / "aggregate.csv"), algo))
            first_run = cell_dir / "run_000.csv"
            if first_run.exists():
                markers.append(str(first_run))
        panels.append(PanelSpec(series=series,
                                out_path=str(Path(out_dir) / f"panel_sigma_{sigma}.png"),
                                title=f"noise std {sigma}", marker_csvs=markers))
    return panels


def render_combined(panels: list[PanelSpec], out_path) -> tuple[Path, list[str]]:
    """All panels side by side in one figure, metadata summed across panels."""
    warnings: list[str] = []
    n = len(panels)
    fig, axes = plt.subplots(1, n, figsize=(4.4 * n, 3.6), squeeze=False)
    metas = [_draw_panel(axes[0][i], p, warnings) for i, p in enumerate(panels)]
    combined = {"panels": metas,
                "series_count": sum(m["series_count"] for m in metas),
                "restart_marks": sum(m["restart_marks"] for m in metas)}
    out = Path(out_path)
    out.parent.mkdir(parents=True, exist_ok=True)
    fig.tight_layout()
    fig.savefig(out, dpi=110, metadata={"panel": json.dumps(combined)})
    plt.close(fig)
    return out, warnings


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--sweep-dir", help="harness sweep output directory")
    parser.add_argument("--csv", action="append", metavar="PATH=LABEL",
                        help="explicit series (repeatable)")
    parser.add_argument("--out-dir", required=True)
    parser.add_argument("--combined-name", default="panels.png")
    args = parser.parse_args(argv)
    if not args.sweep_dir and not args.csv:
        parser.error("need --sweep-dir or --csv")
    try:
        if args.sweep_dir:
            panels = sweep_panels(args.sweep_dir, args.out_dir)
        else:
            series = []
            for item in args.csv:
                path, _, label = item.partition("=")
                series.append((path, label or Path(path).stem))
            panels = [PanelSpec(series=series,
                                out_path=str(Path(args.out_dir) / "panel.png"))]
        written, warnings = render(panels)
        if len(panels) > 1:
            combined, more = render_combined(
                panels, Path(args.out_dir) / args.combined_name)
            written.append(combined)
            warnings += more
    except (OSError, ValueError, KeyError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    for w in warnings:
        print(f"warning: {w}", file=sys.stderr)
    for path in written:
        print(path)
    return 0


if __name__ == "__main__":
    sys.exit(main())
