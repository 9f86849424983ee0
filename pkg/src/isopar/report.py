"""Table output: versioned CSV, JSON mirrors, run manifests and figures.

CSV files carry a `# schema:` comment line so downstream parsing never has
to guess; figures are rendered to PNG next to the delimited output.  The
plotting import stays inside the render function, keeping the numerical
modules free of it.
"""

from __future__ import annotations

import dataclasses
import json
import os
from .experiments import ExperimentConfig, RateTable

SCHEMA_VERSION = 1


def _schema(table: RateTable) -> str:
    return "isopar.%s.v%d" % (table.experiment, SCHEMA_VERSION)


def write_csv(table: RateTable, path) -> None:
    with open(path, "w") as fh:
        fh.write("# schema: %s\n" % _schema(table))
        fh.write(",".join(table.columns) + "\n")
        for row in table.rows:
            fh.write(",".join("%.17g" % row[c] for c in table.columns) + "\n")
        if table.fits:
            fh.write("slope," + ",".join(
                "%.6g" % table.fits[c].slope if c in table.fits else ""
                for c in table.columns[1:]) + "\n")


def read_csv(path):
    """Parse a table written by write_csv: (schema, columns, rows, slopes)."""
    with open(path) as fh:
        lines = [ln.rstrip("\n") for ln in fh]
    schema = lines[0].split(":", 1)[1].strip()
    columns = lines[1].split(",")
    rows = []
    slopes = None
    for ln in lines[2:]:
        if not ln:
            continue
        parts = ln.split(",")
        if parts[0] == "slope":
            slopes = {c: float(v) for c, v in zip(columns[1:], parts[1:]) if v}
        else:
            rows.append({c: float(v) for c, v in zip(columns, parts)})
    return schema, columns, rows, slopes


def write_json(table: RateTable, config: ExperimentConfig, path) -> None:
    payload = {
        "schema": _schema(table),
        "config": dataclasses.asdict(config),
        "columns": table.columns,
        "rows": table.rows,
        "fits": {k: dataclasses.asdict(v) for k, v in table.fits.items()},
        "extra": table.extra,
    }
    with open(path, "w") as fh:
        json.dump(payload, fh, indent=2, default=float)
        fh.write("\n")


def write_manifest(config: ExperimentConfig, path) -> None:
    from . import __version__
    payload = {
        "config": dataclasses.asdict(config),
        "content_hash": config.content_hash(),
        "seed": config.seed,
        "package_version": __version__,
    }
    with open(path, "w") as fh:
        json.dump(payload, fh, indent=2, default=float)
        fh.write("\n")


def render_figure(table: RateTable, config: ExperimentConfig, path) -> None:
    """Log-log rate plot (or linear flow plot) rendered to file."""
    import matplotlib
    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    fig, ax = plt.subplots(figsize=(5.0, 3.6))
    title = "%s: %s, degree %d" % (table.experiment, config.domain, config.degree)
    if table.experiment == "flow":
        ts = table.column("t")
        ax.plot(ts, table.column("min_dist"), "o-", label="min escape")
        ax.plot(ts, table.column("max_dist"), "s-", label="max escape")
        ax.plot(ts, ts, "k--", lw=0.8, label="t")
        ax.set_xlabel("t")
        ax.set_ylabel("distance")
        title = "flow: %s" % config.domain
    else:
        hs = table.column("h")
        for name in table.columns:
            if name in ("h", "dofs"):
                continue
            vals = table.column(name)
            if (vals <= 0).any():
                continue
            label = name
            if name in table.fits:
                label += " (slope %.2f)" % table.fits[name].slope
            ax.loglog(hs, vals, "o-", label=label)
        ax.set_xlabel("h")
        ax.invert_xaxis()
    ax.grid(True, which="both", alpha=0.3)
    ax.legend(fontsize=8)
    ax.set_title(title, fontsize=10)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def emit(table: RateTable, config: ExperimentConfig, outdir,
         plots: bool = True) -> None:
    os.makedirs(outdir, exist_ok=True)
    base = os.path.join(outdir, table.experiment)
    write_csv(table, base + ".csv")
    write_json(table, config, base + ".json")
    write_manifest(config, os.path.join(outdir, "manifest.json"))
    if plots:
        render_figure(table, config, base + ".png")
