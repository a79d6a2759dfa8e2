"""
Reporting Utilities
Long-format summary CSV and SVG plots of sweep results
"""

import csv
import math
import os
import re
from typing import Dict, Iterable, List, Sequence

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402

from config import logger  # noqa: E402
from utils.error_handling import ConfigError  # noqa: E402

log = logger.getChild("reporting")

SUMMARY_COLUMNS = ["sweep_var", "value", "method", "metric", "mean", "stderr", "trials"]

# fixed svg ids and no timestamp keep reruns byte-identical
matplotlib.rcParams["svg.hashsalt"] = "nearfield"


def _number(value: float) -> str:
    return format(float(value), ".10e")


def artifact_path(directory: str, name: str, *parts: str, extension: str = "csv") -> str:
    """
    Path of a result artifact named `<name>[_<part>...].<extension>`

    Characters outside letters, digits, '.', '_' and '-' become '-', and
    leading dots are dropped so the file always lands inside `directory`.

    Raises:
        ConfigError: if nothing usable is left of the name
    """
    stem = "_".join([name, *parts])
    stem = re.sub(r"[^\w.-]+", "-", stem).lstrip(".-")
    if not stem:
        raise ConfigError(f"Invalid artifact name '{name}'")
    return os.path.join(directory, f"{stem}.{extension}")


def write_summary_csv(path: str, rows: Iterable[Dict]) -> str:
    """
    Write aggregated rows with the columns of SUMMARY_COLUMNS

    Floats are written with a fixed format so the file only depends on the
    values.
    """
    os.makedirs(os.path.dirname(os.path.abspath(path)), exist_ok=True)
    with open(path, "w", newline="") as handle:
        writer = csv.writer(handle, lineterminator="\n")
        writer.writerow(SUMMARY_COLUMNS)
        for row in rows:
            writer.writerow([
                row["sweep_var"], _number(row["value"]), row["method"], row["metric"],
                _number(row["mean"]), _number(row["stderr"]), int(row["trials"]),
            ])
    log.info(f"Summary written to {path}")
    return path


def write_rows_csv(path: str, rows: Sequence[Dict]) -> str:
    """Plain table of dict rows, columns taken from the first row"""
    os.makedirs(os.path.dirname(os.path.abspath(path)), exist_ok=True)
    with open(path, "w", newline="") as handle:
        if rows:
            writer = csv.DictWriter(handle, fieldnames=list(rows[0]), lineterminator="\n")
            writer.writeheader()
            writer.writerows(rows)
    return path


def read_summary_csv(path: str) -> List[Dict]:
    with open(path, newline="") as handle:
        rows = list(csv.DictReader(handle))
    for row in rows:
        for key in ("value", "mean", "stderr"):
            row[key] = float(row[key])
        row["trials"] = int(row["trials"])
    return rows


def plot_metric_svg(path: str, rows: Sequence[Dict], metric: str, sweep_var: str) -> str:
    """One line per method, NMSE in dB against the swept variable"""
    selected = [row for row in rows if row["metric"] == metric]
    methods = sorted({row["method"] for row in selected})

    fig, ax = plt.subplots(figsize=(6, 4))
    for method in methods:
        points = sorted((row["value"], row["mean"]) for row in selected if row["method"] == method)
        xs = [x for x, _ in points]
        if metric == "search_space":
            ys = [y for _, y in points]
        else:
            ys = [10 * math.log10(max(y, 1e-30)) for _, y in points]
        ax.plot(xs, ys, marker="o", label=method)

    ax.set_xlabel(sweep_var)
    ax.set_ylabel("grid points" if metric == "search_space" else f"{metric} (dB)")
    ax.grid(True, alpha=0.3)
    if methods:
        ax.legend()
    fig.tight_layout()
    fig.savefig(path, format="svg", metadata={"Date": None})
    plt.close(fig)
    return path


def plot_leakage_svg(path: str, rows: Sequence[Dict]) -> str:
    """Bar chart of the atoms needed per representation"""
    fig, ax = plt.subplots(figsize=(6, 4))
    names = [row["representation"] for row in rows]
    ax.bar(names, [row["atoms_for_fraction"] for row in rows], color="tab:blue")
    ax.set_ylabel("atoms for energy fraction")
    ax.grid(True, axis="y", alpha=0.3)
    fig.tight_layout()
    fig.savefig(path, format="svg", metadata={"Date": None})
    plt.close(fig)
    return path
