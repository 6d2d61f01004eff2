"""CSV loading with strict schema checks and the three figure renderers."""

from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

FIELD_HEADER = ["t", "x", "u"]
BOUNDARY_HEADER = ["t", "y"]
TRACE_HEADER = ["t", "y", "yhat", "r", "psi1", "W", "norm_u", "norm_ux", "norm_eta_H", "delta", "flag"]


class CsvFormatError(ValueError):
    """The message always names the offending file and row."""


def _load_csv(path, expected_header: list[str]) -> dict[str, np.ndarray]:
    p = Path(path)
    if not p.exists():
        raise CsvFormatError(f"{p}: file not found")
    with open(p, newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise CsvFormatError(f"{p}: row 1: file is empty") from None
        if header != expected_header:
            raise CsvFormatError(
                f"{p}: row 1: expected header {','.join(expected_header)}, got {','.join(header)}"
            )
        columns = [[] for _ in expected_header]
        for row_number, row in enumerate(reader, start=2):
            if len(row) != len(expected_header):
                raise CsvFormatError(
                    f"{p}: row {row_number}: expected {len(expected_header)} columns, got {len(row)}"
                )
            for col, value in zip(columns, row):
                try:
                    col.append(float(value))
                except ValueError:
                    raise CsvFormatError(
                        f"{p}: row {row_number}: non-numeric value {value!r}"
                    ) from None
        if not columns[0]:
            raise CsvFormatError(f"{p}: row 2: no data rows")
    return {name: np.asarray(col) for name, col in zip(expected_header, columns)}


@dataclass(frozen=True)
class FigureSpec:
    """What to draw: figure id, input CSVs, output image, threshold (figure 3)."""

    figure: int
    inputs: tuple[str, ...]
    output: str
    threshold: float | None = None

    def __post_init__(self):
        if self.figure not in (1, 2, 3):
            raise ValueError("figure must be 1, 2 or 3")
        if not self.inputs:
            raise ValueError("at least one input CSV is required")
        object.__setattr__(self, "inputs", tuple(str(p) for p in self.inputs))


def _render_fig1(spec: FigureSpec) -> dict:
    data = _load_csv(spec.inputs[0], FIELD_HEADER)
    t = np.unique(data["t"])
    x = np.unique(data["x"])
    if t.size * x.size != data["u"].size:
        raise CsvFormatError(
            f"{spec.inputs[0]}: row 2: snapshot grid is not complete "
            f"({t.size} times x {x.size} nodes != {data['u'].size} rows)"
        )
    # rows are written time-major, node-minor
    U = data["u"].reshape(t.size, x.size)
    fig, ax = plt.subplots(figsize=(7, 4.5))
    mesh = ax.pcolormesh(t, x, U.T, shading="nearest", cmap="inferno")
    fig.colorbar(mesh, ax=ax, label="u(x, t)")
    ax.set_xlabel("t")
    ax.set_ylabel("x")
    ax.set_title("Distributed response")
    fig.savefig(spec.output, dpi=150)
    plt.close(fig)
    return {"t": t, "x": x, "u": U}


def _render_fig2(spec: FigureSpec) -> dict:
    series = [_load_csv(p, BOUNDARY_HEADER) for p in spec.inputs]
    fig, ax = plt.subplots(figsize=(7, 4.5))
    styles = ["-", "--", ":", "-."]
    for i, (path, s) in enumerate(zip(spec.inputs, series)):
        ax.plot(s["t"], s["y"], styles[i % len(styles)], label=Path(path).stem)
    ax.set_xlabel("t")
    ax.set_ylabel("y(t)")
    ax.set_title("Boundary output")
    ax.legend()
    fig.savefig(spec.output, dpi=150)
    plt.close(fig)
    return {"series": [(s["t"], s["y"]) for s in series]}


def _render_fig3(spec: FigureSpec) -> dict:
    traces = [_load_csv(p, TRACE_HEADER) for p in spec.inputs]
    fig, ax = plt.subplots(figsize=(7, 4.5))
    markers = []
    for path, tr in zip(spec.inputs, traces):
        ax.semilogy(tr["t"], np.abs(tr["r"]) + 1e-300, label=Path(path).stem)
        flagged = np.nonzero(tr["flag"] != 0)[0]
        if flagged.size:
            k = int(flagged[0])
            markers.append((Path(path).stem, float(tr["t"][k]), float(abs(tr["r"][k]))))
            ax.plot(tr["t"][k], abs(tr["r"][k]), "rv", markersize=9, zorder=5)
            ax.annotate(
                f"detected t={tr['t'][k]:g}",
                (tr["t"][k], abs(tr["r"][k])),
                textcoords="offset points",
                xytext=(6, 8),
            )
    if spec.threshold is not None:
        ax.axhline(spec.threshold, color="k", linestyle="--", label="threshold")
    ax.set_xlabel("t")
    ax.set_ylabel("|r(t)|")
    ax.set_title("Residual responses")
    ax.legend(loc="best", fontsize=8)
    fig.savefig(spec.output, dpi=150)
    plt.close(fig)
    return {
        "series": [(tr["t"], np.abs(tr["r"])) for tr in traces],
        "markers": markers,
        "threshold": spec.threshold,
    }


def render(spec: FigureSpec) -> dict:
    """Draw the figure and return the plotted arrays (for reproducibility checks)."""
    if spec.figure == 1:
        return _render_fig1(spec)
    if spec.figure == 2:
        return _render_fig2(spec)
    return _render_fig3(spec)
