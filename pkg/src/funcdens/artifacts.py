"""File formats owned by the command-line surface.

Curve CSV: the first row holds the grid abscissae, each following row one
curve's values; comma separated, UTF-8, '.' decimal. Nested artifacts are
JSON with sorted keys; tabular artifacts are CSV. Floats are written with
repr so every file round-trips losslessly through its reader.
"""

from __future__ import annotations

import csv
import json
from pathlib import Path

import numpy as np

from .grids import FunctionalSample, Grid

__all__ = [
    "CurveFormatError",
    "read_curves_csv",
    "write_curves_csv",
    "write_model_json",
    "read_model_json",
    "write_scores_csv",
    "read_scores_csv",
    "write_densities_json",
    "read_densities_json",
    "write_logdensity_csv",
    "read_logdensity_csv",
    "write_groups_csv",
    "read_groups_csv",
    "write_contour_csv",
    "read_contour_csv",
    "write_central_csv",
    "read_central_csv",
    "write_smallball_csv",
    "read_smallball_csv",
    "write_imse_csv",
    "read_imse_csv",
]


class CurveFormatError(ValueError):
    """Malformed curve CSV; the message carries the offending line number."""


def _fmt(x: float) -> str:
    return repr(float(x))


def read_curves_csv(path) -> FunctionalSample:
    """Parse the curve CSV format; errors carry 1-based line numbers."""
    path = Path(path)
    with path.open(newline="", encoding="utf-8") as fh:
        rows = list(csv.reader(fh))
    rows = [(i + 1, row) for i, row in enumerate(rows) if row and any(c.strip() for c in row)]
    if not rows:
        raise CurveFormatError(f"{path}: line 1: missing header row of grid abscissae")
    line_no, header = rows[0]
    try:
        points = np.array([float(c) for c in header])
    except ValueError as exc:
        raise CurveFormatError(f"{path}: line {line_no}: grid header is not numeric: {exc}") from None
    try:
        grid = Grid(points)
    except ValueError as exc:
        raise CurveFormatError(f"{path}: line {line_no}: bad grid: {exc}") from None
    if len(rows) == 1:
        raise CurveFormatError(f"{path}: line {line_no + 1}: no curve rows after the header")
    values = []
    for line_no, row in rows[1:]:
        if len(row) != len(points):
            raise CurveFormatError(
                f"{path}: line {line_no}: expected {len(points)} values, got {len(row)}"
            )
        try:
            values.append([float(c) for c in row])
        except ValueError as exc:
            raise CurveFormatError(f"{path}: line {line_no}: non-numeric value: {exc}") from None
    try:
        return FunctionalSample(grid, np.array(values))
    except ValueError as exc:
        raise CurveFormatError(f"{path}: {exc}") from None


def write_curves_csv(path, sample: FunctionalSample) -> None:
    with Path(path).open("w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(_fmt(t) for t in sample.grid.points)
        for row in sample.values:
            w.writerow(_fmt(v) for v in row)


def _dump_json(path, payload) -> None:
    with Path(path).open("w", encoding="utf-8") as fh:
        json.dump(payload, fh, sort_keys=True, indent=1)
        fh.write("\n")


def write_model_json(path, model) -> None:
    payload = {
        "grid": [float(t) for t in model.grid.points],
        "mean": [float(v) for v in model.mean.values],
        "eigenvalues": [float(v) for v in model.eigenvalues],
        "variance_explained": [
            {"j": j + 1, "proportion": float(model.eigenvalues[: j + 1].sum() / total)}
            for total in [model.eigenvalues.sum() or 1.0]
            for j in range(model.n_components)
        ],
    }
    _dump_json(path, payload)


def read_model_json(path) -> dict:
    with Path(path).open(encoding="utf-8") as fh:
        return json.load(fh)


def write_scores_csv(path, scores: np.ndarray) -> None:
    with Path(path).open("w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(["curve"] + [f"score_{j + 1}" for j in range(scores.shape[1])])
        for i, row in enumerate(scores):
            w.writerow([i] + [_fmt(v) for v in row])


def read_scores_csv(path) -> np.ndarray:
    with Path(path).open(newline="", encoding="utf-8") as fh:
        rows = list(csv.reader(fh))
    return np.array([[float(c) for c in row[1:]] for row in rows[1:]])


def write_densities_json(path, densities, modes) -> None:
    payload = []
    for est, mode in zip(densities, modes):
        lo = float(est.samples.min() - 3 * est.bandwidth)
        hi = float(est.samples.max() + 3 * est.bandwidth)
        grid = np.linspace(lo, hi, 256)
        payload.append(
            {
                "kernel": est.kernel,
                "bandwidth": float(est.bandwidth),
                "mode": float(mode),
                "grid": [float(u) for u in grid],
                "values": [float(v) for v in np.atleast_1d(est.evaluate(grid))],
            }
        )
    _dump_json(path, {"components": payload})


def read_densities_json(path) -> dict:
    with Path(path).open(encoding="utf-8") as fh:
        return json.load(fh)


def write_logdensity_csv(path, table) -> None:
    # table: list of (curve_index, r, value, product)
    with Path(path).open("w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(["curve", "r", "value", "product"])
        for i, r, val, prod in table:
            w.writerow([i, r, _fmt(val), _fmt(prod)])


def read_logdensity_csv(path) -> list[tuple[int, int, float, float]]:
    with Path(path).open(newline="", encoding="utf-8") as fh:
        rows = list(csv.reader(fh))
    return [(int(a), int(b), float(c), float(d)) for a, b, c, d in rows[1:]]


def write_groups_csv(path, groups: np.ndarray, values: np.ndarray) -> None:
    with Path(path).open("w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(["curve", "group", "logdensity"])
        for i, (g, v) in enumerate(zip(groups, values)):
            w.writerow([i, int(g), _fmt(v)])


def read_groups_csv(path) -> list[tuple[int, int, float]]:
    with Path(path).open(newline="", encoding="utf-8") as fh:
        rows = list(csv.reader(fh))
    return [(int(a), int(b), float(c)) for a, b, c in rows[1:]]


def write_contour_csv(path, product_grid) -> None:
    """Long-form surface rows plus one 'point' row per training curve."""
    with Path(path).open("w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(["kind", "u", "v", "density"])
        for i, u in enumerate(product_grid.u):
            for j, v in enumerate(product_grid.v):
                w.writerow(["grid", _fmt(u), _fmt(v), _fmt(product_grid.surface[i, j])])
        for (s1, s2), val in zip(product_grid.point_scores, product_grid.point_values):
            w.writerow(["point", _fmt(s1), _fmt(s2), _fmt(val)])


def read_contour_csv(path) -> list[tuple[str, float, float, float]]:
    with Path(path).open(newline="", encoding="utf-8") as fh:
        rows = list(csv.reader(fh))
    return [(kind, float(u), float(v), float(d)) for kind, u, v, d in rows[1:]]


def write_central_csv(path, grid: Grid, mean, mode, median) -> None:
    with Path(path).open("w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(["t", "mean", "mode", "median"])
        for t, a, b, c in zip(grid.points, mean.values, mode.values, median.values):
            w.writerow([_fmt(t), _fmt(a), _fmt(b), _fmt(c)])


def read_central_csv(path) -> np.ndarray:
    with Path(path).open(newline="", encoding="utf-8") as fh:
        rows = list(csv.reader(fh))
    return np.array([[float(c) for c in row] for row in rows[1:]])


_SMALLBALL_HEADER = [
    "radius", "r", "regime", "p_mc", "ci_low", "ci_high", "hits",
    "q_hat", "asymptotic", "log_ratio", "per_dim_error", "reliable",
]


def write_smallball_csv(path, reports) -> None:
    with Path(path).open("w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(_SMALLBALL_HEADER)
        for rep in reports:
            w.writerow(
                [
                    _fmt(rep.radius), rep.r, rep.regime, _fmt(rep.p_mc.p),
                    _fmt(rep.p_mc.ci_low), _fmt(rep.p_mc.ci_high), rep.p_mc.hits,
                    _fmt(rep.q_hat), _fmt(rep.asymptotic_q), _fmt(rep.log_ratio),
                    _fmt(rep.per_dim_error), int(rep.reliable),
                ]
            )


def read_smallball_csv(path) -> list[dict]:
    with Path(path).open(newline="", encoding="utf-8") as fh:
        rows = list(csv.reader(fh))
    out = []
    for row in rows[1:]:
        rec = dict(zip(_SMALLBALL_HEADER, row))
        for key in ("radius", "p_mc", "ci_low", "ci_high", "q_hat", "asymptotic",
                    "log_ratio", "per_dim_error"):
            rec[key] = float(rec[key])
        rec["r"] = int(rec["r"])
        rec["hits"] = int(rec["hits"])
        rec["reliable"] = bool(int(rec["reliable"]))
        out.append(rec)
    return out


def write_imse_csv(path, rows) -> None:
    with Path(path).open("w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(["model", "estimator", "T", "imse"])
        for r in rows:
            w.writerow([r.model_id, r.estimator, r.T, _fmt(r.imse)])


def read_imse_csv(path) -> list[dict]:
    with Path(path).open(newline="", encoding="utf-8") as fh:
        rows = list(csv.reader(fh))
    return [
        {"model": a, "estimator": b, "T": int(c), "imse": float(d)} for a, b, c, d in rows[1:]
    ]
