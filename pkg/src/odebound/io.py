"""CSV formats and the flat ``key = value`` run configuration."""

from __future__ import annotations

import csv
import math
import os
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from .approx import ToleranceConfig
from .grid import TimeGrid
from .surrogates import Surrogate

OUT_ENV_VAR = "ODEBOUND_OUT"
DEFAULT_OUT = "odebound-out"
SURROGATE_COLUMNS = ("t", "v", "dv")
BOUND_KINDS = ("loose", "tight", "exact")


class CsvFormatError(ValueError):
    def __init__(self, path, line: int | None, message: str):
        where = f"{path}:{line}" if line is not None else str(path)
        super().__init__(f"{where}: {message}")
        self.line = line


class ConfigError(ValueError):
    """One or more configuration problems, reported together."""

    def __init__(self, problems: list[str]):
        super().__init__("invalid configuration:\n  " + "\n  ".join(problems))
        self.problems = problems


def _fmt(x: float) -> str:
    return "" if math.isnan(x) else f"{x:.17g}"


# -- CSV -------------------------------------------------------------------------


def write_columns(path, columns: dict[str, np.ndarray]) -> Path:
    """Write equal-length columns with a header row; NaN becomes an empty field."""
    path = Path(path)
    names = list(columns)
    data = [np.asarray(columns[n], dtype=float) for n in names]
    lengths = {len(d) for d in data}
    if len(lengths) != 1:
        raise ValueError(f"columns differ in length: {dict(zip(names, map(len, data)))}")
    with path.open("w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(names)
        for row in zip(*data):
            writer.writerow([_fmt(x) for x in row])
    return path


def write_curve_csv(path, curve, abs_error: np.ndarray | None = None) -> Path:
    """``t, bound, valid_flag`` (plus ``abs_error`` when given)."""
    columns = {"t": curve.grid.t, "bound": curve.values, "valid_flag": curve.valid.astype(float)}
    if abs_error is not None:
        columns["abs_error"] = abs_error
    return write_columns(path, columns)


def write_orders_csv(path, series, J: int) -> Path:
    columns = {"t": series.grid.t}
    for j in range(J + 1):
        columns[f"eta_{j}"] = series.raw(j)
    return write_columns(path, columns)


def write_rows(path, rows: list[dict]) -> Path:
    """Write dict rows sharing the first row's keys; floats get 17 significant digits."""
    path = Path(path)
    names = list(rows[0]) if rows else []
    with path.open("w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(names)
        for row in rows:
            writer.writerow([_fmt(x) if isinstance(x, float) else x for x in (row[n] for n in names)])
    return path


def write_surrogate_csv(path, surrogate: Surrogate) -> Path:
    return write_columns(path, {"t": surrogate.grid.t, "v": surrogate.v.values, "dv": surrogate.dv.values})


def read_surrogate_csv(path, grid: TimeGrid) -> Surrogate:
    """Read ``t,v,dv`` rows that sit on the nodes of ``grid``.

    ``dv`` must be supplied: the derivative is never estimated from ``v``.
    """
    path = Path(path)
    with path.open(newline="") as fh:
        rows = list(csv.reader(fh))
    if not rows:
        raise CsvFormatError(path, 1, "empty file")
    header = [h.strip() for h in rows[0]]
    missing = [c for c in SURROGATE_COLUMNS if c not in header]
    if missing:
        raise CsvFormatError(path, 1, f"header {header} is missing column(s) {', '.join(missing)}")
    if header != list(SURROGATE_COLUMNS):
        raise CsvFormatError(path, 1, f"header must be exactly 't,v,dv', got {','.join(header)}")
    body = rows[1:]
    if len(body) != grid.n_points:
        raise CsvFormatError(path, None, f"expected {grid.n_points} data rows for {grid}, found {len(body)}")
    data = np.empty((len(body), 3))
    for i, row in enumerate(body):
        line = i + 2
        if len(row) != 3:
            raise CsvFormatError(path, line, f"expected 3 fields, found {len(row)}")
        for k, text in enumerate(row):
            try:
                value = float(text)
            except ValueError:
                raise CsvFormatError(path, line, f"{SURROGATE_COLUMNS[k]}={text!r} is not a number") from None
            if not math.isfinite(value):
                raise CsvFormatError(path, line, f"{SURROGATE_COLUMNS[k]} is not finite ({text})")
            data[i, k] = value
    t = data[:, 0]
    # data row i sits on line i + 2
    bad = np.flatnonzero(np.diff(t) <= 0)
    if bad.size:
        raise CsvFormatError(path, int(bad[0]) + 3, "t values must be strictly increasing")
    bad = np.flatnonzero(np.abs(t - grid.t) > 1e-12 * np.maximum(1.0, np.abs(grid.t)))
    if bad.size:
        i = int(bad[0])
        raise CsvFormatError(path, i + 2, f"t={t[i]:.17g} does not match grid node {grid.t[i]:.17g}")
    return Surrogate.from_arrays(grid, data[:, 1], data[:, 2], kind="external_csv", path=str(path))


def write_constants(path, values: dict) -> Path:
    path = Path(path)
    lines = []
    for key, value in values.items():
        if isinstance(value, float):
            value = _fmt(value) or "nan"
        lines.append(f"{key} = {value}")
    path.write_text("\n".join(lines) + "\n")
    return path


def read_constants(path) -> dict[str, str]:
    return read_key_values(path)


# -- configuration ---------------------------------------------------------------


def read_key_values(path) -> dict[str, str]:
    out = {}
    for lineno, raw in enumerate(Path(path).read_text().splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError([f"{path}:{lineno}: expected 'key = value', got {raw!r}"])
        key, value = line.split("=", 1)
        out[key.strip().lower().replace("-", "_")] = value.strip()
    return out


@dataclass(frozen=True)
class RunConfig:
    model: str = "population"
    riccati: dict | None = None
    t_start: float | None = None
    t_end: float | None = None
    n_points: int = 10_001
    tol: ToleranceConfig = field(default_factory=ToleranceConfig)
    kind: str = "tight"
    order: int | None = None
    eps: float = 1e-8
    surrogate_csv: str | None = None
    scale: float = 1e-5
    mode_count: int = 3
    seed: int = 0
    out: str = field(default_factory=lambda: os.environ.get(OUT_ENV_VAR, DEFAULT_OUT))

    def with_updates(self, **kw) -> RunConfig:
        return replace(self, **kw)


_FLOAT_KEYS = ("t_start", "t_end", "eps", "scale")
_INT_KEYS = ("n_points", "order", "mode_count", "seed", "max_order")
_TOL_KEYS = ("eps_abs_p", "eps_rel_p", "eps_abs_j", "eps_rel_j")
_RICCATI_KEYS = ("a", "b", "c", "t0", "u0")
_KNOWN = set(_FLOAT_KEYS + _INT_KEYS + _TOL_KEYS + _RICCATI_KEYS) | {"model", "kind", "surrogate_csv", "out", "grid"}


def build_config(values: dict[str, str | None]) -> RunConfig:
    """Validate raw string settings (file values overlaid with CLI flags).

    Every problem is collected and raised at once as :class:`ConfigError`.
    """
    problems: list[str] = []
    values = {k: v for k, v in values.items() if v is not None}
    for key in values:
        if key not in _KNOWN:
            problems.append(f"unknown setting {key!r}")

    def number(key, cast):
        if key not in values:
            return None
        try:
            x = cast(values[key])
        except (TypeError, ValueError):
            problems.append(f"{key}: {values[key]!r} is not a valid {cast.__name__}")
            return None
        if cast is float and not math.isfinite(x):
            problems.append(f"{key}: must be finite")
            return None
        return x

    if "grid" in values:
        parts = str(values["grid"]).split(",")
        if len(parts) == 1:
            values.setdefault("n_points", parts[0])
        elif len(parts) == 3:
            values.setdefault("t_start", parts[0])
            values.setdefault("t_end", parts[1])
            values.setdefault("n_points", parts[2])
        else:
            problems.append(f"grid: expected 'N' or 't_start,t_end,N', got {values['grid']!r}")

    kw = {}
    for key in _FLOAT_KEYS:
        x = number(key, float)
        if x is not None:
            kw[key] = x
    for key in ("n_points", "order", "mode_count", "seed"):
        x = number(key, int)
        if x is not None:
            kw[key] = x

    model = values.get("model", RunConfig.model)
    kw["model"] = model
    if model == "riccati":
        missing = [k.upper() if len(k) == 1 else k for k in _RICCATI_KEYS + ("t_end",) if k not in values]
        if missing:
            problems.append(f"model=riccati needs settings {', '.join(missing)}")
        else:
            kw["riccati"] = {k: values[k] for k in _RICCATI_KEYS}
    elif model not in ("population", "cosmology"):
        problems.append(f"model: unknown model {model!r} (population, cosmology, riccati)")

    kind = values.get("kind", RunConfig.kind)
    if kind not in BOUND_KINDS:
        problems.append(f"kind: must be one of {', '.join(BOUND_KINDS)}, got {kind!r}")
    kw["kind"] = kind
    if kind == "exact" and model == "population":
        problems.append("kind=exact needs a Riccati model (cosmology or riccati)")

    if "n_points" in kw and kw["n_points"] < 2:
        problems.append("n_points must be >= 2")
    if "t_start" in kw and "t_end" in kw and not kw["t_end"] > kw["t_start"]:
        problems.append(f"t_end ({kw['t_end']}) must exceed t_start ({kw['t_start']})")
    if "order" in kw and kw["order"] < 0:
        problems.append("order must be >= 0")
    if "eps" in kw and not kw["eps"] > 0:
        problems.append("eps must be positive")
    if "scale" in kw and kw["scale"] < 0:
        problems.append("scale must be >= 0")
    if "mode_count" in kw and kw["mode_count"] < 1:
        problems.append("mode_count must be >= 1")

    tol_kw = {}
    for key in _TOL_KEYS:
        x = number(key, float)
        if x is not None:
            tol_kw[key[:-1] + key[-1].upper()] = x
    max_order = number("max_order", int)
    if max_order is not None:
        tol_kw["max_order"] = max_order
    try:
        kw["tol"] = ToleranceConfig(**tol_kw)
    except ValueError as exc:
        problems.append(f"tolerances: {exc}")

    if "surrogate_csv" in values:
        kw["surrogate_csv"] = values["surrogate_csv"]
    if "out" in values:
        kw["out"] = values["out"]

    if problems:
        raise ConfigError(problems)
    return RunConfig(**kw)
