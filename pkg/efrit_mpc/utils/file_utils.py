"""File utility functions for efrit-mpc.

Data files are written with fixed float formatting and no timestamps so that
identical runs produce byte-identical files.
"""

import csv
import json
from collections.abc import Sequence
from pathlib import Path
from typing import Any

import numpy as np
import yaml

from efrit_mpc.core.errors import ConfigError
from efrit_mpc.core.frit import IoRecord, TuningResult
from efrit_mpc.core.pid import PidGains
from efrit_mpc.core.signals import TimeSeries, series_from

TIME_FORMAT = "{:.6f}"
VALUE_FORMAT = "{:.9g}"


def format_time(t: float) -> str:
    """Time stamp with 6 decimals."""
    return TIME_FORMAT.format(t)


def format_value(x: Any) -> str:
    """Floats with 9 significant digits; everything else via str()."""
    if isinstance(x, float | np.floating):
        return VALUE_FORMAT.format(float(x))
    return str(x)


def read_csv(file_path: str | Path) -> list[dict[str, str]]:
    """Read a CSV file and return a list of dictionaries.

    Args:
        file_path: Path to the CSV file

    Returns:
        List of dictionaries, where each dictionary represents a row in the CSV file
    """
    with open(file_path, newline="", encoding="utf-8") as f:
        reader = csv.DictReader(f)
        return list(reader)


def write_csv(
    file_path: str | Path,
    data: list[dict[str, Any]],
    fieldnames: list[str] | None = None,
) -> None:
    """Write a list of dictionaries to a CSV file.

    Float values are formatted with 9 significant digits.

    Args:
        file_path: Path to the CSV file
        data: List of dictionaries to write
        fieldnames: List of field names to use as headers. If None, uses the keys of the
            first dictionary.
    """
    if not data:
        return

    if fieldnames is None:
        fieldnames = list(data[0].keys())

    with open(file_path, "w", newline="", encoding="utf-8") as f:
        writer = csv.DictWriter(f, fieldnames=fieldnames, lineterminator="\n")
        writer.writeheader()
        for row in data:
            writer.writerow({k: format_value(v) for k, v in row.items()})


def read_json(file_path: str | Path) -> Any:
    """Read a JSON file and return the parsed data.

    Args:
        file_path: Path to the JSON file

    Returns:
        Parsed JSON data
    """
    with open(file_path, encoding="utf-8") as f:
        return json.load(f)


def write_json(file_path: str | Path, data: Any, indent: int = 2) -> None:
    """Write data to a JSON file.

    Args:
        file_path: Path to the JSON file
        data: Data to write
        indent: Number of spaces to use for indentation
    """
    with open(file_path, "w", encoding="utf-8") as f:
        json.dump(data, f, indent=indent, ensure_ascii=False, sort_keys=True)
        f.write("\n")


def read_yaml(file_path: str | Path) -> Any:
    """Read a YAML file."""
    with open(file_path, encoding="utf-8") as f:
        return yaml.safe_load(f)


def write_yaml(file_path: str | Path, data: Any) -> None:
    """Write data to a YAML file with keys in insertion order."""
    with open(file_path, "w", encoding="utf-8") as f:
        yaml.safe_dump(data, f, sort_keys=False, default_flow_style=False)


def write_series(file_path: str | Path, x: TimeSeries) -> None:
    """Write a series as `t,value`."""
    with open(file_path, "w", newline="", encoding="utf-8") as f:
        f.write("t,value\n")
        for t, v in zip(x.times, x.values):
            f.write(f"{format_time(t)},{format_value(float(v))}\n")


def _column(rows: Sequence[dict[str, str]], name: str, path: str | Path) -> list[float]:
    try:
        return [float(row[name]) for row in rows]
    except KeyError as e:
        raise ConfigError(f"{path}: missing column {name!r}") from e
    except ValueError as e:
        raise ConfigError(f"{path}: non-numeric value in column {name!r}") from e


def _read_rows(path: str | Path) -> list[dict[str, str]]:
    try:
        return read_csv(path)
    except OSError as e:
        raise ConfigError(f"Cannot read {path}: {e.strerror or e}") from e


def _sampling_time(t: Sequence[float], path: str | Path) -> float:
    if len(t) < 2:
        raise ConfigError(f"{path}: need at least two samples")
    steps = np.diff(t)
    ts = float(steps[0])
    if not ts > 0 or not np.allclose(steps, ts, rtol=1e-6, atol=1e-9):
        raise ConfigError(f"{path}: time column is not uniformly sampled")
    return ts


def read_series(file_path: str | Path) -> TimeSeries:
    """Read a `t,value` file; the sampling time comes from the time column."""
    rows = _read_rows(file_path)
    t = _column(rows, "t", file_path)
    return series_from(_column(rows, "value", file_path), _sampling_time(t, file_path))


def read_io_record(file_path: str | Path, theta0: Sequence[float]) -> IoRecord:
    """Read a `t,u,y` closed-loop record logged under gains [kp, ki, kd].

    Args:
        file_path: Path to the CSV file
        theta0: Gains the record was logged with

    Returns:
        The record

    Raises:
        ConfigError: If the file is missing, malformed or not uniformly sampled
    """
    rows = _read_rows(file_path)
    t = _column(rows, "t", file_path)
    ts = _sampling_time(t, file_path)
    u = series_from(_column(rows, "u", file_path), ts)
    y = series_from(_column(rows, "y", file_path), ts)
    kp, ki, kd = (float(g) for g in theta0)
    return IoRecord(u0=u, y0=y, theta0=PidGains(kp, ki, kd, ts))


def write_io_record(file_path: str | Path, rec: IoRecord) -> None:
    """Write a record as `t,u,y`."""
    with open(file_path, "w", newline="", encoding="utf-8") as f:
        f.write("t,u,y\n")
        for t, u, y in zip(rec.u0.times, rec.u0.values, rec.y0.values):
            f.write(
                f"{format_time(t)},{format_value(float(u))},{format_value(float(y))}\n"
            )


def tuning_result_dict(result: TuningResult) -> dict[str, Any]:
    """Plain mapping of a tuning result (kp, ki, kd, tc, lambda, cost, ...)."""
    th = result.theta
    return {
        "kp": th.kp,
        "ki": th.ki,
        "kd": th.kd,
        "tc": th.tc,
        "lambda": result.lambda_,
        "cost": result.cost,
        "iterations": result.iterations,
        "stalled": result.stalled,
        "starts": [
            {
                "index": s.index,
                "theta": s.theta.as_list(),
                "cost": s.cost,
                "iterations": s.iterations,
                "stalled": s.stalled,
            }
            for s in result.starts
        ],
    }


def write_tuning_result(file_path: str | Path, result: TuningResult) -> None:
    """Write a tuning result as YAML."""
    write_yaml(file_path, tuning_result_dict(result))
