"""CSV datasets, profile exports and run manifests."""

from __future__ import annotations

import csv
import json
import math
import platform
import sys
from dataclasses import asdict, dataclass, field
from importlib import metadata
from pathlib import Path
from typing import Any, Sequence

import numpy as np
import scipy

from ._rng import rng_tag
from .dgp import Dataset
from .exceptions import ParameterError

PACKAGE = "artifact"


def _num(v: float) -> str:
    return repr(float(v))


def sidecar_path(path: str | Path) -> Path:
    path = Path(path)
    return path.with_name(path.name + ".meta.json")


def manifest_path(path: str | Path) -> Path:
    path = Path(path)
    return path.with_name(path.name + ".manifest.json")


def write_dataset_csv(dataset: Dataset, path: str | Path, manifest: str | None = None) -> Path:
    """``t,y,x`` (``t,y`` for AR data) plus a JSON sidecar with the generating config."""
    path = Path(path)
    with open(path, "w", newline="", encoding="utf-8") as fh:
        out = csv.writer(fh, lineterminator="\n")
        if dataset.x is None:
            out.writerow(["t", "y"])
            out.writerows([t + 1, _num(y)] for t, y in enumerate(dataset.y))
        else:
            out.writerow(["t", "y", "x"])
            out.writerows(
                [t + 1, _num(y), _num(x)] for t, (y, x) in enumerate(zip(dataset.y, dataset.x))
            )
    side = {"meta": dataset.meta, "rows": dataset.n, "manifest": manifest}
    sidecar_path(path).write_text(json.dumps(side, indent=2, sort_keys=True, default=_json) + "\n")
    return path


def read_dataset_csv(
    path: str | Path, y_col: str = "y", x_col: str | None = "x", model: str = "predictive"
) -> Dataset:
    """Read a headed CSV; ``model="ar1"`` ignores any regressor column."""
    if model not in ("predictive", "ar1"):
        raise ParameterError(f"model must be predictive or ar1, got {model!r}")
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        header = reader.fieldnames or []
        need = [y_col] + ([x_col] if model == "predictive" and x_col else [])
        missing = [c for c in need if c not in header]
        if missing:
            raise ParameterError(f"{path}: missing column(s) {missing}; header is {header}")
        cols: dict[str, list[float]] = {c: [] for c in need}
        for line, row in enumerate(reader, start=2):
            for c in need:
                cell = (row.get(c) or "").strip()
                try:
                    v = float(cell)
                except ValueError:
                    raise ParameterError(f"{path}:{line}: column {c!r} value {cell!r} is not a number")
                if not math.isfinite(v):
                    raise ParameterError(f"{path}:{line}: column {c!r} is missing or non-finite")
                cols[c].append(v)
    y = np.array(cols[y_col])
    x = np.array(cols[x_col]) if model == "predictive" and x_col else None
    return Dataset(y, x, {"source": str(path)})


def write_profile_csv(
    path: str | Path, ks: Sequence[int], n: int, values: Sequence[float], name: str
) -> Path:
    """Scan profile as ``k,tau,<name>``."""
    path = Path(path)
    with open(path, "w", newline="", encoding="utf-8") as fh:
        out = csv.writer(fh, lineterminator="\n")
        out.writerow(["k", "tau", name])
        out.writerows([int(k), _num(k / n), _num(v)] for k, v in zip(ks, values))
    return path


def write_values_csv(path: str | Path, name: str, values: Sequence[float]) -> Path:
    path = Path(path)
    with open(path, "w", newline="", encoding="utf-8") as fh:
        out = csv.writer(fh, lineterminator="\n")
        out.writerow(["b", name])
        out.writerows([b, _num(v)] for b, v in enumerate(values))
    return path


def versions() -> dict[str, str]:
    try:
        own = metadata.version(PACKAGE)
    except metadata.PackageNotFoundError:
        own = "unknown"
    return {
        PACKAGE: own, "numpy": np.__version__, "scipy": scipy.__version__,
        "python": platform.python_version(), "rng": rng_tag(),
    }


@dataclass
class RunManifest:
    subcommand: str
    parameters: dict[str, Any]
    seed: int | None
    inputs: list[str] = field(default_factory=list)
    outputs: list[str] = field(default_factory=list)
    wall_clock: float = 0.0
    versions: dict[str, str] = field(default_factory=versions)
    argv: list[str] = field(default_factory=lambda: list(sys.argv))

    def write(self, path: str | Path) -> Path:
        path = Path(path)
        path.write_text(json.dumps(asdict(self), indent=2, sort_keys=True, default=_json) + "\n")
        return path


def _json(obj):
    if isinstance(obj, np.generic):
        return obj.item()
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    if isinstance(obj, Path):
        return str(obj)
    if hasattr(obj, "__dataclass_fields__"):
        return asdict(obj)
    raise TypeError(f"cannot serialise {type(obj).__name__}")
