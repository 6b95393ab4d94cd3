"""Verification rows, configuration and JSON-lines output."""
from __future__ import annotations

import copy
import csv
import json
import time
from contextlib import contextmanager
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

from .errors import ConfigError

REPORT_FIELDS = ("check_id", "paper_ref", "params", "lhs", "rhs", "abs_err", "tol",
                 "pass", "runtime_ms", "seed")

DEFAULT_CONFIG: dict[str, Any] = {
    "seed": 0,
    "n_trunc": 512,
    "n_ladder": [64, 128, 256, 512],
    "band": 4,
    "matrix": {
        "dims": [4, 8, 16],
        "degrees": [2, 4],
        "trials": 50,
        "h_scale": 0.3,
        "idempotents": 24,
        "homotopy_t": [0.0, 0.25, 0.5, 0.75, 1.0],
    },
    "circle": {
        "epsilons": [0.2, 0.3, 0.5],
        "vanishing_samples": 10,
        "pairs": 4,
        "boundedness_epsilon": 0.3,
        "boundedness_g": [[0, 1.0, 0.0], [1, 0.25, 0.0], [-1, 0.25, 0.0]],
    },
    "heat_fit": {
        "t_max": 2e-3,
        "count": 24,
        "j_max": 4,
        "condition_bound": 1e8,
        "residual_bound": 1e-6,
    },
    "tolerances": {
        "matrix_cocycle": 1e-10,
        "matrix_conjugation": 1e-11,
        "matrix_factorization": 1e-11,
        "matrix_leibniz": 1e-12,
        "matrix_split": 1e-11,
        "matrix_index": 1e-9,
        "matrix_endpoints": 1e-10,
        "matrix_phase": 1e-11,
        "matrix_sigma_adjoint": 1e-11,
        "matrix_grading": 1e-13,
        "boundedness_sup_rel": 1e-6,
        "sigma_trace": 1e-10,
        "dixmier": 1e-3,
        "zeta_rel": 1e-3,
        "vanishing_rel": 1e-3,
        "identity_closed": 1e-9,
        "identity_spectral": 1e-3,
        "cartan": 1e-8,
        "tau_cyclic": 1e-8,
    },
}


def _merge(base: dict, over: dict, path: str = "") -> dict:
    out = copy.deepcopy(base)
    for k, v in over.items():
        if k not in base:
            raise ConfigError(f"unknown config key {path + k!r}")
        if isinstance(base[k], dict):
            if not isinstance(v, dict):
                raise ConfigError(f"config key {path + k!r} must be an object")
            out[k] = _merge(base[k], v, path + k + ".")
        else:
            out[k] = v
    return out


def load_config(path: str | Path | None = None, overrides: dict | None = None) -> dict:
    """Defaults, then the JSON file at ``path``, then ``overrides``."""
    cfg = copy.deepcopy(DEFAULT_CONFIG)
    if path is not None:
        try:
            data = json.loads(Path(path).read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from exc
        if not isinstance(data, dict):
            raise ConfigError("config root must be an object")
        cfg = _merge(cfg, data)
    if overrides:
        cfg = _merge(cfg, overrides)
    return cfg


def _jsonable(x):
    if isinstance(x, complex):
        return [x.real, x.imag]
    if hasattr(x, "item") and not isinstance(x, (list, dict)):
        return _jsonable(x.item())
    if isinstance(x, (list, tuple)):
        return [_jsonable(v) for v in x]
    if isinstance(x, dict):
        return {k: _jsonable(v) for k, v in x.items()}
    return x


@dataclass
class CheckReport:
    check_id: str
    paper_ref: str
    lhs: Any
    rhs: Any
    abs_err: float
    tol: float
    params: dict = field(default_factory=dict)
    runtime_ms: int = 0
    seed: int | None = None

    @property
    def passed(self) -> bool:
        return bool(self.abs_err <= self.tol)

    def to_dict(self) -> dict:
        return {"check_id": self.check_id, "paper_ref": self.paper_ref,
                "params": _jsonable(self.params), "lhs": _jsonable(self.lhs),
                "rhs": _jsonable(self.rhs), "abs_err": float(self.abs_err),
                "tol": float(self.tol), "pass": self.passed,
                "runtime_ms": int(self.runtime_ms), "seed": self.seed}


def validate_row(row: dict) -> None:
    """Raise ValueError unless ``row`` follows the report schema."""
    if tuple(sorted(row)) != tuple(sorted(REPORT_FIELDS)):
        raise ValueError(f"row keys {sorted(row)} do not match the schema")
    if not isinstance(row["check_id"], str) or not isinstance(row["paper_ref"], str):
        raise ValueError("check_id and paper_ref must be strings")
    if not isinstance(row["params"], dict):
        raise ValueError("params must be an object")
    for k in ("lhs", "rhs"):
        v = row[k]
        ok = (isinstance(v, (int, float)) and not isinstance(v, bool)) or (
            isinstance(v, list) and len(v) == 2 and all(isinstance(c, (int, float)) for c in v))
        if not ok:
            raise ValueError(f"{k} must be a real or a [re, im] pair")
    if not isinstance(row["abs_err"], (int, float)) or not isinstance(row["tol"], (int, float)):
        raise ValueError("abs_err and tol must be numbers")
    if row["pass"] is not (row["abs_err"] <= row["tol"]):
        raise ValueError("pass must equal abs_err <= tol")
    if not isinstance(row["runtime_ms"], int):
        raise ValueError("runtime_ms must be an integer")
    if row["seed"] is not None and not isinstance(row["seed"], int):
        raise ValueError("seed must be an integer or null")


class Timer:
    def __init__(self):
        self.ms = 0

    @contextmanager
    def run(self):
        t0 = time.perf_counter()
        try:
            yield self
        finally:
            self.ms = int(round((time.perf_counter() - t0) * 1000))


def write_reports(rows: list[CheckReport], out: str | Path) -> None:
    """Append rows (sorted by check_id) as JSON lines."""
    ids = [r.check_id for r in rows]
    if len(set(ids)) != len(ids):
        raise ValueError("duplicate check_id in run")
    out = Path(out)
    out.parent.mkdir(parents=True, exist_ok=True)
    with out.open("a", encoding="utf-8") as fh:
        for r in sorted(rows, key=lambda r: r.check_id):
            fh.write(json.dumps(r.to_dict(), sort_keys=True) + "\n")


def write_meta(out: str | Path, command: str, config: dict) -> Path:
    """Effective settings of the last run, next to the report file."""
    meta = Path(str(out) + ".meta.json")
    meta.write_text(json.dumps({"command": command, "config": config}, indent=2, sort_keys=True))
    return meta


def write_convergence_csv(path: str | Path, rows) -> None:
    """``N,value_re,value_im,delta``; the first delta is empty."""
    with Path(path).open("w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(["N", "value_re", "value_im", "delta"])
        for N, value, delta in rows:
            value = complex(value)
            w.writerow([N, repr(value.real), repr(value.imag),
                        "" if delta != delta else repr(float(delta))])


def read_reports(path: str | Path) -> list[dict]:
    return [json.loads(line) for line in Path(path).read_text().splitlines() if line.strip()]
