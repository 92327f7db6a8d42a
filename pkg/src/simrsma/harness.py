"""Monte Carlo trials, parameter sweeps, CSV emission and run manifests."""

from __future__ import annotations

import csv
import dataclasses
import hashlib
import json
import math
import platform
import struct
import time
from concurrent.futures import ProcessPoolExecutor, as_completed
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Callable, Iterable

import numpy as np

from . import kernels
from .config import ConfigError, SystemConfig, dbm_to_watts, load_json, watts_to_dbm
from .geometry import realize
from .rates import jain_index  # noqa: F401  (re-exported harness metric)
from .schemes import SCHEMES, solve

AXES = ("pmax", "users", "atoms", "layers", "none")
AXIS_FIELDS = {"pmax": "max_power", "users": "num_users", "atoms": "atoms_per_layer",
               "layers": "layers"}
SPEC_KEYS = ("axis", "values", "schemes", "trials", "seed", "out", "threads")
CSV_COLUMNS = ["scheme", "axis", "axis_value", "trial", "seed", "min_rate", "sum_rate", "jain",
               "iters"]


@dataclass(frozen=True)
class ExperimentSpec:
    base: SystemConfig = field(default_factory=SystemConfig)
    axis: str = "none"
    values: tuple = ()
    schemes: tuple = ("rsma",)
    trials: int = 50
    seed: int = 0
    out: str | None = None

    def __post_init__(self):
        if self.axis not in AXES:
            raise ConfigError(f"axis must be one of {AXES}, got {self.axis!r}")
        object.__setattr__(self, "values", tuple(self.values))
        object.__setattr__(self, "schemes", tuple(self.schemes))
        if self.axis == "none":
            if self.values:
                raise ConfigError("axis 'none' takes no values")
        else:
            if not self.values:
                raise ConfigError(f"axis {self.axis!r} needs at least one value")
            if any(b <= a for a, b in zip(self.values, self.values[1:])):
                raise ConfigError("axis values must be strictly increasing")
        if self.trials < 1:
            raise ConfigError("trials must be >= 1")
        unknown = [s for s in self.schemes if s not in SCHEMES]
        if unknown or not self.schemes:
            raise ConfigError(f"unknown schemes {unknown}; expected a subset of {SCHEMES}")
        if not 0 <= int(self.seed) < 2 ** 64:
            raise ConfigError("seed must be an unsigned 64-bit integer")

    @property
    def points(self) -> tuple:
        return self.values if self.axis != "none" else (None,)

    def config_at(self, value) -> SystemConfig:
        """Base configuration with the sweep axis set to ``value``."""
        if self.axis == "none" or value is None:
            return self.base
        if self.axis == "pmax":
            return self.base.replace(max_power=dbm_to_watts(float(value)))
        return self.base.replace(**{AXIS_FIELDS[self.axis]: int(value)})

    def replace(self, **changes) -> "ExperimentSpec":
        return dataclasses.replace(self, **changes)

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> "ExperimentSpec":
        """Flat document: SystemConfig keys plus the experiment keys."""
        data = dict(data)
        exp = {k: data.pop(k) for k in SPEC_KEYS if k in data}
        exp.pop("threads", None)
        base = SystemConfig.from_dict(data)
        return cls(base=base, **exp)

    def to_dict(self) -> dict[str, Any]:
        return {"config": self.base.to_dict(), "axis": self.axis, "values": list(self.values),
                "schemes": list(self.schemes), "trials": self.trials, "seed": int(self.seed),
                "out": self.out}


def load_spec(path) -> tuple[ExperimentSpec, int | None]:
    """Spec plus the optional ``threads`` entry from a JSON file."""
    data = load_json(path)
    threads = data.get("threads")
    return ExperimentSpec.from_dict(data), threads


def derive_seed(master: int, *parts) -> int:
    """64-bit seed from a hash of the master seed and the given labels."""
    h = hashlib.blake2b(digest_size=8)
    h.update(struct.pack("<Q", int(master) % 2 ** 64))
    for part in parts:
        h.update(b"\x1f")
        h.update(repr(part).encode())
    return int.from_bytes(h.digest(), "little")


def trial_seeds(spec: ExperimentSpec, axis_value, trial: int, scheme: str) -> tuple[int, int]:
    """(channel seed, solver seed).  The channel seed ignores the scheme so that
    all schemes of one trial see the same realisation."""
    channel = derive_seed(spec.seed, spec.axis, axis_value, trial)
    return channel, derive_seed(spec.seed, spec.axis, axis_value, trial, scheme)


@dataclass
class TrialResult:
    scheme: str
    axis: str
    axis_value: Any
    trial: Any  # index, or "mean" / "stderr" on aggregate rows
    seed: int | None
    min_rate: float
    sum_rate: float
    jain: float
    iters: float
    rates: list
    trace: list | None = None
    error: str | None = None
    wall_time: float = 0.0

    @property
    def ok(self) -> bool:
        return self.error is None

    @property
    def is_aggregate(self) -> bool:
        return self.trial in ("mean", "stderr")


def run_trial(spec: ExperimentSpec, axis_value, trial_idx: int, scheme: str,
              keep_trace: bool = False) -> TrialResult:
    """One (point, trial, scheme) cell.  Solver failures become flagged rows."""
    config = spec.config_at(axis_value)
    chan_seed, solver_seed = trial_seeds(spec, axis_value, trial_idx, scheme)
    try:
        channel = realize(config, chan_seed)
        sol = solve(scheme, channel, config, solver_seed)
    except Exception as exc:  # recorded, never aborts a sweep
        nan = float("nan")
        return TrialResult(scheme, spec.axis, axis_value, trial_idx, chan_seed, nan, nan, nan,
                           0, [nan] * config.num_users, error=f"{type(exc).__name__}: {exc}")
    rep = sol.report
    return TrialResult(scheme, spec.axis, axis_value, trial_idx, chan_seed, rep.min_rate,
                       rep.sum_rate, rep.jain, sol.iterations, [float(r) for r in rep.R_total],
                       trace=list(sol.trace) if keep_trace else None,
                       wall_time=sol.wall_time)


def _cell(args):
    spec, value, trial, scheme, keep_trace = args
    return run_trial(spec, value, trial, scheme, keep_trace)


def _sort_key(spec: ExperimentSpec):
    order = {s: i for i, s in enumerate(spec.schemes)}
    points = {v: i for i, v in enumerate(spec.points)}
    return lambda r: (points[r.axis_value], order[r.scheme], r.trial)


def run_cells(spec: ExperimentSpec, threads: int = 1, keep_trace: bool = False,
              on_result: Callable[[TrialResult], None] | None = None) -> list[TrialResult]:
    """All trial rows, sorted by (axis value, scheme, trial) whatever the pool order."""
    cells = [(spec, v, t, s, keep_trace) for v in spec.points for s in spec.schemes
             for t in range(spec.trials)]
    results = []
    if threads <= 1:
        for cell in cells:
            res = _cell(cell)
            results.append(res)
            if on_result:
                on_result(res)
    else:
        with ProcessPoolExecutor(max_workers=threads) as pool:
            futures = [pool.submit(_cell, c) for c in cells]
            try:
                for fut in as_completed(futures):
                    res = fut.result()
                    results.append(res)
                    if on_result:
                        on_result(res)
            except KeyboardInterrupt:
                for fut in futures:
                    fut.cancel()
                raise
    return sorted(results, key=_sort_key(spec))


def aggregate(rows: Iterable[TrialResult]) -> list[TrialResult]:
    """Mean and standard-error rows per (axis value, scheme); flagged rows skipped."""
    groups: dict = {}
    for r in rows:
        if r.ok and not r.is_aggregate:
            groups.setdefault((r.axis_value, r.scheme), []).append(r)
    out = []
    for (value, scheme), members in groups.items():
        cols = {
            "min_rate": np.array([m.min_rate for m in members]),
            "sum_rate": np.array([m.sum_rate for m in members]),
            "jain": np.array([m.jain for m in members]),
            "iters": np.array([m.iters for m in members], dtype=float),
        }
        rates = np.array([m.rates for m in members])
        n = len(members)
        mean = {k: float(np.mean(v)) for k, v in cols.items()}
        se = {k: float(np.std(v, ddof=1) / math.sqrt(n)) if n > 1 else 0.0 for k, v in cols.items()}
        r_mean = [float(x) for x in rates.mean(axis=0)]
        r_se = [float(x) for x in (rates.std(axis=0, ddof=1) / math.sqrt(n) if n > 1
                                   else np.zeros(rates.shape[1]))]
        axis = members[0].axis
        out.append(TrialResult(scheme, axis, value, "mean", None, rates=r_mean, **mean))
        out.append(TrialResult(scheme, axis, value, "stderr", None, rates=r_se, **se))
    return out


def run_sweep(spec: ExperimentSpec, threads: int = 1,
              on_result: Callable[[TrialResult], None] | None = None) -> list[TrialResult]:
    """Trial rows followed by the aggregate rows of every cell group."""
    rows = run_cells(spec, threads, on_result=on_result)
    return rows + aggregate(rows)


def summarize(rows: Iterable[TrialResult]) -> dict:
    """{axis_value: {scheme: mean min/sum/jain}} from aggregate rows."""
    out: dict = {}
    for r in rows:
        if r.trial == "mean":
            out.setdefault(r.axis_value, {})[r.scheme] = {
                "min_rate": r.min_rate, "sum_rate": r.sum_rate, "jain": r.jain, "iters": r.iters}
    return out


def scheme_ratios(rows: Iterable[TrialResult]) -> dict:
    """Mean min-rate of RSMA over every other scheme, per axis value."""
    ratios = {}
    for value, per in summarize(rows).items():
        if "rsma" not in per:
            continue
        base = per["rsma"]["min_rate"]
        ratios[str(value)] = {f"rsma/{s}": base / m["min_rate"] if m["min_rate"] > 0 else None
                              for s, m in per.items() if s != "rsma"}
    return ratios


def convergence_experiment(spec: ExperimentSpec, threads: int = 1) -> list[dict]:
    """Best exact objective after every outer AO iteration, per scheme and trial."""
    single = spec.replace(axis="none", values=())
    rows = []
    for res in run_cells(single, threads, keep_trace=True):
        if not res.ok:
            continue
        for i, v in enumerate(res.trace, start=1):
            rows.append({"scheme": res.scheme, "trial": res.trial, "seed": res.seed,
                         "iteration": i, "min_rate": float(v)})
    return rows


def _fmt(x) -> str:
    if x is None:
        return ""
    if isinstance(x, (bool, np.bool_)):
        return str(bool(x))
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    if isinstance(x, (float, np.floating)):
        return format(float(x), ".17g")
    return str(x)


def emit_csv(results: Iterable[TrialResult], path) -> Path:
    """Header plus one row per result; per-user columns r1..rK (K = widest row)."""
    results = list(results)
    width = max((len(r.rates) for r in results), default=0)
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\r\n")
        writer.writerow(CSV_COLUMNS + [f"r{k + 1}" for k in range(width)])
        for r in results:
            row = [r.scheme, r.axis, r.axis_value, r.trial, r.seed, r.min_rate, r.sum_rate,
                   r.jain, r.iters]
            rates = list(r.rates) + [None] * (width - len(r.rates))
            writer.writerow([_fmt(x) for x in row + rates])
    return path


def read_csv(path) -> list[dict]:
    with open(path, encoding="utf-8", newline="") as fh:
        return list(csv.DictReader(fh))


def emit_convergence_csv(rows: list[dict], path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\r\n")
        writer.writerow(["scheme", "trial", "seed", "iteration", "min_rate"])
        for r in rows:
            writer.writerow([_fmt(r[k]) for k in ("scheme", "trial", "seed", "iteration",
                                                  "min_rate")])
    return path


def manifest(spec: ExperimentSpec, rows: list[TrialResult] | None = None, **extra) -> dict:
    from . import __version__

    doc = {
        "package": "simrsma",
        "version": __version__,
        "created": time.strftime("%Y-%m-%dT%H:%M:%S%z"),
        "python": platform.python_version(),
        "numpy": np.__version__,
        "kernel_backend": kernels.BACKEND,
        "spec": spec.to_dict(),
        "max_power_dbm": watts_to_dbm(spec.base.max_power),
        "noise_power_dbm": watts_to_dbm(spec.base.noise_power),
    }
    if rows is not None:
        failures = [{"scheme": r.scheme, "axis_value": r.axis_value, "trial": r.trial,
                     "error": r.error} for r in rows if not r.ok]
        doc["trials_run"] = sum(1 for r in rows if not r.is_aggregate)
        doc["failures"] = failures
        doc["means"] = {str(k): v for k, v in summarize(rows).items()}
        doc["ratios"] = scheme_ratios(rows)
    doc.update(extra)
    return doc


def write_manifest(doc: dict, path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(doc, fh, indent=2, sort_keys=True, default=_json_default)
        fh.write("\n")
    return path


def _json_default(obj):
    if isinstance(obj, np.generic):
        return obj.item()
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    raise TypeError(f"not JSON serialisable: {type(obj).__name__}")
