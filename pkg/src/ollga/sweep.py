"""Declarative parameter sweeps with deterministic, parallel replication.

A sweep is the cartesian product ``sizes x variants x lambdas x ks x rs``.
Cells are numbered in that order, skipped ones included, and repetition
``j`` of cell ``i`` runs on the stream seeded with
``derive_seed(derive_seed(master_seed, i), j)``.  Results therefore depend
only on the spec, never on worker count or completion order.
"""

from __future__ import annotations

import csv
import hashlib
import io
import json
import logging
import os
import re
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from functools import lru_cache
from pathlib import Path
from typing import Iterable, Iterator, List, Optional, Sequence, Union

from . import __version__
from .analysis import clog2, lambda_star
from .bitspace import OneMaxInstance
from .engine import VARIANTS, GaParams, default_budget, run
from .rng import RngStream, derive_seed

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

log = logging.getLogger(__name__)

__all__ = [
    "SpecError",
    "SweepSpec",
    "Cell",
    "Job",
    "ResultRow",
    "CSV_HEADER",
    "cells",
    "materialize",
    "execute",
    "run_sweep",
    "load_spec",
    "write_rows",
    "read_rows",
    "default_workers",
]

WORKERS_ENV = "OLLGA_WORKERS"
CSV_HEADER = ["n", "lambda", "k", "r", "variant", "seed", "T", "F", "success", "final_distance", "wall_ms"]

LAMBDA_STAR_RULES = {"λ*(n)", "lambda*(n)", "lambda*", "λ*"}
LAMBDA_RULES = {"λ", "lambda"}
TARGETS = ("ones", "random")


class SpecError(ValueError):
    """Invalid sweep configuration."""


Grid = List[Union[int, float, str]]


@dataclass(frozen=True)
class SweepSpec:
    sizes: List[int]
    lambdas: Grid
    ks: Grid
    rs: List[float]
    variants: List[str] = field(default_factory=lambda: ["standard"])
    reps: int = 1
    master_seed: int = 0
    budget: Union[None, int, str] = None
    target: str = "ones"
    target_seed: int = 0
    output: Optional[str] = None
    timing: bool = False

    def __post_init__(self):
        for name in ("sizes", "lambdas", "ks", "rs", "variants"):
            if not getattr(self, name):
                raise SpecError(f"grid '{name}' is empty")
        if self.reps < 1:
            raise SpecError("reps must be >= 1")
        if self.master_seed < 0:
            raise SpecError("seed must be non-negative")
        if self.target not in TARGETS:
            raise SpecError(f"target must be one of {TARGETS}, got {self.target!r}")
        for v in self.variants:
            if v not in VARIANTS:
                raise SpecError(f"unknown variant {v!r}")
        for lam in self.lambdas:
            if isinstance(lam, str) and lam not in LAMBDA_STAR_RULES:
                raise SpecError(f"unknown lambda rule {lam!r}")
        for k in self.ks:
            if isinstance(k, str) and k not in LAMBDA_RULES | LAMBDA_STAR_RULES:
                raise SpecError(f"unknown k rule {k!r}")
        budget_for(self.budget, 2)  # validates the rule

    def canonical(self) -> dict:
        d = asdict(self)
        d.pop("output")
        d.pop("timing")
        return d

    def digest(self) -> str:
        blob = json.dumps(self.canonical(), sort_keys=True, ensure_ascii=False)
        return hashlib.sha256(blob.encode("utf-8")).hexdigest()


_NLOGN = re.compile(r"^\s*([0-9.eE+-]+)\s*\*\s*nlogn\s*$")


def budget_for(rule: Union[None, int, str], n: int) -> int:
    """Evaluation budget for size ``n``: an absolute count, ``"<c>*nlogn"`` or default."""
    if rule is None or rule == "default":
        return default_budget(n)
    if isinstance(rule, (int, float)) and not isinstance(rule, bool):
        if rule < 1:
            raise SpecError("budget must be >= 1")
        return int(rule)
    if isinstance(rule, str):
        m = _NLOGN.match(rule)
        if m:
            return max(1, int(float(m.group(1)) * n * clog2(n)))
        try:
            return budget_for(int(float(rule)), n)
        except ValueError:
            pass
    raise SpecError(f"unrecognized budget rule {rule!r}")


@dataclass(frozen=True)
class Cell:
    index: int
    n: int
    variant: str
    lam: Union[int, float, str]
    k: Union[int, float, str]
    r: float
    params: Optional[GaParams]
    reason: Optional[str] = None  # why the cell was skipped


def _resolve_lambda(lam, n: int) -> int:
    if isinstance(lam, str):
        return max(1, round(lambda_star(n)))
    return max(1, round(lam))


def _resolve_k(k, lam: int, n: int) -> float:
    if isinstance(k, str):
        return float(lam) if k in LAMBDA_RULES else lambda_star(n)
    return float(k)


def cells(spec: SweepSpec) -> List[Cell]:
    out = []
    grid = [
        (n, v, lam, k, r)
        for n in spec.sizes
        for v in spec.variants
        for lam in spec.lambdas
        for k in spec.ks
        for r in spec.rs
    ]
    for index, (n, v, lam, k, r) in enumerate(grid):
        try:
            lam_i = _resolve_lambda(lam, n)
            params = GaParams(n, lam_i, _resolve_k(k, lam_i, n), float(r), v, budget_for(spec.budget, n))
        except SpecError:
            raise
        except ValueError as exc:
            out.append(Cell(index, n, v, lam, k, r, None, str(exc)))
            continue
        out.append(Cell(index, n, v, lam, k, r, params))
    return out


@lru_cache(maxsize=64)
def instance_for(n: int, target: str, target_seed: int) -> OneMaxInstance:
    if target == "ones":
        return OneMaxInstance.classic(n)
    return OneMaxInstance.random(n, RngStream(derive_seed(target_seed, n)))


@dataclass(frozen=True)
class Job:
    params: GaParams
    seed: int
    cell: int
    rep: int
    target: str = "ones"
    target_seed: int = 0
    timing: bool = False

    @property
    def inst(self) -> OneMaxInstance:
        return instance_for(self.params.n, self.target, self.target_seed)


def materialize(spec: SweepSpec) -> List[Job]:
    jobs = [
        Job(c.params, derive_seed(derive_seed(spec.master_seed, c.index), rep), c.index, rep,
            spec.target, spec.target_seed, spec.timing)
        for c in cells(spec)
        if c.params is not None
        for rep in range(spec.reps)
    ]
    if not jobs:
        raise SpecError("the sweep has no runnable cells")
    return jobs


@dataclass(frozen=True)
class ResultRow:
    n: int
    lam: int
    k: float
    r: float
    variant: str
    seed: int
    T: int
    F: int
    success: bool
    final_distance: int
    wall_ms: Optional[float] = None


@dataclass(frozen=True)
class JobFailure:
    cell: int
    rep: int
    seed: int
    error: str


def _run_job(job: Job) -> Union[ResultRow, JobFailure]:
    try:
        t0 = time.perf_counter()
        out = run(job.params, job.inst, RngStream(job.seed))
        wall = (time.perf_counter() - t0) * 1000.0 if job.timing else None
        p = job.params
        return ResultRow(p.n, p.lam, p.k, p.r, p.variant, out.seed, out.T, out.F, out.success, out.final_distance, wall)
    except Exception as exc:  # noqa: BLE001 - reported per row, batch continues
        return JobFailure(job.cell, job.rep, job.seed, f"{type(exc).__name__}: {exc}")


def default_workers() -> int:
    try:
        return max(1, int(os.environ.get(WORKERS_ENV, "1")))
    except ValueError:
        return 1


def execute(
    jobs: Sequence[Job], parallelism: Optional[int] = None, failures: Optional[list] = None
) -> Iterator[ResultRow]:
    """Run ``jobs`` and yield their rows in job order.

    Failed jobs are appended to ``failures`` (if given) and skipped.
    """
    if not jobs:
        raise SpecError("no jobs to execute")
    workers = default_workers() if parallelism is None else parallelism
    if workers <= 1:
        results: Iterable = map(_run_job, jobs)
        pool = None
    else:
        pool = ProcessPoolExecutor(max_workers=workers)
        results = pool.map(_run_job, jobs, chunksize=max(1, len(jobs) // (4 * workers)))
    try:
        for res in results:
            if isinstance(res, JobFailure):
                log.warning("job cell=%d rep=%d failed: %s", res.cell, res.rep, res.error)
                if failures is not None:
                    failures.append(res)
                continue
            yield res
    finally:
        if pool is not None:
            pool.shutdown()


# ---------------------------------------------------------------------------
# persistence
# ---------------------------------------------------------------------------


def _fmt_float(x: float) -> str:
    return format(x, ".17g")


def _row_fields(row: ResultRow) -> List[str]:
    return [
        str(row.n), str(row.lam), _fmt_float(row.k), _fmt_float(row.r), row.variant, str(row.seed),
        str(row.T), str(row.F), "true" if row.success else "false", str(row.final_distance),
        "" if row.wall_ms is None else _fmt_float(row.wall_ms),
    ]


def write_rows(rows: Iterable[ResultRow], stream) -> int:
    w = csv.writer(stream, lineterminator="\n")
    w.writerow(CSV_HEADER)
    count = 0
    for row in rows:
        w.writerow(_row_fields(row))
        count += 1
    return count


def emit_csv(rows: Iterable[ResultRow]) -> str:
    buf = io.StringIO()
    write_rows(rows, buf)
    return buf.getvalue()


def _parse_bool(s: str) -> bool:
    if s not in ("true", "false"):
        raise ValueError(f"bad boolean {s!r}")
    return s == "true"


def parse_csv(text: str) -> List[ResultRow]:
    reader = csv.reader(io.StringIO(text))
    header = next(reader, None)
    if header != CSV_HEADER:
        raise ValueError(f"unexpected results header {header}")
    rows = []
    for lineno, rec in enumerate(reader, start=2):
        if len(rec) != len(CSV_HEADER):
            raise ValueError(f"line {lineno}: expected {len(CSV_HEADER)} fields, got {len(rec)}")
        rows.append(
            ResultRow(
                int(rec[0]), int(rec[1]), float(rec[2]), float(rec[3]), rec[4], int(rec[5]), int(rec[6]),
                int(rec[7]), _parse_bool(rec[8]), int(rec[9]), float(rec[10]) if rec[10] else None,
            )
        )
    return rows


def read_rows(path: Union[str, Path]) -> List[ResultRow]:
    return parse_csv(Path(path).read_text(encoding="utf-8"))


@dataclass
class SweepSummary:
    csv_path: Path
    sidecar_path: Path
    rows: int
    skipped: List[Cell]
    failures: List[JobFailure]


def sidecar_path(csv_path: Union[str, Path]) -> Path:
    p = Path(csv_path)
    return p.with_suffix(p.suffix + ".json")


def run_sweep(spec: SweepSpec, parallelism: Optional[int] = None, output: Optional[str] = None) -> SweepSummary:
    out = output or spec.output
    if not out:
        raise SpecError("no output path given")
    all_cells = cells(spec)
    skipped = [c for c in all_cells if c.params is None]
    jobs = materialize(spec)
    failures: List[JobFailure] = []
    csv_path = Path(out)
    csv_path.parent.mkdir(parents=True, exist_ok=True)
    with open(csv_path, "w", encoding="utf-8", newline="") as fh:
        count = write_rows(execute(jobs, parallelism, failures), fh)
    meta = {
        "tool": "ollga",
        "version": __version__,
        "spec_hash": spec.digest(),
        "spec": spec.canonical(),
        "cells": len(all_cells),
        "rows": count,
        "skipped": [
            {"cell": c.index, "n": c.n, "variant": c.variant, "lambda": c.lam, "k": c.k, "r": c.r, "reason": c.reason}
            for c in skipped
        ],
        "failures": [asdict(f) for f in failures],
    }
    side = sidecar_path(csv_path)
    side.write_text(json.dumps(meta, indent=2, ensure_ascii=False) + "\n", encoding="utf-8")
    return SweepSummary(csv_path, side, count, skipped, failures)


# ---------------------------------------------------------------------------
# config files
# ---------------------------------------------------------------------------

_KEYS = {
    "sizes": "sizes",
    "lambda": "lambdas",
    "lambdas": "lambdas",
    "k": "ks",
    "ks": "ks",
    "r": "rs",
    "rs": "rs",
    "variant": "variants",
    "variants": "variants",
    "reps": "reps",
    "seed": "master_seed",
    "master_seed": "master_seed",
    "budget": "budget",
    "target": "target",
    "target_seed": "target_seed",
    "output": "output",
    "timing": "timing",
}


def _as_list(v):
    return list(v) if isinstance(v, (list, tuple)) else [v]


def spec_from_mapping(data: dict, **overrides) -> SweepSpec:
    kwargs = {}
    for key, value in {**data, **{k: v for k, v in overrides.items() if v is not None}}.items():
        if key not in _KEYS:
            raise SpecError(f"unknown config key {key!r}")
        name = _KEYS[key]
        if name in ("sizes", "lambdas", "ks", "rs", "variants"):
            value = _as_list(value)
        kwargs[name] = value
    missing = {"sizes", "lambdas", "ks", "rs"} - kwargs.keys()
    if missing:
        raise SpecError(f"config is missing {sorted(missing)}")
    try:
        return SweepSpec(**kwargs)
    except TypeError as exc:
        raise SpecError(str(exc)) from exc


def load_spec(path: Union[str, Path], **overrides) -> SweepSpec:
    """Read a TOML sweep file; non-None ``overrides`` replace file values."""
    try:
        with open(path, "rb") as fh:
            data = tomllib.load(fh)
    except (OSError, tomllib.TOMLDecodeError) as exc:
        raise SpecError(f"cannot read {path}: {exc}") from exc
    return spec_from_mapping(data, **overrides)
