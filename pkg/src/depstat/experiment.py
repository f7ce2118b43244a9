"""Power-curve experiments over a (theta, n, d, test) grid.

Each grid point ``(theta, n, d)`` owns a cell seed derived from the base seed
and the point's coordinates.  Repetition ``r`` of a point draws its dataset
from ``(cell_seed, "rep", r)`` and its permutations from
``(cell_seed, "perm", r)``; every test at that point sees the same dataset
and the same permutations, so head-to-head comparisons are paired.  Results
are placed by index, so any worker count gives identical output.
"""
from __future__ import annotations

import csv
import io
import json
import logging
import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from typing import Callable, Optional, Sequence

from .benchgen import RANDOM_DENSITY, SUPPORTED_DIMS, THETA_SLACK, MixConfig, SourceDensity, generate_instance
from .errors import CellFailure, DepstatError, InvalidInputError
from .null import NullModel, TestConfig, run_test
from .rng import derive_seed
from .stats import StatKind

log = logging.getLogger(__name__)

CSV_COLUMNS = ("test", "theta", "n", "d", "repetitions", "accept_count", "accept_rate", "seed")

DESK_THETAS = tuple(k * math.pi / 32 for k in range(9))
DESK_NS = (128, 512)
DESK_DS = (1, 2)
FULL_NS = (128, 512, 1024, 2048)
FULL_DS = (1, 2, 4)

_TEST_ALIASES = {"dist": "dcov"}


@dataclass(frozen=True)
class TestSpec:
    """A statistic paired with a null model; ``id`` is ``"hsic"`` or ``"hsic:gamma"`` style."""

    __test__ = False

    stat: StatKind
    null_model: NullModel = NullModel.PERMUTATION

    @property
    def id(self) -> str:
        if self.null_model is NullModel.PERMUTATION:
            return self.stat.value
        return f"{self.stat.value}:{self.null_model.value}"

    @classmethod
    def parse(cls, text) -> "TestSpec":
        if isinstance(text, cls):
            return text
        name, _, model = str(text).strip().partition(":")
        name = _TEST_ALIASES.get(name.lower(), name)
        return cls(StatKind.parse(name), NullModel.parse(model or "permutation"))


@dataclass(frozen=True)
class GridPoint:
    theta: float
    n: int
    d: int


def _float_tuple(values, name):
    out = tuple(float(v) for v in values)
    if not out:
        raise InvalidInputError(f"{name} must be non-empty")
    return out


def _int_tuple(values, name):
    out = tuple(int(v) for v in values)
    if not out:
        raise InvalidInputError(f"{name} must be non-empty")
    return out


@dataclass(frozen=True)
class ExperimentGrid:
    thetas: tuple[float, ...] = DESK_THETAS
    ns: tuple[int, ...] = DESK_NS
    ds: tuple[int, ...] = DESK_DS
    tests: tuple[TestSpec, ...] = (TestSpec(StatKind.HSIC_BIASED), TestSpec(StatKind.DCOV))
    repetitions: int = 300
    permutations: int = 200
    alpha: float = 0.05
    base_seed: int = 0
    # each repetition draws its own source pair from the catalog
    density_x: str = RANDOM_DENSITY
    density_y: str = RANDOM_DENSITY
    gamma_permutations: int = 50

    def __post_init__(self):
        object.__setattr__(self, "thetas", _float_tuple(self.thetas, "thetas"))
        object.__setattr__(self, "ns", _int_tuple(self.ns, "ns"))
        object.__setattr__(self, "ds", _int_tuple(self.ds, "ds"))
        tests = tuple(TestSpec.parse(t) for t in self.tests)
        if not tests:
            raise InvalidInputError("tests must be non-empty")
        if len({t.id for t in tests}) != len(tests):
            raise InvalidInputError("duplicate test ids")
        object.__setattr__(self, "tests", tests)
        for theta in self.thetas:
            if not 0.0 <= theta <= math.pi / 4 + THETA_SLACK:
                raise InvalidInputError(f"theta must lie in [0, pi/4], got {theta}")
        for n in self.ns:
            if n < 4:
                raise InvalidInputError(f"sample sizes must be >= 4, got {n}")
        for d in self.ds:
            if d not in SUPPORTED_DIMS:
                raise InvalidInputError(f"d must be one of {SUPPORTED_DIMS}, got {d}")
        if int(self.repetitions) < 1:
            raise InvalidInputError("repetitions must be >= 1")
        for name in ("density_x", "density_y"):
            value = getattr(self, name)
            if value != RANDOM_DENSITY:
                object.__setattr__(self, name, SourceDensity.parse(value).value)
        # validates alpha, permutations and seed
        self.test_config(self.tests[0], 0)

    def points(self) -> list[GridPoint]:
        return [GridPoint(t, n, d) for t in self.thetas for n in self.ns for d in self.ds]

    def cell_seed(self, point: GridPoint) -> int:
        return derive_seed(self.base_seed, "cell", float(point.theta), int(point.n), int(point.d))

    def test_config(self, test: TestSpec, seed: int) -> TestConfig:
        return TestConfig(
            stat=test.stat,
            alpha=self.alpha,
            permutations=self.permutations,
            null_model=test.null_model,
            seed=seed,
            gamma_permutations=self.gamma_permutations,
        )

    def to_dict(self) -> dict:
        return {
            "thetas": list(self.thetas),
            "ns": list(self.ns),
            "ds": list(self.ds),
            "tests": [t.id for t in self.tests],
            "repetitions": int(self.repetitions),
            "permutations": int(self.permutations),
            "alpha": float(self.alpha),
            "base_seed": int(self.base_seed),
            "density_x": self.density_x,
            "density_y": self.density_y,
            "gamma_permutations": int(self.gamma_permutations),
        }

    @classmethod
    def from_dict(cls, data: dict) -> "ExperimentGrid":
        known = set(cls.__dataclass_fields__)
        unknown = set(data) - known
        if unknown:
            raise InvalidInputError(f"unknown grid keys: {sorted(unknown)}")
        return cls(**data)


@dataclass(frozen=True)
class PowerCell:
    test: str
    theta: float
    n: int
    d: int
    repetitions: int
    accept_count: int
    seed: int

    @property
    def accept_rate(self) -> float:
        return self.accept_count / self.repetitions


@dataclass
class PowerReport:
    cells: list[PowerCell]
    grid: Optional[ExperimentGrid] = None
    runtime_seconds: Optional[float] = None

    def cell(self, test, theta, n, d) -> PowerCell:
        test_id = TestSpec.parse(test).id
        for c in self.cells:
            if c.test == test_id and c.n == n and c.d == d and math.isclose(c.theta, theta, abs_tol=1e-12):
                return c
        raise KeyError((test_id, theta, n, d))


@dataclass
class CellFailureRecord:
    test: str
    theta: float
    n: int
    d: int
    repetition: int
    message: str


class GridFailure(DepstatError, RuntimeError):
    """Some cells failed; ``report`` holds every cell that completed."""

    def __init__(self, report: PowerReport, failures: list[CellFailureRecord]):
        lines = [
            f"test={f.test} theta={f.theta!r} n={f.n} d={f.d} repetition={f.repetition}: {f.message}"
            for f in failures
        ]
        super().__init__(f"{len(failures)} cell(s) failed:\n" + "\n".join(lines))
        self.report = report
        self.failures = failures


def _run_repetition(task):
    """Run every test on one dataset; returns a list of ``True``/``False`` acceptances or error strings."""
    grid, point, cell_seed, rep = task
    try:
        mix = MixConfig(
            theta=point.theta,
            d=point.d,
            n=point.n,
            density_x=grid.density_x,
            density_y=grid.density_y,
            seed=derive_seed(cell_seed, "rep", rep),
        )
        sample = generate_instance(mix)
    except Exception as exc:  # reported per cell, never dropped
        return [f"data generation failed: {type(exc).__name__}: {exc}"] * len(grid.tests)
    perm_seed = derive_seed(cell_seed, "perm", rep)
    outcomes = []
    for test in grid.tests:
        try:
            result = run_test(sample, grid.test_config(test, perm_seed))
            outcomes.append(not result.reject)
        except Exception as exc:
            outcomes.append(f"{type(exc).__name__}: {exc}")
    return outcomes


def run_grid(
    grid: ExperimentGrid,
    *,
    workers: int = 1,
    progress: Optional[Callable[[int, int], None]] = None,
) -> PowerReport:
    """Compute every cell of ``grid``.

    Raises
    ------
    GridFailure
        If any repetition of any cell raised.  The partially filled report
        (successful cells only) is attached.
    """
    start = time.perf_counter()
    points = grid.points()
    seeds = [grid.cell_seed(p) for p in points]
    reps = int(grid.repetitions)
    tasks = [(grid, p, s, r) for p, s in zip(points, seeds) for r in range(reps)]
    total_cells = len(points) * len(grid.tests)

    def results_iter():
        if workers <= 1:
            yield from map(_run_repetition, tasks)
            return
        chunk = max(1, min(16, len(tasks) // (4 * workers) or 1))
        with ProcessPoolExecutor(max_workers=workers) as pool:
            yield from pool.map(_run_repetition, tasks, chunksize=chunk)

    cells: list[PowerCell] = []
    failures: list[CellFailureRecord] = []
    accept = [0] * len(grid.tests)
    failed: list[Optional[tuple[int, str]]] = [None] * len(grid.tests)
    for index, outcomes in enumerate(results_iter()):
        point_index, rep = divmod(index, reps)
        for t, outcome in enumerate(outcomes):
            if isinstance(outcome, str):
                if failed[t] is None:
                    failed[t] = (rep, outcome)
            elif outcome:
                accept[t] += 1
        if rep == reps - 1:
            point = points[point_index]
            for t, test in enumerate(grid.tests):
                if failed[t] is not None:
                    failures.append(
                        CellFailureRecord(test.id, point.theta, point.n, point.d, failed[t][0], failed[t][1])
                    )
                else:
                    cells.append(
                        PowerCell(test.id, point.theta, point.n, point.d, reps, accept[t], seeds[point_index])
                    )
            accept = [0] * len(grid.tests)
            failed = [None] * len(grid.tests)
            done = (point_index + 1) * len(grid.tests)
            if progress is not None:
                progress(done, total_cells)
            log.debug("cells %d/%d", done, total_cells)
    report = PowerReport(cells, grid, time.perf_counter() - start)
    if failures:
        raise GridFailure(report, failures)
    return report


def run_cell(
    point: GridPoint,
    test,
    repetitions: int,
    base_seed: int,
    *,
    alpha: float = 0.05,
    permutations: int = 200,
    density_x: str = RANDOM_DENSITY,
    density_y: str = RANDOM_DENSITY,
    gamma_permutations: int = 50,
    workers: int = 1,
) -> PowerCell:
    """One cell in isolation; identical to the same cell inside any grid with this base seed."""
    grid = ExperimentGrid(
        thetas=(point.theta,),
        ns=(point.n,),
        ds=(point.d,),
        tests=(TestSpec.parse(test),),
        repetitions=repetitions,
        permutations=permutations,
        alpha=alpha,
        base_seed=base_seed,
        density_x=density_x,
        density_y=density_y,
        gamma_permutations=gamma_permutations,
    )
    try:
        return run_grid(grid, workers=workers).cells[0]
    except GridFailure as exc:
        f = exc.failures[0]
        raise CellFailure(
            f"cell failed at repetition {f.repetition}: {f.message}",
            theta=f.theta,
            n=f.n,
            d=f.d,
            test=f.test,
            repetition=f.repetition,
        ) from exc


# -- serialization ----------------------------------------------------------------------------


def format_float(value: float) -> str:
    """17 significant digits, always recognisable as a float."""
    value = float(value)
    if not math.isfinite(value):
        raise ValueError(f"cannot serialize non-finite value {value!r}")
    text = format(value, ".17g")
    if not any(c in text for c in ".en"):
        text += ".0"
    return text


def dumps_json(obj) -> str:
    """Strict JSON with floats at 17 significant digits; keys keep insertion order."""
    if obj is None:
        return "null"
    if isinstance(obj, bool):
        return "true" if obj else "false"
    if isinstance(obj, int):
        return str(obj)
    if isinstance(obj, float):
        return format_float(obj)
    if isinstance(obj, str):
        return json.dumps(obj)
    if isinstance(obj, dict):
        return "{" + ", ".join(f"{json.dumps(str(k))}: {dumps_json(v)}" for k, v in obj.items()) + "}"
    if isinstance(obj, (list, tuple)):
        return "[" + ", ".join(dumps_json(v) for v in obj) + "]"
    if hasattr(obj, "item"):  # numpy scalar
        return dumps_json(obj.item())
    raise TypeError(f"cannot serialize {type(obj).__name__}")


def _cell_dict(cell: PowerCell) -> dict:
    return {
        "test": cell.test,
        "theta": float(cell.theta),
        "n": int(cell.n),
        "d": int(cell.d),
        "repetitions": int(cell.repetitions),
        "accept_count": int(cell.accept_count),
        "accept_rate": float(cell.accept_rate),
        "seed": int(cell.seed),
    }


def emit_report(report: PowerReport, fmt: str = "csv", *, include_runtime: bool = False) -> bytes:
    """Serialize ``report`` as CSV (one row per cell) or JSON (grid echo plus cells).

    The runtime is wall-clock and therefore left out unless asked for, so
    that reruns produce byte-identical files.
    """
    fmt = fmt.lower()
    if fmt == "csv":
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(CSV_COLUMNS)
        for c in report.cells:
            writer.writerow(
                [
                    c.test,
                    format_float(c.theta),
                    c.n,
                    c.d,
                    c.repetitions,
                    c.accept_count,
                    f"{c.accept_rate:.6f}",
                    c.seed,
                ]
            )
        return buf.getvalue().encode("utf-8")
    if fmt == "json":
        doc = {
            "grid": report.grid.to_dict() if report.grid is not None else None,
            "cells": [_cell_dict(c) for c in report.cells],
        }
        if include_runtime:
            doc["runtime_seconds"] = float(report.runtime_seconds or 0.0)
        return (dumps_json(doc) + "\n").encode("utf-8")
    raise ValueError(f"unknown report format {fmt!r}")


def parse_report_csv(data: bytes | str) -> PowerReport:
    text = data.decode("utf-8") if isinstance(data, bytes) else data
    rows = list(csv.reader(io.StringIO(text)))
    if not rows or tuple(rows[0]) != CSV_COLUMNS:
        raise InvalidInputError(f"expected header {','.join(CSV_COLUMNS)}")
    cells = []
    for lineno, row in enumerate(rows[1:], start=2):
        if len(row) != len(CSV_COLUMNS):
            raise InvalidInputError(f"line {lineno}: expected {len(CSV_COLUMNS)} fields, got {len(row)}")
        test, theta, n, d, reps, count, _rate, seed = row
        cells.append(PowerCell(test, float(theta), int(n), int(d), int(reps), int(count), int(seed)))
    return PowerReport(cells)


def parse_report_json(data: bytes | str) -> PowerReport:
    doc = json.loads(data)
    grid = ExperimentGrid.from_dict(doc["grid"]) if doc.get("grid") is not None else None
    cells = [
        PowerCell(c["test"], float(c["theta"]), c["n"], c["d"], c["repetitions"], c["accept_count"], c["seed"])
        for c in doc["cells"]
    ]
    return PowerReport(cells, grid, doc.get("runtime_seconds"))


def summarize(report: PowerReport, tests: Sequence[str] | None = None) -> str:
    """Plain-text table of acceptance rates, one line per cell."""
    lines = [f"{'test':<14}{'theta':>10}{'n':>7}{'d':>3}{'accept':>9}"]
    for c in report.cells:
        if tests and c.test not in tests:
            continue
        lines.append(f"{c.test:<14}{c.theta:>10.4f}{c.n:>7}{c.d:>3}{c.accept_rate:>9.3f}")
    return "\n".join(lines)
