"""Benchmark records, aggregate reports, and CSV output."""

from __future__ import annotations

import csv
import json
import statistics
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

from .ga import GenerationStats
from .metrics import Score
from .puzzle import PuzzleError

REPORT_VERSION = 1


@dataclass(frozen=True)
class RunRecord:
    """Outcome of one solver run on one puzzle."""

    image: str
    run_index: int
    seed: int
    direct: float
    neighbor: float
    solution_fitness: float
    ground_truth_fitness: float
    better_than_perfect: bool
    runtime_seconds: float

    @classmethod
    def from_score(
        cls,
        image: str,
        run_index: int,
        seed: int,
        run_score: Score,
        runtime_seconds: float,
    ) -> "RunRecord":
        return cls(
            image=image,
            run_index=run_index,
            seed=seed,
            direct=run_score.direct,
            neighbor=run_score.neighbor,
            solution_fitness=run_score.solution_fitness,
            ground_truth_fitness=run_score.ground_truth_fitness,
            better_than_perfect=run_score.better_than_perfect,
            runtime_seconds=runtime_seconds,
        )


@dataclass(frozen=True)
class RunReport:
    """All runs of one image plus aggregate statistics over them.

    ``config`` echoes every solver knob so the report alone suffices to
    reproduce its runs. Aggregates are derived from the runs; loading a
    report recomputes and cross-checks them so a hand-edited file cannot
    claim results its own runs do not support.
    """

    image: str
    rows: int
    cols: int
    piece_size: int
    config: dict
    runs: tuple[RunRecord, ...]
    aggregates: dict = field(default_factory=dict)

    @property
    def piece_count(self) -> int:
        return self.rows * self.cols


def _aggregate(runs: Sequence[RunRecord]) -> dict:
    neighbor = [r.neighbor for r in runs]
    direct = [r.direct for r in runs]
    return {
        "runs": len(runs),
        "neighbor_best": max(neighbor),
        "neighbor_worst": min(neighbor),
        "neighbor_mean": statistics.fmean(neighbor),
        "neighbor_pstdev": statistics.pstdev(neighbor),
        "direct_mean": statistics.fmean(direct),
        "runtime_mean_seconds": statistics.fmean(r.runtime_seconds for r in runs),
        "better_than_perfect_runs": sum(1 for r in runs if r.better_than_perfect),
    }


def make_report(
    image: str,
    rows: int,
    cols: int,
    piece_size: int,
    config: dict,
    runs: Sequence[RunRecord],
) -> RunReport:
    if not runs:
        raise PuzzleError("a report needs at least one run")
    return RunReport(
        image=image,
        rows=rows,
        cols=cols,
        piece_size=piece_size,
        config=dict(config),
        runs=tuple(runs),
        aggregates=_aggregate(runs),
    )


def save_report(report: RunReport, path: str | Path) -> None:
    payload = {
        "version": REPORT_VERSION,
        "image": report.image,
        "rows": report.rows,
        "cols": report.cols,
        "piece_size": report.piece_size,
        "piece_count": report.piece_count,
        "config": report.config,
        "runs": [asdict(r) for r in report.runs],
        "aggregates": report.aggregates,
    }
    Path(path).write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n")


def load_report(path: str | Path) -> RunReport:
    payload = json.loads(Path(path).read_text())
    if payload.get("version") != REPORT_VERSION:
        raise PuzzleError(f"unsupported report version in {path}")
    runs = tuple(RunRecord(**r) for r in payload["runs"])
    report = make_report(
        image=payload["image"],
        rows=int(payload["rows"]),
        cols=int(payload["cols"]),
        piece_size=int(payload["piece_size"]),
        config=dict(payload["config"]),
        runs=runs,
    )
    stored = payload["aggregates"]
    for key, value in report.aggregates.items():
        if key not in stored:
            raise PuzzleError(f"report {path} lacks aggregate {key!r}")
        got = stored[key]
        ok = (
            abs(got - value) <= 1e-12 + 1e-9 * abs(value)
            if isinstance(value, float)
            else got == value
        )
        if not ok:
            raise PuzzleError(
                f"report {path} aggregate {key!r} is {got}, runs say {value}"
            )
    return report


def write_generation_stats_csv(path: str | Path, history: Iterable[GenerationStats]) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(
            ["generation", "best_fitness", "worst_fitness", "mean_fitness", "elapsed_ms"]
        )
        for s in history:
            writer.writerow(
                [s.generation, repr(s.best_fitness), repr(s.worst_fitness), repr(s.mean_fitness), repr(s.elapsed_ms)]
            )


def write_set_csv(path: str | Path, reports: Sequence[RunReport]) -> None:
    """Set-level summary, one row per puzzle size, ordered by size.

    Each neighbor column is the per-image aggregate (best, worst, mean,
    population stddev over that image's runs) averaged over the images
    of the set, which is how multi-run benchmarks are usually tabulated.
    """
    by_size: dict[int, list[RunReport]] = {}
    for report in reports:
        by_size.setdefault(report.piece_count, []).append(report)

    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(
            [
                "piece_count",
                "images",
                "runs",
                "avg_best_neighbor",
                "avg_worst_neighbor",
                "avg_mean_neighbor",
                "avg_stddev_neighbor",
                "avg_direct",
                "avg_runtime_seconds",
            ]
        )
        for size in sorted(by_size):
            group = by_size[size]
            all_runs = [r for report in group for r in report.runs]

            def over_images(key: str) -> float:
                return statistics.fmean(rep.aggregates[key] for rep in group)

            writer.writerow(
                [
                    size,
                    len(group),
                    len(all_runs),
                    repr(over_images("neighbor_best")),
                    repr(over_images("neighbor_worst")),
                    repr(over_images("neighbor_mean")),
                    repr(over_images("neighbor_pstdev")),
                    repr(over_images("direct_mean")),
                    repr(over_images("runtime_mean_seconds")),
                ]
            )
