import csv
import io
import json
import logging
import time
from concurrent.futures import ThreadPoolExecutor, as_completed
from dataclasses import dataclass
from fractions import Fraction
from typing import List, Optional, Sequence

from .constants import Criterion
from .instance import InstanceParams, build, initial_policy
from .iteration import RunConfig, default_max_iterations, run
from .rational import format_rational

logger = logging.getLogger(__name__)

CSV_COLUMNS = ["n", "iterations", "pow2n", "ratio", "wall_ms", "error"]


@dataclass
class BenchResult:
    """
    One benchmark row.

    Attributes:
        n: Instance parameter
        iterations: Improvement steps until termination, None on failure
        wall_ms: Wall-clock time of build plus run
        error: Error message if the run failed, None otherwise
    """

    n: int
    iterations: Optional[int] = None
    wall_ms: int = 0
    error: Optional[str] = None

    @property
    def pow2n(self) -> int:
        return 2**self.n

    @property
    def ratio(self) -> Optional[Fraction]:
        if self.iterations is None:
            return None
        return Fraction(self.iterations, self.pow2n)

    def as_row(self) -> dict:
        return {
            "n": self.n,
            "iterations": self.iterations,
            "pow2n": self.pow2n,
            "ratio": format_rational(self.ratio) if self.ratio is not None else None,
            "wall_ms": self.wall_ms,
            "error": self.error,
        }


def _bench_single(
    n: int, criterion: Criterion, record_values: bool
) -> BenchResult:
    """Run one instance size. Thread-safe: builds share only immutable data."""
    started = time.perf_counter()
    try:
        params = InstanceParams(n)
        instance = build(params)
        config = RunConfig(
            criterion=criterion,
            max_iterations=default_max_iterations(n),
            record_values=record_values,
        )
        trace = run(instance.mdp, initial_policy(params), config)
        result = BenchResult(n=n, iterations=trace.iteration_count)
    except Exception as e:
        logger.error(f"Bench run n={n} failed: {e}")
        result = BenchResult(n=n, error=str(e))
    result.wall_ms = int((time.perf_counter() - started) * 1000)
    logger.info(f"n={n}: iterations={result.iterations} in {result.wall_ms} ms")
    return result


def run_bench(
    ns: Sequence[int],
    criterion: Criterion = Criterion.TOTAL,
    workers: int = 1,
    record_values: bool = False,
) -> List[BenchResult]:
    """Run the hard instance for every n; results come back ordered by n."""
    if workers == 1:
        results = [_bench_single(n, criterion, record_values) for n in ns]
    else:
        logger.info(f"Benchmarking {len(ns)} sizes with {workers} workers")
        results = []
        with ThreadPoolExecutor(max_workers=workers) as executor:
            futures = {
                executor.submit(_bench_single, n, criterion, record_values): n
                for n in ns
            }
            for future in as_completed(futures):
                results.append(future.result())
    results.sort(key=lambda r: r.n)

    failed = sum(1 for r in results if r.error)
    logger.info(f"Bench finished: {len(results) - failed} ok, {failed} failed")
    return results


def format_csv(results: Sequence[BenchResult]) -> str:
    buffer = io.StringIO()
    writer = csv.DictWriter(buffer, fieldnames=CSV_COLUMNS, lineterminator="\n")
    writer.writeheader()
    for result in results:
        writer.writerow(
            {k: ("" if v is None else v) for k, v in result.as_row().items()}
        )
    return buffer.getvalue()


def format_json(results: Sequence[BenchResult]) -> str:
    return json.dumps([r.as_row() for r in results], indent=2) + "\n"
