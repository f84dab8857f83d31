import functools
import logging
import time

from prometheus_client import CollectorRegistry, Histogram, write_to_textfile

logger = logging.getLogger(__name__)

METRICS_REGISTRY = CollectorRegistry()

OPERATION_SECONDS = Histogram(
    "thermo_operation_seconds",
    "Wall-clock time spent in profiled numerical operations",
    ["operation"],
    registry=METRICS_REGISTRY,
    buckets=(0.001, 0.01, 0.1, 0.5, 1.0, 5.0, 30.0, 120.0),
)


class Profiler:
    """
    Provides a decorator to profile numerical operations, logging their
    execution times and recording them in a prometheus histogram.
    """

    @staticmethod
    def profile(func):
        @functools.wraps(func)
        def sync_wrapper(*args, **kwargs):
            start = time.perf_counter()
            try:
                return func(*args, **kwargs)
            finally:
                elapsed = time.perf_counter() - start
                OPERATION_SECONDS.labels(operation=func.__qualname__).observe(elapsed)
                if elapsed > 0.001:  # Only log if > 1ms to avoid spam
                    logger.debug(f"[Profiler] {func.__qualname__} took {elapsed:.4f}s")

        return sync_wrapper

    @staticmethod
    def write_metrics(path: str) -> None:
        """
        Dump the collected operation timings in the prometheus textfile format.

        Args:
            path (str): Destination file.
        """
        write_to_textfile(path, METRICS_REGISTRY)
        logger.info(f"Wrote operation metrics to {path}")
