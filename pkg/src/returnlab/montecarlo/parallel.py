"""Split a trial range across worker processes.

Trials are cut into contiguous chunks whose boundaries do not depend on the
worker count, and chunk results are returned in chunk order, so the reduced
output is identical for any ``workers`` value.
"""

from __future__ import annotations

import multiprocessing as mp
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

CHUNK = 64


def default_workers() -> int:
    return len(os.sched_getaffinity(0)) if hasattr(os, "sched_getaffinity") else os.cpu_count() or 1


@dataclass
class TrialPlan:
    master_seed: int = 0
    trials: int = 1000
    step_cap: int | None = None
    workers: int = 1
    params: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.trials < 0:
            raise ValueError("trials must be >= 0")
        if self.workers < 1:
            raise ValueError("workers must be >= 1")


def chunks(trials: int, size: int = CHUNK) -> list[tuple[int, int]]:
    return [(lo, min(lo + size, trials)) for lo in range(0, trials, size)]


def map_trials(fn, plan: TrialPlan, *args, chunk: int = CHUNK) -> list:
    """Call ``fn(lo, hi, *args)`` for every chunk; results in chunk order."""
    parts = chunks(plan.trials, chunk)
    if plan.workers == 1 or len(parts) <= 1:
        return [fn(lo, hi, *args) for lo, hi in parts]
    ctx = mp.get_context("fork")
    with ProcessPoolExecutor(max_workers=plan.workers, mp_context=ctx) as pool:
        futures = [pool.submit(fn, lo, hi, *args) for lo, hi in parts]
        return [f.result() for f in futures]
