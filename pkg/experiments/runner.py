"""Seeded replicate execution, serial or over a process pool.

Replicate i always draws from ``replicate_rng(root_seed, i)`` and results are
returned in replicate order, so output does not depend on the number of workers.
"""

from concurrent.futures import ProcessPoolExecutor, as_completed
from typing import Callable, List, Optional, TypeVar

import numpy as np
from tqdm import tqdm

from core.genealogy_sim import FastProcess, FiniteDProcess, LimitProcess, ReferenceCoalescent
from core.seeding import replicate_rng
from models.experiment_config import ExperimentConfig
from models.params import FiniteDConfig, ModelParams
from models.partition import StructuredPartition
from models.path_sample import PathSample

T = TypeVar("T")
CHUNKS_PER_JOB = 4


def _run_chunk(task: Callable[[np.random.Generator], T], root_seed: int, indices: List[int]):
    return [(i, task(replicate_rng(root_seed, i))) for i in indices]


def run_replicates(
    task: Callable[[np.random.Generator], T],
    root_seed: int,
    replicates: int,
    jobs: int = 1,
    description: Optional[str] = None,
    offset: int = 0,
) -> List[T]:
    """Run ``task`` once per replicate with its own derived generator; ``task`` must pickle when jobs > 1."""
    indices = list(range(offset, offset + replicates))
    if jobs <= 1:
        return [task(replicate_rng(root_seed, i)) for i in tqdm(indices, desc=description, disable=description is None)]

    size = max(1, len(indices) // (jobs * CHUNKS_PER_JOB))
    chunks = [indices[i:i + size] for i in range(0, len(indices), size)]
    results = {}
    with ProcessPoolExecutor(max_workers=jobs) as pool:
        futures = [pool.submit(_run_chunk, task, root_seed, chunk) for chunk in chunks]
        for future in tqdm(as_completed(futures), total=len(futures), desc=description, disable=description is None):
            results.update(future.result())
    return [results[i] for i in indices]


class PathTask:
    """One simulated genealogy of the configured process; the simulator is built lazily per worker."""

    def __init__(
        self,
        process: str,
        initial: StructuredPartition,
        params: Optional[ModelParams] = None,
        horizon: Optional[float] = None,
        until_mrca: bool = False,
        finite_d: Optional[FiniteDConfig] = None,
        reference=None,
    ):
        self.process = process
        self.initial = initial
        self.params = params
        self.horizon = horizon
        self.until_mrca = until_mrca
        self.finite_d = finite_d
        self.reference = reference
        self._simulator = None

    @classmethod
    def from_config(cls, config: ExperimentConfig, **changes) -> "PathTask":
        reference = config.reference_xi if config.process == "xi" else config.lambda_reference
        settings = dict(
            process=config.process,
            initial=config.initial_state(),
            params=config.model,
            horizon=config.horizon,
            finite_d=config.finite_d,
            reference=reference,
        )
        settings.update(changes)
        return cls(**settings)

    def __getstate__(self):
        state = dict(self.__dict__)
        state["_simulator"] = None
        return state

    def _build(self):
        if self.process == "fast":
            return FastProcess(self.params)
        if self.process == "slow":
            return LimitProcess(self.params)
        if self.process == "finite-d":
            return FiniteDProcess(self.params, self.finite_d)
        if self.process in ("lambda", "xi"):
            return ReferenceCoalescent(self.reference)
        raise ValueError(f"unknown process {self.process!r}")

    def __call__(self, rng: np.random.Generator) -> PathSample:
        if self._simulator is None:
            self._simulator = self._build()
        if self.process == "fast":
            return self._simulator.simulate(self.initial, rng, self.horizon)
        if self.process in ("lambda", "xi"):
            return self._simulator.simulate(self.initial.n, rng, self.horizon, initial=self.initial)
        return self._simulator.simulate(self.initial, rng, horizon=self.horizon, until_mrca=self.until_mrca)
