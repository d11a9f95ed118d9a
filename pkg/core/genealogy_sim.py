import logging
import math
from itertools import combinations
from typing import Dict, List, Optional, Tuple, Union

import numpy as np

from core.coalescent_rates import (
    apply_collision,
    fast_rates,
    lambda_rate,
    slow_rates_for_block_count,
    xi_merger_specs,
    xi_rate,
)
from core.measures import moment, sample, validate
from core.partitions import _build, is_scattered, scattered_singletons
from models.collision import RateRow
from models.measure import MeasureOnUnitInterval, XiMeasure
from models.params import FiniteDConfig, ModelParams
from models.path_sample import PathEvent, PathSample
from models.partition import StructuredPartition

logger = logging.getLogger(__name__)


def _pick(cumulative: np.ndarray, rng: np.random.Generator) -> int:
    """Index drawn with probability proportional to the increments of a cumulative-rate array."""
    index = int(np.searchsorted(cumulative, rng.random() * cumulative[-1], side="right"))
    return min(index, len(cumulative) - 1)


def _event(time: float, kind: str, state: StructuredPartition, same_state: bool = False) -> PathEvent:
    return PathEvent.model_construct(time=time, kind=kind, state=state, same_state=same_state)


def _check_horizon(horizon: Optional[float], until_mrca: bool) -> None:
    if horizon is None and not until_mrca:
        raise ValueError("give a horizon or ask to run until the MRCA")
    if horizon is not None and horizon <= 0:
        raise ValueError(f"horizon must be positive, got {horizon}")


class FastProcess:
    """Within-deme mergers and moves to empty demes, run until every deme holds one block."""

    def __init__(self, params: ModelParams):
        self.params = params
        self._rows: Dict[StructuredPartition, Tuple[RateRow, np.ndarray]] = {}

    def _row(self, state: StructuredPartition):
        if state not in self._rows:
            row = fast_rates(self.params, state)
            self._rows[state] = (row, np.cumsum([entry.rate for entry in row.entries]))
        return self._rows[state]

    def step(self, state: StructuredPartition, rng: np.random.Generator):
        """One transition: (waiting time, rate entry), or None at a scattered state."""
        row, cumulative = self._row(state)
        if row.is_empty:
            if not is_scattered(state):
                raise RuntimeError(f"fast process has no transition out of the non-scattered state {state}")
            return None
        wait = rng.exponential(1.0 / cumulative[-1])
        return wait, row.entries[_pick(cumulative, rng)]

    def absorb(self, zeta: StructuredPartition, rng: np.random.Generator) -> Tuple[StructuredPartition, List[Tuple[float, str, StructuredPartition]]]:
        """Run to absorption in Pi_n; returns the scattered state and the (time, kind, state) sub-steps."""
        state, elapsed, steps = zeta, 0.0, []
        while True:
            move = self.step(state, rng)
            if move is None:
                return state, steps
            wait, entry = move
            elapsed += wait
            state = entry.target
            steps.append((elapsed, entry.kind, state))
            if len(steps) > zeta.n:
                raise RuntimeError(f"fast phase from {zeta} took more than {zeta.n} transitions")

    def simulate(self, zeta: StructuredPartition, rng: np.random.Generator, horizon: Optional[float] = None) -> PathSample:
        state, t, events = zeta, 0.0, []
        while True:
            move = self.step(state, rng)
            if move is None:
                break
            wait, entry = move
            if horizon is not None and t + wait > horizon:
                break
            t += wait
            state = entry.target
            events.append(_event(t, entry.kind, state))
        terminal = horizon if horizon is not None else t
        return PathSample.model_construct(initial=zeta, events=events, terminal_time=terminal)


def run_fast_to_absorption(zeta: StructuredPartition, params: ModelParams, rng: np.random.Generator) -> StructuredPartition:
    return FastProcess(params).absorb(zeta, rng)[0]


def simulate_fast_process(
    zeta: StructuredPartition, params: ModelParams, rng: np.random.Generator, horizon: Optional[float] = None
) -> PathSample:
    return FastProcess(params).simulate(zeta, rng, horizon)


class LimitProcess:
    """The D -> infinity process on Pi_n: geographical collisions followed by instantaneous scattering."""

    def __init__(self, params: ModelParams, record_substeps: bool = False):
        self.params = params
        self.fast = FastProcess(params)
        self.record_substeps = record_substeps
        self._tables: Dict[int, Tuple[RateRow, np.ndarray]] = {}

    def _table(self, m: int):
        if m not in self._tables:
            row = slow_rates_for_block_count(self.params, m) if m >= 2 else RateRow()
            self._tables[m] = (row, np.cumsum([entry.rate for entry in row.entries]))
        return self._tables[m]

    def _scatter(self, state, t, rng, events):
        scattered, steps = self.fast.absorb(state, rng)
        if self.record_substeps:
            events.extend(_event(t, kind, sub) for _, kind, sub in steps[:-1])
        return scattered

    def simulate(
        self,
        zeta0: StructuredPartition,
        rng: np.random.Generator,
        horizon: Optional[float] = None,
        until_mrca: bool = False,
    ) -> PathSample:
        _check_horizon(horizon, until_mrca)
        events: List[PathEvent] = []
        state, t = zeta0, 0.0
        if not is_scattered(state):
            state = self._scatter(state, 0.0, rng, events)
            events.append(_event(0.0, "instantaneous-scatter", state))

        while not (until_mrca and state.block_count == 1):
            row, cumulative = self._table(state.block_count)
            if row.is_empty:
                if horizon is None:
                    logger.warning("no collision can occur from %s; stopping before the MRCA", state)
                    break
                t = horizon
                break
            t_next = t + rng.exponential(1.0 / cumulative[-1])
            if horizon is not None and t_next > horizon:
                t = horizon
                break
            t = t_next
            entry = row.entries[_pick(cumulative, rng)]
            gathered = apply_collision(state, entry.target)
            collision_index = len(events)
            events.append(_event(t, entry.kind, gathered))
            scattered = self._scatter(gathered, t, rng, events)
            ghost = scattered == state
            if ghost:
                events[collision_index] = _event(t, entry.kind, gathered, same_state=True)
            events.append(_event(t, "instantaneous-scatter", scattered, same_state=ghost))
            state = scattered

        return PathSample.model_construct(initial=zeta0, events=events, terminal_time=t)


def simulate_limit_process(
    zeta0: StructuredPartition,
    params: ModelParams,
    rng: np.random.Generator,
    horizon: Optional[float] = None,
    until_mrca: bool = False,
) -> PathSample:
    return LimitProcess(params).simulate(zeta0, rng, horizon=horizon, until_mrca=until_mrca)


class FiniteDProcess:
    """Island model with D demes and mass extinctions, simulated in units where fast events have rate O(1).

    Occupied demes are tracked as lists of blocks; empty demes are exchangeable and
    only counted. Lineages get individual labels only at migration and extinction
    instants, drawn fresh and uniformly, to decide which of them share a parent.
    """

    def __init__(self, params: ModelParams, config: FiniteDConfig):
        if params.K > config.D:
            raise ValueError(f"K={params.K} source demes cannot be chosen among D={config.D} demes")
        self.params = params
        self.config = config
        self._merge_tables: Dict[int, Tuple[float, np.ndarray]] = {}

    def _merge_table(self, b: int):
        """Total within-deme merger rate of b blocks and the cumulative law of the merger size k."""
        if b not in self._merge_tables:
            rates = [
                self.params.deme_rate_scale * math.comb(b, k) * moment(self.params.lambda_d, k, b - k)
                for k in range(2, b + 1)
            ]
            cumulative = np.cumsum(rates)
            self._merge_tables[b] = (float(cumulative[-1]), cumulative)
        return self._merge_tables[b]

    def _migration_rate(self, occupied: int, b: int) -> float:
        """Per-lineage rate of a migration that changes the state."""
        D = self.config.D
        into_occupied = (occupied - 1) / D
        into_empty = (D - occupied) / D if b >= 2 else 0.0
        return self.params.m1 * (into_occupied + into_empty)

    def _migrate(self, demes, d, rng) -> str:
        occupied = len(demes)
        b = len(demes[d])
        to_occupied = occupied - 1
        to_empty = (self.config.D - occupied) if b >= 2 else 0
        block = demes[d].pop(int(rng.integers(b)))
        if rng.random() * (to_occupied + to_empty) < to_empty:
            demes.append([block])
            return "fast-move"

        others = [j for j in range(occupied) if j != d]
        target = others[int(rng.integers(len(others)))]
        residents = demes[target]
        if rng.random() < min(1.0, len(residents) / self.params.N):
            partner = int(rng.integers(len(residents)))
            residents[partner] = residents[partner] + block
        else:
            residents.append(block)
        if not demes[d]:
            del demes[d]
        return "simple-collision"

    def _extinction(self, demes, rng) -> bool:
        """Apply one mass extinction; returns False when no tracked lineage was affected."""
        params, D = self.params, self.config.D
        y = sample(params.lambda_g, rng)
        occupied = len(demes)
        extinct = rng.random(occupied) < y
        if not extinct.any():
            return False

        sources = [int(u) for u in rng.choice(D, size=params.K, replace=False)]
        arrivals: Dict[Tuple[int, int], List] = {}
        for d in np.flatnonzero(extinct):
            for block in demes[d]:
                u = sources[int(rng.integers(params.K))]
                parent = int(rng.integers(params.N))
                arrivals.setdefault((u, parent), []).append(block)

        survivors = {d: demes[d] for d in range(occupied) if not extinct[d]}
        landing: Dict[int, Dict[int, List]] = {}
        for (u, parent), blocks in arrivals.items():
            landing.setdefault(u, {})[parent] = blocks

        new_demes = []
        for d, blocks in survivors.items():
            if d not in landing:
                new_demes.append(list(blocks))
        for u, by_parent in landing.items():
            # residents of a surviving source are individuals 0..c-1 of that deme
            residents = list(survivors.get(u, []))
            extra = []
            for parent, blocks in by_parent.items():
                merged = tuple(e for block in blocks for e in block)
                if parent < len(residents):
                    residents[parent] = residents[parent] + merged
                else:
                    extra.append(merged)
            new_demes.append(residents + extra)
        demes[:] = new_demes
        return True

    def simulate(
        self,
        zeta0: StructuredPartition,
        rng: np.random.Generator,
        horizon: Optional[float] = None,
        until_mrca: bool = False,
    ) -> PathSample:
        _check_horizon(horizon, until_mrca)
        params, D = self.params, self.config.D
        if zeta0.deme_count > D:
            raise ValueError(f"{zeta0.deme_count} occupied demes do not fit in D={D} demes")
        if any(len(deme) > params.N for deme in zeta0.demes):
            raise ValueError(f"a deme of {zeta0} carries more lineages than its N={params.N} individuals")

        time_unit = D if self.config.time_rescale else 1.0
        internal_horizon = horizon * time_unit if horizon is not None else None
        extinction_rate = params.e / D
        demes = [list(deme) for deme in zeta0.demes]
        events: List[PathEvent] = []
        t = 0.0

        while not (until_mrca and sum(len(deme) for deme in demes) == 1):
            occupied = len(demes)
            merge_totals = [self._merge_table(len(deme))[0] if len(deme) >= 2 else 0.0 for deme in demes]
            migration_totals = [len(deme) * self._migration_rate(occupied, len(deme)) for deme in demes]
            channels = np.cumsum(merge_totals + migration_totals + [extinction_rate])
            total = channels[-1]
            if total <= 0:
                if internal_horizon is None:
                    logger.warning("finite-D process is frozen before the MRCA")
                else:
                    t = internal_horizon
                break
            t_next = t + rng.exponential(1.0 / total)
            if internal_horizon is not None and t_next > internal_horizon:
                t = internal_horizon
                break
            t = t_next

            channel = _pick(channels, rng)
            if channel < occupied:
                deme = demes[channel]
                _, cumulative = self._merge_table(len(deme))
                k = 2 + _pick(cumulative, rng)
                chosen = sorted(int(i) for i in rng.choice(len(deme), size=k, replace=False))
                merged = tuple(e for i in chosen for e in deme[i])
                demes[channel] = [blk for i, blk in enumerate(deme) if i not in chosen] + [merged]
                kind = "fast-merge"
            elif channel < 2 * occupied:
                kind = self._migrate(demes, channel - occupied, rng)
            else:
                if not self._extinction(demes, rng):
                    continue
                kind = "extinction-collision"
            events.append(_event(t / time_unit, kind, _build(zeta0.n, demes)))

        return PathSample.model_construct(initial=zeta0, events=events, terminal_time=t / time_unit)


def simulate_finite_d(
    zeta0: StructuredPartition,
    params: ModelParams,
    config: FiniteDConfig,
    rng: np.random.Generator,
    horizon: Optional[float] = None,
    until_mrca: bool = False,
) -> PathSample:
    return FiniteDProcess(params, config).simulate(zeta0, rng, horizon=horizon, until_mrca=until_mrca)


class ReferenceCoalescent:
    """Plain Lambda- or Xi-coalescent started from n singletons."""

    def __init__(self, measure: Union[MeasureOnUnitInterval, XiMeasure]):
        if isinstance(measure, MeasureOnUnitInterval):
            diagnostics = validate(measure, role="finite")
            if not diagnostics.is_valid:
                raise ValueError("Lambda measure: " + "; ".join(diagnostics.violations))
        self.measure = measure
        self._tables: Dict[int, Tuple[list, np.ndarray]] = {}

    def _table(self, b: int):
        """Merger groups (as block-index tuples) out of b blocks with cumulative rates."""
        if b not in self._tables:
            if isinstance(self.measure, XiMeasure):
                specs = xi_merger_specs(b)
                rates = [xi_rate(self.measure, b, [len(g) for g in groups]) for groups in specs]
            else:
                specs, rates = [], []
                for k in range(2, b + 1):
                    rate = lambda_rate(self.measure, b, k)
                    if rate > 0:
                        for subset in combinations(range(b), k):
                            specs.append((subset,))
                            rates.append(rate)
            self._tables[b] = (specs, np.cumsum(rates) if rates else np.zeros(0))
        return self._tables[b]

    def simulate(
        self, n: int, rng: np.random.Generator, horizon: Optional[float] = None, initial: Optional[StructuredPartition] = None
    ) -> PathSample:
        if n < 1:
            raise ValueError(f"sample size must be positive, got {n}")
        start = initial if initial is not None else scattered_singletons(n)
        blocks = list(start.blocks)
        events: List[PathEvent] = []
        t = 0.0
        while len(blocks) > 1:
            specs, cumulative = self._table(len(blocks))
            if not len(cumulative) or cumulative[-1] <= 0:
                break
            t_next = t + rng.exponential(1.0 / cumulative[-1])
            if horizon is not None and t_next > horizon:
                break
            t = t_next
            groups = specs[_pick(cumulative, rng)]
            merged_indices = {i for group in groups for i in group}
            blocks = [blk for i, blk in enumerate(blocks) if i not in merged_indices] + [
                tuple(e for i in group for e in blocks[i]) for group in groups
            ]
            state = _build(n, [[blk] for blk in blocks])
            blocks = list(state.blocks)
            events.append(_event(t, "merger", state))
        terminal = horizon if horizon is not None else t
        return PathSample.model_construct(initial=start, events=events, terminal_time=terminal)


def simulate_lambda_coalescent(
    measure: MeasureOnUnitInterval, n: int, rng: np.random.Generator, horizon: Optional[float] = None
) -> PathSample:
    return ReferenceCoalescent(measure).simulate(n, rng, horizon)


def simulate_xi_coalescent(xi: XiMeasure, n: int, rng: np.random.Generator, horizon: Optional[float] = None) -> PathSample:
    return ReferenceCoalescent(xi).simulate(n, rng, horizon)
