"""Continuous-time household model observed at its event (census) times.

Households form at rate ``n * lambda1`` where ``n`` is the current number of
households.  Inside each household, individuals reproduce at rate
``lambda2`` and die at rate ``mu2`` independently, so a household of size
``k`` grows at rate ``k lambda2`` and shrinks at rate ``k mu2``.  Every event
is a census; censuses at which a household forms are formation times.
Observed at censuses, the household sizes evolve like the in-degrees of the
attachment-detachment graph.

The simulator runs three competing exponential clocks (formation, any
birth, any death), takes the first to ring, and then picks the household
proportionally to its size.
"""

from __future__ import annotations

import csv
import io
import math
from collections import Counter
from functools import cached_property
from typing import Iterator, Sequence

import numpy as np

from . import _kernels as K
from ._rng import CHUNK_STEPS, YULE_STREAM, as_generator, check_seed, stream_generator
from .errors import DomainError
from .graph_process import EventRecord, _KIND_BY_CODE, _apply
from .params import ModelParams

__all__ = [
    "YuleState",
    "CensusLog",
    "initial_state",
    "gillespie_step",
    "simulate_censuses",
    "embedded_chain",
    "state_at_time",
    "sample_uniform_household_size",
    "sample_sizes_at",
    "embedded_transition_frequencies",
    "formation_density",
    "write_census_log",
]


class YuleState:
    """Immutable household sizes at a census, with the clock value."""

    __slots__ = ("_sizes", "_clock", "_census_index")

    def __init__(self, sizes: Sequence[int], clock: float = 0.0, census_index: int = 0):
        arr = np.array(sizes, dtype=np.int64)
        if arr.ndim != 1 or arr.size == 0:
            raise DomainError("a state needs at least one household")
        if np.any(arr < 0):
            raise DomainError("household sizes must be nonnegative")
        clock = float(clock)
        if not clock >= 0.0 or math.isinf(clock):
            raise DomainError("clock must be finite and nonnegative")
        if int(census_index) != census_index or census_index < 0:
            raise DomainError("census_index must be a nonnegative integer")
        arr.setflags(write=False)
        self._sizes = arr
        self._clock = clock
        self._census_index = int(census_index)

    @property
    def sizes(self) -> np.ndarray:
        return self._sizes

    @property
    def clock(self) -> float:
        return self._clock

    @property
    def census_index(self) -> int:
        return self._census_index

    @property
    def num_households(self) -> int:
        return int(self._sizes.size)

    @property
    def population(self) -> int:
        return int(self._sizes.sum())

    def as_tuple(self) -> tuple[int, ...]:
        return tuple(int(s) for s in self._sizes)

    def __eq__(self, other):
        if not isinstance(other, YuleState):
            return NotImplemented
        return (self._census_index == other._census_index and self._clock == other._clock
                and np.array_equal(self._sizes, other._sizes))

    def __hash__(self):
        return hash((self._census_index, self._clock, self._sizes.tobytes()))

    def __repr__(self):
        head = ", ".join(str(s) for s in self._sizes[:8])
        more = ", ..." if self._sizes.size > 8 else ""
        return f"YuleState([{head}{more}], clock={self._clock!r}, census_index={self._census_index})"


def initial_state() -> YuleState:
    return YuleState([1], 0.0, 0)


class CensusLog:
    """Event record of one trajectory.

    Stores the event kind, the 0-based household and the clock after each
    event; states at individual censuses are rebuilt on demand by replay.
    Census 0 is the initial state ``[1]`` at clock 0.
    """

    def __init__(self, kinds: np.ndarray, households: np.ndarray, clocks: np.ndarray):
        kinds = np.asarray(kinds, dtype=np.int8)
        households = np.asarray(households, dtype=np.int64)
        clocks = np.asarray(clocks, dtype=float)
        if not (kinds.shape == households.shape == clocks.shape) or kinds.ndim != 1:
            raise DomainError("event arrays must be 1-d and of equal length")
        for a in (kinds, households, clocks):
            a.setflags(write=False)
        self.kinds = kinds
        self.households = households
        self.clocks = clocks

    @classmethod
    def initial(cls) -> "CensusLog":
        return cls(np.zeros(0), np.zeros(0), np.zeros(0))

    @property
    def num_events(self) -> int:
        return int(self.kinds.size)

    def __len__(self):
        return self.num_events + 1

    @cached_property
    def census_times(self) -> np.ndarray:
        out = np.concatenate(([0.0], self.clocks))
        out.setflags(write=False)
        return out

    @cached_property
    def formation_times(self) -> np.ndarray:
        out = self.clocks[self.kinds == K.NEW]
        out.setflags(write=False)
        return out

    def events(self) -> Iterator[EventRecord]:
        prev = 0.0
        for s, (c, h, t) in enumerate(zip(self.kinds.tolist(), self.households.tolist(),
                                          self.clocks.tolist())):
            yield EventRecord(_KIND_BY_CODE[c], h + 1, s + 1, t - prev)
            prev = t

    def iter_states(self) -> Iterator[YuleState]:
        sizes = [1]
        yield YuleState(sizes, 0.0, 0)
        for s, (c, h, t) in enumerate(zip(self.kinds.tolist(), self.households.tolist(),
                                          self.clocks.tolist())):
            if c == K.NEW:
                sizes.append(1)
            elif c == K.ATTACH:
                sizes[h] += 1
            else:
                sizes[h] -= 1
            yield YuleState(sizes, t, s + 1)

    def state_at(self, t: int) -> YuleState:
        """State at census ``t`` (0-based)."""
        if int(t) != t or not 0 <= t < len(self):
            raise DomainError(f"census index {t!r} out of range")
        t = int(t)
        k = self.kinds[:t]
        n = 1 + int(np.count_nonzero(k == K.NEW))
        sizes = np.zeros(n, dtype=np.int64)
        sizes[0] = 1
        new_idx = self.households[:t][k == K.NEW]
        sizes[new_idx] = 1
        delta = np.where(k == K.ATTACH, 1, np.where(k == K.DETACH, -1, 0))
        np.add.at(sizes, self.households[:t], delta)
        return YuleState(sizes, self.census_times[t], t)

    @property
    def jump_states(self) -> list[YuleState]:
        return list(self.iter_states())


def gillespie_step(state: YuleState, params: ModelParams, rng) -> tuple[YuleState, EventRecord]:
    """Advance to the next census.

    The holding time is exponential with the total rate
    ``(lambda2 + mu2) * population + num_households * lambda1``.
    """
    gen = as_generator(rng)
    sizes = np.asarray(state.sizes, dtype=np.int64)
    kinds = np.zeros(1, dtype=np.int8)
    hh = np.zeros(1, dtype=np.int64)
    hold = np.zeros(1)
    K.yule_one_step_batch(sizes, params.lambda1, params.lambda2, params.mu2,
                          gen.random((1, 4)), kinds, hh, hold)
    kind, h, dt = int(kinds[0]), int(hh[0]), float(hold[0])
    new = YuleState(_apply(sizes, kind, h), state.clock + dt, state.census_index + 1)
    return new, EventRecord(_KIND_BY_CODE[kind], h + 1, state.census_index + 1, dt)


def simulate_censuses(params: ModelParams, num_censuses: int, seed: int, *,
                      trajectory: int = 0) -> CensusLog:
    """Run ``num_censuses`` events from a single household of size one."""
    if int(num_censuses) != num_censuses or num_censuses < 1:
        raise DomainError(f"num_censuses must be a positive integer, got {num_censuses!r}")
    T = int(num_censuses)
    gen = stream_generator(seed, YULE_STREAM, trajectory)
    cap = T + 1
    sizes = np.zeros(cap, dtype=np.int64)
    tree = np.zeros(cap + 1, dtype=np.int64)
    sizes[0] = 1
    K.fenwick_add(tree, 0, 1)
    kinds = np.zeros(T, dtype=np.int8)
    hh = np.zeros(T, dtype=np.int64)
    clocks = np.zeros(T)
    n, total, clock = 1, 1, 0.0
    done = 0
    while done < T:
        m = min(CHUNK_STEPS, T - done)
        sl = slice(done, done + m)
        n, total, clock = K.yule_run(sizes, tree, n, total, clock, params.lambda1,
                                     params.lambda2, params.mu2, gen.random((m, 4)),
                                     kinds[sl], hh[sl], clocks[sl])
        done += m
    return CensusLog(kinds, hh, clocks)


def embedded_chain(log: CensusLog) -> list[tuple[int, ...]]:
    """Household sizes at censuses ``0, 1, ...`` as plain integer tuples."""
    return [s.as_tuple() for s in log.iter_states()]


def state_at_time(log: CensusLog, u: float) -> YuleState:
    """State at continuous time ``u``: the state of the last census at or before ``u``."""
    if not u >= 0:
        raise DomainError("time must be nonnegative")
    t = int(np.searchsorted(log.census_times, u, side="right")) - 1
    return log.state_at(t)


def sample_uniform_household_size(state: YuleState, rng) -> int:
    """Size of a uniformly chosen household (extinct ones included)."""
    gen = as_generator(rng)
    return int(state.sizes[gen.integers(state.num_households)])


def sample_sizes_at(params: ModelParams, censuses: int, samples: int, seed: int,
                    stream: int = YULE_STREAM, block: int = 512) -> np.ndarray:
    """Independent draws of a uniform household's size at census ``censuses``."""
    if censuses < 0 or samples < 0:
        raise DomainError("censuses and samples must be nonnegative")
    check_seed(seed)
    out = np.empty(samples, dtype=np.int64)
    for start in range(0, samples, block):
        stop = min(samples, start + block)
        u = np.empty((stop - start, censuses, 4))
        picks = np.empty(stop - start)
        for k in range(start, stop):
            g = stream_generator(seed, stream, k)
            u[k - start] = g.random((censuses, 4))
            picks[k - start] = g.random()
        K.yule_sample_sizes(censuses, params.lambda1, params.lambda2, params.mu2, u, picks,
                            out[start:stop])
    return out


def embedded_transition_frequencies(state: YuleState | Sequence[int], params: ModelParams,
                                    trials: int, seed: int):
    """Successor-word counts and holding times over ``trials`` single events.

    Returns ``(counts, holding_times)``.
    """
    sizes = np.asarray(state.sizes if isinstance(state, YuleState) else state, dtype=np.int64)
    gen = stream_generator(seed, YULE_STREAM, 0)
    counts: Counter = Counter()
    holding = np.empty(trials)
    done = 0
    while done < trials:
        m = min(CHUNK_STEPS, trials - done)
        kinds = np.zeros(m, dtype=np.int8)
        hh = np.zeros(m, dtype=np.int64)
        K.yule_one_step_batch(sizes, params.lambda1, params.lambda2, params.mu2,
                              gen.random((m, 4)), kinds, hh, holding[done:done + m])
        code = kinds.astype(np.int64) * (sizes.size + 1) + hh
        uniq, cnt = np.unique(code, return_counts=True)
        for c, k in zip(uniq.tolist(), cnt.tolist()):
            kind, h = divmod(c, sizes.size + 1)
            counts[tuple(_apply(sizes, kind, h).tolist())] += k
        done += m
    return dict(counts), holding


def formation_density(u: float, s, lambda1: float):
    """Density on ``[0, u]`` of the formation time of a uniformly chosen household.

    ``f_u(s) = lambda1 exp(lambda1 s) / (exp(lambda1 u) - 1)``; ``s`` may be
    an array.
    """
    if not (u > 0 and math.isfinite(u)):
        raise DomainError("u must be positive and finite")
    if not lambda1 > 0:
        raise DomainError("lambda1 must be positive")
    s_arr = np.asarray(s, dtype=float)
    if np.any(s_arr < 0) or np.any(s_arr > u):
        raise DomainError("s must lie in [0, u]")
    out = lambda1 * np.exp(lambda1 * (s_arr - u)) / -math.expm1(-lambda1 * u)
    return out if out.ndim else float(out)


def write_census_log(log: CensusLog, out: io.TextIOBase) -> None:
    """Write ``census_index,clock,kind,household`` rows, one per event."""
    w = csv.writer(out, lineterminator="\n")
    w.writerow(["census_index", "clock", "kind", "household"])
    for s, (c, h, t) in enumerate(zip(log.kinds.tolist(), log.households.tolist(),
                                      log.clocks.tolist())):
        w.writerow([s + 1, repr(t), _KIND_BY_CODE[c].value, h + 1])
