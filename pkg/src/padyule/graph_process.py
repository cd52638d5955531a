"""Discrete-time in-degree chain of the attachment-detachment random graph.

At each step, with ``D = (lambda2 + mu2) * total_degree + n * lambda1``:

* a new vertex with a loop (degree 1) appears with probability ``n lambda1 / D``,
* vertex ``i`` gains an incoming edge with probability ``lambda2 d_i / D``,
* vertex ``i`` loses an incoming edge with probability ``mu2 d_i / D``.

Only in-degrees are tracked.  Vertices are never removed, so vertices whose
degree reaches zero stay in the graph for good.
"""

from __future__ import annotations

import csv
import enum
import io
from collections import Counter
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence

import numpy as np

from . import _kernels as K
from ._rng import CHUNK_STEPS, GRAPH_STREAM, as_generator, check_seed, stream_generator
from .errors import DomainError
from .params import ModelParams

__all__ = [
    "DegreeState",
    "EventKind",
    "EventRecord",
    "DegreeHistogram",
    "SimulationResult",
    "initial_state",
    "step",
    "simulate",
    "empirical_distribution",
    "sample_uniform_vertex_degree",
    "sample_degrees_at",
    "transition_probabilities",
    "transition_frequencies",
    "write_event_log",
]


class EventKind(enum.Enum):
    NEW_VERTEX = "N"
    ATTACH = "A"
    DETACH = "D"


_KIND_BY_CODE = {K.NEW: EventKind.NEW_VERTEX, K.ATTACH: EventKind.ATTACH, K.DETACH: EventKind.DETACH}


@dataclass(frozen=True)
class EventRecord:
    """One fired event.

    ``vertex`` is 1-based; for a new vertex it is the index of the vertex
    created.  ``holding_time`` is only set by the household simulator.
    """

    kind: EventKind
    vertex: int
    step: int
    holding_time: float | None = None


class DegreeState:
    """Immutable vector of in-degrees together with the step counter."""

    __slots__ = ("_degrees", "_step", "_total")

    def __init__(self, degrees: Sequence[int], step: int = 0):
        arr = np.array(degrees, dtype=np.int64)
        if arr.ndim != 1 or arr.size == 0:
            raise DomainError("a state needs at least one vertex")
        if np.any(arr < 0):
            raise DomainError("degrees must be nonnegative")
        if int(step) != step or step < 0:
            raise DomainError("step must be a nonnegative integer")
        arr.setflags(write=False)
        self._degrees = arr
        self._step = int(step)
        self._total = int(arr.sum())

    @property
    def degrees(self) -> np.ndarray:
        return self._degrees

    @property
    def step(self) -> int:
        return self._step

    @property
    def total_degree(self) -> int:
        return self._total

    @property
    def num_vertices(self) -> int:
        return int(self._degrees.size)

    def as_tuple(self) -> tuple[int, ...]:
        return tuple(int(d) for d in self._degrees)

    def __eq__(self, other):
        if not isinstance(other, DegreeState):
            return NotImplemented
        return self._step == other._step and np.array_equal(self._degrees, other._degrees)

    def __hash__(self):
        return hash((self._step, self._degrees.tobytes()))

    def __repr__(self):
        head = ", ".join(str(d) for d in self._degrees[:8])
        more = ", ..." if self._degrees.size > 8 else ""
        return f"DegreeState([{head}{more}], step={self._step})"


def initial_state() -> DegreeState:
    return DegreeState([1], 0)


@dataclass(frozen=True)
class DegreeHistogram:
    """Counts of vertices by degree.  ``merge`` adds counts."""

    counts: Mapping[int, int] = field(default_factory=dict)

    def __post_init__(self):
        clean = {}
        for j, c in self.counts.items():
            if int(j) != j or j < 0 or int(c) != c or c < 0:
                raise DomainError("histogram keys and counts must be nonnegative integers")
            if c:
                clean[int(j)] = int(c)
        object.__setattr__(self, "counts", dict(sorted(clean.items())))

    @classmethod
    def from_values(cls, values: Iterable[int]) -> "DegreeHistogram":
        arr = np.asarray(list(values) if not isinstance(values, np.ndarray) else values)
        if arr.size == 0:
            return cls({})
        bins = np.bincount(arr.astype(np.int64))
        nz = np.flatnonzero(bins)
        return cls(dict(zip(nz.tolist(), bins[nz].tolist())))

    @property
    def num_vertices(self) -> int:
        return sum(self.counts.values())

    @property
    def max_degree(self) -> int:
        return max(self.counts, default=0)

    def merge(self, other: "DegreeHistogram") -> "DegreeHistogram":
        merged = Counter(self.counts)
        merged.update(other.counts)
        return DegreeHistogram(merged)

    __add__ = merge

    def masses(self, j_max: int | None = None) -> np.ndarray:
        """Normalized masses on ``0..j_max`` (default: the largest degree)."""
        n = self.num_vertices
        if n == 0:
            raise DomainError("empty histogram")
        top = self.max_degree if j_max is None else int(j_max)
        out = np.zeros(top + 1)
        for j, c in self.counts.items():
            if j <= top:
                out[j] = c
        return out / n

    def total_degree(self) -> int:
        return sum(j * c for j, c in self.counts.items())


@dataclass(frozen=True)
class SimulationResult:
    state: DegreeState
    events: tuple[EventRecord, ...] | None = None


def _select_one(state: DegreeState, params: ModelParams, u: np.ndarray):
    kinds = np.zeros(1, dtype=np.int8)
    verts = np.zeros(1, dtype=np.int64)
    K.graph_one_step_batch(np.asarray(state.degrees), params.lambda1, params.lambda2,
                           params.mu2, u.reshape(1, 2), kinds, verts)
    return int(kinds[0]), int(verts[0])


def _apply(degrees: np.ndarray, kind: int, v: int) -> np.ndarray:
    out = degrees.copy()
    if kind == K.NEW:
        return np.append(out, 1)
    out[v] += 1 if kind == K.ATTACH else -1
    return out


def step(state: DegreeState, params: ModelParams, rng) -> tuple[DegreeState, EventRecord]:
    """One transition of the chain; ``rng`` is a numpy Generator or a seed.

    This is the convenience single-step path; :func:`simulate` runs the
    same event selection inside a compiled loop.
    """
    gen = as_generator(rng)
    kind, v = _select_one(state, params, gen.random(2))
    new = DegreeState(_apply(np.asarray(state.degrees), kind, v), state.step + 1)
    return new, EventRecord(_KIND_BY_CODE[kind], v + 1, state.step + 1)


def _run(params: ModelParams, steps: int, gen: np.random.Generator, record: bool):
    cap = steps + 1
    degrees = np.zeros(cap, dtype=np.int64)
    tree = np.zeros(cap + 1, dtype=np.int64)
    degrees[0] = 1
    K.fenwick_add(tree, 0, 1)
    n, total = 1, 1
    kinds = np.zeros(steps if record else 0, dtype=np.int8)
    verts = np.zeros(steps if record else 0, dtype=np.int64)
    done = 0
    while done < steps:
        m = min(CHUNK_STEPS, steps - done)
        u = gen.random((m, 2))
        sl = slice(done, done + m) if record else slice(0, 0)
        n, total = K.graph_run(degrees, tree, n, total, params.lambda1, params.lambda2,
                               params.mu2, u, kinds[sl], verts[sl])
        done += m
    return degrees[:n], kinds, verts


def simulate(params: ModelParams, steps: int, seed: int, *, record_events: bool = False,
             trajectory: int = 0) -> SimulationResult:
    """Run the chain for ``steps`` steps from the single-vertex state.

    The result is a deterministic function of ``(params, steps, seed,
    trajectory)``; ``trajectory`` selects an independent stream under the
    same seed, which is how ensembles are generated.
    """
    if int(steps) != steps or steps < 0:
        raise DomainError(f"steps must be a nonnegative integer, got {steps!r}")
    steps = int(steps)
    gen = stream_generator(seed, GRAPH_STREAM, trajectory)
    degrees, kinds, verts = _run(params, steps, gen, record_events)
    state = DegreeState(degrees, steps)
    events = None
    if record_events:
        codes = kinds.tolist()
        vs = verts.tolist()
        events = tuple(
            EventRecord(_KIND_BY_CODE[c], v + 1, s + 1) for s, (c, v) in enumerate(zip(codes, vs))
        )
    return SimulationResult(state, events)


def write_event_log(events: Iterable[EventRecord], out: io.TextIOBase) -> None:
    """Write ``step,kind,vertex`` rows."""
    w = csv.writer(out, lineterminator="\n")
    w.writerow(["step", "kind", "vertex"])
    for e in events:
        w.writerow([e.step, e.kind.value, e.vertex])


def empirical_distribution(state: DegreeState) -> DegreeHistogram:
    """Histogram of in-degrees; normalized, it is the empirical degree law."""
    return DegreeHistogram.from_values(state.degrees)


def sample_uniform_vertex_degree(state: DegreeState, rng) -> int:
    """Degree of a uniformly chosen vertex."""
    gen = as_generator(rng)
    return int(state.degrees[gen.integers(state.num_vertices)])


def sample_degrees_at(params: ModelParams, steps: int, samples: int, seed: int,
                      stream: int = GRAPH_STREAM, block: int = 512) -> np.ndarray:
    """Independent draws of the degree of a uniform vertex after ``steps`` steps.

    Sample ``k`` uses its own random stream ``(seed, stream, k)``.
    """
    if steps < 0 or samples < 0:
        raise DomainError("steps and samples must be nonnegative")
    check_seed(seed)
    out = np.empty(samples, dtype=np.int64)
    for start in range(0, samples, block):
        stop = min(samples, start + block)
        u = np.empty((stop - start, steps, 2))
        picks = np.empty(stop - start)
        for k in range(start, stop):
            g = stream_generator(seed, stream, k)
            u[k - start] = g.random((steps, 2))
            picks[k - start] = g.random()
        K.graph_sample_degrees(steps, params.lambda1, params.lambda2, params.mu2, u, picks,
                               out[start:stop])
    return out


def transition_probabilities(state: DegreeState, params: ModelParams) -> dict[tuple[int, ...], float]:
    """Exact one-step law as a map from successor degree tuple to probability.

    Events leading to the same successor word are merged.
    """
    degs = state.as_tuple()
    n, total = len(degs), sum(degs)
    D = (params.lambda2 + params.mu2) * total + n * params.lambda1
    out: dict[tuple[int, ...], float] = {}

    def add(word, p):
        if p > 0:
            out[word] = out.get(word, 0.0) + p

    add(degs + (1,), n * params.lambda1 / D)
    for i, d in enumerate(degs):
        add(degs[:i] + (d + 1,) + degs[i + 1:], params.lambda2 * d / D)
        add(degs[:i] + (d - 1,) + degs[i + 1:], params.mu2 * d / D)
    return out


def transition_frequencies(state: DegreeState, params: ModelParams, trials: int,
                           seed: int) -> dict[tuple[int, ...], int]:
    """Counts of successor words over ``trials`` independent single steps."""
    gen = stream_generator(seed, GRAPH_STREAM, 0)
    degrees = np.asarray(state.degrees, dtype=np.int64)
    counts: Counter = Counter()
    done = 0
    while done < trials:
        m = min(CHUNK_STEPS, trials - done)
        kinds = np.zeros(m, dtype=np.int8)
        verts = np.zeros(m, dtype=np.int64)
        K.graph_one_step_batch(degrees, params.lambda1, params.lambda2, params.mu2,
                               gen.random((m, 2)), kinds, verts)
        code = kinds.astype(np.int64) * (degrees.size + 1) + verts
        uniq, cnt = np.unique(code, return_counts=True)
        for c, k in zip(uniq.tolist(), cnt.tolist()):
            kind, v = divmod(c, degrees.size + 1)
            counts[tuple(_apply(degrees, kind, v).tolist())] += k
        done += m
    return dict(counts)
