"""Compiled inner loops for the graph chain and the household model.

Both simulators pick a vertex (household) with probability proportional to
its degree (size) through a Fenwick tree over integer weights, so a step
costs O(log n).  All randomness enters as pre-generated uniforms in [0, 1),
which keeps the kernels deterministic and free of numba's global RNG.

Event codes: 0 new vertex / household, 1 attach / birth, 2 detach / death.
"""

import numpy as np
from numba import njit

NEW, ATTACH, DETACH = 0, 1, 2


@njit(cache=True, nogil=True)
def fenwick_build(weights, tree):
    """Fill ``tree[1..n]`` from ``weights[0..n-1]`` in O(n)."""
    n = weights.shape[0]
    tree[: n + 1] = 0
    for i in range(1, n + 1):
        tree[i] += weights[i - 1]
        parent = i + (i & -i)
        if parent < tree.shape[0]:
            tree[parent] += tree[i]


@njit(cache=True, nogil=True)
def fenwick_add(tree, i, delta):
    """Add ``delta`` to the weight of 0-based slot ``i``."""
    k = i + 1
    size = tree.shape[0]
    while k < size:
        tree[k] += delta
        k += k & -k


@njit(cache=True, nogil=True)
def fenwick_find(tree, r):
    """0-based slot whose cumulative weight interval contains ``r``.

    Returns the smallest ``i`` with ``weights[0] + ... + weights[i] > r``;
    slots of weight zero are never returned.
    """
    size = tree.shape[0]
    pos = 0
    step = 1
    while step * 2 < size:
        step *= 2
    while step > 0:
        nxt = pos + step
        if nxt < size and tree[nxt] <= r:
            pos = nxt
            r -= tree[nxt]
        step //= 2
    return pos


@njit(cache=True, nogil=True)
def _pick_weighted(tree, total, u):
    r = np.int64(u * total)
    if r >= total:
        r = total - 1
    return fenwick_find(tree, r)


@njit(cache=True, nogil=True)
def graph_select(u1, u2, n, total, tree, l1, l2, m2):
    """Event class and target vertex of one step of the degree chain."""
    new_w = n * l1
    attach_w = l2 * total
    d = new_w + attach_w + m2 * total
    x = u1 * d
    if x < new_w or total == 0:
        return NEW, n
    kind = ATTACH if x < new_w + attach_w else DETACH
    if kind == DETACH and m2 == 0.0:
        kind = ATTACH
    return kind, _pick_weighted(tree, total, u2)


@njit(cache=True, nogil=True)
def graph_run(degrees, tree, n, total, l1, l2, m2, uniforms, kinds, vertices):
    """Advance the degree chain by ``uniforms.shape[0]`` steps in place.

    ``degrees`` and ``tree`` must have room for one extra vertex per step.
    When ``kinds`` is non-empty the event of step ``s`` is written to
    ``kinds[s]`` and ``vertices[s]`` (0-based vertex index).
    Returns the new ``(n, total)``.
    """
    record = kinds.shape[0] > 0
    for s in range(uniforms.shape[0]):
        kind, v = graph_select(uniforms[s, 0], uniforms[s, 1], n, total, tree, l1, l2, m2)
        if kind == NEW:
            degrees[n] = 1
            fenwick_add(tree, n, 1)
            n += 1
            total += 1
        elif kind == ATTACH:
            degrees[v] += 1
            fenwick_add(tree, v, 1)
            total += 1
        else:
            degrees[v] -= 1
            fenwick_add(tree, v, -1)
            total -= 1
        if record:
            kinds[s] = kind
            vertices[s] = v
    return n, total


@njit(cache=True, nogil=True)
def graph_one_step_batch(degrees, l1, l2, m2, uniforms, kinds, vertices):
    """Fire one step from the same start state once per row of ``uniforms``."""
    n = degrees.shape[0]
    tree = np.zeros(n + 2, dtype=np.int64)
    fenwick_build(degrees, tree)
    total = degrees.sum()
    for s in range(uniforms.shape[0]):
        kind, v = graph_select(uniforms[s, 0], uniforms[s, 1], n, total, tree, l1, l2, m2)
        kinds[s] = kind
        vertices[s] = v


@njit(cache=True, nogil=True)
def graph_sample_degrees(steps, l1, l2, m2, uniforms, picks, out):
    """Independent trajectories of ``steps`` steps, one uniform vertex each.

    ``uniforms`` has shape ``(samples, steps, 2)`` and ``picks`` one uniform
    per sample for the final vertex choice.
    """
    cap = steps + 1
    degrees = np.zeros(cap, dtype=np.int64)
    tree = np.zeros(cap + 1, dtype=np.int64)
    empty_k = np.zeros(0, dtype=np.int8)
    empty_v = np.zeros(0, dtype=np.int64)
    for k in range(uniforms.shape[0]):
        degrees[:] = 0
        tree[:] = 0
        degrees[0] = 1
        fenwick_add(tree, 0, 1)
        n, total = graph_run(degrees, tree, 1, 1, l1, l2, m2, uniforms[k], empty_k, empty_v)
        i = np.int64(picks[k] * n)
        if i >= n:
            i = n - 1
        out[k] = degrees[i]


@njit(cache=True, nogil=True)
def _exp_clock(rate, u):
    if rate <= 0.0:
        return np.inf
    return -np.log1p(-u) / rate


@njit(cache=True, nogil=True)
def yule_select(u, n, total, tree, l1, l2, m2):
    """First of three competing clocks, and the household it acts on.

    ``u`` holds four uniforms: the formation, birth and death clocks and the
    household choice.  Returns ``(kind, household, holding_time)``.
    """
    t_new = _exp_clock(n * l1, u[0])
    t_birth = _exp_clock(l2 * total, u[1])
    t_death = _exp_clock(m2 * total, u[2])
    if t_new <= t_birth and t_new <= t_death:
        return NEW, n, t_new
    if t_birth <= t_death:
        return ATTACH, _pick_weighted(tree, total, u[3]), t_birth
    return DETACH, _pick_weighted(tree, total, u[3]), t_death


@njit(cache=True, nogil=True)
def yule_run(sizes, tree, n, total, clock, l1, l2, m2, uniforms, kinds, households, clocks):
    """Advance the household model by ``uniforms.shape[0]`` census events.

    Writes every event to ``kinds``, ``households`` and ``clocks`` (clock
    value after the event).  Returns ``(n, total, clock)``.
    """
    record = kinds.shape[0] > 0
    for s in range(uniforms.shape[0]):
        kind, h, dt = yule_select(uniforms[s], n, total, tree, l1, l2, m2)
        clock += dt
        if kind == NEW:
            sizes[n] = 1
            fenwick_add(tree, n, 1)
            n += 1
            total += 1
        elif kind == ATTACH:
            sizes[h] += 1
            fenwick_add(tree, h, 1)
            total += 1
        else:
            sizes[h] -= 1
            fenwick_add(tree, h, -1)
            total -= 1
        if record:
            kinds[s] = kind
            households[s] = h
            clocks[s] = clock
    return n, total, clock


@njit(cache=True, nogil=True)
def yule_one_step_batch(sizes, l1, l2, m2, uniforms, kinds, households, holding):
    """Fire one event from the same start state once per row of ``uniforms``."""
    n = sizes.shape[0]
    tree = np.zeros(n + 2, dtype=np.int64)
    fenwick_build(sizes, tree)
    total = sizes.sum()
    for s in range(uniforms.shape[0]):
        kind, h, dt = yule_select(uniforms[s], n, total, tree, l1, l2, m2)
        kinds[s] = kind
        households[s] = h
        holding[s] = dt


@njit(cache=True, nogil=True)
def yule_sample_sizes(censuses, l1, l2, m2, uniforms, picks, out):
    """Size of a uniformly chosen household at census ``censuses``, per sample."""
    cap = censuses + 1
    sizes = np.zeros(cap, dtype=np.int64)
    tree = np.zeros(cap + 1, dtype=np.int64)
    empty_k = np.zeros(0, dtype=np.int8)
    empty_h = np.zeros(0, dtype=np.int64)
    empty_c = np.zeros(0, dtype=np.float64)
    for k in range(uniforms.shape[0]):
        sizes[:] = 0
        tree[:] = 0
        sizes[0] = 1
        fenwick_add(tree, 0, 1)
        n, total, clock = yule_run(sizes, tree, 1, 1, 0.0, l1, l2, m2, uniforms[k],
                                   empty_k, empty_h, empty_c)
        i = np.int64(picks[k] * n)
        if i >= n:
            i = n - 1
        out[k] = sizes[i]
