"""Pure-Python/numpy implementations of the hot kernels.

Results are bit-identical to the compiled versions: state weights are
multiplied in ascending event order and every accumulation is a sequential
sum in ascending state (or subset) index, done here with ``np.cumsum``.
"""
import numpy as np

AND, OR = 0, 1


def _seq_sum(values):
    if len(values) == 0:
        return 0.0
    return float(np.cumsum(values)[-1])


def failure_table(n, ops, child_ptr, children, top):
    """uint8 table over all 2**n event states: 1 where the top gate fails.

    Gates are given in topological order; child index ``c < n`` is an event,
    ``c >= n`` is gate ``c - n``.
    """
    states = np.arange(1 << n, dtype=np.uint64)
    values = [((states >> np.uint64(i)) & np.uint64(1)).astype(bool) for i in range(n)]
    for g in range(len(ops)):
        kids = [values[c] for c in children[child_ptr[g]:child_ptr[g + 1]]]
        if ops[g] == AND:
            values.append(np.logical_and.reduce(kids))
        else:
            values.append(np.logical_or.reduce(kids))
    return values[n + top].astype(np.uint8)


def minimal_states(fail, n):
    """States that fail while no single-event removal still fails."""
    fail = np.asarray(fail, dtype=bool)
    states = np.arange(1 << n, dtype=np.uint64)
    minimal = fail.copy()
    for i in range(n):
        bit = np.uint64(1 << i)
        has = (states & bit) != 0
        minimal[has] &= ~fail[(states[has] ^ bit).astype(np.intp)]
    return states[minimal]


def state_weights(q, n):
    states = np.arange(1 << n, dtype=np.uint64)
    w = np.ones(1 << n)
    for i in range(n):
        bit = ((states >> np.uint64(i)) & np.uint64(1)).astype(bool)
        w *= np.where(bit, q[i], 1.0 - q[i])
    return w


def state_sums(q, cut_masks, fail, n):
    """Return (P(top), per-event P(some cut set containing the event occurs))."""
    q = np.asarray(q, dtype=np.float64)
    fail = np.asarray(fail, dtype=bool)
    w = state_weights(q, n)
    w = np.where(fail, w, 0.0)
    top = _seq_sum(w)
    states = np.arange(1 << n, dtype=np.uint64)
    covered = np.zeros((n, 1 << n), dtype=bool)
    for m in cut_masks:
        m = np.uint64(m)
        occurs = (states & m) == m
        for i in range(n):
            if int(m) >> i & 1:
                covered[i] |= occurs
    num = np.array([_seq_sum(np.where(covered[i], w, 0.0)) for i in range(n)])
    return top, num


def inclusion_exclusion(q, masks):
    """P(union of cut sets) by inclusion-exclusion over all 2**k - 1 subsets."""
    k = len(masks)
    if k == 0:
        return 0.0
    q = np.asarray(q, dtype=np.float64)
    unions = np.zeros(1 << k, dtype=np.uint64)
    for j, m in enumerate(masks):
        unions[1 << j: 2 << j] = unions[: 1 << j] | np.uint64(m)
    parity = np.zeros(1 << k, dtype=np.uint8)
    for j in range(k):
        parity[1 << j: 2 << j] = parity[: 1 << j] ^ 1
    prob = np.ones(1 << k)
    for i in range(len(q)):
        bit = ((unions >> np.uint64(i)) & np.uint64(1)).astype(bool)
        prob = np.where(bit, prob * q[i], prob)
    terms = np.where(parity == 1, prob, -prob)[1:]
    return _seq_sum(terms)


def absorb(masks):
    """Drop every mask that is a superset of another; input sorted by popcount."""
    kept = []
    for m in masks:
        m = int(m)
        for k in kept:
            if k & m == k:
                break
        else:
            kept.append(m)
    return kept
