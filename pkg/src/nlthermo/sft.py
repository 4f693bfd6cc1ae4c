"""Subshifts of finite type: the system object plus word and cycle enumeration.

Words are plain tuples of symbol indices.  Every enumeration here is
deterministic: words come out in lexicographic order and cycles in a fixed
canonical order, so everything built on top is reproducible bit for bit.
"""

import itertools
import os

import networkx as nx
import numpy as np

from .exceptions import CapExceeded, LengthMismatch, NotPrimitive

DEFAULT_STATE_CAP = 4096
DEFAULT_CYCLE_CAP = 200_000


def _as_transition(transition):
    a = np.array(transition, dtype=float)
    if a.ndim != 2 or a.shape[0] != a.shape[1] or a.shape[0] == 0:
        raise NotPrimitive(f"transition must be a nonempty square matrix, got shape {a.shape}")
    if not np.all((a == 0) | (a == 1)):
        raise NotPrimitive("transition entries must be 0 or 1")
    a = a.astype(np.int8)
    a.setflags(write=False)
    return a


class SymbolicSystem:
    """A one-sided topologically mixing subshift of finite type.

    Parameters
    ----------
    transition : array_like of shape (m, m)
        0/1 matrix; ``transition[i, j] == 1`` allows symbol ``j`` to follow ``i``.
    depth_hint : int
        Largest potential depth this system is expected to carry.  Purely
        informational, used to size caches.
    blocks : sequence of tuple, optional
        Set by :func:`higher_block_recode`: the original word each state of a
        recoded system stands for.
    """

    def __init__(self, transition, depth_hint=1, blocks=None):
        a = _as_transition(transition)
        if np.any(a.sum(axis=1) == 0) or np.any(a.sum(axis=0) == 0):
            raise NotPrimitive("every row and column of the transition matrix needs a 1")
        self.transition = a
        self.depth_hint = int(depth_hint)
        self.blocks = None if blocks is None else tuple(tuple(b) for b in blocks)
        self._words = {}
        if not is_primitive(self):
            raise NotPrimitive("transition matrix is not primitive (shift is not mixing)")

    @property
    def alphabet_size(self):
        return self.transition.shape[0]

    m = alphabet_size

    def successors(self, i):
        return np.flatnonzero(self.transition[i])

    def words(self, n):
        """All admissible words of length ``n`` as a tuple, cached."""
        if n not in self._words:
            self._words[n] = tuple(admissible_words(self, n))
        return self._words[n]

    def word_index(self, n):
        key = ("index", n)
        if key not in self._words:
            self._words[key] = {w: i for i, w in enumerate(self.words(n))}
        return self._words[key]

    def is_admissible(self, w):
        return all(self.transition[a, b] for a, b in zip(w, w[1:])) and all(
            0 <= s < self.m for s in w
        )

    def spectral_radius(self):
        return float(max(abs(np.linalg.eigvals(self.transition.astype(float)))))

    def topological_entropy(self):
        return float(np.log(self.spectral_radius()))

    def __eq__(self, other):
        return isinstance(other, SymbolicSystem) and np.array_equal(
            self.transition, other.transition
        )

    def __hash__(self):
        return hash(self.transition.tobytes() + bytes([self.m % 256]))

    def __repr__(self):
        rows = ["".join(str(int(x)) for x in row) for row in self.transition]
        return f"SymbolicSystem({'/'.join(rows)})"


def full_shift(m):
    return SymbolicSystem(np.ones((m, m), dtype=int))


def golden_mean_shift():
    return SymbolicSystem([[1, 1], [1, 0]])


def is_primitive(sys):
    """True iff some power of the transition matrix is entrywise positive.

    Positivity of a primitive matrix persists for every exponent beyond
    Wielandt's bound ``(m-1)**2 + 1`` (which is at most ``m**2``), so checking
    one power of two past that bound by repeated squaring is exact.
    """
    a = (np.asarray(sys.transition if isinstance(sys, SymbolicSystem) else sys) > 0).astype(
        np.int64
    )
    m = a.shape[0]
    bound = (m - 1) ** 2 + 1
    power = 1
    while power < bound:
        a = ((a @ a) > 0).astype(np.int64)
        power *= 2
    return bool(np.all(a > 0))


def admissible_words(sys, n):
    """Yield the admissible words of length ``n`` in lexicographic order."""
    if n < 1:
        raise ValueError("word length must be at least 1")
    succ = [tuple(int(j) for j in sys.successors(i)) for i in range(sys.m)]
    stack = [(s,) for s in reversed(range(sys.m))]
    while stack:
        w = stack.pop()
        if len(w) == n:
            yield w
            continue
        for j in reversed(succ[w[-1]]):
            stack.append(w + (j,))


def word_count(sys, n):
    """Number of admissible ``n``-words, i.e. the entry sum of ``A**(n-1)``."""
    a = [[int(x) for x in row] for row in sys.transition]
    v = [1] * sys.m
    for _ in range(n - 1):
        v = [sum(a[i][j] * v[j] for j in range(sys.m)) for i in range(sys.m)]
    return sum(v)


def check_word(sys, w, length=None):
    w = tuple(int(s) for s in w)
    if length is not None and len(w) != length:
        raise LengthMismatch(f"expected a word of length {length}, got {len(w)}")
    if not sys.is_admissible(w):
        raise ValueError(f"word {w} is not admissible")
    return w


def state_cap():
    return int(os.environ.get("NLP_CAP_STATES", DEFAULT_STATE_CAP))


def higher_block_recode(sys, k, cap=None):
    """Return the ``k``-block presentation of ``sys``.

    States of the new system index the admissible ``k``-words of ``sys`` in
    lexicographic order (kept in ``.blocks``); ``u -> v`` is allowed iff the
    last ``k-1`` symbols of ``u`` are the first ``k-1`` of ``v``.
    """
    if k < 1:
        raise ValueError("block length must be at least 1")
    if k == 1:
        return sys
    cap = state_cap() if cap is None else cap
    if word_count(sys, k) > cap:
        raise CapExceeded(f"{k}-block presentation has more than {cap} states")
    blocks = sys.words(k)
    by_prefix = {}
    for j, b in enumerate(blocks):
        by_prefix.setdefault(b[:-1], []).append(j)
    t = np.zeros((len(blocks), len(blocks)), dtype=int)
    for i, b in enumerate(blocks):
        for j in by_prefix.get(b[1:], ()):
            t[i, j] = 1
    return SymbolicSystem(t, depth_hint=1, blocks=blocks)


class CycleSet:
    """Simple cycles of a (possibly recoded) transition graph.

    ``cycles`` holds each cycle as a tuple of states of ``system``, rotated to
    start at its smallest state; the list is sorted by (length, states).
    """

    def __init__(self, system, cycles):
        self.system = system
        self.cycles = tuple(cycles)

    def __len__(self):
        return len(self.cycles)

    def __iter__(self):
        return iter(self.cycles)

    def symbols(self):
        """The cycles written in the original alphabet (first symbol of each block)."""
        if self.system.blocks is None:
            return list(self.cycles)
        return [tuple(self.system.blocks[s][0] for s in c) for c in self.cycles]


def _canonical(cycle):
    i = cycle.index(min(cycle))
    return tuple(cycle[i:] + cycle[:i])


def simple_cycles(sys, state_space_depth=1, cap=None, max_cycles=DEFAULT_CYCLE_CAP):
    """Enumerate every simple cycle of the depth-recoded transition graph.

    Raises :class:`CapExceeded` when the recoded state space exceeds ``cap``
    or more than ``max_cycles`` cycles exist; the result is never truncated.
    """
    cap = state_cap() if cap is None else cap
    if word_count(sys, state_space_depth) > cap:
        raise CapExceeded(f"depth-{state_space_depth} state space exceeds {cap} states")
    rec = higher_block_recode(sys, state_space_depth, cap=cap)
    g = nx.DiGraph()
    g.add_nodes_from(range(rec.m))
    g.add_edges_from(zip(*map(lambda a: a.tolist(), np.nonzero(rec.transition))))
    found = []
    for c in itertools.islice(nx.simple_cycles(g), max_cycles + 1):
        found.append(_canonical(list(c)))
    if len(found) > max_cycles:
        raise CapExceeded(f"more than {max_cycles} simple cycles")
    found.sort(key=lambda c: (len(c), c))
    return CycleSet(rec, found)


def word_array(sys, n):
    """Admissible ``n``-words as an int array of shape (count, n), lexicographic."""
    words = np.arange(sys.m, dtype=np.int32)[:, None]
    succ = [sys.successors(i) for i in range(sys.m)]
    deg = sys.transition.sum(axis=1)
    for _ in range(n - 1):
        last = words[:, -1]
        parents = np.repeat(np.arange(len(words)), deg[last])
        children = np.concatenate([succ[s] for s in last]) if len(last) else last
        words = np.column_stack([words[parents], children.astype(np.int32)])
    return words
