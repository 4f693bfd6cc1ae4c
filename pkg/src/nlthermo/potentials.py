"""Locally constant potentials and exact Birkhoff sums.

A potential of depth ``k`` is a table over the admissible ``k``-words of a
system.  ``S_n`` of such a potential is constant on ``(n+k-1)``-cylinders, so
every Birkhoff sum computed here is exact.
"""

from dataclasses import dataclass
from numbers import Real

import numpy as np

from .exceptions import DepthMismatch, LengthMismatch
from .sft import check_word, higher_block_recode


def _parse_word(key, m):
    if isinstance(key, str):
        key = key.strip()
        if "," in key or " " in key:
            parts = key.replace(",", " ").split()
            return tuple(int(p) for p in parts)
        if m > 10:
            raise ValueError(f"word '{key}' is ambiguous for an alphabet of size {m}; separate symbols with commas")
        return tuple(int(c) for c in key)
    if isinstance(key, int):
        return (key,)
    return tuple(int(s) for s in key)


class Potential:
    """A depth-``k`` locally constant function on a :class:`SymbolicSystem`.

    ``table`` may be a mapping ``word -> value`` (words as tuples or digit
    strings such as ``"01"``) covering exactly the admissible ``k``-words, or a
    sequence of values in the lexicographic order of those words.
    """

    def __init__(self, system, depth, table):
        self.system = system
        self.depth = int(depth)
        if self.depth < 1:
            raise ValueError("potential depth must be positive")
        words = system.words(self.depth)
        if isinstance(table, dict):
            parsed = {}
            for key, v in table.items():
                w = _parse_word(key, system.m)
                if len(w) != self.depth:
                    raise LengthMismatch(f"table key {key!r} is not a word of length {self.depth}")
                parsed[w] = v
            missing = [w for w in words if w not in parsed]
            extra = set(parsed) - set(words)
            if missing or extra:
                raise ValueError(
                    f"table must cover exactly the admissible {self.depth}-words; "
                    f"missing {missing[:3]}, not admissible {sorted(extra)[:3]}"
                )
            values = [parsed[w] for w in words]
        else:
            values = list(np.ravel(np.asarray(table, dtype=float)))
            if len(values) != len(words):
                raise LengthMismatch(
                    f"expected {len(words)} values for the admissible {self.depth}-words, got {len(values)}"
                )
        arr = np.asarray(values, dtype=float)
        if not np.all(np.isfinite(arr)):
            raise ValueError("potential values must be finite")
        arr.setflags(write=False)
        self.values = arr

    @classmethod
    def from_function(cls, system, depth, fn):
        return cls(system, depth, [fn(w) for w in system.words(depth)])

    @classmethod
    def constant(cls, system, c):
        return cls(system, 1, [c] * system.m)

    @property
    def table(self):
        return dict(zip(self.system.words(self.depth), self.values.tolist()))

    def __call__(self, w):
        return float(self.values[self.system.word_index(self.depth)[tuple(w[: self.depth])]])

    def sup_norm(self):
        return float(np.max(np.abs(self.values)))

    def _binary(self, other, op):
        if isinstance(other, Real):
            return Potential(self.system, self.depth, op(self.values, float(other)))
        k = max(self.depth, other.depth)
        a, b = lift_depth(self, k), lift_depth(other, k)
        return Potential(self.system, k, op(a.values, b.values))

    def __add__(self, other):
        return self._binary(other, np.add)

    __radd__ = __add__

    def __sub__(self, other):
        return self._binary(other, np.subtract)

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, c):
        return Potential(self.system, self.depth, self.values * float(c))

    __rmul__ = __mul__

    def __neg__(self):
        return self * -1.0

    def __repr__(self):
        return f"Potential(depth={self.depth}, values={self.values.tolist()})"


def indicator(system, symbol):
    """Characteristic function of the cylinder ``[symbol]`` at coordinate 0."""
    return Potential(system, 1, [1.0 if s == symbol else 0.0 for s in range(system.m)])


def coboundary(g):
    """The depth ``g.depth + 1`` potential ``g o T - g``."""
    sys, k = g.system, g.depth
    return Potential.from_function(sys, k + 1, lambda w: g(w[1:]) - g(w[:k]))


def lift_depth(p, k):
    """Re-express ``p`` as a depth-``k`` table (constant on extensions)."""
    if k < p.depth:
        raise DepthMismatch(f"cannot lower depth {p.depth} to {k}")
    if k == p.depth:
        return p
    index = p.system.word_index(p.depth)
    return Potential(p.system, k, [p.values[index[w[: p.depth]]] for w in p.system.words(k)])


@dataclass(frozen=True)
class BirkhoffVector:
    sums: tuple
    n: int

    def average(self):
        return np.asarray(self.sums) / self.n


class PotentialFamily:
    """The vector potential ``(phi_1, ..., phi_d)`` at a common depth."""

    def __init__(self, components):
        components = list(components)
        if not components:
            raise ValueError("a potential family needs at least one component")
        sys = components[0].system
        if any(p.system != sys for p in components):
            raise ValueError("all potentials must live on the same system")
        self.system = sys
        self.depth = max(p.depth for p in components)
        self.components = tuple(lift_depth(p, self.depth) for p in components)
        self._blocks = None

    @property
    def d(self):
        return len(self.components)

    def __len__(self):
        return self.d

    def __getitem__(self, i):
        return self.components[i]

    def table(self):
        """Values as an array of shape (number of depth-words, d)."""
        return np.column_stack([p.values for p in self.components])

    def on_blocks(self):
        """``(recoded_system, values)`` with ``values[s, i]`` = phi_i on block state ``s``.

        On the ``depth``-block presentation every component is a depth-1
        potential, which is what the transfer-matrix code works with.
        """
        if self._blocks is None:
            rec = higher_block_recode(self.system, self.depth)
            self._blocks = (rec, self.table())
        return self._blocks

    def combine(self, q, shift=0.0):
        """The scalar potential ``<q, Phi> + shift`` at the family depth."""
        q = np.asarray(q, dtype=float).reshape(-1)
        if len(q) != self.d:
            raise LengthMismatch(f"expected {self.d} coefficients, got {len(q)}")
        return Potential(self.system, self.depth, self.table() @ q + shift)

    def bounds(self):
        return np.max(np.abs(self.table()), axis=0)


def birkhoff_sum(fam, w, n=None):
    """``S_n Phi`` on the cylinder of ``w``; ``len(w)`` must be ``n + depth - 1``."""
    if isinstance(fam, Potential):
        fam = PotentialFamily([fam])
    k = fam.depth
    if n is None:
        n = len(w) - k + 1
    w = check_word(fam.system, w)
    if len(w) != n + k - 1 or n < 1:
        raise LengthMismatch(f"S_{n} of a depth-{k} family needs a word of length {n + k - 1}, got {len(w)}")
    index = fam.system.word_index(k)
    rows = [index[w[j : j + k]] for j in range(n)]
    sums = fam.table()[rows].sum(axis=0)
    return BirkhoffVector(tuple(float(s) for s in sums), n)
