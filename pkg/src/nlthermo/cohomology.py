"""Periodic-orbit test for cohomology of locally constant potentials.

If ``phi1 - phi2 = c + g o T - g`` then the coboundary telescopes around
every periodic orbit, so ``S_p(phi1 - phi2) = p c`` on each orbit of period
``p``.  Passing the test up to a finite period is evidence, not proof.
"""

import os
from dataclasses import dataclass, field

import numpy as np

from .exceptions import CapExceeded
from .potentials import lift_depth
from .sft import admissible_words

TOL = 1e-10
MAX_REPORTED = 10


@dataclass
class CohomologyVerdict:
    max_period_checked: int
    constant_offset: float
    obstructions: list = field(default_factory=list)

    @property
    def consistent(self):
        return not self.obstructions

    @property
    def verdict(self):
        if self.consistent:
            return f"consistent up to period {self.max_period_checked}"
        return "inconsistent"

    def as_dict(self):
        return {
            "verdict": self.verdict,
            "consistent": self.consistent,
            "max_period_checked": self.max_period_checked,
            "constant_offset": self.constant_offset,
            "obstructions": [{"cycle": list(c), "discrepancy": d} for c, d in self.obstructions],
        }


def periodic_orbits(sys, p):
    """Periodic words of period ``p``, one representative per rotation class."""
    seen = set()
    for w in admissible_words(sys, p):
        if not sys.transition[w[-1], w[0]]:
            continue
        rot = min(w[i:] + w[:i] for i in range(p))
        if rot not in seen:
            seen.add(rot)
            yield rot


def orbit_sum(pot, w):
    """``S_p pot`` at the periodic point ``(w w w ...)``."""
    k = pot.depth
    ext = w * (k // len(w) + 2)
    return sum(pot(ext[j : j + k]) for j in range(len(w)))


def periodic_obstruction_test(sys, phi1, phi2, max_period, cap=None):
    """Compare Birkhoff sums of ``phi1 - phi2`` over all periodic orbits up to ``max_period``."""
    k = max(phi1.depth, phi2.depth)
    if max_period < 2 * k:
        raise ValueError(f"max_period must be at least {2 * k} for depth-{k} potentials")
    cap = int(os.environ.get("NLP_CAP_WORDS", 2**22)) if cap is None else cap
    if sys.m**max_period > cap and np.trace(np.linalg.matrix_power(sys.transition.astype(float), max_period)) > cap:
        raise CapExceeded(f"periodic orbits of period {max_period} exceed the cap of {cap}")
    diff = lift_depth(phi1, k) - lift_depth(phi2, k)
    c = None
    for p in range(1, max_period + 1):
        failures = []
        for w in periodic_orbits(sys, p):
            s = orbit_sum(diff, w)
            if c is None:
                c = s / p
            gap = abs(s - p * c)
            if gap > TOL:
                failures.append((w, float(gap)))
        if failures:
            return CohomologyVerdict(p, float(c), failures[:MAX_REPORTED])
    return CohomologyVerdict(max_period, float(c))
