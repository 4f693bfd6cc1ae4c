"""Classical pressure, Gibbs-Markov equilibrium measures and their statistics.

For a depth-1 potential ``phi`` the transfer matrix is
``M[i, j] = A[i, j] * exp(phi(j))`` (weights on the arrival symbol), the
pressure is the log of its Perron root, and the equilibrium measure is the
Markov chain ``P[i, j] = M[i, j] r[j] / (lam r[i])`` with stationary vector
``pi ~ l * r``.  Deeper potentials go through the higher-block presentation.
"""

from dataclasses import dataclass

import numpy as np

from .exceptions import DepthMismatch, NoConvergence
from .potentials import Potential, PotentialFamily

EIG_RTOL = 1e-13
MAX_ITER = 100_000


@dataclass(frozen=True, eq=False)
class TransferMatrix:
    """Nonnegative transfer matrix stored as ``exp(log_scale) * entries``.

    The scale keeps entries in [0, 1] so that large potentials never overflow.
    """

    entries: np.ndarray
    system: object
    log_scale: float = 0.0

    def dense(self):
        return self.entries * np.exp(self.log_scale)


@dataclass(frozen=True, eq=False)
class GibbsMarkovMeasure:
    """Stationary Markov measure on the states of ``system``."""

    stochastic: np.ndarray
    stationary: np.ndarray
    log_pressure: float
    system: object

    def check(self, row_tol=1e-12, stat_tol=1e-10):
        rows = np.abs(self.stochastic.sum(axis=1) - 1).max()
        stat = np.abs(self.stationary @ self.stochastic - self.stationary).max()
        return rows <= row_tol and stat <= stat_tol and abs(self.stationary.sum() - 1) <= stat_tol

    def as_dict(self):
        return {
            "stochastic": self.stochastic.tolist(),
            "stationary": self.stationary.tolist(),
            "log_pressure": self.log_pressure,
        }


def _depth_one_values(sys, phi):
    if isinstance(phi, Potential):
        if phi.depth != 1:
            raise DepthMismatch("transfer_matrix needs a depth-1 potential; recode deeper ones first")
        if phi.system != sys:
            raise DepthMismatch("potential lives on a different system")
        return phi.values
    values = np.asarray(phi, dtype=float).reshape(-1)
    if len(values) != sys.m:
        raise DepthMismatch(f"expected {sys.m} state values, got {len(values)}")
    return values


def transfer_matrix(sys, phi):
    """Transfer matrix of a depth-1 potential (a :class:`Potential` or value vector)."""
    values = _depth_one_values(sys, phi)
    shift = float(values.max())
    entries = sys.transition * np.exp(values - shift)[None, :]
    return TransferMatrix(entries, sys, shift)


def perron(tm):
    """Perron root and right/left Perron vectors of a primitive matrix.

    Power iteration on repeated squares ``M, M^2, M^4, ...`` drives the
    subdominant part to zero quadratically fast, after which ordinary power
    steps confirm the eigenvalue to relative tolerance ``EIG_RTOL``.
    Returns ``(log_lambda, r, l)`` with ``r`` and ``l`` positive, ``l @ r = 1``.
    """
    m = np.asarray(tm.entries, dtype=float)
    b = m / m.max()
    for _ in range(64):
        nxt = b @ b
        nxt /= nxt.max()
        if np.allclose(nxt, b, rtol=0, atol=1e-16):
            b = nxt
            break
        b = nxt
    r = b @ np.ones(len(m))
    l = np.ones(len(m)) @ b
    r /= r.sum()
    l /= l.sum()
    lam = float(l @ m @ r / (l @ r))
    for it in range(MAX_ITER):
        r_new = m @ r
        l_new = l @ m
        lam_new = float(r_new.sum() / r.sum())
        r = r_new / r_new.sum()
        l = l_new / l_new.sum()
        if abs(lam_new - lam) <= EIG_RTOL * abs(lam_new) and it > 0:
            lam = float(l @ m @ r / (l @ r))
            break
        lam = lam_new
    else:
        raise NoConvergence("power iteration did not converge; is the matrix primitive?")
    if lam <= 0 or np.any(r <= 0) or np.any(l <= 0):
        raise NoConvergence("Perron data not positive")
    l = l / (l @ r)
    return float(np.log(lam)) + tm.log_scale, r, l


def classical_pressure(tm):
    """``log`` of the Perron root of ``tm``."""
    return perron(tm)[0]


def gibbs_measure(tm):
    """Equilibrium (Gibbs-Markov) measure of the potential behind ``tm``."""
    log_lam, r, l = perron(tm)
    m = np.asarray(tm.entries, dtype=float)
    lam = np.exp(log_lam - tm.log_scale)
    p = m * r[None, :] / (lam * r[:, None])
    p /= p.sum(axis=1, keepdims=True)
    pi = l * r
    pi /= pi.sum()
    p.setflags(write=False)
    pi.setflags(write=False)
    return GibbsMarkovMeasure(p, pi, log_lam, tm.system)


def markov_measure(sys, stochastic):
    """Stationary Markov measure for an arbitrary stochastic matrix on ``sys``.

    Used to probe variational inequalities against measures that are not
    equilibrium states.  The chain should be irreducible on its support.
    """
    p = np.asarray(stochastic, dtype=float)
    if np.any((p > 0) & (sys.transition == 0)):
        raise ValueError("stochastic matrix charges forbidden transitions")
    p = p / p.sum(axis=1, keepdims=True)
    w, v = np.linalg.eig(p.T)
    k = int(np.argmin(np.abs(w - 1)))
    pi = np.abs(np.real(v[:, k]))
    pi /= pi.sum()
    return GibbsMarkovMeasure(p, pi, float("nan"), sys)


def measure_entropy(mu):
    """Entropy rate ``-sum_i pi_i sum_j P_ij log P_ij`` (with 0 log 0 = 0)."""
    p = mu.stochastic
    with np.errstate(divide="ignore", invalid="ignore"):
        terms = np.where(p > 0, p * np.log(np.where(p > 0, p, 1.0)), 0.0)
    return float(-(mu.stationary @ terms.sum(axis=1)))


def measure_integral(mu, fam):
    """``(int phi_1 dmu, ..., int phi_d dmu)`` computed exactly from the chain."""
    if isinstance(fam, Potential):
        fam = PotentialFamily([fam])
    rec, values = fam.on_blocks()
    if rec != mu.system or values.shape[0] != len(mu.stationary):
        raise DepthMismatch(
            f"measure lives on {len(mu.stationary)} states, family needs the depth-{fam.depth} presentation"
        )
    return mu.stationary @ values


def family_transfer_matrix(fam, q):
    """Transfer matrix of ``<q, Phi>`` on the family's block presentation."""
    rec, values = fam.on_blocks()
    return transfer_matrix(rec, values @ np.asarray(q, dtype=float).reshape(-1))


def family_pressure(fam, q):
    """``P(<q, Phi>)``."""
    return classical_pressure(family_transfer_matrix(fam, q))


def family_gibbs(fam, q):
    return gibbs_measure(family_transfer_matrix(fam, q))


def pressure_gradient(sys, fam, q):
    """Gradient of ``q -> P(<q, Phi>)``, i.e. ``int Phi dmu_q`` for the Gibbs measure ``mu_q``."""
    if fam.system != sys:
        raise ValueError("family lives on a different system")
    return measure_integral(family_gibbs(fam, q), fam)
