"""Nonlinear pressure: direct word-sum estimates, the variational value,
maximisers of ``E = h + F`` and the equilibrium measures ``nu_z``.

Everything is reported in the chosen logarithm base ``b``: the direct
estimate is ``(1/n) log_b sum_w b^(n F(S_n Phi(w)/n))`` and the variational
side maximises ``E(z) = h(z)/ln b + F(z)``.  The reserved ``h`` inside an
expression is bound to the entropy in the same base.
"""

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import minimize

from .exceptions import BoundaryUnsupported, CapExceeded, OutsideRotationSet
from .fexpr import FEvalContext, numeric_hessian
from .pressure import family_gibbs, family_pressure
from .spectrum import HULL_TOL, INTERIOR_MARGIN, SpectrumTable, entropy_at, rotation_set
from .sft import word_count

DEFAULT_WORD_CAP = 2**24
DELTA_E = 1e-6
DELTA_Z = 1e-4
Z_TOL = 1e-8
MAX_POLISHED = 24


def word_cap():
    return int(os.environ.get("NLP_CAP_WORDS", DEFAULT_WORD_CAP))


def default_resolution(d):
    return 201 if d == 1 else 41


# -- direct estimate -----------------------------------------------------------


@dataclass
class DirectEstimate:
    """The sequence ``value_n`` for ``n = 2 .. n_max`` and the last-step drift."""

    ns: list
    values: list
    log_base: float = math.e

    @property
    def drift(self):
        if len(self.values) < 2:
            return float("nan")
        return abs(self.values[-1] - self.values[-2])

    @property
    def last(self):
        return self.values[-1]

    def as_dict(self):
        return {
            "series": [{"n": n, "value": v} for n, v in zip(self.ns, self.values)],
            "drift": self.drift,
        }


def _successor_table(rec):
    deg = rec.transition.sum(axis=1).astype(np.int64)
    ptr = np.concatenate([[0], np.cumsum(deg)])
    idx = np.concatenate([np.flatnonzero(row) for row in rec.transition]).astype(np.int64)
    return deg, ptr, idx


def _subtree_terms(first, n_max, values, succ, evaluate):
    """Per-``n`` (max, scaled sum) of the exponents for words starting at ``first``."""
    deg, ptr, idx = succ
    states = np.array([first], dtype=np.int64)
    sums = values[states].copy()
    out = []
    for n in range(2, n_max + 1):
        counts = deg[states]
        total = int(counts.sum())
        parents = np.repeat(np.arange(len(states)), counts)
        offsets = np.arange(total) - np.repeat(np.cumsum(counts) - counts, counts)
        children = idx[np.repeat(ptr[states], counts) + offsets]
        states = children
        sums = sums[parents] + values[children]
        expo = n * evaluate(sums / n)
        top = float(expo.max())
        out.append((top, math.fsum(np.exp(expo - top))))
    return out


def direct_estimate(sys, fam, f, n_max, params=None, log_base=math.e, cap=None, threads=1):
    """Finite-``n`` values of the nonlinear pressure straight from its definition.

    Distinct ``n``-cylinders are maximally separated, so the supremum over
    separated sets is the sum over all admissible words of length
    ``n + depth - 1``.  The enumeration is split by first block; each part is
    summed with ``math.fsum`` in log-sum-exp form and the parts are combined
    in a fixed order, so the result does not depend on ``threads``.
    """
    if f.uses_h:
        raise ValueError("the direct estimate cannot evaluate expressions that use h")
    if n_max < 2:
        raise ValueError("n_max must be at least 2")
    cap = word_cap() if cap is None else cap
    count = word_count(sys, n_max + fam.depth - 1)
    if count > cap:
        raise CapExceeded(f"{count} words of length {n_max + fam.depth - 1} exceed the cap of {cap}")
    rec, values = fam.on_blocks()
    scale = math.log(log_base)
    succ = _successor_table(rec)

    def evaluate(avg):
        return f.evaluate(avg, params) * scale

    jobs = range(rec.m)
    run = lambda s: _subtree_terms(s, n_max, values, succ, evaluate)  # noqa: E731
    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            parts = list(pool.map(run, jobs))
    else:
        parts = [run(s) for s in jobs]
    ns = list(range(2, n_max + 1))
    out = []
    for i, n in enumerate(ns):
        tops = [p[i][0] for p in parts]
        top = max(tops)
        total = math.fsum(p[i][1] * math.exp(p[i][0] - top) for p in parts)
        out.append((top + math.log(total)) / (n * scale))
    return DirectEstimate(ns, out, log_base)


# -- variational side ----------------------------------------------------------


@dataclass
class Maximizer:
    z: tuple
    E: float
    interior: bool
    h: float
    q: tuple

    def as_dict(self):
        return {"z": list(self.z), "E": self.E, "interior": self.interior, "h": self.h, "q": list(self.q)}


@dataclass
class EquilibriumReport:
    """Maximisers of ``E`` (the set K(F, Phi)) and their equilibrium measures.

    ``count`` is the number of distinct maximisers, or -1 when a continuum of
    tied grid points was detected; ``tied_locus`` then lists those points.
    """

    variational_value: float
    maximizers: list
    measures: list
    count: int
    tied_locus: list = field(default_factory=list)

    def as_dict(self):
        return {
            "variational_value": self.variational_value,
            "count": self.count,
            "maximizers": [m.as_dict() for m in self.maximizers],
            "measures": [None if mu is None else mu.as_dict() for mu in self.measures],
            "tied_locus": [list(z) for z in self.tied_locus],
        }


class Objective:
    """``E(z) = h(z)/ln b + F(z)`` on a rotation set, backed by a spectrum table."""

    def __init__(self, table, f, params=None, log_base=math.e):
        if f.d != table.family.d:
            raise ValueError(f"F has dimension {f.d} but the family has {table.family.d} components")
        self.table = table
        self.f = f
        self.params = dict(params or {})
        self.scale = math.log(log_base)

    @property
    def rotation(self):
        return self.table.rotation

    def on_grid(self):
        hb = self.table.h / self.scale
        return hb + self.f.evaluate(self.table.z, self.params, hb if self.f.uses_h else None)

    def point(self, z):
        """``(E, SpectrumPoint)`` at ``z``."""
        pt = self.table.at(z)
        hb = pt.h / self.scale
        return hb + self.f(z, self.params, hb if self.f.uses_h else None), pt

    def __call__(self, z):
        return self.point(z)[0]


def _golden(fun, a, b, tol):
    """Maximise a unimodal ``fun`` on ``[a, b]`` by golden-section search."""
    inv = (math.sqrt(5) - 1) / 2
    c, d = b - inv * (b - a), a + inv * (b - a)
    fc, fd = fun(c), fun(d)
    while b - a > tol:
        if fc >= fd:
            b, d, fd = d, c, fc
            c = b - inv * (b - a)
            fc = fun(c)
        else:
            a, c, fc = c, d, fd
            d = a + inv * (b - a)
            fd = fun(d)
    best = max((fun(a), a), (fc, c), (fd, d), (fun(b), b))
    return best[1]


def _grid_neighbours(local, spacing):
    """Index lists of grid neighbours (including diagonals) in local coordinates."""
    keys = {tuple(np.round(u / spacing).astype(int)): i for i, u in enumerate(local)}
    out = []
    for u in local:
        k = np.round(u / spacing).astype(int)
        nbrs = []
        for delta in np.ndindex(*([3] * len(k))):
            step = np.array(delta) - 1
            if np.any(step):
                j = keys.get(tuple(k + step))
                if j is not None:
                    nbrs.append(j)
        out.append(nbrs)
    return out


def _polish(obj, z0, spacing):
    rot = obj.rotation
    u0 = rot.to_local(z0)
    if rot.rank == 1:
        lo = rot._local_vertices[0, 0]
        hi = rot._local_vertices[1, 0]
        a, b = max(lo, u0[0] - spacing[0]), min(hi, u0[0] + spacing[0])
        u = _golden(lambda t: obj(rot.from_local([t])), a, b, Z_TOL)
        return rot.from_local([u])

    def neg(u):
        z = rot.from_local(u)
        if not rot.contains(z, tol=0.0):
            return np.inf
        return -obj(z)

    simplex = [u0] + [u0 + 0.5 * spacing[i] * np.eye(rot.rank)[i] for i in range(rot.rank)]
    simplex = [s if rot.contains(rot.from_local(s), tol=0.0) else u0 - (s - u0) for s in simplex]
    res = minimize(
        neg,
        u0,
        method="Nelder-Mead",
        options={"initial_simplex": np.array(simplex), "xatol": Z_TOL, "fatol": 1e-14, "maxiter": 4000},
    )
    u = res.x if np.isfinite(res.fun) and -res.fun >= -neg(u0) else u0
    return rot.from_local(u)


def _search(obj):
    """Grid scan, local polishing and clustering; returns an :class:`EquilibriumReport`."""
    rot = obj.rotation
    grid_e = obj.on_grid()
    zs = obj.table.z
    if rot.rank == 0:
        e, pt = obj.point(zs[0])
        m = Maximizer(tuple(zs[0]), float(e), False, pt.h / obj.scale, pt.q)
        return EquilibriumReport(float(e), [m], [None], 1)
    local = rot.to_local(zs)
    lo = rot._local_vertices.min(axis=0)
    hi = rot._local_vertices.max(axis=0)
    spacing = (hi - lo) / (obj.table.resolution - 1)
    best_grid = float(grid_e.max())
    tied = np.flatnonzero(grid_e >= best_grid - DELTA_E)
    if len(tied) >= max(2, obj.table.resolution / 4):
        i = tied[0]
        m = Maximizer(tuple(zs[i]), best_grid, bool(rot.is_interior(zs[i])), float(obj.table.h[i]) / obj.scale,
                      obj.table.points[i].q)
        return EquilibriumReport(best_grid, [m], [None], -1, [tuple(zs[i]) for i in tied])
    nbrs = _grid_neighbours(local, spacing)
    peaks = [i for i in range(len(zs)) if all(grid_e[i] >= grid_e[j] for j in nbrs[i])]
    peaks.sort(key=lambda i: -grid_e[i])
    peaks = peaks[:MAX_POLISHED]
    polished = []
    for i in peaks:
        z = _polish(obj, zs[i], spacing)
        e, pt = obj.point(z)
        if e < grid_e[i]:
            z, (e, pt) = zs[i], obj.point(zs[i])
        polished.append((float(e), z, pt))
    top = max(p[0] for p in polished)
    clusters = []
    for e, z, pt in sorted(polished, key=lambda p: -p[0]):
        if e < top - DELTA_E:
            continue
        if any(np.linalg.norm(z - c[1]) <= DELTA_Z for c in clusters):
            continue
        clusters.append((e, z, pt))
    clusters.sort(key=lambda c: tuple(c[1]))
    maximizers = [
        Maximizer(tuple(float(x) for x in z), e, bool(rot.is_interior(z)), pt.h / obj.scale, pt.q)
        for e, z, pt in clusters
    ]
    return EquilibriumReport(top, maximizers, [None] * len(maximizers), len(maximizers))


def _objective(sys, fam, f, resolution, params, log_base, table):
    if table is None:
        table = SpectrumTable(sys, fam, resolution or default_resolution(fam.d))
    return Objective(table, f, params, log_base)


def variational_value(sys, fam, f, resolution=None, params=None, log_base=math.e, table=None):
    """``sup_z h(z) + F(z)`` over the rotation set (grid scan plus local refinement)."""
    return _search(_objective(sys, fam, f, resolution, params, log_base, table)).variational_value


def find_maximizers(sys, fam, f, resolution=None, params=None, log_base=math.e, table=None):
    """All global maximisers of ``E`` with an equilibrium measure for each interior one.

    Candidates within ``DELTA_E`` of the best value are merged when closer
    than ``DELTA_Z``.
    """
    obj = _objective(sys, fam, f, resolution, params, log_base, table)
    report = _search(obj)
    if report.count > 0:
        report.measures = [
            equilibrium_measure(sys, fam, m.z, table=obj.table)[1] if m.interior else None
            for m in report.maximizers
        ]
    return report


# -- equilibrium measures ------------------------------------------------------


@dataclass
class PsiPotential:
    """``<q, Phi> - <q, z> - h_z``: the zero-pressure potential whose Gibbs measure is ``nu_z``."""

    q: tuple
    z: tuple
    h_z: float
    potential: object

    def pressure(self):
        from .potentials import PotentialFamily

        return family_pressure(PotentialFamily([self.potential]), [1.0])


def equilibrium_measure(sys, fam, z, table=None, rotation=None):
    """``(psi_z, nu_z)`` for an interior point ``z`` of the rotation set."""
    rot = table.rotation if table is not None else rotation if rotation is not None else rotation_set(sys, fam)
    z = np.asarray(z, dtype=float).reshape(-1)
    margin = rot.margin(z)
    if margin < -HULL_TOL:
        raise OutsideRotationSet(f"z={z.tolist()} lies outside the rotation set")
    if margin <= INTERIOR_MARGIN:
        raise BoundaryUnsupported(f"z={z.tolist()} is on the boundary; no equilibrium measure is constructed there")
    pt = table.at(z) if table is not None else entropy_at(sys, fam, z, rotation=rot)
    q = np.asarray(pt.q)
    mu = family_gibbs(fam, q)
    psi = PsiPotential(tuple(pt.q), tuple(z.tolist()), pt.h, fam.combine(q, shift=-(q @ z) - pt.h))
    return psi, mu


# -- uniqueness diagnostics ----------------------------------------------------


def uniqueness_probe(sys, fam, f, params=None, resolution=None, log_base=math.e, table=None, tol=1e-6):
    """Numerical evidence for uniqueness of the equilibrium measure.

    Checks (a) concavity of ``F`` from Hessian eigenvalues at interior grid
    points, (b) whether the interior maximum of ``E`` beats every
    boundary-flagged grid value, and (c) predicts uniqueness when both hold.
    Advisory only.
    """
    obj = _objective(sys, fam, f, resolution, params, log_base, table)
    t = obj.table
    interior = np.flatnonzero(~t.boundary)
    inner = [i for i in interior if t.rotation.margin(t.z[i]) > 1e-2] or list(interior)
    h_func = (lambda z: t.at(z).h / obj.scale) if f.uses_h else None
    eig_max = -np.inf
    for i in inner:
        ctx = FEvalContext(tuple(t.z[i]), obj.params, t.h[i] / obj.scale)
        hess = numeric_hessian(f, ctx, h_func=h_func)
        eig_max = max(eig_max, float(np.linalg.eigvalsh(hess).max()))
    grid_e = obj.on_grid()
    int_max = float(grid_e[interior].max()) if len(interior) else -np.inf
    bnd = np.flatnonzero(t.boundary)
    bnd_max = float(grid_e[bnd].max()) if len(bnd) else -np.inf
    concave = eig_max <= tol
    dominates = int_max > bnd_max
    return {
        "concave": bool(concave),
        "strictly_concave": bool(eig_max < -tol),
        "max_hessian_eigenvalue": eig_max,
        "interior_max": int_max,
        "boundary_max": bnd_max,
        "interior_dominates": bool(dominates),
        "predicts_unique": bool(concave and dominates),
    }
