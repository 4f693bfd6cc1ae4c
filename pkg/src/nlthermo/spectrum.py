"""Rotation sets and the entropy spectrum.

The entropy spectrum is obtained from the dual problem

    h(z) = min_q  P(<q, Phi>) - <q, z>,

a smooth convex minimisation whose gradient is ``int Phi dmu_q - z`` and
whose Hessian is the asymptotic covariance matrix of ``Phi`` under the
Gibbs measure ``mu_q``.  The minimiser ``q(z)`` is the dual parameter.
"""

from dataclasses import dataclass

import numpy as np
from scipy.spatial import ConvexHull

from .exceptions import NoConvergence, OutsideRotationSet
from .pressure import family_gibbs, measure_integral
from .sft import simple_cycles

Q_MAX = 50.0
GRAD_TOL = 1e-10
INTERIOR_MARGIN = 1e-6
HULL_TOL = 1e-9
MAX_NEWTON = 500


class RotationSet:
    """Convex hull of the cycle averages of a potential family.

    The hull may be lower dimensional (e.g. when the potentials satisfy an
    affine relation); it is then handled inside its affine hull, described by
    ``origin + basis @ u``, and "interior" means relative interior.
    """

    def __init__(self, points, cycles=None):
        pts = np.atleast_2d(np.asarray(points, dtype=float))
        self.d = pts.shape[1]
        self.cycle_points = pts
        self.cycles = cycles
        centre = pts.mean(axis=0)
        _, sv, vt = np.linalg.svd(pts - centre)
        rank = int(np.sum(sv > 1e-9 * max(1.0, sv[0] if len(sv) else 1.0)))
        if rank == self.d:
            self.origin = np.zeros(self.d)
            self.basis = np.eye(self.d)
        else:
            self.origin = centre
            self.basis = vt[:rank].T
        self.rank = rank
        local = self.to_local(pts)
        if rank == 0:
            self._local_vertices = local[:1]
            self.equations = np.zeros((0, 1))
        elif rank == 1:
            lo, hi = local[:, 0].min(), local[:, 0].max()
            self._local_vertices = np.array([[lo], [hi]])
            self.equations = np.array([[-1.0, lo], [1.0, -hi]])
        else:
            hull = ConvexHull(local)
            self._local_vertices = local[hull.vertices]
            self.equations = hull.equations
        self.vertices = self.from_local(self._local_vertices)
        if self.d == 1:
            self.vertices = np.sort(self.vertices, axis=0)

    @property
    def interval(self):
        """``(A, B)`` for a one-dimensional family."""
        if self.d != 1:
            raise ValueError("interval is only defined for d = 1")
        return float(self.vertices[0, 0]), float(self.vertices[-1, 0])

    def to_local(self, z):
        return (np.asarray(z, dtype=float) - self.origin) @ self.basis

    def from_local(self, u):
        return self.origin + np.asarray(u, dtype=float) @ self.basis.T

    def off_plane(self, z):
        z = np.asarray(z, dtype=float)
        return float(np.linalg.norm(z - self.from_local(self.to_local(z))))

    def margin(self, z):
        """Distance from ``z`` to the relative boundary: positive inside, negative outside."""
        off = self.off_plane(z)
        if self.rank == 0:
            return -off
        u = self.to_local(z)
        signed = self.equations[:, :-1] @ u + self.equations[:, -1]
        inside = -float(signed.max())
        return inside if off <= HULL_TOL else min(inside, -off)

    def contains(self, z, tol=HULL_TOL):
        return self.margin(z) >= -tol

    def is_interior(self, z, margin=INTERIOR_MARGIN):
        return self.margin(z) > margin

    def grid(self, resolution):
        """Regular grid over the set, ``resolution`` points per local axis."""
        if resolution < 2:
            raise ValueError("resolution must be at least 2")
        if self.rank == 0:
            return self.vertices[:1].copy()
        lo = self._local_vertices.min(axis=0)
        hi = self._local_vertices.max(axis=0)
        axes = [np.linspace(lo[i], hi[i], resolution) for i in range(self.rank)]
        mesh = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1).reshape(-1, self.rank)
        signed = mesh @ self.equations[:, :-1].T + self.equations[:, -1]
        keep = np.all(signed <= 1e-12, axis=1)
        return self.from_local(mesh[keep])

    def as_dict(self):
        out = {"dimension": self.d, "affine_dimension": self.rank, "vertices": self.vertices.tolist()}
        if self.d == 1:
            out["interval"] = list(self.interval)
        return out


def rotation_set(sys, fam, cap=None):
    """``L(Phi)`` as the convex hull of averages of ``Phi`` over simple cycles."""
    cycles = simple_cycles(sys, fam.depth, cap=cap)
    _, values = fam.on_blocks()
    pts = np.array([values[list(c)].mean(axis=0) for c in cycles])
    return RotationSet(pts, cycles)


@dataclass(frozen=True)
class SpectrumPoint:
    z: tuple
    h: float
    q: tuple
    boundary_flag: bool
    iterations: int = 0

    def as_row(self):
        return [*self.z, self.h, *self.q, self.boundary_flag]


def _dual_state(fam, q, z):
    mu = family_gibbs(fam, q)
    grad = measure_integral(mu, fam) - z
    return mu.log_pressure - q @ z, grad, mu


def asymptotic_covariance(mu, values):
    """Asymptotic covariance of Birkhoff sums of state functions under a Markov measure.

    With ``Z = (I - P + 1 pi)^(-1)`` and centred values ``f``, this is
    ``f.T diag(pi) (2Z - I) f``, symmetrised.
    """
    p, pi = mu.stochastic, mu.stationary
    n = len(pi)
    fbar = values - pi @ values
    z = np.linalg.inv(np.eye(n) - p + np.outer(np.ones(n), pi))
    cov = fbar.T @ (pi[:, None] * ((2 * z - np.eye(n)) @ fbar))
    return (cov + cov.T) / 2


def entropy_at(sys, fam, z, q0=None, rotation=None, q_max=Q_MAX, tol=GRAD_TOL):
    """Entropy spectrum ``h(z)`` and dual parameter ``q(z)``.

    Damped Newton iteration on the dual objective with Armijo backtracking,
    falling back to the steepest-descent direction when the Newton direction
    is not a descent direction.  Stops when the gradient norm drops below
    ``tol``; if instead ``|q|`` reaches ``q_max`` (``z`` approaching the
    boundary) the best value found is returned with ``boundary_flag`` set.
    """
    z = np.asarray(z, dtype=float).reshape(-1)
    if len(z) != fam.d:
        raise ValueError(f"expected a {fam.d}-vector, got {len(z)} entries")
    rot = rotation if rotation is not None else rotation_set(sys, fam)
    margin = rot.margin(z)
    if margin < -HULL_TOL:
        raise OutsideRotationSet(f"z={z.tolist()} lies outside the rotation set (distance {-margin:.3g})")
    _, values = fam.on_blocks()
    q = np.zeros(fam.d) if q0 is None else np.asarray(q0, dtype=float).copy()
    try:
        val, grad, mu = _dual_state(fam, q, z)
    except NoConvergence:
        q = np.zeros(fam.d)
        val, grad, mu = _dual_state(fam, q, z)
    converged = False
    it = 0
    for it in range(1, MAX_NEWTON + 1):
        gnorm = np.linalg.norm(grad)
        if gnorm <= tol:
            converged = True
            break
        if np.linalg.norm(q) >= q_max:
            break
        hess = asymptotic_covariance(mu, values)
        direction = -np.linalg.lstsq(hess + 1e-14 * np.eye(fam.d), grad, rcond=1e-12)[0]
        if not np.all(np.isfinite(direction)) or grad @ direction >= 0:
            direction = -grad
        step = 1.0
        accepted = False
        while step > 1e-14:
            trial = q + step * direction
            try:
                tval, tgrad, tmu = _dual_state(fam, trial, z)
            except NoConvergence:
                step /= 2
                continue
            armijo = tval <= val + 1e-4 * step * (grad @ direction)
            # near the optimum rounding hides the decrease; a smaller gradient is progress
            if armijo or (gnorm < 1e-5 and np.linalg.norm(tgrad) < gnorm):
                accepted = True
                break
            step /= 2
        if not accepted:
            break
        q, val, grad, mu = trial, tval, tgrad, tmu
    h = max(float(val), 0.0)
    boundary = (margin <= INTERIOR_MARGIN) or not converged
    return SpectrumPoint(tuple(float(x) for x in z), h, tuple(float(x) for x in q), bool(boundary), it)


def spectrum_grid(sys, fam, resolution, rotation=None):
    """``h`` on a regular grid over ``L(Phi)``, warm-starting ``q`` along the grid."""
    rot = rotation if rotation is not None else rotation_set(sys, fam)
    points = []
    q_prev = None
    for z in rot.grid(resolution):
        pt = entropy_at(sys, fam, z, q0=q_prev, rotation=rot)
        points.append(pt)
        q_prev = None if pt.boundary_flag else pt.q
    return points


class SpectrumTable:
    """A spectrum grid kept around for repeated queries of ``h``.

    ``at(z)`` solves the dual problem warm-started from the nearest interior
    grid point, which is what the maximiser searches lean on.
    """

    def __init__(self, sys, fam, resolution, rotation=None):
        self.system = sys
        self.family = fam
        self.resolution = resolution
        self.rotation = rotation if rotation is not None else rotation_set(sys, fam)
        self.points = spectrum_grid(sys, fam, resolution, rotation=self.rotation)
        self.z = np.array([p.z for p in self.points])
        self.h = np.array([p.h for p in self.points])
        self.boundary = np.array([p.boundary_flag for p in self.points])
        self._interior = np.flatnonzero(~self.boundary)

    def nearest_q(self, z):
        if len(self._interior) == 0:
            return None
        dist = np.linalg.norm(self.z[self._interior] - np.asarray(z, dtype=float), axis=1)
        return self.points[self._interior[int(np.argmin(dist))]].q

    def at(self, z):
        return entropy_at(self.system, self.family, z, q0=self.nearest_q(z), rotation=self.rotation)
