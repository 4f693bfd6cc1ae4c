"""scikit-learn style front ends.

``fit`` takes the dynamical data (a system and its potentials) and stores
everything expensive; queries at new points go through ``transform`` or
``score_samples``.  Hyper-parameters follow the ``get_params``/``set_params``
protocol, so the estimators clone and grid-search like any other.
"""

import math

import numpy as np
from sklearn.base import BaseEstimator
from sklearn.utils.validation import check_is_fitted

from .nonlinear import Objective, default_resolution, direct_estimate, find_maximizers, uniqueness_probe
from .spectrum import SpectrumTable
from .validation import check_expression, check_family, check_points, check_system


class EntropySpectrum(BaseEstimator):
    """Entropy spectrum ``h`` of a potential family.

    Parameters
    ----------
    resolution : int, optional
        Grid points per axis of the rotation set (201 for d=1, 41 otherwise).

    Attributes
    ----------
    rotation_set_ : RotationSet
    grid_ : list of SpectrumPoint
    topological_entropy_ : float
    n_features_in_ : int
        Number of potentials ``d``.
    """

    def __init__(self, resolution=None):
        self.resolution = resolution

    def fit(self, system, potentials):
        sys = check_system(system)
        fam = check_family(potentials, sys)
        self.system_ = sys
        self.family_ = fam
        self.table_ = SpectrumTable(sys, fam, self.resolution or default_resolution(fam.d))
        self.rotation_set_ = self.table_.rotation
        self.grid_ = self.table_.points
        self.topological_entropy_ = sys.topological_entropy()
        self.n_features_in_ = fam.d
        return self

    def _points(self, z):
        check_is_fitted(self, "table_")
        return [self.table_.at(row) for row in check_points(z, self.n_features_in_)]

    def transform(self, z):
        """``h`` at each row of ``z``."""
        return np.array([p.h for p in self._points(z)])

    def dual(self, z):
        """Dual parameters ``q(z)``, shape (n_points, d)."""
        return np.array([p.q for p in self._points(z)])


class NonlinearPressure(BaseEstimator):
    """Nonlinear pressure of ``(F, Phi)`` and its equilibrium measures.

    Parameters
    ----------
    f : str or FExpr
        Expression source, preset name, or parsed expression.
    params : dict, optional
        Values for the expression's free parameters (override preset defaults).
    resolution : int, optional
    log_base : float
        Base of the logarithm in which entropies and pressures are reported.
    n_max : int, optional
        When set, ``fit`` also runs the direct finite-``n`` estimate.

    Attributes
    ----------
    pressure_ : float
        Variational value ``sup_z h(z) + F(z)``.
    report_ : EquilibriumReport
    maximizers_ : ndarray of shape (count, d)
    direct_ : DirectEstimate or None
    """

    def __init__(self, f="linear", params=None, resolution=None, log_base=math.e, n_max=None):
        self.f = f
        self.params = params
        self.resolution = resolution
        self.log_base = log_base
        self.n_max = n_max

    def fit(self, system, potentials, spectrum=None):
        """Fit; pass an already fitted :class:`EntropySpectrum` to reuse its grid."""
        sys = check_system(system)
        fam = check_family(potentials, sys)
        expr, params = check_expression(self.f, fam.d, self.params)
        if spectrum is None:
            spectrum = EntropySpectrum(self.resolution).fit(sys, fam)
        self.spectrum_ = spectrum
        self.expr_ = expr
        self.params_ = params
        self.report_ = find_maximizers(
            sys, fam, expr, params=params, log_base=self.log_base, table=spectrum.table_
        )
        self.pressure_ = self.report_.variational_value
        self.maximizers_ = np.array([m.z for m in self.report_.maximizers])
        self.equilibrium_measures_ = self.report_.measures
        self.direct_ = (
            direct_estimate(sys, fam, expr, self.n_max, params=params, log_base=self.log_base)
            if self.n_max
            else None
        )
        self.n_features_in_ = fam.d
        return self

    def score_samples(self, z):
        """``E(z) = h(z) + F(z)`` at each row of ``z``."""
        check_is_fitted(self, "report_")
        obj = Objective(self.spectrum_.table_, self.expr_, self.params_, self.log_base)
        return np.array([obj(row) for row in check_points(z, self.n_features_in_)])

    def uniqueness(self):
        check_is_fitted(self, "report_")
        t = self.spectrum_.table_
        return uniqueness_probe(t.system, t.family, self.expr_, self.params_, log_base=self.log_base, table=t)
