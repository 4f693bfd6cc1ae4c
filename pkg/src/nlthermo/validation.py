"""Input coercion shared by the estimators and the CLI."""

import numpy as np

from .fexpr import FExpr, PRESETS, parse, preset
from .potentials import Potential, PotentialFamily
from .sft import SymbolicSystem


def check_system(system):
    """Return a :class:`SymbolicSystem` from a system or a 0/1 matrix."""
    if isinstance(system, SymbolicSystem):
        return system
    return SymbolicSystem(np.asarray(system))


def check_family(potentials, system):
    """Coerce ``potentials`` into a :class:`PotentialFamily` on ``system``.

    Accepts a family, a single potential, a list of potentials, or an array
    of depth-1 values of shape ``(d, m)`` (a 1-D array means ``d = 1``).
    """
    if isinstance(potentials, PotentialFamily):
        fam = potentials
    elif isinstance(potentials, Potential):
        fam = PotentialFamily([potentials])
    elif isinstance(potentials, (list, tuple)) and potentials and all(
        isinstance(p, Potential) for p in potentials
    ):
        fam = PotentialFamily(potentials)
    else:
        arr = np.atleast_2d(np.asarray(potentials, dtype=float))
        if arr.shape[1] != system.m:
            raise ValueError(f"depth-1 value arrays need {system.m} columns, got shape {arr.shape}")
        fam = PotentialFamily([Potential(system, 1, row) for row in arr])
    if fam.system != system:
        raise ValueError("potentials are defined on a different system")
    return fam


def check_points(z, d):
    """2-D float array of points in ``R^d``; a 1-D input is read as ``d == 1`` samples or one point."""
    arr = np.asarray(z, dtype=float)
    if arr.ndim == 0:
        arr = arr.reshape(1, 1)
    elif arr.ndim == 1:
        arr = arr.reshape(-1, 1) if d == 1 else arr.reshape(1, -1)
    if arr.ndim != 2 or arr.shape[1] != d:
        raise ValueError(f"expected points of dimension {d}, got shape {np.shape(z)}")
    if not np.all(np.isfinite(arr)):
        raise ValueError("points must be finite")
    return arr


def check_expression(f, d, params=None):
    """``(FExpr, params)`` from an expression, its source text, or a preset name."""
    params = dict(params or {})
    if isinstance(f, FExpr):
        expr = f
    elif isinstance(f, str) and (f in PRESETS or f in ("potts", "linear")):
        expr, defaults = preset(f, d)
        params = {**defaults, **params}
    elif isinstance(f, str):
        expr = parse(f, d)
    else:
        raise TypeError(f"cannot interpret {f!r} as an expression")
    if expr.d != d:
        raise ValueError(f"expression is {expr.d}-dimensional, potentials are {d}-dimensional")
    return expr, params
