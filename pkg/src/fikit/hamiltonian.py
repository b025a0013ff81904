"""Hamiltonian/Lagrangian pairs on the half-line and the 1-D Legendre transform."""
from dataclasses import dataclass, field

import numpy as np

from ._validation import check_conjugate
from .exceptions import DomainTruncationError, InvalidArgumentError

CONVEXITY_ATOL = 1e-12
ZERO_ATOL = 1e-12
TIE_RTOL = 1e-13


class ConvexOneDim:
    """Convex, nondecreasing function on ``[0, inf)`` vanishing at 0."""

    def __call__(self, v):
        raise NotImplementedError

    def derivative(self, v):
        raise NotImplementedError


@dataclass(frozen=True)
class PowerForm(ConvexOneDim):
    """``v**r / r`` for an exponent ``r > 1``."""

    exponent: float

    def __post_init__(self):
        if not self.exponent > 1:
            raise InvalidArgumentError(f"power exponent must be > 1, got {self.exponent!r}")

    def __call__(self, v):
        v = np.asarray(v, dtype=float)
        return v ** self.exponent / self.exponent

    def derivative(self, v):
        return np.asarray(v, dtype=float) ** (self.exponent - 1)

    def to_config(self):
        return {"power": float(self.exponent)}


@dataclass(frozen=True, eq=False)
class Tabulated(ConvexOneDim):
    """Piecewise-linear interpolant of convex samples on ``[0, v_max]``.

    Beyond ``v_max`` the last segment is extended linearly, which keeps the
    function convex but is only as superlinear as the declared witness.

    Parameters
    ----------
    grid : array_like
        Strictly increasing sample points starting at 0.
    values : array_like
        Samples; must vanish at 0 and be convex and nondecreasing.
    slope_bound : float
        Superlinearity witness: ``values[-1] / grid[-1]`` must exceed it.
    """

    grid: np.ndarray
    values: np.ndarray
    slope_bound: float = 0.0

    def __post_init__(self):
        v = np.array(self.grid, dtype=float)
        f = np.array(self.values, dtype=float)
        if v.ndim != 1 or v.shape != f.shape or v.size < 3:
            raise InvalidArgumentError("need matching 1-D grid/values with >= 3 samples")
        if v[0] != 0 or np.any(np.diff(v) <= 0):
            raise InvalidArgumentError("grid must start at 0 and increase strictly")
        if abs(f[0]) > ZERO_ATOL:
            raise InvalidArgumentError(f"value at 0 must vanish, got {f[0]!r}")
        slopes = np.diff(f) / np.diff(v)
        if slopes[0] < -CONVEXITY_ATOL:
            raise InvalidArgumentError("tabulated function must be nondecreasing")
        if np.any(np.diff(slopes) < -CONVEXITY_ATOL):
            raise InvalidArgumentError("tabulated samples are not convex")
        if not f[-1] / v[-1] > self.slope_bound:
            raise InvalidArgumentError(
                f"superlinearity witness failed: value(v_max)/v_max = {f[-1] / v[-1]!r} "
                f"does not exceed {self.slope_bound!r}")
        v.setflags(write=False)
        f.setflags(write=False)
        object.__setattr__(self, "grid", v)
        object.__setattr__(self, "values", f)

    @property
    def v_max(self):
        return float(self.grid[-1])

    @property
    def last_slope(self):
        return float((self.values[-1] - self.values[-2]) / (self.grid[-1] - self.grid[-2]))

    def __call__(self, v):
        v = np.asarray(v, dtype=float)
        inside = np.interp(v, self.grid, self.values)
        beyond = self.values[-1] + self.last_slope * (v - self.v_max)
        return np.where(v > self.v_max, beyond, inside)

    def derivative(self, v):
        v = np.asarray(v, dtype=float)
        slopes = np.diff(self.values) / np.diff(self.grid)
        k = np.clip(np.searchsorted(self.grid, v, side="right") - 1, 0, slopes.size - 1)
        return slopes[k]


def second_differences(f):
    """Differences of consecutive slopes of a tabulated function."""
    slopes = np.diff(f.values) / np.diff(f.grid)
    return np.diff(slopes)


def legendre(f, grid, u_grid=None):
    """Numeric Legendre transform ``g(u) = max_v (u v - f(v))`` over ``grid``.

    Parameters
    ----------
    f : ConvexOneDim
    grid : array_like
        Sample points ``0 = v_0 < ... < v_max`` over which the supremum is
        taken.
    u_grid : array_like, optional
        Slopes at which ``g`` is tabulated. Defaults to ``n`` evenly spaced
        slopes up to the last chord slope of ``f`` on ``grid``, the largest
        range for which every maximizer stays inside the grid.

    Returns
    -------
    Tabulated

    Raises
    ------
    DomainTruncationError
        If the maximizer for some slope is ``v_max``.
    """
    v = np.asarray(grid, dtype=float)
    if v.ndim != 1 or v.size < 3 or v[0] != 0 or np.any(np.diff(v) <= 0):
        raise InvalidArgumentError("grid must be increasing, start at 0 and have >= 3 points")
    fv = np.asarray(f(v), dtype=float)
    if u_grid is None:
        last = (fv[-1] - fv[-2]) / (v[-1] - v[-2])
        u = np.linspace(0.0, last, v.size)
    else:
        u = np.asarray(u_grid, dtype=float)
    objective = u[:, None] * v[None, :] - fv[None, :]
    best = objective.max(axis=1)
    # ties within rounding go to the smallest v, so the top chord slope
    # (maximized at both ends of the last segment) is not read as truncation
    slack = TIE_RTOL * np.maximum(1.0, np.abs(u[:, None] * v[None, :]) + np.abs(fv[None, :]))
    k = np.argmax(objective >= best[:, None] - slack, axis=1)
    hit = np.flatnonzero(k == v.size - 1)
    if hit.size:
        raise DomainTruncationError(float(u[hit[0]]))
    g = best
    return Tabulated(u, g)


@dataclass(frozen=True)
class HamiltonianPair:
    """A Hamiltonian ``H`` and its Lagrangian ``L`` linked by Legendre duality."""

    H: ConvexOneDim
    L: ConvexOneDim
    provenance: str = "closed-form dual"
    exponents: tuple = field(default=None)

    @property
    def q(self):
        return None if self.exponents is None else self.exponents[0]

    @property
    def p(self):
        return None if self.exponents is None else self.exponents[1]

    def young_gap(self, w, v):
        """``H(w) + L(v) - w v`` on the cross grid ``w x v``."""
        w = np.asarray(w, dtype=float)
        v = np.asarray(v, dtype=float)
        return self.H(w)[:, None] + self.L(v)[None, :] - w[:, None] * v[None, :]


def power_pair(q):
    """``H(v) = v**q / q`` with ``L(u) = u**p / p``, ``1/p + 1/q = 1``."""
    p = check_conjugate(q)
    return HamiltonianPair(PowerForm(float(q)), PowerForm(p), "closed-form dual",
                           exponents=(float(q), p))


def numeric_pair(H, grid, u_grid=None):
    """Pair a tabulated or closed-form ``H`` with its numeric Legendre dual."""
    return HamiltonianPair(H, legendre(H, grid, u_grid), "numeric legendre")
