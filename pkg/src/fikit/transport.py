"""Relative entropy, exact p-Wasserstein transport and 1-D displacement interpolation.

Transport costs carry the factor ``1/p``: the value of a plan is
``sum pi(x, y) d(x, y)**p / p`` and ``W_p = value**(1/p)``. Most optimal
transport references omit this factor; every Talagrand-type check in this
package uses the convention consistently.
"""
from dataclasses import dataclass
import os

import numpy as np
from scipy.special import xlogy

from ._validation import check_field, check_measure, check_positive
from .exceptions import (
    AbsoluteContinuityError,
    CertificationError,
    InvalidArgumentError,
    UndefinedEntropyError,
    UnsupportedError,
)
from .report import CheckReport, digest

for _backend in ("PYTORCH", "JAX", "TENSORFLOW", "CUPY"):
    os.environ.setdefault(f"POT_BACKEND_DISABLE_{_backend}", "1")
import ot  # noqa: E402

GAP_TOL = 1e-8
MARGINAL_TOL = 1e-10
FEASIBILITY_TOL = 1e-10
VARIATIONAL_TOL = 1e-10
PSI_FLOOR = -700.0


@dataclass(frozen=True, eq=False)
class TransportPlan:
    """Optimal coupling with its dual certificate.

    ``plan[i, j]`` is the mass sent from source point ``i`` to target point
    ``j``. The potentials ``(f, g)`` satisfy ``g[j] <= f[i] + d(i, j)**p / p``
    and the dual value is ``sum nu g - sum mu f``.
    """

    plan: np.ndarray
    value: float
    f: np.ndarray
    g: np.ndarray
    p: float
    dual_value: float
    source: np.ndarray
    target: np.ndarray

    @property
    def potentials(self):
        return self.f, self.g

    @property
    def distance(self):
        """``W_p`` itself, i.e. ``value**(1/p)``."""
        return max(self.value, 0.0) ** (1.0 / self.p)

    @property
    def gap(self):
        return abs(self.value - self.dual_value)

    def dual_violation(self, cost):
        return float(np.max(self.g[None, :] - self.f[:, None] - cost))

    def marginal_errors(self):
        return (float(np.max(np.abs(self.plan.sum(axis=1) - self.source))),
                float(np.max(np.abs(self.plan.sum(axis=0) - self.target))))


def relative_density(nu, mu):
    """``d nu / d mu`` with ``0/0 = 0``; raises where ``nu > 0 = mu``."""
    nu = np.asarray(nu, dtype=float)
    mu = np.asarray(mu, dtype=float)
    bad = np.flatnonzero((mu == 0) & (nu > 0))
    if bad.size:
        raise AbsoluteContinuityError(bad.tolist())
    return np.divide(nu, mu, out=np.zeros_like(nu), where=mu > 0)


def entropy(mu, h):
    """``Ent_mu(h) = int h log h dmu - int h dmu log int h dmu`` with ``0 log 0 = 0``."""
    mu = check_measure(mu, name="mu")
    h = check_field(h, name="h")
    if h.shape != mu.shape:
        raise InvalidArgumentError("h and mu have different lengths")
    if np.any(h < 0):
        raise InvalidArgumentError("entropy needs a nonnegative function")
    mass = float(mu @ h)
    if mass <= 0:
        raise UndefinedEntropyError("int h dmu = 0; entropy undefined")
    # same value as the two-term form, without cancelling two large terms
    r = h / mass
    return mass * float(mu @ xlogy(r, r))


def relative_entropy(nu, mu):
    """``U_mu(nu) = Ent_mu(d nu / d mu)``."""
    return entropy(mu, relative_density(nu, mu))


def entropy_variational_bound(mu, phi, psi):
    """Check ``int psi phi dmu <= Ent_mu(phi)`` for ``int e^psi dmu <= 1``.

    Also evaluates the optimizer ``psi* = log(phi / int phi dmu)`` (floored
    at -700 where ``phi = 0``) and asserts equality there to 1e-10.
    An infeasible ``psi`` yields a failing constraint clause, not an error.
    """
    mu = check_measure(mu, name="mu")
    phi = check_field(phi, name="phi")
    psi = np.asarray(psi, dtype=float)
    ent = entropy(mu, phi)
    log_mass = _logsumexp(psi, mu)
    constraint = CheckReport("exp_moment_constraint", float(np.exp(log_mass)), 1.0, 1e-12)
    lhs = float(mu @ np.where(phi > 0, psi * phi, 0.0))
    bound = CheckReport("variational_bound", lhs, ent, VARIATIONAL_TOL)
    psi_star = optimal_psi(mu, phi)
    at_opt = float(mu @ np.where(phi > 0, psi_star * phi, 0.0))
    equality = CheckReport("variational_equality", abs(at_opt - ent), 0.0, VARIATIONAL_TOL)
    clauses = [constraint, bound, equality]
    worst = min(clauses, key=lambda c: c.margin + c.tolerance)
    return CheckReport("entropy_variational", worst.lhs, worst.rhs, worst.tolerance,
                       inputs_digest=digest(mu, phi, psi),
                       details={"entropy": ent, "int_psi_phi": lhs,
                                "int_exp_psi": float(np.exp(log_mass)),
                                "int_psistar_phi": at_opt,
                                "feasible": constraint.passed},
                       clauses=clauses)


def optimal_psi(mu, phi):
    phi = np.asarray(phi, dtype=float)
    mass = float(mu @ phi)
    with np.errstate(divide="ignore"):
        psi = np.log(phi / mass)
    return np.maximum(psi, PSI_FLOOR)


def _logsumexp(values, weights):
    """``log sum_i w_i exp(v_i)`` ignoring zero weights.

    The weights are renormalized first, so a constant ``v`` returns exactly
    ``v`` whatever the rounding in ``sum w``.
    """
    values = np.asarray(values, dtype=float)
    w = np.asarray(weights, dtype=float)
    keep = w > 0
    v = values[keep]
    w = w[keep]
    m = v.max()
    return float(m + np.log(np.sum(w * np.exp(v - m)) / np.sum(w)))


def transport_cost(space, p):
    return space.dist ** p / p


def wasserstein_p(mu, nu, space, p, num_iter_max=10_000_000):
    """Exact optimal plan for the cost ``d**p / p`` with dual certificate.

    The linear program is solved by a network simplex; its dual potentials
    are polished by one c-transform pass so that the feasibility constraint
    holds exactly as computed, then the duality gap is certified.

    Raises
    ------
    CertificationError
        If the gap between primal and dual values exceeds 1e-8.
    """
    mu = check_measure(mu, space, "mu")
    nu = check_measure(nu, space, "nu")
    if not p >= 1:
        raise InvalidArgumentError(f"p must be >= 1, got {p!r}")
    cost = transport_cost(space, p)
    plan, log = ot.emd(mu, nu, cost, numItermax=num_iter_max, log=True)
    if log.get("warning"):
        raise CertificationError(float("inf"), GAP_TOL)
    plan = np.maximum(plan, 0.0)
    value = float(np.sum(plan * cost))
    f, g = _polish_potentials(-log["u"], log["v"], mu, nu, cost)
    dual = float(nu @ g - mu @ f)
    gap = abs(value - dual)
    if gap > GAP_TOL:
        raise CertificationError(gap, GAP_TOL)
    return TransportPlan(plan=plan, value=value, f=f, g=g, p=float(p), dual_value=dual,
                         source=mu, target=nu)


def _polish_potentials(f, g, mu, nu, cost):
    f = np.array(f, dtype=float)
    g = np.array(g, dtype=float)
    support = nu > 0
    # sources without mass take the smallest feasible value
    idle = mu <= 0
    if idle.any():
        f[idle] = np.max(g[support][None, :] - cost[np.ix_(idle, support)], axis=1)
    # c-transform: feasible by construction, never lowers g on the support
    g = np.min(f[:, None] + cost, axis=0)
    return f, g


def _line_coordinates(space):
    if space.kind != "grid1d" or space.coords is None:
        raise UnsupportedError("this operation needs a grid1d space")
    return space.coords[:, 0]


def quantile_coupling(mu, nu):
    """Monotone coupling of two measures on an ordered line.

    Returns ``(mass, i, j)``: segment masses and the source/target indices
    they join.
    """
    ca = np.cumsum(mu)
    cb = np.cumsum(nu)
    ca[-1] = cb[-1] = 1.0
    levels = np.union1d(ca, cb)
    levels = levels[levels > 0]
    lo = np.concatenate([[0.0], levels[:-1]])
    mass = levels - lo
    keep = mass > 0
    lo, mass = lo[keep], mass[keep]
    i = np.minimum(np.searchsorted(ca, lo, side="right"), len(mu) - 1)
    j = np.minimum(np.searchsorted(cb, lo, side="right"), len(nu) - 1)
    return mass, i, j


def wasserstein_1d(mu, nu, space, p):
    """Value of ``sum d**p / p`` under the monotone (quantile) coupling on a line."""
    x = _line_coordinates(space)
    mu = check_measure(mu, space, "mu")
    nu = check_measure(nu, space, "nu")
    if not p >= 1:
        raise InvalidArgumentError(f"p must be >= 1, got {p!r}")
    mass, i, j = quantile_coupling(mu, nu)
    dist = space.dist[i, j]
    return float(np.sum(mass * dist ** p / p))


def displacement_interpolate_1d(nu0, nu1, space, t, p=2):
    """Measure at time ``t`` on the monotone Wasserstein geodesic from ``nu0`` to ``nu1``.

    Each coupled mass moves to ``(1-t) x + t T(x)`` and is split linearly
    between the two nearest grid points. The endpoints are returned exactly.
    """
    _line_coordinates(space)
    nu0 = check_measure(nu0, space, "nu0")
    nu1 = check_measure(nu1, space, "nu1")
    if not 0 <= t <= 1:
        raise InvalidArgumentError(f"t must lie in [0, 1], got {t!r}")
    if not p >= 2:
        raise InvalidArgumentError(f"p must be >= 2, got {p!r}")
    if t == 0:
        return nu0.copy()
    if t == 1:
        return nu1.copy()
    mass, i, j = quantile_coupling(nu0, nu1)
    pos = (1 - t) * i + t * j
    k = np.floor(pos).astype(np.intp)
    frac = pos - k
    n = space.n_points
    out = np.zeros(n)
    np.add.at(out, k, mass * (1 - frac))
    upper = np.minimum(k + 1, n - 1)
    np.add.at(out, upper, mass * frac)
    return out / out.sum()


def entropy_along_geodesic(mu, nu0, nu1, ts, space, p=2, tol=None):
    """Convexity defect of ``t -> U_mu(nu_t)`` along the 1-D displacement geodesic.

    Reports ``max_t max(U(nu_t) - t U(nu1) - (1-t) U(nu0), 0)``. The default
    tolerance ``10 h max(1, U(nu0), U(nu1))`` absorbs re-binning error.
    """
    mu = check_measure(mu, space, "mu")
    u0 = relative_entropy(nu0, mu)
    u1 = relative_entropy(nu1, mu)
    values, defects = [], []
    for t in ts:
        nut = displacement_interpolate_1d(nu0, nu1, space, t, p)
        ut = relative_entropy(nut, mu)
        values.append(ut)
        defects.append(max(ut - t * u1 - (1 - t) * u0, 0.0))
    if tol is None:
        tol = 10 * space.step * max(1.0, u0, u1)
    defect = max(defects) if defects else 0.0
    return CheckReport("geodesic_entropy_convexity", float(defect), float(tol),
                       constants={"p": float(p)},
                       inputs_digest=digest(mu, nu0, nu1, np.asarray(ts, dtype=float), p=p),
                       details={"ts": list(map(float, ts)), "entropy": values,
                                "defects": defects, "U0": u0, "U1": u1})
