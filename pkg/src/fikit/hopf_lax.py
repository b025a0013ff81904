"""Hopf-Lax infimum convolution on finite metric spaces and its semigroup checks."""
from dataclasses import dataclass
import numbers

import numpy as np

from ._parallel import default_jobs, pmap
from ._validation import check_field, check_positive
from .exceptions import InvalidArgumentError, UnsupportedError
from .hamiltonian import HamiltonianPair, PowerForm, power_pair
from .report import CheckReport, aggregate, digest
from .space import lipschitz_constant, metric_subgradient

EXACT_TOL = 1e-12
SCALING_TOL = 1e-10
LIP_RTOL = 1e-9


@dataclass(frozen=True, eq=False)
class HopfLaxResult:
    """``u = Q_t g`` together with the minimizing point of every row."""

    u: np.ndarray
    argmin: np.ndarray
    t: float


def _lagrangian(L):
    if isinstance(L, HamiltonianPair):
        return L.L
    if isinstance(L, numbers.Real):
        return power_pair(L).L
    return L


def _hamiltonian(pair):
    if isinstance(pair, numbers.Real):
        pair = power_pair(pair)
    if not isinstance(pair, HamiltonianPair):
        raise InvalidArgumentError("a HamiltonianPair (or q) is required")
    return pair


def _chunks(n, n_jobs):
    k = max(1, min(n, 4 * n_jobs))
    return [c for c in np.array_split(np.arange(n), k) if c.size]


def hopf_lax(space, g, t, L, prune=False, n_jobs=None):
    """Evaluate ``Q_t g(x) = min_y [t L(d(x, y) / t) + g(y)]`` at every point.

    Parameters
    ----------
    space : MetricSpace
    g : array_like of shape (n,)
    t : float
        Positive time.
    L : ConvexOneDim, HamiltonianPair or float
        Lagrangian; a number is read as the Hamiltonian exponent ``q``.
    prune : bool
        Skip candidates whose transport cost alone exceeds ``g(x) - min g``.
        Such points can never beat ``y = x``, so results are identical.
    n_jobs : int, optional
        Worker threads for the row loop (default ``FIKIT_THREADS``).

    Returns
    -------
    HopfLaxResult
        Ties are broken by the lowest point id.
    """
    g = check_field(g, space, "g")
    t = check_positive(t, "t")
    L = _lagrangian(L)
    cost = t * L(space.dist / t)
    gmin = g.min()

    def rows(idx):
        vals = cost[idx] + g[None, :]
        if prune:
            vals[cost[idx] > (g[idx, None] - gmin)] = np.inf
        am = np.argmin(vals, axis=1)
        return am, vals[np.arange(idx.size), am]

    n_jobs = default_jobs() if n_jobs is None else n_jobs
    parts = pmap(rows, _chunks(space.n_points, n_jobs), n_jobs=n_jobs)
    argmin = np.concatenate([p[0] for p in parts])
    u = np.concatenate([p[1] for p in parts])
    return HopfLaxResult(u=u, argmin=argmin, t=t)


def _constants(L, **extra):
    out = dict(extra)
    if isinstance(L, PowerForm):
        out["p"] = L.exponent
    return out


def semigroup_check(space, g, s, t, L, tol=None):
    """Compare ``Q_t g`` with ``Q_{t-s}(Q_s g)``.

    The bound ``Q_t g <= Q_{t-s} Q_s g`` holds on every metric space and is
    asserted to 1e-12. The reverse direction needs interior geodesic points,
    so the two-sided defect is only asserted (against ``tol``, default five
    grid steps) on spaces flagged geodesic.
    """
    g = check_field(g, space, "g")
    s = check_positive(s, "s")
    t = check_positive(t, "t")
    if not s < t:
        raise InvalidArgumentError(f"need 0 < s < t, got s={s}, t={t}")
    L = _lagrangian(L)
    qt = hopf_lax(space, g, t, L).u
    composed = hopf_lax(space, hopf_lax(space, g, s, L).u, t - s, L).u
    one_sided = float(max(np.max(qt - composed), 0.0))
    two_sided = float(np.max(np.abs(qt - composed)))
    if tol is None:
        tol = 5 * space.step
    clauses = [CheckReport("semigroup_one_sided", one_sided, 0.0, EXACT_TOL)]
    if space.geodesic:
        clauses.append(CheckReport("semigroup_two_sided", two_sided, float(tol)))
    return aggregate(
        "semigroup", clauses, constants=_constants(L, s=s, t=t),
        inputs_digest=digest(space.dist, g, s=s, t=t),
        details={"one_sided_defect": one_sided, "two_sided_defect": two_sided,
                 "two_sided_asserted": bool(space.geodesic),
                 "two_sided_tolerance": float(tol)})


def monotonicity_check(space, g, times, L):
    """``Q_t g`` is non-increasing in ``t`` and never exceeds ``g``."""
    g = check_field(g, space, "g")
    times = [check_positive(t, "time") for t in times]
    if any(b <= a for a, b in zip(times, times[1:])):
        raise InvalidArgumentError("times must be strictly ascending")
    L = _lagrangian(L)
    values = [hopf_lax(space, g, t, L).u for t in times]
    increase = max((float(np.max(b - a)) for a, b in zip(values, values[1:])),
                   default=0.0)
    above_g = float(max(np.max(v - g) for v in values))
    clauses = [
        CheckReport("non_increasing_in_t", max(increase, 0.0), 0.0, EXACT_TOL),
        CheckReport("below_initial_data", max(above_g, 0.0), 0.0, EXACT_TOL),
    ]
    return aggregate("monotonicity", clauses, constants=_constants(L, times=times),
                     inputs_digest=digest(space.dist, g, times=times),
                     details={"max_increase": increase, "max_above_g": above_g})


def lipschitz_bound_check(space, g, t, pair, t_prime=None):
    """Spatial and temporal Lipschitz bounds of ``(x, t) -> Q_t g(x)``.

    Asserts ``lip(Q_t g) <= lip(g)`` and
    ``max_x |Q_t g - Q_t' g| <= H(lip g) |t - t'|``, both with relative
    slack 1e-9. ``t_prime`` defaults to ``1.1 t``.
    """
    pair = _hamiltonian(pair)
    g = check_field(g, space, "g")
    t = check_positive(t, "t")
    t_prime = 1.1 * t if t_prime is None else check_positive(t_prime, "t_prime")
    lip_g = lipschitz_constant(g, space)
    ut = hopf_lax(space, g, t, pair).u
    ut2 = hopf_lax(space, g, t_prime, pair).u
    lip_u = lipschitz_constant(ut, space)
    time_diff = float(np.max(np.abs(ut - ut2)))
    time_bound = float(pair.H(lip_g)) * abs(t - t_prime)
    clauses = [
        CheckReport("space_lipschitz", lip_u, lip_g, LIP_RTOL * lip_g),
        CheckReport("time_lipschitz", time_diff, time_bound, LIP_RTOL * time_bound),
    ]
    return aggregate("lipschitz_bound", clauses,
                     constants=_constants(pair.L, t=t, t_prime=t_prime),
                     inputs_digest=digest(space.dist, g, t=t, t_prime=t_prime),
                     details={"lip_g": lip_g, "lip_Qtg": lip_u,
                              "H_lip_g": float(pair.H(lip_g))})


def time_derivative(space, g, t, L, delta=None):
    """Forward difference ``(Q_{t+delta} g - Q_t g) / delta``; ``delta`` defaults to the grid step."""
    t = check_positive(t, "t")
    delta = space.step if delta is None else check_positive(delta, "delta")
    L = _lagrangian(L)
    return (hopf_lax(space, g, t + delta, L).u - hopf_lax(space, g, t, L).u) / delta


def interior_points(space):
    """Points with the maximal number of edge neighbors."""
    src = space.directed_edges[0]
    deg = np.bincount(src, minlength=space.n_points)
    return deg == deg.max()


def hj_residual(space, g, t, pair, delta=None, tol=None, interior=None):
    """Residual of ``d/dt u + H(|grad^- u|) = 0`` for ``u = Q_t g``.

    The per-point residual uses a forward time difference and the edge
    subgradient. The lower bound ``r >= -tol`` is asserted on every space;
    the upper bound ``r <= tol`` only on geodesic spaces. Both are
    restricted to ``interior`` points (default: points of maximal degree).
    ``tol`` defaults to ``(h + delta) * max(1, lip(g))**2``.
    """
    pair = _hamiltonian(pair)
    g = check_field(g, space, "g")
    t = check_positive(t, "t")
    h = space.step
    delta = h if delta is None else check_positive(delta, "delta")
    u = hopf_lax(space, g, t, pair).u
    dt = (hopf_lax(space, g, t + delta, pair).u - u) / delta
    grad = metric_subgradient(u, space, "edges")
    r = dt + pair.H(grad)
    if interior is None:
        interior = interior_points(space)
    ri = r[interior]
    lip_g = lipschitz_constant(g, space)
    if tol is None:
        tol = (h + delta) * max(1.0, lip_g) ** 2
    clauses = [CheckReport("hj_lower_bound", float(-ri.min()), float(tol))]
    if space.geodesic:
        clauses.append(CheckReport("hj_upper_bound", float(ri.max()), float(tol)))
    return aggregate(
        "hj_residual", clauses,
        constants=_constants(pair.L, t=t, delta=delta, h=h),
        inputs_digest=digest(space.dist, g, t=t, delta=delta),
        details={"max_abs_residual": float(np.abs(ri).max()),
                 "min_residual": float(ri.min()), "max_residual": float(ri.max()),
                 "upper_bound_asserted": bool(space.geodesic),
                 "residual": r})


def scaling_check(space, g, t, eps, q):
    """``Q_t(eps g) = eps Q_{eps^(q-1) t} g`` for the power pair of exponent ``q``."""
    if isinstance(q, HamiltonianPair):
        if q.exponents is None:
            raise UnsupportedError("the scaling identity needs a power Hamiltonian")
        q = q.q
    pair = power_pair(q)
    g = check_field(g, space, "g")
    t = check_positive(t, "t")
    eps = check_positive(eps, "eps")
    left = hopf_lax(space, eps * g, t, pair).u
    right = eps * hopf_lax(space, g, eps ** (q - 1) * t, pair).u
    dev = float(np.max(np.abs(left - right)))
    return CheckReport("scaling", dev, 0.0, SCALING_TOL,
                       constants={"q": float(q), "t": t, "eps": eps},
                       inputs_digest=digest(space.dist, g, t=t, eps=eps, q=q))
