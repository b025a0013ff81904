"""Verifiers for log-Sobolev, Talagrand and hypercontractivity inequalities.

Every verifier returns a :class:`~fikit.report.CheckReport`. Exponential
integrals are evaluated in log space with a max shift, so large constants
and exponents close to 1 do not overflow.
"""
import numbers

import numpy as np

from ._parallel import pmap
from ._validation import check_conjugate, check_field, check_measure, check_positive
from .exceptions import InvalidArgumentError, NoInformationError, UnsupportedError
from .hamiltonian import PowerForm
from .hopf_lax import hopf_lax
from .report import CheckReport, aggregate, digest
from .space import metric_subgradient
from .transport import (
    _logsumexp,
    entropy,
    entropy_along_geodesic,
    relative_density,
    wasserstein_p,
)

LSI_RTOL = 1e-9
LSI_ATOL = 1e-12
TALAGRAND_ATOL = 1e-10
DUAL_RTOL = 1e-9
CURVE_RTOL = 1e-6
NEGLIGIBLE_ENTROPY = 1e-14
HWI_RTOL = 0.05
HWI_ATOL = 1e-10


def _check_p(p):
    if not isinstance(p, numbers.Real) or p < 2:
        raise InvalidArgumentError(f"Talagrand inequalities need p >= 2, got {p!r}")
    return float(p)


def lsi_constant_factor(q, K):
    """``(q-1) (q/K)**(q-1)``, the right-hand side factor of q-LSI(K)."""
    return (q - 1) * (q / K) ** (q - 1)


def lsi_check(space, mu, f, q, K, neighborhood="edges"):
    """q-log-Sobolev inequality for one function.

    ``Ent_mu(|f|^q) <= (q-1) (q/K)^(q-1) int |grad^- f|^q dmu``.
    """
    check_conjugate(q)
    K = check_positive(K, "K")
    mu = check_measure(mu, space, "mu")
    f = check_field(f, space, "f")
    lhs = entropy(mu, np.abs(f) ** q)
    grad = metric_subgradient(f, space, neighborhood)
    energy = float(mu @ grad ** q)
    rhs = lsi_constant_factor(q, K) * energy
    return CheckReport("lsi", lhs, rhs, LSI_RTOL * rhs + LSI_ATOL,
                       constants={"q": float(q), "K": K},
                       inputs_digest=digest(space.dist, mu, f, q=q, K=K),
                       details={"gradient_energy": energy})


def lsi_constant_estimate(space, mu, family, q, neighborhood="edges"):
    """Largest ``K`` for which q-LSI(K) holds on every member of ``family``.

    Members with entropy below 1e-14 carry no information and are skipped.
    """
    check_conjugate(q)
    mu = check_measure(mu, space, "mu")
    best = np.inf
    for f in family:
        f = check_field(f, space, "f")
        ent = entropy(mu, np.abs(f) ** q)
        if ent < NEGLIGIBLE_ENTROPY:
            continue
        energy = float(mu @ metric_subgradient(f, space, neighborhood) ** q)
        best = min(best, q * ((q - 1) * energy / ent) ** (1 / (q - 1)))
    if not np.isfinite(best):
        raise NoInformationError("every family member has negligible entropy")
    return float(best)


def talagrand_check(space, mu, nu, p, K):
    """p-Talagrand inequality ``W_p(nu, mu)^p <= Ent_mu(dnu/dmu) / K``."""
    p = _check_p(p)
    K = check_positive(K, "K")
    mu = check_measure(mu, space, "mu")
    nu = check_measure(nu, space, "nu")
    density = relative_density(nu, mu)
    plan = wasserstein_p(nu, mu, space, p)
    ent = entropy(mu, density)
    return CheckReport("talagrand", plan.value, ent / K, TALAGRAND_ATOL,
                       constants={"p": p, "K": K},
                       inputs_digest=digest(space.dist, mu, nu, p=p, K=K),
                       details={"entropy": ent, "duality_gap": plan.gap})


def talagrand_dual_check(space, mu, f, p, K):
    """Dual Talagrand form ``int exp(K Q_1 f) dmu <= exp(K int f dmu)``.

    Both sides are reported on the log scale.
    """
    p = _check_p(p)
    K = check_positive(K, "K")
    mu = check_measure(mu, space, "mu")
    f = check_field(f, space, "f")
    qf = hopf_lax(space, f, 1.0, PowerForm(p)).u
    log_lhs = _logsumexp(K * qf, mu)
    log_rhs = K * float(mu @ f)
    return CheckReport("dual_talagrand", log_lhs, log_rhs, float(np.log1p(DUAL_RTOL)),
                       constants={"p": p, "K": K, "scale": "log"},
                       inputs_digest=digest(space.dist, mu, f, p=p, K=K))


def _log_norm_exp(values, mu, lam):
    """``log || exp(values) ||_{L^lam(mu)}``."""
    m = float(np.max(values))
    return m + _logsumexp(lam * (values - m), mu) / lam


def hypercontractivity_curve(space, mu, f, a, rho, q, ts):
    """Sample ``F(t) = ||exp(Q_t f)||_{a + rho t}`` and check it is non-increasing.

    Passes when consecutive samples never grow by more than a relative
    1e-6 and ``F(t_max) <= ||exp f||_a (1 + 1e-6)``. The samples are in
    ``details["F"]`` (and ``details["log_F"]``).
    """
    p = check_conjugate(q)
    a = check_positive(a, "a")
    rho = check_positive(rho, "rho")
    mu = check_measure(mu, space, "mu")
    f = check_field(f, space, "f")
    ts = [check_positive(t, "t") for t in ts]
    if any(b <= a_ for a_, b in zip(ts, ts[1:])):
        raise InvalidArgumentError("ts must be strictly ascending")
    L = PowerForm(p)
    log_f0 = _log_norm_exp(f, mu, a)
    log_F = []
    for t in ts:
        lam = a + rho * t
        if lam <= 0:
            raise InvalidArgumentError(f"lambda(t) = {lam} <= 0")
        log_F.append(_log_norm_exp(hopf_lax(space, f, t, L).u, mu, lam))
    slack = float(np.log1p(CURVE_RTOL))
    rise = max((b - a_ for a_, b in zip(log_F, log_F[1:])), default=0.0)
    clauses = [
        CheckReport("F_non_increasing", max(rise, 0.0), 0.0, slack),
        CheckReport("F_endpoint", log_F[-1], log_f0, slack),
    ]
    return aggregate("hypercontractivity", clauses,
                     constants={"a": a, "rho": rho, "q": float(q), "p": p},
                     inputs_digest=digest(space.dist, mu, f, np.asarray(ts), a=a, rho=rho, q=q),
                     details={"ts": ts, "log_F": log_F, "F": list(np.exp(log_F)),
                              "log_norm_exp_f_a": log_f0, "max_log_rise": rise})


def consts_rho(a, K, q):
    """``rho`` meeting ``a^(2-q) K^(q-1) >= rho (q-1)`` with equality."""
    return a ** (2 - q) * K ** (q - 1) / (q - 1)


def consts_K(a, rho, q):
    """``K`` meeting ``a^(2-q) K^(q-1) = rho (q-1)``."""
    return (rho * (q - 1) / a ** (2 - q)) ** (1 / (q - 1))


def hc_to_lsi(space, mu, f, a, rho, q):
    """Recover the log-Sobolev constant implied by hypercontractivity.

    Checks the derivative condition at ``t = 0``,
    ``rho Ent(e^{af}) <= a^2 int e^{af} |grad^- f|^q / q dmu``, and returns
    ``(K0, report)`` with ``K0`` solving ``a^(2-q) K0^(q-1) = rho (q-1)``.
    Both sides of the condition are reported after dividing by
    ``exp(a max f)``.
    """
    check_conjugate(q)
    a = check_positive(a, "a")
    rho = check_positive(rho, "rho")
    mu = check_measure(mu, space, "mu")
    f = check_field(f, space, "f")
    shift = a * f.max()
    e = np.exp(a * f - shift)
    grad = metric_subgradient(f, space)
    lhs = rho * entropy(mu, e)
    rhs = a * a * float(mu @ (e * grad ** q)) / q
    K0 = consts_K(a, rho, q)
    report = CheckReport("hc_derivative_at_zero", lhs, rhs, LSI_RTOL * rhs + LSI_ATOL,
                         constants={"a": a, "rho": rho, "q": float(q), "K0": K0},
                         inputs_digest=digest(space.dist, mu, f, a=a, rho=rho, q=q),
                         details={"log_scale": shift})
    return K0, report


def hwi_coupling_check(space, mu, f, p, rtol=HWI_RTOL):
    """Entropy bounded by the transport of the logarithmic subgradient.

    For ``nu = f mu`` (``f`` renormalized to a density) and ``pi`` the
    optimal coupling of ``(nu, mu)``, checks
    ``U_mu(nu) <= sum pi(x0, x1) |grad^- f|(x0) / f(x0) d(x0, x1)`` and its
    Hoelder form ``U_mu(nu) <= p^(1/p) W_p (int |grad^- f|^q / f^(q-1) dmu)^(1/q)``,
    each with a discretization allowance of ``rtol * rhs + 1e-10``.
    """
    p = _check_p(p)
    q = p / (p - 1)
    mu = check_measure(mu, space, "mu")
    f = check_field(f, space, "f")
    if np.any(f[mu > 0] <= 0):
        raise InvalidArgumentError("density must be positive on the support of mu")
    f = f / float(mu @ f)
    nu = f * mu
    nu = nu / nu.sum()
    ent = entropy(mu, f)
    grad = metric_subgradient(f, space)
    ratio = np.divide(grad, f, out=np.zeros_like(f), where=f > 0)
    plan = wasserstein_p(nu, mu, space, p)
    coupling = float(np.sum(plan.plan * ratio[:, None] * space.dist))
    fisher = float(mu @ np.divide(grad ** q, f ** (q - 1), out=np.zeros_like(f), where=f > 0))
    holder = p ** (1 / p) * plan.distance * fisher ** (1 / q)
    clauses = [
        CheckReport("hwi_coupling", ent, coupling, rtol * coupling + HWI_ATOL),
        CheckReport("hwi_holder", ent, holder, rtol * holder + HWI_ATOL),
    ]
    return aggregate("hwi", clauses, constants={"p": p, "q": q},
                     inputs_digest=digest(space.dist, mu, f, p=p),
                     details={"entropy": ent, "coupling_rhs": coupling,
                              "holder_rhs": holder, "W_p": plan.distance})


def phi_monitor(space, mu, f, K, q, ts):
    """Sample ``phi(t) = log(int exp(K t^n Q_t f) dmu) / (K t^n)`` with ``n = 1/(q-1)``.

    Passes when the samples are non-increasing (relative slack 1e-6) and
    the last sample does not exceed ``int f dmu + 1e-6``.
    """
    p = check_conjugate(q)
    K = check_positive(K, "K")
    mu = check_measure(mu, space, "mu")
    f = check_field(f, space, "f")
    ts = [check_positive(t, "t") for t in ts]
    if any(t > 1 for t in ts) or any(b <= a for a, b in zip(ts, ts[1:])):
        raise InvalidArgumentError("ts must be ascending in (0, 1]")
    n = 1 / (q - 1)
    L = PowerForm(p)
    phi = []
    for t in ts:
        s = K * t ** n
        phi.append(_logsumexp(s * hopf_lax(space, f, t, L).u, mu) / s)
    mean_f = float(mu @ f)
    rise = max((b - a for a, b in zip(phi, phi[1:])), default=0.0)
    scale = max(1.0, max(abs(v) for v in phi))
    clauses = [
        CheckReport("phi_non_increasing", max(rise, 0.0), 0.0, CURVE_RTOL * scale),
        CheckReport("phi_endpoint", phi[-1], mean_f, CURVE_RTOL),
    ]
    return aggregate("phi_monitor", clauses,
                     constants={"K": K, "q": float(q), "n": n},
                     inputs_digest=digest(space.dist, mu, f, np.asarray(ts), K=K, q=q),
                     details={"ts": ts, "phi": phi, "mean_f": mean_f,
                              "tmin_gap": abs(phi[0] - mean_f)})


def scaling_exponent_probe(space, mu, g, p, eps_list):
    """Log-log slopes of ``Ent_mu(1 + eps g~)`` and ``W_p(nu_eps, mu)^p`` in ``eps``.

    ``g~`` is ``g`` recentered to mean zero under ``mu`` and
    ``nu_eps = (1 + eps g~) mu``. Returns ``(slope_ent, slope_wp)``.
    """
    if not p >= 1:
        raise InvalidArgumentError(f"p must be >= 1, got {p!r}")
    mu = check_measure(mu, space, "mu")
    g = check_field(g, space, "g")
    g = g - float(mu @ g)
    if np.max(np.abs(g)) < 1e-14:
        raise InvalidArgumentError("g is constant: no perturbation to probe")
    eps = np.asarray(eps_list, dtype=float)
    ents, costs = [], []
    for e in eps:
        density = 1 + e * g
        if np.any(density[mu > 0] <= 0):
            raise InvalidArgumentError(f"density 1 + eps g is not positive for eps={float(e)!r}")
        nu = density * mu
        nu = nu / nu.sum()
        ents.append(entropy(mu, density))
        costs.append(wasserstein_p(nu, mu, space, p).value)
    slope_ent = float(np.polyfit(np.log(eps), np.log(ents), 1)[0])
    slope_wp = float(np.polyfit(np.log(eps), np.log(costs), 1)[0])
    return slope_ent, slope_wp


def lsi_implies_talagrand_suite(space, mu, q, K, nu_samples, n_jobs=None):
    """Run the p-Talagrand check with the log-Sobolev constant ``K`` on every sample."""
    p = check_conjugate(q)
    nu_samples = list(nu_samples)
    clauses = pmap(lambda nu: talagrand_check(space, mu, nu, p, K), nu_samples, n_jobs)
    return aggregate("suite_lsi_to_talagrand", clauses,
                     constants={"q": float(q), "p": p, "K": float(K),
                                "n_samples": len(nu_samples)},
                     inputs_digest=digest(space.dist, mu, *nu_samples, q=q, K=K),
                     details={"min_margin": min(c.margin for c in clauses)})


def talagrand_implies_lsi_suite(space, mu, p, K, f_samples, pairs, ts=None,
                                tol=None, n_jobs=None):
    """Audit displacement convexity, then check q-LSI with constant ``K p^-p``.

    The outcome is three-valued: when the convexity audit fails on some
    endpoint pair the report is ``inconclusive`` rather than ``fail``.
    """
    if space.kind != "grid1d":
        raise UnsupportedError("displacement convexity is only audited on grid1d spaces")
    p = _check_p(p)
    q = p / (p - 1)
    ts = np.linspace(0, 1, 11) if ts is None else ts
    audit = pmap(lambda pr: entropy_along_geodesic(mu, pr[0], pr[1], ts, space, p, tol),
                 list(pairs), n_jobs)
    for c in audit:
        c.name = "audit_" + c.name
    K_lsi = K * p ** (-p)
    checks = pmap(lambda f: lsi_check(space, mu, f, q, K_lsi), list(f_samples), n_jobs)
    hypothesis_ok = all(c.passed for c in audit)
    return aggregate("suite_talagrand_to_lsi", audit + checks,
                     constants={"p": p, "q": q, "K": float(K), "K_lsi": K_lsi},
                     inputs_digest=digest(space.dist, mu, *f_samples, p=p, K=K),
                     details={"hypothesis_verified": hypothesis_ok,
                              "lsi_all_pass": all(c.passed for c in checks)},
                     inconclusive=not hypothesis_ok)
