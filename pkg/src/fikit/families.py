"""Seeded generators for test functions and perturbed measures."""
import numpy as np

from ._validation import check_measure, normalize
from .exceptions import InvalidArgumentError
from .space import lipschitz_constant


def coordinate(space, axis=0):
    if space.coords is None:
        raise InvalidArgumentError("space has no coordinates")
    return np.asarray(space.coords[:, axis], dtype=float)


def exponential_family(space, rates, axis=0):
    """Functions ``exp(rate * x / 2)`` of one coordinate.

    On a standard Gaussian these saturate the quadratic log-Sobolev
    inequality with constant 1.
    """
    x = coordinate(space, axis)
    return [np.exp(r * x / 2) for r in rates]


def random_lipschitz(space, seed, lip=1.0, amplitude=None, n_terms=4):
    """A random nonconstant function with Lipschitz constant exactly ``lip``.

    Spaces with coordinates get a sum of ``n_terms`` random plane waves;
    other spaces a signed combination of distance functions to random
    centers. With ``amplitude`` set, the result is shrunk further until
    ``max |f| <= amplitude``.
    """
    rng = np.random.default_rng(seed)
    if space.coords is not None:
        x = space.coords
        k = x.shape[1]
        f = np.zeros(space.n_points)
        for _ in range(n_terms):
            omega = rng.uniform(0.3, 2.5, size=k) * rng.choice([-1, 1], size=k)
            f += rng.normal() * np.sin(x @ omega + rng.uniform(0, 2 * np.pi))
    else:
        centers = rng.choice(space.n_points, size=min(n_terms, space.n_points),
                             replace=False)
        w = rng.normal(size=centers.size)
        f = w @ space.dist[centers]
    f = f - f.mean()
    lc = lipschitz_constant(f, space)
    if lc == 0:
        raise InvalidArgumentError("generated a constant function; try another seed")
    f = f * (lip / lc)
    if amplitude is not None and np.abs(f).max() > amplitude:
        f = f * (amplitude / np.abs(f).max())
    return f


def perturbed_measure(mu, density):
    """``nu`` proportional to ``density * mu``."""
    density = np.asarray(density, dtype=float)
    if np.any(density < 0):
        raise InvalidArgumentError("density must be nonnegative")
    return normalize(density * mu)


def trig_perturbation(space, mu, amplitude=0.3, freq=1.0, phase=0.0, axis=0):
    """``nu`` proportional to ``mu (1 + amplitude sin(freq x + phase))``."""
    x = coordinate(space, axis)
    return perturbed_measure(mu, 1 + amplitude * np.sin(freq * x + phase))


def random_perturbation(space, mu, seed, strength=0.9):
    """``nu = (1 + s f) mu`` for a random Lipschitz ``f`` with ``max |f| = 1``.

    The size ``s`` is drawn uniformly from ``(0.05, strength)``.
    """
    mu = check_measure(mu, space, "mu")
    rng = np.random.default_rng(seed)
    f = random_lipschitz(space, rng.integers(2**32))
    f = f / np.abs(f).max()
    s = rng.uniform(0.05, strength)
    return perturbed_measure(mu, 1 + s * f)


def tilted_measure(mu, f):
    """``nu`` proportional to ``exp(f) mu``."""
    f = np.asarray(f, dtype=float)
    return perturbed_measure(mu, np.exp(f - f.max()))


def endpoint_pairs(space, mu, n_pairs=10, seed=0, axis=0):
    """Pairs of exponentially tilted, mildly perturbed copies of ``mu``."""
    rng = np.random.default_rng(seed)
    x = coordinate(space, axis)
    pairs = []
    for _ in range(n_pairs):
        ends = []
        for _ in range(2):
            theta = rng.uniform(-1.5, 1.5)
            wave = rng.uniform(0, 0.3) * np.sin(rng.uniform(0.5, 2) * x + rng.uniform(0, 6.3))
            ends.append(tilted_measure(mu, theta * x + wave))
        pairs.append(tuple(ends))
    return pairs
