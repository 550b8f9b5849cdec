"""Probability and information-theory primitives.

All functions take and return plain ``numpy`` arrays. Categorical vectors are
1-D float arrays summing to one; Dirichlet vectors are 1-D arrays of strictly
positive concentrations.
"""

import numpy as np
from scipy.special import digamma, gammaln

EPS = 1e-16
SUM_TOL = 1e-9


class DomainError(ValueError):
    """Raised when an input lies outside an operation's domain."""


def log_stable(x):
    """Natural log with the argument clamped to ``>= EPS``."""
    return np.log(np.maximum(np.asarray(x, dtype=float), EPS))


def check_categorical(p, name="p"):
    p = np.asarray(p, dtype=float)
    if p.ndim != 1 or p.size == 0:
        raise DomainError(f"{name} must be a non-empty 1-D vector")
    if np.any(~np.isfinite(p)) or np.any(p < 0):
        raise DomainError(f"{name} has negative or non-finite entries")
    if abs(p.sum() - 1.0) > SUM_TOL:
        raise DomainError(f"{name} sums to {p.sum()!r}, not 1")
    return p


def check_dirichlet(alpha, name="alpha"):
    alpha = np.asarray(alpha, dtype=float)
    if alpha.size == 0:
        raise DomainError(f"{name} is empty")
    if np.any(~np.isfinite(alpha)) or np.any(alpha <= 0):
        raise DomainError(f"{name} must contain strictly positive concentrations")
    return alpha


def normalize(v, axis=0):
    """Scale non-negative values so they sum to one along ``axis``.

    Works on a vector or column-wise on an array (``axis=0``).
    """
    v = np.asarray(v, dtype=float)
    if np.any(~np.isfinite(v)) or np.any(v < 0):
        raise DomainError("normalize requires finite, non-negative entries")
    total = v.sum(axis=axis, keepdims=True)
    if np.any(total <= 0):
        raise DomainError("normalize requires at least one positive entry")
    return v / total


def softmax(values, precision=1.0):
    """Categorical proportional to ``exp(precision * values)``."""
    values = np.asarray(values, dtype=float)
    if np.any(np.isnan(values)) or np.isnan(precision):
        raise DomainError("softmax received NaN")
    if precision < 0:
        raise DomainError("precision must be non-negative")
    if values.size == 0:
        raise DomainError("softmax of an empty vector")
    if precision == 0:
        return np.full(values.shape, 1.0 / values.size)
    z = precision * values
    z = z - z.max()
    e = np.exp(z)
    return e / e.sum()


def kl_categorical(p, q):
    """KL divergence ``D[p || q]`` in nats.

    Terms with ``p_i = 0`` contribute nothing. If some ``q_i = 0`` while
    ``p_i > 0`` the divergence is ``+inf`` (returned, not raised).
    """
    p = np.asarray(p, dtype=float)
    q = np.asarray(q, dtype=float)
    if p.shape != q.shape:
        raise DomainError(f"length mismatch: {p.shape} vs {q.shape}")
    support = p > 0
    if np.any(q[support] <= 0):
        return np.inf
    ps, qs = p[support], q[support]
    return max(float(np.sum(ps * (np.log(ps) - np.log(qs)))), 0.0)


def entropy(p, axis=0):
    """Shannon entropy in nats, with ``0 ln 0 = 0``.

    For a 2-D array the entropy of every column is returned (``axis=0``).
    """
    p = np.asarray(p, dtype=float)
    logp = np.log(np.where(p > 0, p, 1.0))
    return -np.sum(p * logp, axis=axis)


def kl_dirichlet(post, prior):
    """Closed-form ``KL[Dir(post) || Dir(prior)]`` in nats.

    Both arguments may also be 2-D with one Dirichlet per column, in which
    case a vector of divergences is returned.
    """
    post = check_dirichlet(post, "post")
    prior = check_dirichlet(prior, "prior")
    if post.shape != prior.shape:
        raise DomainError(f"length mismatch: {post.shape} vs {prior.shape}")
    post_sum = post.sum(axis=0)
    kl = (
        gammaln(post_sum)
        - gammaln(prior.sum(axis=0))
        - np.sum(gammaln(post) - gammaln(prior), axis=0)
        + np.sum((post - prior) * (digamma(post) - digamma(post_sum)), axis=0)
    )
    return np.maximum(kl, 0.0)


def expected_log_likelihood(alpha):
    """``E[ln theta]`` under ``Dir(alpha)``, i.e. ``psi(alpha) - psi(sum alpha)``.

    Column-wise for 2-D input.
    """
    alpha = check_dirichlet(alpha)
    return digamma(alpha) - digamma(alpha.sum(axis=0, keepdims=alpha.ndim > 1))
