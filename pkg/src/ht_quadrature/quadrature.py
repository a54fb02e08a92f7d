"""
Gauss rules on [0, 1] for the weights 1 and -ln(t), and their tensor forms.

The log-weight rule is built with the modified Chebyshev algorithm from the
modified moments of -ln(t) against monic shifted Legendre polynomials, followed
by the Golub-Welsch eigen decomposition of the resulting Jacobi matrix.
"""

import logging
import threading
from dataclasses import dataclass
from typing import Callable, Dict, Tuple

import numpy as np

from .exceptions import InvalidArgumentError, QuadratureError


logger = logging.getLogger(__name__)

K_MAX = 64
NEWTON_TOL = 1e-15
NEWTON_MAX_ITER = 100

LEGENDRE = "legendre"
LOGJACOBI = "logjacobi"


@dataclass(frozen=True)
class GaussRule:
    """Nodes and weights of a K-point rule on [0, 1]."""

    weight_kind: str
    K: int
    nodes: np.ndarray
    weights: np.ndarray

    def apply(self, values: np.ndarray) -> np.ndarray:
        """Contract the last axis of ``values`` (sampled at the nodes) with the weights."""
        return np.asarray(values) @ self.weights


_cache: Dict[Tuple[str, int], GaussRule] = {}
_cache_lock = threading.Lock()


def _check_order(K: int) -> None:
    if not isinstance(K, (int, np.integer)) or not 1 <= K <= K_MAX:
        raise InvalidArgumentError(f"rule order K={K} outside 1..{K_MAX}", tag="quadrature")


def _cached(kind: str, K: int, build: Callable[[int], GaussRule]) -> GaussRule:
    key = (kind, int(K))
    rule = _cache.get(key)
    if rule is not None:
        return rule
    with _cache_lock:
        rule = _cache.get(key)
        if rule is None:
            rule = build(int(K))
            _check_rule(rule)
            rule.nodes.setflags(write=False)
            rule.weights.setflags(write=False)
            _cache[key] = rule
            logger.debug(f"Built {kind} rule with K={K}")
    return rule


def _check_rule(rule: GaussRule) -> None:
    if np.any(np.diff(rule.nodes) <= 0):
        raise QuadratureError(f"{rule.weight_kind} rule K={rule.K}: nodes not ascending")
    if np.any(rule.weights <= 0):
        raise QuadratureError(f"{rule.weight_kind} rule K={rule.K}: non-positive weight")
    if np.any(rule.nodes <= 0) or np.any(rule.nodes >= 1):
        raise QuadratureError(f"{rule.weight_kind} rule K={rule.K}: node outside (0, 1)")


def gauss_legendre(K: int) -> GaussRule:
    """
    K-point Gauss-Legendre rule on [0, 1], exact for polynomials of degree 2K-1.

    Roots of P_K are found by simultaneous Newton iteration from Chebyshev
    angles, with P_K and P_K' from the three-term recurrence.
    """
    _check_order(K)
    return _cached(LEGENDRE, K, _build_legendre)


def _build_legendre(K: int) -> GaussRule:
    i = np.arange(1, K + 1)
    x = np.cos(np.pi * (i - 0.25) / (K + 0.5))

    for _ in range(NEWTON_MAX_ITER):
        p0 = np.ones_like(x)
        p1 = x.copy()
        for n in range(1, K):
            p0, p1 = p1, ((2 * n + 1) * x * p1 - n * p0) / (n + 1)
        dp = K * (x * p1 - p0) / (x * x - 1.0) if K > 1 else np.ones_like(x)
        dx = p1 / dp
        x = x - dx
        if np.max(np.abs(dx)) <= NEWTON_TOL:
            break
    else:
        raise QuadratureError(
            f"Newton iteration for Gauss-Legendre K={K} did not converge "
            f"(last update {np.max(np.abs(dx)):.3e})"
        )

    p0 = np.ones_like(x)
    p1 = x.copy()
    for n in range(1, K):
        p0, p1 = p1, ((2 * n + 1) * x * p1 - n * p0) / (n + 1)
    dp = K * (x * p1 - p0) / (x * x - 1.0) if K > 1 else np.ones_like(x)
    w = 2.0 / ((1.0 - x * x) * dp * dp)

    order = np.argsort(x)
    x, w = x[order], w[order]
    x = 0.5 * (x - x[::-1])
    w = 0.5 * (w + w[::-1])
    return GaussRule(LEGENDRE, K, 0.5 * (x + 1.0), 0.5 * w)


def log_moments(n: int) -> np.ndarray:
    """
    Modified moments of -ln(t) on [0, 1] against monic shifted Legendre polynomials.

    m_0 = 1 and m_k = (-1)^k (k!)^2 / ((2k)! k (k+1)) for k >= 1.
    """
    m = np.zeros(n)
    m[0] = 1.0
    if n > 1:
        m[1] = -0.25
    for k in range(2, n):
        m[k] = -m[k - 1] * k * (k - 1) / (2.0 * (2 * k - 1) * (k + 1))
    return m


def _shifted_legendre_recurrence(n: int) -> Tuple[np.ndarray, np.ndarray]:
    a = np.full(n, 0.5)
    b = np.zeros(n)
    k = np.arange(1, n)
    b[1:] = 1.0 / (4.0 * (4.0 - 1.0 / (k * k)))
    return a, b


def modified_chebyshev(
    moments: np.ndarray, a: np.ndarray, b: np.ndarray, n: int
) -> Tuple[np.ndarray, np.ndarray]:
    """
    Recurrence coefficients (alpha, beta) of the first n orthogonal polynomials.

    Args:
        moments: 2n modified moments against the auxiliary polynomials
        a, b: recurrence coefficients of the auxiliary polynomials (length >= 2n-1)
        n: number of coefficients wanted

    Returns:
        (alpha, beta), each of length n; beta[0] is the total mass
    """
    alpha = np.zeros(n)
    beta = np.zeros(n)
    sig_prev = np.zeros(2 * n + 1)
    sig = np.zeros(2 * n + 1)
    sig[: 2 * n] = moments[: 2 * n]

    alpha[0] = a[0] + moments[1] / moments[0]
    beta[0] = moments[0]

    for k in range(1, n):
        sig_new = np.zeros(2 * n + 1)
        for l_idx in range(k, 2 * n - k):
            sig_new[l_idx] = (
                sig[l_idx + 1]
                - (alpha[k - 1] - a[l_idx]) * sig[l_idx]
                - beta[k - 1] * sig_prev[l_idx]
                + b[l_idx] * sig[l_idx - 1]
            )
        if sig_new[k] <= 0.0:
            raise QuadratureError(
                f"modified Chebyshev breakdown at k={k}: sigma_kk={sig_new[k]:.3e}"
            )
        alpha[k] = a[k] + sig_new[k + 1] / sig_new[k] - sig[k] / sig[k - 1]
        beta[k] = sig_new[k] / sig[k - 1]
        sig_prev, sig = sig, sig_new

    return alpha, beta


def gauss_log(K: int) -> GaussRule:
    """
    K-point rule for the weight -ln(t) on [0, 1], exact for degree 2K-1.

    Raises:
        QuadratureError: when the recurrence or eigen step produces an invalid rule
    """
    _check_order(K)
    return _cached(LOGJACOBI, K, _build_log)


def _build_log(K: int) -> GaussRule:
    moments = log_moments(2 * K)
    a, b = _shifted_legendre_recurrence(2 * K)
    alpha, beta = modified_chebyshev(moments, a, b, K)
    if np.any(beta[1:] <= 0):
        raise QuadratureError(f"log rule K={K}: non-positive recurrence coefficient")

    J = np.diag(alpha) + np.diag(np.sqrt(beta[1:]), 1) + np.diag(np.sqrt(beta[1:]), -1)
    try:
        nodes, vectors = np.linalg.eigh(J)
    except np.linalg.LinAlgError as e:
        raise QuadratureError(f"log rule K={K}: eigen decomposition failed: {e}") from e

    weights = beta[0] * vectors[0, :] ** 2
    return GaussRule(LOGJACOBI, K, nodes, weights)


def tensor_apply(rule_a: GaussRule, rule_b: GaussRule, G: Callable) -> float:
    """
    Tensor Gauss-Legendre approximation of the integral of G over [0, 1]^2.

    G must accept broadcast arrays (x1, x2).
    """
    if rule_a.weight_kind != LEGENDRE or rule_b.weight_kind != LEGENDRE:
        raise InvalidArgumentError("tensor_apply needs two Gauss-Legendre rules", tag="quadrature")
    x1 = rule_a.nodes[:, None]
    x2 = rule_b.nodes[None, :]
    values = np.broadcast_to(G(x1, x2), (rule_a.K, rule_b.K))
    return float(rule_a.weights @ values @ rule_b.weights)


def logtensor_points(K: int) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    """
    Points (s, t) and weights w with sum w g(s, t) ~ int int g(s, t) ln|s - t| ds dt.

    Exact for g in P^{2K-2}([0, 1]^2). Built from the identity that splits the
    square along the diagonal and integrates the log factor with the log rule
    in one direction and Gauss-Legendre in the other.
    """
    gl = gauss_legendre(K)
    gj = gauss_log(K)
    x, w = gl.nodes, gl.weights
    xh, wh = gj.nodes, gj.weights

    # first double sum: log rule outer (mu), Legendre inner (nu)
    s1 = (1.0 - x[None, :]) * xh[:, None]
    t1 = np.broadcast_to(xh[:, None], s1.shape)
    w1 = -(wh * xh)[:, None] * w[None, :]

    # second double sum: Legendre outer, log rule inner
    s2 = (1.0 - xh[None, :]) * x[:, None]
    t2 = np.broadcast_to(x[:, None], s2.shape)
    w2 = -(w * x)[:, None] * wh[None, :]

    s = np.concatenate([s1.ravel(), 1.0 - s1.ravel(), s2.ravel(), 1.0 - s2.ravel()])
    t = np.concatenate([t1.ravel(), 1.0 - t1.ravel(), t2.ravel(), 1.0 - t2.ravel()])
    weights = np.concatenate([w1.ravel(), w1.ravel(), w2.ravel(), w2.ravel()])
    return s, t, weights


def logtensor_apply(K: int, g: Callable) -> float:
    """Approximate int_0^1 int_0^1 g(s, t) ln|s - t| ds dt; exact for g in P^{2K-2}."""
    s, t, w = logtensor_points(K)
    return float(np.sum(w * g(s, t)))


def graded_rule(
    a: float,
    b: float,
    K: int,
    levels: int = 12,
    ratio: float = 0.25,
    toward: str = "a",
) -> Tuple[np.ndarray, np.ndarray]:
    """
    Composite Gauss-Legendre rule on [a, b] refined geometrically toward an endpoint.

    Args:
        a, b: Interval
        K: Points per sub-interval
        levels: Number of geometric sub-intervals
        ratio: Size ratio between neighbouring sub-intervals
        toward: "a", "b" or "both"

    Returns:
        (nodes, weights) on [a, b]
    """
    if toward == "both":
        mid = 0.5 * (a + b)
        x1, w1 = graded_rule(a, mid, K, levels, ratio, "a")
        x2, w2 = graded_rule(mid, b, K, levels, ratio, "b")
        return np.concatenate([x1, x2]), np.concatenate([w1, w2])

    rule = gauss_legendre(K)
    fractions = np.concatenate([[0.0], ratio ** np.arange(levels, -1, -1, dtype=float)])
    if toward == "b":
        fractions = 1.0 - fractions[::-1]
    elif toward != "a":
        raise InvalidArgumentError(f"unknown grading direction '{toward}'", tag="quadrature")

    points = a + (b - a) * fractions
    lo, hi = points[:-1], points[1:]
    nodes = lo[:, None] + (hi - lo)[:, None] * rule.nodes[None, :]
    weights = (hi - lo)[:, None] * rule.weights[None, :]
    return nodes.ravel(), weights.ravel()


def clear_cache() -> None:
    """Drop all cached rules."""
    with _cache_lock:
        _cache.clear()
