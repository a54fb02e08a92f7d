"""
Lobatto (integrated Legendre) shape functions on the reference interval [0, 1].

    psi_1(xi) = 1 - xi,  psi_2(xi) = xi,
    psi_m(xi) = int_0^xi L_{m-2}(z) dz   for m >= 3,

where L_n(xi) = P_n(2 xi - 1) is the shifted Legendre polynomial. Bubbles are
evaluated through the closed antiderivative

    psi_m = (P_{n+1}(x) - P_{n-1}(x)) / (2 (2n + 1)),   n = m - 2, x = 2 xi - 1,

so psi_m' = L_n and psi_m'' = 2 P_n'(x).
"""

import logging
from functools import lru_cache
from math import factorial
from typing import Tuple, Union

import numpy as np
from numpy.polynomial import Legendre, Polynomial

from .exceptions import InvalidArgumentError


logger = logging.getLogger(__name__)

P_MAX = 32

ArrayLike = Union[float, np.ndarray]


def _fail(message: str) -> InvalidArgumentError:
    return InvalidArgumentError(message, tag="shapefn")


def _check_degree(p: int) -> None:
    if not 1 <= p <= P_MAX:
        raise _fail(f"degree p={p} outside 1..{P_MAX}")


def _check_mode(p: int, m: int) -> None:
    _check_degree(p)
    if not 1 <= m <= p + 1:
        raise _fail(f"mode m={m} outside 1..{p + 1} for degree {p}")


def _check_points(xi: np.ndarray) -> None:
    if np.any(xi < 0.0) or np.any(xi > 1.0):
        raise _fail("reference coordinate outside [0, 1]")


def legendre_table(n_max: int, x: np.ndarray, deriv: int = 0) -> np.ndarray:
    """
    Legendre polynomials P_0..P_{n_max} (or their derivatives) on [-1, 1].

    Args:
        n_max: Highest polynomial index
        x: Evaluation points
        deriv: 0, 1 or 2

    Returns:
        Array of shape (n_max + 1,) + x.shape
    """
    x = np.asarray(x, dtype=float)
    P = np.zeros((n_max + 2,) + x.shape)
    P[0] = 1.0
    if n_max + 1 >= 1:
        P[1] = x
    for n in range(1, n_max + 1):
        P[n + 1] = ((2 * n + 1) * x * P[n] - n * P[n - 1]) / (n + 1)
    if deriv == 0:
        return P[: n_max + 1]

    # P'_{n+1} = P'_{n-1} + (2n+1) P_n, and the same one level up for P''
    D = np.zeros_like(P)
    D[1] = 1.0
    for n in range(1, n_max + 1):
        D[n + 1] = D[n - 1] + (2 * n + 1) * P[n]
    if deriv == 1:
        return D[: n_max + 1]

    D2 = np.zeros_like(P)
    for n in range(1, n_max + 1):
        D2[n + 1] = D2[n - 1] + (2 * n + 1) * D[n]
    if deriv == 2:
        return D2[: n_max + 1]
    raise _fail(f"derivative order {deriv} not supported")


def shape_table(p: int, xi: ArrayLike, deriv: int = 0) -> np.ndarray:
    """
    All shape functions psi_1..psi_{p+1} of degree p, or a derivative.

    Args:
        p: Local polynomial degree
        xi: Reference points in [0, 1]
        deriv: Derivative order with respect to xi (0, 1 or 2)

    Returns:
        Array of shape (p + 1,) + xi.shape
    """
    _check_degree(p)
    xi = np.asarray(xi, dtype=float)
    x = 2.0 * xi - 1.0
    out = np.zeros((p + 1,) + xi.shape)

    if deriv == 0:
        out[0] = 1.0 - xi
        out[1] = xi
        if p >= 2:
            P = legendre_table(p, x)
            n = np.arange(1, p)
            scale = (2.0 * (2 * n + 1)).reshape((-1,) + (1,) * xi.ndim)
            out[2:] = (P[2 : p + 1] - P[0 : p - 1]) / scale
    elif deriv == 1:
        out[0] = -1.0
        out[1] = 1.0
        if p >= 2:
            out[2:] = legendre_table(p - 1, x)[1:p]
    elif deriv == 2:
        if p >= 2:
            out[2:] = 2.0 * legendre_table(p - 1, x, deriv=1)[1:p]
    else:
        raise _fail(f"derivative order {deriv} not supported")
    return out


def eval_psi(p: int, m: int, xi: ArrayLike) -> ArrayLike:
    """Value of psi_m^p at xi."""
    return _eval(p, m, xi, 0)


def eval_dpsi(p: int, m: int, xi: ArrayLike) -> ArrayLike:
    """First reference derivative of psi_m^p at xi."""
    return _eval(p, m, xi, 1)


def eval_d2psi(p: int, m: int, xi: ArrayLike) -> ArrayLike:
    """Second reference derivative of psi_m^p at xi."""
    return _eval(p, m, xi, 2)


def _eval(p: int, m: int, xi: ArrayLike, deriv: int) -> ArrayLike:
    _check_mode(p, m)
    arr = np.asarray(xi, dtype=float)
    _check_points(arr)
    value = shape_table(p, arr, deriv)[m - 1]
    if np.ndim(xi) == 0:
        return float(value)
    return value


def _legendre_endpoint_derivative(n: int, r: int) -> float:
    """r-th xi-derivative of the shifted Legendre L_n at xi = 1."""
    if r > n:
        return 0.0
    return factorial(n + r) / (factorial(r) * factorial(n - r))


@lru_cache(maxsize=None)
def endpoint_derivatives(p: int) -> Tuple[np.ndarray, np.ndarray]:
    """
    Exact derivatives of every shape function at both reference endpoints.

    Uses L_n^(r)(1) = (n+r)! / (r! (n-r)!) and L_n^(r)(0) = (-1)^(n+r) L_n^(r)(1).

    Returns:
        (at0, at1), each of shape (p + 1, p + 1) indexed [mode, r] for r = 0..p
    """
    _check_degree(p)
    at0 = np.zeros((p + 1, p + 1))
    at1 = np.zeros((p + 1, p + 1))
    at0[0, 0], at0[0, 1] = 1.0, -1.0
    at1[0, 1] = -1.0
    at1[1, 0], at0[1, 1], at1[1, 1] = 1.0, 1.0, 1.0
    for m in range(3, p + 2):
        n = m - 2
        for r in range(1, p + 1):
            d1 = _legendre_endpoint_derivative(n, r - 1)
            at1[m - 1, r] = d1
            at0[m - 1, r] = d1 * (-1.0) ** (n + r - 1)
    at0.setflags(write=False)
    at1.setflags(write=False)
    return at0, at1


@lru_cache(maxsize=None)
def lobatto_polynomials(p: int) -> Tuple[Polynomial, ...]:
    """psi_1..psi_{p+1} as power-series polynomials in xi."""
    _check_degree(p)
    to_ref = Polynomial([-1.0, 2.0])
    polys = [Polynomial([1.0, -1.0]), Polynomial([0.0, 1.0])]
    for n in range(1, p):
        bubble = (Legendre.basis(n + 1) - Legendre.basis(n - 1)).convert(kind=Polynomial)
        polys.append(bubble(to_ref) / (2.0 * (2 * n + 1)))
    return tuple(polys)
