"""
Spectral realization of the modified Hilbert transformation.

For v = sum_k v_k sin(lambda_k t) with lambda_k = (pi/2 + k pi)/T the transform
is H_T v = sum_k v_k cos(lambda_k t). Everything in this module works from that
definition: the matrix oracle, the pointwise appliers and the mode integrals
of piecewise polynomials.

Mode integrals E(lambda) = int u(t) e^{i lambda t} dt of a piecewise polynomial
are a finite sum of terms D e^{i lambda x} / (i lambda)^q, with D the jumps of
u and its derivatives at the breakpoints x. The oracle sums the first K_F
modes directly and the remaining infinite tail exactly through those terms.
"""

import cmath
import logging
import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Callable, Optional, Sequence, Tuple, Union

import numpy as np
from numpy.polynomial import Polynomial
from scipy import special
from tqdm import tqdm

from .config import SpectralConfig
from .exceptions import DomainError, InvalidArgumentError, OracleConvergenceError
from .kernels import KernelContext
from .mesh import DegreeVector, DofMap, TemporalMesh
from .quadrature import gauss_legendre, gauss_log, graded_rule
from .shapefn import endpoint_derivatives, lobatto_polynomials, shape_table


logger = logging.getLogger(__name__)

ArrayLike = Union[float, np.ndarray]

# below this reference frequency the mode integral is computed by panel Gauss rules
_OMEGA_MIN = 8.0
_PANEL_PHASE = 16.0
_PANEL_POINTS = 24

_GENSERIES_TERMS = 64
_EULER_MACLAURIN_TERMS = 30
_EULER_MACLAURIN_START = 40
_CF_MAX_ITER = 20000
# longest direct sum bridging to the generating series
_EXPLICIT_CAP = 20000

MODE_CHUNK = 20000

KINDS = ("M", "A", "B")


def _as_polynomial(poly) -> Polynomial:
    """Power-series polynomial on the default domain."""
    if isinstance(poly, Polynomial):
        return poly.convert()
    return Polynomial(np.asarray(poly, dtype=float))


def frequencies(T: float, k_start: int, k_stop: int) -> np.ndarray:
    """lambda_k = (pi/2 + k pi) / T for k_start <= k < k_stop."""
    k = np.arange(k_start, k_stop, dtype=float)
    return (k + 0.5) * np.pi / T


# ---------------------------------------------------------------------------
# piecewise polynomials
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class PiecewisePolynomial:
    """
    Piecewise polynomial on a partition of [0, T].

    Each piece is stored in its reference variable xi = (t - a)/h on [0, 1],
    which keeps high-degree pieces on far-away elements well conditioned.
    The function is zero outside [0, T].
    """

    breakpoints: np.ndarray
    pieces: Tuple[Polynomial, ...]

    def __post_init__(self):
        t = np.asarray(self.breakpoints, dtype=float)
        if t.ndim != 1 or t.size != len(self.pieces) + 1:
            raise InvalidArgumentError("need one piece per interval", tag="spectral")
        if np.any(np.diff(t) <= 0):
            raise InvalidArgumentError("breakpoints must increase", tag="spectral")
        object.__setattr__(self, "breakpoints", t)
        object.__setattr__(self, "pieces", tuple(Polynomial(p.coef) for p in self.pieces))

    @classmethod
    def from_physical(
        cls, breakpoints: Sequence[float], polys: Sequence[Polynomial]
    ) -> "PiecewisePolynomial":
        """Build from pieces written in the physical variable t."""
        t = np.asarray(breakpoints, dtype=float)
        pieces = []
        for ell, poly in enumerate(polys):
            a, h = t[ell], t[ell + 1] - t[ell]
            pieces.append(_as_polynomial(poly)(Polynomial([a, h])))
        return cls(t, tuple(pieces))

    @classmethod
    def from_fe(
        cls, mesh: TemporalMesh, deg: DegreeVector, dofmap: DofMap, coeffs: np.ndarray
    ) -> "PiecewisePolynomial":
        """The finite element function sum_i coeffs[i] phi_i (0-based global indices)."""
        coeffs = np.asarray(coeffs, dtype=float)
        pieces = []
        for ell in range(1, mesh.N + 1):
            local = coeffs[dofmap.element_dofs[ell - 1]]
            basis = lobatto_polynomials(deg[ell])
            piece = Polynomial([0.0])
            for c, psi in zip(local, basis):
                piece = piece + c * psi
            pieces.append(piece)
        return cls(mesh.breakpoints, tuple(pieces))

    @property
    def T(self) -> float:
        return float(self.breakpoints[-1])

    @property
    def degree(self) -> int:
        return max(p.degree() for p in self.pieces)

    def __call__(self, t: ArrayLike) -> ArrayLike:
        t_arr = np.atleast_1d(np.asarray(t, dtype=float))
        out = np.zeros_like(t_arr)
        idx = np.clip(np.searchsorted(self.breakpoints, t_arr, side="right") - 1, 0, len(self.pieces) - 1)
        inside = (t_arr >= self.breakpoints[0]) & (t_arr <= self.breakpoints[-1])
        h = np.diff(self.breakpoints)
        for ell, piece in enumerate(self.pieces):
            sel = inside & (idx == ell)
            out[sel] = piece((t_arr[sel] - self.breakpoints[ell]) / h[ell])
        return float(out[0]) if np.ndim(t) == 0 else out

    def jumps(self, orders: int) -> np.ndarray:
        """
        Jump coefficients D[b, r] = (-1)^r [u^(r)(x_b-) - u^(r)(x_b+)] for r < orders.

        The function is extended by zero outside [0, T].
        """
        D = np.zeros((self.breakpoints.size, orders))
        h = np.diff(self.breakpoints)
        for ell, piece in enumerate(self.pieces):
            for r in range(orders):
                d = piece.deriv(r) if r else piece
                scale = (-1.0) ** r / h[ell] ** r
                D[ell + 1, r] += scale * d(1.0)
                D[ell, r] -= scale * d(0.0)
        return D


# ---------------------------------------------------------------------------
# exact mode integrals
# ---------------------------------------------------------------------------


def _reference_fourier(
    at0: np.ndarray, at1: np.ndarray, sampler: Callable[[np.ndarray], np.ndarray], omega: np.ndarray
) -> np.ndarray:
    """
    int_0^1 g_f(xi) e^{i omega xi} d xi for a family of polynomials g_f.

    Args:
        at0, at1: (F, R) xi-derivatives of order 0..R-1 at 0 and 1
        sampler: xi -> (F, len(xi)) values of the family
        omega: (K,) non-negative reference frequencies

    Returns:
        (F, K) complex integrals
    """
    F, R = at0.shape
    out = np.empty((F, omega.size), dtype=complex)
    degree = R - 1
    threshold = max(_OMEGA_MIN, degree * (degree + 1.0))
    low = omega < threshold

    if np.any(low):
        w_low = omega[low]
        panels = max(1, int(math.ceil(w_low.max() / _PANEL_PHASE)))
        rule = gauss_legendre(_PANEL_POINTS)
        edges = np.linspace(0.0, 1.0, panels + 1)
        nodes = (edges[:-1, None] + np.diff(edges)[:, None] * rule.nodes[None, :]).ravel()
        weights = (np.diff(edges)[:, None] * rule.weights[None, :]).ravel()
        values = sampler(nodes) * weights
        out[:, low] = values @ np.exp(1j * np.outer(nodes, w_low))

    if np.any(~low):
        w_high = omega[~low]
        phase = np.exp(1j * w_high)
        acc = np.zeros((F, w_high.size), dtype=complex)
        inv = 1.0 / (1j * w_high)
        power = inv.copy()
        for r in range(R):
            acc += (-1.0) ** r * (at1[:, r : r + 1] * phase - at0[:, r : r + 1]) * power
            power = power * inv
        out[:, ~low] = acc
    return out


def poly_trig_integral(poly: Union[Polynomial, Sequence[float]], a: float, b: float, lam: float, kind: str) -> float:
    """
    int_a^b poly(t) trig(lam t) dt, exact up to rounding.

    Args:
        poly: Polynomial in t (or its power-series coefficients)
        a, b: Interval with b > a
        lam: Frequency, lam > 0
        kind: "sin" or "cos"
    """
    if kind not in ("sin", "cos"):
        raise InvalidArgumentError(f"kind must be sin or cos, got '{kind}'", tag="spectral")
    if not b > a or not lam > 0:
        raise InvalidArgumentError("poly_trig_integral needs b > a and lam > 0", tag="spectral")
    h = b - a
    Q = _as_polynomial(poly)(Polynomial([a, h]))
    R = max(Q.degree(), 0) + 1
    at0 = np.array([[Q.deriv(r)(0.0) if r else Q(0.0) for r in range(R)]])
    at1 = np.array([[Q.deriv(r)(1.0) if r else Q(1.0) for r in range(R)]])
    value = h * np.exp(1j * lam * a) * _reference_fourier(
        at0, at1, lambda xi: Q(xi)[None, :], np.array([lam * h])
    )[0, 0]
    return float(value.imag if kind == "sin" else value.real)


@dataclass(frozen=True)
class ModeIntegrals:
    """
    E[i, k] = int phi_i(t) e^{i lambda_k t} dt (or of d/dt phi_i).

    S = Im E and C = Re E are the sine and cosine coefficient integrals.
    """

    lam: np.ndarray
    E: np.ndarray

    @property
    def S(self) -> np.ndarray:
        return self.E.imag

    @property
    def C(self) -> np.ndarray:
        return self.E.real


def mode_integrals(
    mesh: TemporalMesh, deg: DegreeVector, dofmap: DofMap, lam: np.ndarray, derivative: bool = False
) -> ModeIntegrals:
    """Mode integrals of every global basis function (or its derivative) at frequencies ``lam``."""
    E = np.zeros((dofmap.M, lam.size), dtype=complex)
    for ell in range(1, mesh.N + 1):
        a, _ = mesh.element(ell)
        h = float(mesh.h[ell - 1])
        p = deg[ell]
        at0, at1 = endpoint_derivatives(p)
        if derivative:
            d0, d1, order, scale = at0[:, 1:], at1[:, 1:], 1, 1.0
        else:
            d0, d1, order, scale = at0, at1, 0, h
        local = _reference_fourier(d0, d1, lambda xi: shape_table(p, xi, order), lam * h)
        local *= scale * np.exp(1j * lam * a)[None, :]
        np.add.at(E, dofmap.element_dofs[ell - 1], local)
    return ModeIntegrals(lam, E)


def basis_jumps(
    mesh: TemporalMesh, deg: DegreeVector, dofmap: DofMap, derivative: bool, orders: int
) -> np.ndarray:
    """
    Jump coefficients D[i, b, r] of every global basis function (or its derivative).

    D[i, b, r] = (-1)^r [u^(r)(x_b-) - u^(r)(x_b+)] with t-derivatives, u extended by 0.
    """
    D = np.zeros((dofmap.M, mesh.N + 1, orders))
    shift = 1 if derivative else 0
    for ell in range(1, mesh.N + 1):
        h = float(mesh.h[ell - 1])
        at0, at1 = endpoint_derivatives(deg[ell])
        dofs = dofmap.element_dofs[ell - 1]
        R = min(orders, at0.shape[1] - shift)
        r = np.arange(R)
        scale = (-1.0) ** r / h ** (r + shift)
        # dofs are distinct within an element
        D[dofs, ell, :R] += at1[:, shift : shift + R] * scale
        D[dofs, ell - 1, :R] -= at0[:, shift : shift + R] * scale
    return D


# ---------------------------------------------------------------------------
# exact tails  sum_{k >= K} e^{i phi k} (k + 1/2)^{-q}
# ---------------------------------------------------------------------------


@lru_cache(maxsize=None)
def _genseries_coefficients(phi: float, n_terms: int) -> np.ndarray:
    """Taylor coefficients of 1 / (1 - e^{i phi} e^t), the n-th scaled by phi^n."""
    z = np.exp(1j * phi)
    b = np.zeros(n_terms, dtype=complex)
    b[0] = 1.0 / (1.0 - z)
    # phi^j / j!
    weights = np.cumprod(np.concatenate(([1.0], phi / np.arange(1, n_terms))))
    factor = z / (1.0 - z)
    for n in range(1, n_terms):
        b[n] = factor * np.dot(b[n - 1 :: -1][:n], weights[1 : n + 1])
    return b


def _genseries(phi: float, q: int, K: int) -> complex:
    """Generating-function expansion, accurate once phi (K + 1/2) >= 2 (q + 50)."""
    U = K + 0.5
    b = _genseries_coefficients(phi, _GENSERIES_TERMS)
    n = np.arange(1, _GENSERIES_TERMS)
    # (-1)^n (q)_n U^{-q-n} / phi^n as a running product
    c = U ** (-float(q)) * np.cumprod(np.concatenate(([1.0], -(q + n - 1.0) / (phi * U))))
    total = complex(np.exp(1j * phi * K) * np.dot(b, c))
    if not cmath.isfinite(total):
        logger.debug(f"generating series not finite at phi={phi:g}, q={q}, K={K}; using Euler-Maclaurin")
        return _euler_maclaurin(phi, q, K)
    return total


def _expint_cf(q: int, z: complex) -> complex:
    """E_q(z) = int_1^inf e^{-z t} t^{-q} dt by its continued fraction, |z| >= 2 off the negative axis."""
    b = z + q
    c = 1.0 / 1e-300
    d = 1.0 / b
    h = d
    for i in range(1, _CF_MAX_ITER):
        a = -i * (q - 1.0 + i)
        b += 2.0
        d = 1.0 / (a * d + b)
        c = b + a / c
        delta = c * d
        h *= delta
        if abs(delta - 1.0) < 1e-16:
            return complex(h * cmath.exp(-z))
    raise OracleConvergenceError(f"continued fraction for E_{q}({z}) did not converge")


def _power_exp_integral(phi: float, q: int, U: float) -> complex:
    """int_U^inf e^{i phi u} u^{-q} du for phi > 0."""
    x = phi * U
    if x >= 2.0:
        return U ** (1.0 - q) * _expint_cf(q, -1j * x)
    # upward recurrence loses at most a factor e^x
    si, ci = special.sici(x)
    integral = -ci + 1j * (0.5 * np.pi - si)
    for m in range(2, q + 1):
        integral = (np.exp(1j * x) * U ** (1.0 - m) + 1j * phi * integral) / (m - 1)
    return complex(integral)


def _euler_maclaurin(phi: float, q: int, K: int) -> complex:
    """Euler-Maclaurin for small phi, summing the first terms directly while k + 1/2 < q + 40."""
    K0 = max(K, q + _EULER_MACLAURIN_START)
    head = 0j
    if K0 > K:
        k = np.arange(K, K0, dtype=float)
        head = complex(np.sum(np.exp(1j * phi * k) * (k + 0.5) ** (-float(q))))
    K = K0
    U = K + 0.5
    integral = _power_exp_integral(phi, q, U)

    base = np.exp(1j * phi * K)
    total = np.exp(-0.5j * phi) * integral + 0.5 * base * U ** (-q)
    B = special.bernoulli(2 * _EULER_MACLAURIN_TERMS)
    previous = np.inf
    for j in range(1, _EULER_MACLAURIN_TERMS + 1):
        m = 2 * j - 1
        l = np.arange(m + 1)
        deriv = base * np.sum(
            special.comb(m, l) * (1j * phi) ** (m - l) * (-1.0) ** l * special.poch(q, l) * U ** (-q - l.astype(float))
        )
        term = B[2 * j] / math.factorial(2 * j) * deriv
        if abs(term) > previous:
            break
        total -= term
        previous = abs(term)
        if previous <= 1e-18 * abs(total):
            break
    return head + complex(total)


def tail_sum(phi: float, q: int, K: int) -> complex:
    """
    sum_{k >= K} e^{i phi k} (k + 1/2)^{-q} for phi in [-pi, pi], q >= 1.

    Raises:
        DomainError: for the divergent case phi = 0, q = 1
    """
    if q < 1:
        raise InvalidArgumentError(f"tail exponent must be >= 1, got {q}", tag="spectral")
    if phi < 0:
        return tail_sum(-phi, q, K).conjugate()
    U = K + 0.5
    if phi == 0.0:
        if q == 1:
            raise DomainError("divergent tail: non-oscillating harmonic series", tag="spectral")
        return complex((-1.0) ** q * special.polygamma(q - 1, U) / math.factorial(q - 1))

    threshold = 2.0 * (q + 50)
    if phi * U >= threshold:
        return _genseries(phi, q, K)
    if phi * U < 1.0:
        return _euler_maclaurin(phi, q, K)
    K2 = int(math.ceil(threshold / phi - 0.5))
    if K2 - K > _EXPLICIT_CAP:
        return _euler_maclaurin(phi, q, K)
    k = np.arange(K, K2, dtype=float)
    explicit = np.sum(np.exp(1j * phi * k) * (k + 0.5) ** (-float(q)))
    return complex(explicit) + _genseries(phi, q, K2)


def _tail_power(x: float, q: int, K: int, T: float) -> complex:
    """sum_{k >= K} e^{i lambda_k x} / lambda_k^q."""
    rho = x / (2.0 * T)
    phi = 2.0 * np.pi * (rho - round(rho))
    return (T / np.pi) ** q * np.exp(0.5j * np.pi * x / T) * tail_sum(phi, q, K)


def _pair_tail_weights(breakpoints: np.ndarray, R: int, K: int, T: float) -> np.ndarray:
    """
    W[b, r, c, s] with sum_{k>=K} E_u E_w + E_u conj(E_w) = sum Du[b,r] W[b,r,c,s] Dw[c,s].
    """
    nb = breakpoints.size
    W = np.zeros((nb, R, nb, R), dtype=complex)
    cache = {}

    def tp(x: float, q: int) -> complex:
        key = (x, q)
        if key not in cache:
            cache[key] = _tail_power(x, q, K, T)
        return cache[key]

    for b in range(nb):
        for c in range(nb):
            xs = breakpoints[b] + breakpoints[c]
            xd = breakpoints[b] - breakpoints[c]
            for r in range(R):
                for s in range(R):
                    q = r + s + 2
                    W[b, r, c, s] = 1j ** (-q) * tp(xs, q) + 1j ** (s - r) * tp(xd, q)
    return W


# ---------------------------------------------------------------------------
# matrix oracle
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class OracleResult:
    """Oracle matrix with its self-consistency certificate."""

    kind: str
    matrix: np.ndarray
    certificate: float
    K_F: int
    tol: float
    accelerated: bool
    # max(1, max |entry|); the certificate is measured against tol * scale
    scale: float = 1.0

    @property
    def certified(self) -> bool:
        return self.certificate <= self.tol * self.scale

    def metadata(self) -> dict:
        return {
            "kind": self.kind,
            "K_F": self.K_F,
            "tol": self.tol,
            "accelerate": self.accelerated,
            "certificate": self.certificate,
            "scale": self.scale,
            "selfconsistency": f"{self.certificate:.3e} <= {self.tol:g} * {self.scale:.3e}" if self.certified
            else f"{self.certificate:.3e} > {self.tol:g} * {self.scale:.3e}",
        }


def _kind_derivatives(kind: str) -> Tuple[bool, bool]:
    if kind not in KINDS:
        raise InvalidArgumentError(f"unknown matrix kind '{kind}'", tag="spectral")
    return {"M": (False, False), "A": (False, True), "B": (True, True)}[kind]


def partial_sum(
    kind: str,
    mesh: TemporalMesh,
    deg: DegreeVector,
    dofmap: DofMap,
    k_start: int,
    k_stop: int,
    progress: bool = False,
) -> np.ndarray:
    """(2/T) sum_{k_start <= k < k_stop} S^u_{ik} C^w_{jk}, in fixed ascending chunks."""
    du, dw = _kind_derivatives(kind)
    T = mesh.T
    out = np.zeros((dofmap.M, dofmap.M))
    starts = range(k_start, k_stop, MODE_CHUNK)
    for start in tqdm(starts, desc=f"Oracle {kind} modes", disable=not progress):
        lam = frequencies(T, start, min(start + MODE_CHUNK, k_stop))
        Eu = mode_integrals(mesh, deg, dofmap, lam, du)
        Ew = Eu if dw == du else mode_integrals(mesh, deg, dofmap, lam, dw)
        out += Eu.S @ Ew.C.T
    return (2.0 / T) * out


def tail_correction(kind: str, mesh: TemporalMesh, deg: DegreeVector, dofmap: DofMap, K: int) -> np.ndarray:
    """Exact (2/T) sum_{k >= K} S^u_{ik} C^w_{jk} from the jump expansion."""
    du, dw = _kind_derivatives(kind)
    R = deg.p_max + 1
    Du = basis_jumps(mesh, deg, dofmap, du, R)
    Dw = basis_jumps(mesh, deg, dofmap, dw, R)
    W = _pair_tail_weights(mesh.breakpoints, R, K, mesh.T)
    return np.einsum("ibr,brcs,jcs->ij", Du, W, Dw).imag / mesh.T


def _oracle_at(kind, mesh, deg, dofmap, K_F, accelerate, progress) -> np.ndarray:
    value = partial_sum(kind, mesh, deg, dofmap, 0, K_F, progress)
    if accelerate:
        value = value + tail_correction(kind, mesh, deg, dofmap, K_F)
    return value


def oracle_matrix(
    kind: str,
    mesh: TemporalMesh,
    deg: DegreeVector,
    dofmap: DofMap,
    cfg: Optional[SpectralConfig] = None,
    progress: bool = False,
) -> OracleResult:
    """
    Spectral reference for M^HT (kind "M"), A^HT ("A") or B^HT ("B").

    entry[i, j] = (2/T) sum_k S^u_{ik} C^w_{jk}, (u, w) = (phi, phi), (phi, dphi),
    (dphi, dphi). The certificate is the max-norm distance between the results
    at K_F and 2 K_F; it passes when at most tol * max(1, max |entry|).

    Raises:
        OracleConvergenceError: certificate above that bound while cfg.certify is on
    """
    cfg = cfg or SpectralConfig()
    cfg.validate()
    logger.info(f"Oracle {kind}: K_F={cfg.K_F}, accelerate={cfg.accelerate}, M={dofmap.M}")

    coarse = _oracle_at(kind, mesh, deg, dofmap, cfg.K_F, cfg.accelerate, progress)
    fine = coarse + partial_sum(kind, mesh, deg, dofmap, cfg.K_F, 2 * cfg.K_F, progress)
    if cfg.accelerate:
        fine = fine - tail_correction(kind, mesh, deg, dofmap, cfg.K_F) + tail_correction(
            kind, mesh, deg, dofmap, 2 * cfg.K_F
        )
    certificate = float(np.max(np.abs(fine - coarse)))
    scale = max(1.0, float(np.max(np.abs(fine)))) if fine.size else 1.0
    result = OracleResult(kind, fine, certificate, cfg.K_F, cfg.tol, cfg.accelerate, scale)

    if not result.certified:
        message = f"oracle {kind} certificate {certificate:.3e} exceeds tol {cfg.tol:g} * scale {scale:.3e}"
        if cfg.certify:
            raise OracleConvergenceError(message, certificate=certificate)
        logger.warning(message)
    else:
        logger.info(f"Oracle {kind}: certificate {certificate:.3e}")
    return result


# ---------------------------------------------------------------------------
# pointwise appliers
# ---------------------------------------------------------------------------


def sine_coefficients(v: PiecewisePolynomial, K_F: int) -> np.ndarray:
    """v_k = (2/T) int v sin(lambda_k t) dt for k < K_F."""
    T = v.T
    lam = frequencies(T, 0, K_F)
    return (2.0 / T) * _piecewise_fourier(v, lam).imag


def _piecewise_fourier(v: PiecewisePolynomial, lam: np.ndarray) -> np.ndarray:
    E = np.zeros(lam.size, dtype=complex)
    h = np.diff(v.breakpoints)
    for ell, Q in enumerate(v.pieces):
        R = max(Q.degree(), 0) + 1
        at0 = np.array([[Q.deriv(r)(0.0) if r else Q(0.0) for r in range(R)]])
        at1 = np.array([[Q.deriv(r)(1.0) if r else Q(1.0) for r in range(R)]])
        local = _reference_fourier(at0, at1, lambda xi, Q=Q: Q(xi)[None, :], lam * h[ell])[0]
        E += h[ell] * np.exp(1j * lam * v.breakpoints[ell]) * local
    return E


def ht_apply_spectral(v_sine_coeffs: Sequence[float], t: ArrayLike, T: float) -> ArrayLike:
    """Truncated H_T v(t) = sum_k v_k cos(lambda_k t)."""
    coeffs = np.asarray(v_sine_coeffs, dtype=float)
    t_arr = np.atleast_1d(np.asarray(t, dtype=float))
    lam = frequencies(T, 0, coeffs.size)
    out = np.cos(np.outer(t_arr, lam)) @ coeffs
    return float(out[0]) if np.ndim(t) == 0 else out


def ht_apply_piecewise(v: PiecewisePolynomial, t: ArrayLike, K_F: int = 4000) -> ArrayLike:
    """
    H_T v(t) for a piecewise polynomial: K_F modes plus the exact tail.

    Raises:
        DomainError: at a jump of v, where H_T v has a log singularity
    """
    T = v.T
    t_arr = np.atleast_1d(np.asarray(t, dtype=float))
    coeffs = sine_coefficients(v, K_F)
    head = np.atleast_1d(ht_apply_spectral(coeffs, t_arr, T))

    D = v.jumps(v.degree + 1)
    tail = np.zeros_like(t_arr)
    for idx, x in enumerate(t_arr):
        acc = 0.0j
        for b, xb in enumerate(v.breakpoints):
            for r in range(D.shape[1]):
                if D[b, r] == 0.0:
                    continue
                q = r + 1
                acc += D[b, r] * 1j ** (-q) * (_tail_power(xb + x, q, K_F, T) + _tail_power(xb - x, q, K_F, T))
        tail[idx] = acc.imag / T
    out = head + tail
    return float(out[0]) if np.ndim(t) == 0 else out


def _lemma22_reference(Q: Polynomial, a: float, h: float, t: float, kctx: KernelContext) -> float:
    """Weakly singular representation of one piece Q(xi), xi = (s - a)/h, at a point t."""
    b = a + h
    fa, fb = float(Q(0.0)), float(Q(1.0))
    dQ = Q.deriv()
    n_pts = max(dQ.degree() + 2, 8)

    zero_tol = 1e-12 * max(1.0, float(np.max(np.abs(Q.coef))))
    value = 0.0
    for x, fx in ((b, -fb), (a, fa)):
        if x == t:
            if abs(fx) > zero_tol:
                raise DomainError(f"H_T is singular at t={t}: the function does not vanish there")
            continue
        if fx == 0.0:
            continue
        value += fx * kctx.calK(x, t)

    if dQ.degree() == 0 and dQ.coef[0] == 0.0:
        return value

    if t <= a or t >= b:
        if t == a or t == b:
            # endpoint singularity: log map on the whole element
            return value + _split_integral(dQ, a, h, t, 0.0 if t == a else 1.0, n_pts, kctx)
        xi, w = graded_rule(0.0, 1.0, max(n_pts, 16), levels=20, toward="both")
        return value + float(np.sum(w * dQ(xi) * kctx.calK(a + h * xi, t)))

    return value + _split_integral(dQ, a, h, t, (t - a) / h, n_pts, kctx)


def _split_integral(dQ: Polynomial, a: float, h: float, t: float, tau: float, n_pts: int, kctx: KernelContext) -> float:
    """int_0^1 dQ(xi) calK(a + h xi, t) d xi with the ln|xi - tau| part on the log rule."""
    gl = gauss_legendre(n_pts)
    gj = gauss_log(n_pts)
    singular = 0.0
    smooth = 0.0
    for lo, hi in ((0.0, tau), (tau, 1.0)):
        length = hi - lo
        if length <= 0.0:
            continue
        # u in [0, 1] measured from tau
        sign = 1.0 if lo == tau else -1.0
        xi_gl = tau + sign * length * gl.nodes
        xi_gj = tau + sign * length * gj.nodes
        singular += length * (
            math.log(length) * np.dot(gl.weights, dQ(xi_gl)) - np.dot(gj.weights, dQ(xi_gj))
        )
        nodes, weights = graded_rule(lo, hi, max(n_pts, 16), levels=12, toward="both")
        s = a + h * nodes
        regular = kctx.log_tan(s + t) + kctx._logtan_over_x(np.abs(s - t)) + math.log(h)
        smooth += float(np.sum(weights * dQ(nodes) * regular))
    return -(smooth + singular) / np.pi


def ht_pointwise_lemma22(f: Polynomial, a: float, b: float, t: float, T: float) -> float:
    """
    H_T of f restricted to [a, b] (zero elsewhere), evaluated at t:

        -f(b) calK(b, t) + f(a) calK(a, t) + int_a^b f'(s) calK(s, t) ds

    Raises:
        DomainError: t in {a, b} while f does not vanish there
    """
    if not (0.0 <= a < b <= T):
        raise InvalidArgumentError(f"need 0 <= a < b <= T, got [{a}, {b}] with T={T}", tag="spectral")
    if not 0.0 < t < T:
        raise DomainError(f"t={t} outside (0, T)", tag="spectral")
    Q = _as_polynomial(f)(Polynomial([a, b - a]))
    return _lemma22_reference(Q, a, b - a, t, KernelContext(T))


def ht_apply_lemma22(v: PiecewisePolynomial, t: ArrayLike) -> ArrayLike:
    """Sum of the per-piece weakly singular representations."""
    kctx = KernelContext(v.T)
    t_arr = np.atleast_1d(np.asarray(t, dtype=float))
    h = np.diff(v.breakpoints)
    out = np.zeros_like(t_arr)
    for idx, x in enumerate(t_arr):
        if not 0.0 < x < v.T:
            raise DomainError(f"t={x} outside (0, T)", tag="spectral")
        out[idx] = sum(
            _lemma22_reference(Q, float(v.breakpoints[ell]), float(h[ell]), float(x), kctx)
            for ell, Q in enumerate(v.pieces)
        )
    return float(out[0]) if np.ndim(t) == 0 else out


def ht_apply_cauchy(v: Callable[[np.ndarray], np.ndarray], t: float, T: float, K: int = 20) -> float:
    """
    Principal-value form int [v(s) - v(t)] K(s, t) ds + v(t) calK(0, t).

    ``v`` must accept arrays. Graded rules on (0, t) and (t, T) resolve the
    removable singularity at s = t.
    """
    if not 0.0 < t < T:
        raise DomainError(f"t={t} outside (0, T)", tag="spectral")
    kctx = KernelContext(T)
    vt = float(np.asarray(v(np.array([t])))[0])
    total = vt * kctx.calK(0.0, t)
    for lo, hi in ((0.0, t), (t, T)):
        s, w = graded_rule(lo, hi, K, levels=16, toward="both")
        total += float(np.sum(w * (np.asarray(v(s)) - vt) * kctx.K_cauchy(s, t)))
    return total
