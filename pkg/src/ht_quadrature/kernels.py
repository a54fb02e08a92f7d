"""
Stable evaluation of the weakly singular kernel

    calK(s, t) = -(1/pi) ln[ tan(pi (s+t) / 4T) * tan(pi |t-s| / 4T) ]

and of the regularized log factors that remain after the singular logarithms
ln|s-t|, ln(s+t) and ln(2T-s-t) have been split off.

Every factor goes through one primitive, ``logtan_over_x(r) = ln(tan(pi r/4T)/r)``,
which is smooth on [0, 2T) with limit ln(pi/4T) at r = 0.
"""

import enum
import logging
from dataclasses import dataclass, field
from typing import Optional, Union

import numpy as np

from .exceptions import DomainError, InvalidArgumentError


logger = logging.getLogger(__name__)

ArrayLike = Union[float, np.ndarray]


class RegCase(enum.Enum):
    """Which singular logarithms were split off before the regular factor is taken."""

    FIRST_POINT = "first_point"  # ln(tan(pi t/4T) / t), single variable
    FIRST = "first"              # k = l = 1: ln(s+t) and ln|s-t| removed
    LAST = "last"                # k = l = N: ln|s-t| removed, ln(2T-s-t) added back
    GENERAL = "general"          # ln|s-t| removed
    SINGLE = "single"            # N = 1: ln(s+t), ln|s-t| removed, ln(2T-s-t) added back


@dataclass(frozen=True)
class KernelContext:
    """Horizon T plus the series threshold for logtan_over_x."""

    T: float
    eps_series: Optional[float] = field(default=None)

    def __post_init__(self):
        if not self.T > 0:
            raise InvalidArgumentError(f"time horizon must be positive, got T={self.T}", tag="kernels")
        if self.eps_series is None:
            object.__setattr__(self, "eps_series", 1e-4 * self.T)

    @property
    def scale(self) -> float:
        """pi / (4T)."""
        return np.pi / (4.0 * self.T)

    # -- primitives ---------------------------------------------------------

    def _logtan_over_x(self, r: ArrayLike) -> np.ndarray:
        """ln(tan(pi r/4T)/r) for r in [0, 2T), without domain checks."""
        r = np.asarray(r, dtype=float)
        c = self.scale
        x = c * r
        small = r < self.eps_series
        out = np.empty_like(x)
        xs = x[small]
        x2 = xs * xs
        out[small] = x2 / 3.0 + 7.0 * x2 * x2 / 90.0 + np.log(c)
        xl = x[~small]
        out[~small] = np.log(np.tan(xl) / r[~small])
        return out

    def logtan_over_x(self, r: ArrayLike) -> ArrayLike:
        """
        ln(tan(pi r / 4T) / r) for 0 < r < 2T.

        Below eps_series the Taylor expansion x^2/3 + 7x^4/90 of ln(tan(x)/x)
        is used, x = pi r / 4T.
        """
        arr = np.asarray(r, dtype=float)
        if np.any(arr <= 0) or np.any(arr >= 2 * self.T):
            raise DomainError(f"logtan_over_x needs 0 < r < 2T={2 * self.T}")
        return _like(r, self._logtan_over_x(arr))

    def log_tan(self, r: ArrayLike) -> np.ndarray:
        """ln tan(pi r / 4T) for r in (0, 2T), switching to the cot form above T."""
        r = np.asarray(r, dtype=float)
        out = np.empty_like(r)
        lo = r <= self.T
        out[lo] = self._logtan_over_x(r[lo]) + np.log(r[lo])
        rr = 2.0 * self.T - r[~lo]
        out[~lo] = -self._logtan_over_x(rr) - np.log(rr)
        return out

    # -- kernels ------------------------------------------------------------

    def calK(self, s: ArrayLike, t: ArrayLike) -> ArrayLike:
        """Weakly singular kernel calK(s, t); s = t is a domain error."""
        s_arr = np.asarray(s, dtype=float)
        t_arr = np.asarray(t, dtype=float)
        s_arr, t_arr = np.broadcast_arrays(s_arr, t_arr)
        d = np.abs(t_arr - s_arr)
        if np.any(d == 0):
            raise DomainError("calK evaluated on the diagonal s = t")
        sigma = s_arr + t_arr
        if np.any(sigma <= 0) or np.any(sigma > 2 * self.T):
            raise DomainError("calK needs 0 < s + t <= 2T")
        out = np.zeros_like(sigma)
        # calK(T, t) = 0 exactly: the two tangents are reciprocal
        inner = sigma < 2 * self.T
        out[inner] = -(self.log_tan(sigma[inner]) + self.log_tan(d[inner])) / np.pi
        return _like(s if np.ndim(s) else t, out)

    def K_cauchy(self, s: ArrayLike, t: ArrayLike) -> ArrayLike:
        """Cauchy kernel (1/2T)[1/sin(pi(s+t)/2T) + 1/sin(pi(s-t)/2T)]."""
        s_arr = np.asarray(s, dtype=float)
        t_arr = np.asarray(t, dtype=float)
        s_arr, t_arr = np.broadcast_arrays(s_arr, t_arr)
        sigma = s_arr + t_arr
        if np.any(s_arr == t_arr) or np.any(sigma <= 0) or np.any(sigma >= 2 * self.T):
            raise DomainError("K_cauchy needs s != t and 0 < s + t < 2T")
        c = np.pi / (2.0 * self.T)
        out = (1.0 / np.sin(c * sigma) + 1.0 / np.sin(c * (s_arr - t_arr))) / (2.0 * self.T)
        return _like(s if np.ndim(s) else t, out)

    # -- regular factors ----------------------------------------------------

    def reg_factor(self, case: RegCase, s: ArrayLike, t: ArrayLike = 0.0) -> ArrayLike:
        """
        Regularized log factor for one of the quadrature cases.

        For ``FIRST_POINT`` only ``t`` matters (the factor of the one-dimensional
        boundary integral on the first element). The others satisfy, with
        L = ln tan(pi(s+t)/4T) + ln tan(pi|s-t|/4T):

            FIRST:   L = F + ln(s+t) + ln|s-t|
            LAST:    L = F + ln|s-t| - ln(2T-s-t)
            GENERAL: L = F + ln|s-t|
            SINGLE:  L = F + ln(s+t) + ln|s-t| - ln(2T-s-t)
        """
        if case is RegCase.FIRST_POINT:
            t_arr = np.asarray(t, dtype=float)
            if np.any(t_arr < 0) or np.any(t_arr >= 2 * self.T):
                raise DomainError("first-point factor needs 0 <= t < 2T")
            return _like(t, self._logtan_over_x(t_arr))

        s_arr, t_arr = np.broadcast_arrays(np.asarray(s, dtype=float), np.asarray(t, dtype=float))
        sigma = s_arr + t_arr
        d = np.abs(s_arr - t_arr)
        if np.any(sigma < 0) or np.any(sigma > 2 * self.T) or np.any(d >= 2 * self.T):
            raise DomainError(f"regular factor {case.value} evaluated outside [0, T]^2")
        out = self._regular(case, sigma, d)
        return _like(s if np.ndim(s) else t, out)

    def _regular(self, case: RegCase, sigma: np.ndarray, d: np.ndarray) -> np.ndarray:
        """Regular factor from sigma = s+t and d = |s-t|, no domain checks."""
        two_t = 2.0 * self.T
        if case is RegCase.FIRST:
            return self._logtan_over_x(sigma) + self._logtan_over_x(d)
        if case is RegCase.LAST:
            return -self._logtan_over_x(two_t - sigma) + self._logtan_over_x(d)
        if case is RegCase.GENERAL:
            return self.log_tan(sigma) + self._logtan_over_x(d)
        if case is RegCase.SINGLE:
            out = np.empty_like(sigma)
            lo = sigma <= self.T
            out[lo] = self._logtan_over_x(sigma[lo]) + np.log(two_t - sigma[lo])
            rest = two_t - sigma[~lo]
            out[~lo] = -self._logtan_over_x(rest) - np.log(sigma[~lo])
            return out + self._logtan_over_x(d)
        raise InvalidArgumentError(f"unsupported regular case {case}", tag="kernels")


def _like(template: ArrayLike, values: np.ndarray) -> ArrayLike:
    if np.ndim(template) == 0 and np.ndim(values) == 0:
        return float(values)
    return values
