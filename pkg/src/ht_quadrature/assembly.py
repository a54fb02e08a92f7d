"""
Assembly of the matrices M^HT, A^HT and B^HT.

Entries are written through the weakly singular representation of H_T, so
every local block is a double integral

    Q(o, i)[n, m] = int_0^1 int_0^1 o_m(eta) i_n(xi) calK(s, t) dxi deta,
    s = t_{k-1} + xi h_k,  t = t_{l-1} + eta h_l,

over the row element k and the column element l. The kernel is split as

    calK = -(1/pi) [F + ln|s-t| + c11 ln(s+t) - cNN ln(2T-s-t)]

with F the regular factor of the pair. Each piece is integrated with its own
rule (Duffy-split tensor Gauss for F, the log tensor identity or a Duffy
split with log-weight rules for the logarithms), and all pieces of a pair are
concatenated into one weighted point set (xi_p, eta_p, w_p). A block is then
sum_p w_p i_n(xi_p) o_m(eta_p), shared by all three matrix kinds.

Gauss-Legendre factors whose integrand has a log singularity less than one
element length outside the element are replaced by composite rules graded
geometrically toward it, so the default K holds on strongly graded meshes.
"""

import logging
import math
import threading
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Dict, List, Optional, Tuple

import numpy as np
from tqdm import tqdm

from .exceptions import InvalidArgumentError
from .kernels import KernelContext, RegCase
from .mesh import DegreeVector, DofMap, TemporalMesh, build_dofmap
from .quadrature import K_MAX, gauss_legendre, gauss_log, graded_rule, logtensor_points
from .shapefn import shape_table


logger = logging.getLogger(__name__)

KINDS = ("M", "A", "B")
DEFAULT_K = 12
# panel ratio of the composite rules used next to a log singularity outside the element
GRADING_RATIO = 0.5
MAX_GRADING_LEVELS = 48


def _fail(message: str) -> InvalidArgumentError:
    return InvalidArgumentError(message, tag="assembly")


@dataclass(frozen=True)
class QuadConfig:
    """
    Quadrature orders for local blocks.

    K_reg drives every Gauss-Legendre rule on a non-polynomial integrand.
    K_log and K_1..K_5 are chosen so that the polynomial and log-weighted
    parts are exact; they satisfy K_1, K_2, K_5 >= (p_max+1)/2 and
    K_3 = K_4 = K_log >= p_max + 1/2.
    """

    K_reg: int
    K_log: int
    K_1: int
    K_2: int
    K_3: int
    K_4: int
    K_5: int

    @classmethod
    def from_K(cls, K: Optional[int], p_max: int, K_log: Optional[int] = None) -> "QuadConfig":
        """
        Build all orders from the single knob K.

        Args:
            K: Gauss-Legendre order; None gives max(ceil((p_max+1)/2), 12)
            p_max: Largest local degree
            K_log: Log-rule order; None gives ceil(p_max + 1/2) + 2
        """
        half = int(math.ceil((p_max + 1) / 2))
        if K is None:
            K = max(half, DEFAULT_K)
        if K_log is None:
            K_log = p_max + 1 + 2
        K_reg = max(int(K), half)
        if K_reg != K:
            logger.debug(f"K={K} raised to {K_reg} for degree {p_max}")
        cfg = cls(
            K_reg=K_reg,
            K_log=int(K_log),
            K_1=max(int(K), half),
            K_2=max(int(K), half),
            K_3=int(K_log),
            K_4=int(K_log),
            K_5=max(int(K), half),
        )
        cfg.validate(p_max)
        return cfg

    def validate(self, p_max: int) -> None:
        half = int(math.ceil((p_max + 1) / 2))
        if self.K_log < p_max + 1:
            raise _fail(f"K_log={self.K_log} below the exactness bound {p_max + 1}")
        if min(self.K_reg, self.K_1, self.K_2, self.K_5) < half:
            raise _fail(f"Gauss-Legendre orders must be >= {half} for degree {p_max}")
        if max(self.K_reg, self.K_log, self.K_1, self.K_2, self.K_3, self.K_4, self.K_5) > K_MAX:
            raise _fail(f"quadrature orders above {K_MAX}")


@dataclass(frozen=True)
class LocalBlock:
    """(p_k+1) x (p_l+1) block of one element pair."""

    k: int
    ell: int
    values: np.ndarray

    @property
    def rows(self) -> int:
        return self.values.shape[0]

    @property
    def cols(self) -> int:
        return self.values.shape[1]


@dataclass(frozen=True)
class GlobalMatrix:
    """Assembled M x M matrix of one kind."""

    kind: str
    values: np.ndarray

    @property
    def M(self) -> int:
        return self.values.shape[0]

    @property
    def tilde(self) -> np.ndarray:
        """Trailing (M-1) x (M-1) block, the matrix on the zero-trace space."""
        return self.values[1:, 1:]


@dataclass
class PointRule:
    """Weighted points in the reference square (or on the reference interval)."""

    xi: np.ndarray
    eta: np.ndarray
    w: np.ndarray

    @classmethod
    def concat(cls, parts: List["PointRule"]) -> "PointRule":
        return cls(
            np.concatenate([p.xi for p in parts]),
            np.concatenate([p.eta for p in parts]),
            np.concatenate([p.w for p in parts]),
        )

    def scaled(self, factor: float) -> "PointRule":
        return PointRule(self.xi, self.eta, factor * self.w)


def _tensor(K1: int, K2: Optional[int] = None) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    r1 = gauss_legendre(K1)
    r2 = gauss_legendre(K2 or K1)
    x = np.repeat(r1.nodes, r2.K)
    y = np.tile(r2.nodes, r1.K)
    w = np.repeat(r1.weights, r2.K) * np.tile(r2.weights, r1.K)
    return x, y, w


def grading_levels(distance: float) -> int:
    """
    Geometric panels needed on [0, 1] for a log singularity ``distance`` beyond an endpoint.

    Zero at distance >= 1; otherwise the panel touching the endpoint is no
    wider than the distance, and every other panel is no wider than its own
    distance to the singularity.
    """
    if distance >= 1.0:
        return 0
    if not distance > 0:
        return MAX_GRADING_LEVELS
    levels = int(math.ceil(math.log(distance) / math.log(GRADING_RATIO)))
    return min(max(levels, 1), MAX_GRADING_LEVELS)


def near_singular_rule(K: int, distance: float, toward: str) -> Tuple[np.ndarray, np.ndarray]:
    """Gauss-Legendre on [0, 1], graded toward ``toward`` ("a", "b" or "both") when distance < 1."""
    levels = grading_levels(distance)
    if levels == 0:
        gl = gauss_legendre(K)
        return gl.nodes, gl.weights
    return graded_rule(0.0, 1.0, K, levels=levels, ratio=GRADING_RATIO, toward=toward)


def _graded_tensor(
    K: int, x_grading: Tuple[float, str], y_grading: Tuple[float, str]
) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Tensor rule on the unit square from two near_singular_rule factors."""
    x, wx = near_singular_rule(K, *x_grading)
    y, wy = near_singular_rule(K, *y_grading)
    return np.repeat(x, y.size), np.tile(y, x.size), np.repeat(wx, y.size) * np.tile(wy, x.size)


def _grading(lo: float, hi: float) -> Tuple[float, str]:
    """(distance, direction) from the relative distances of singularities below 0 and above 1."""
    if lo < 1.0 and hi < 1.0:
        return min(lo, hi), "both"
    if lo <= hi:
        return lo, "a"
    return hi, "b"


def duffy_log_points(a: float, b: float, q: QuadConfig) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    """
    Points (x, y, w) with sum w G(x, y) ~ int int G(x, y) ln(a x + b y) dx dy.

    The square is split along the diagonal; x = u y on the upper triangle and
    y = v x on the lower one, so that ln(a x + b y) = ln y + ln(a u + b)
    (resp. ln x + ln(a + b v)). The ln y and ln x parts go to the log-weight
    rule, the rest to tensor Gauss-Legendre.
    """
    if not (a > 0 and b > 0):
        raise _fail(f"Duffy log split needs a, b > 0, got {a}, {b}")
    parts = []

    # upper triangle, ln y part: log rule K_3 in y, Gauss K_2 in u
    gj = gauss_log(q.K_3)
    gu = gauss_legendre(q.K_2)
    y = np.repeat(gj.nodes, gu.K)
    u = np.tile(gu.nodes, gj.K)
    parts.append((u * y, y, -np.repeat(gj.weights * gj.nodes, gu.K) * np.tile(gu.weights, gj.K)))

    # upper triangle, regular part; ln(a u + b) has its root at u = -b/a
    u, y, w = _graded_tensor(q.K_reg, (b / a, "a"), (math.inf, "a"))
    parts.append((u * y, y, w * y * np.log(a * u + b)))

    # lower triangle, ln x part: log rule K_4 in x, Gauss K_5 in v
    gj = gauss_log(q.K_4)
    gv = gauss_legendre(q.K_5)
    x = np.repeat(gj.nodes, gv.K)
    v = np.tile(gv.nodes, gj.K)
    parts.append((x, v * x, -np.repeat(gj.weights * gj.nodes, gv.K) * np.tile(gv.weights, gj.K)))

    # lower triangle, regular part; root at v = -a/b
    x, v, w = _graded_tensor(q.K_reg, (math.inf, "a"), (a / b, "a"))
    parts.append((x, v * x, w * x * np.log(a + b * v)))

    return tuple(np.concatenate([p[i] for p in parts]) for i in range(3))


def _log_affine_rule(
    c0: float, c1: float, zero_at: Optional[str], q: QuadConfig
) -> Tuple[np.ndarray, np.ndarray]:
    """
    (eta, w) for int_0^1 o(eta) ln|c0 + c1 eta| d eta.

    ``zero_at`` is "start" when c0 = 0, "end" when c0 + c1 = 0, else None.
    """
    if zero_at is None:
        root = -c0 / c1
        below = -root if root <= 0 else math.inf
        above = root - 1.0 if root >= 1 else math.inf
        eta, w = near_singular_rule(q.K_reg, *_grading(below, above))
        return eta, w * np.log(np.abs(c0 + c1 * eta))
    gl = gauss_legendre(q.K_1)
    gj = gauss_log(q.K_log)
    log_c1 = math.log(abs(c1))
    nodes = gj.nodes if zero_at == "start" else 1.0 - gj.nodes
    return np.concatenate([gl.nodes, nodes]), np.concatenate([log_c1 * gl.weights, -gj.weights])


class Assembler:
    """
    Local blocks and global matrices on one mesh and degree vector.

    Point rules are cached per element pair and reused by all three kinds.
    """

    def __init__(
        self,
        mesh: TemporalMesh,
        deg: DegreeVector,
        qcfg: Optional[QuadConfig] = None,
        dofmap: Optional[DofMap] = None,
        threads: int = 1,
        progress: bool = False,
    ):
        if len(deg) != mesh.N:
            raise _fail(f"{len(deg)} degrees for a mesh with {mesh.N} elements")
        self.mesh = mesh
        self.deg = deg
        self.qcfg = qcfg or QuadConfig.from_K(None, deg.p_max)
        self.qcfg.validate(deg.p_max)
        self.dofmap = dofmap or build_dofmap(mesh, deg)
        self.threads = max(1, int(threads))
        self.progress = progress
        self.kctx = KernelContext(mesh.T)

        self._pair_rules: Dict[Tuple[int, int], PointRule] = {}
        self._boundary_rules: Dict[int, PointRule] = {}
        self._j_rules: Dict[Tuple[int, int, int], Optional[PointRule]] = {}
        self._lock = threading.Lock()

        if not mesh.theorem41_ok:
            logger.warning(
                f"max element size {mesh.h_max:.4g} exceeds T/2={mesh.T / 2:.4g}; "
                "exponential convergence in K is not guaranteed"
            )

    # -- geometry -----------------------------------------------------------

    def _check_pair(self, k: int, ell: int) -> None:
        N = self.mesh.N
        if not (1 <= k <= N and 1 <= ell <= N):
            raise _fail(f"element pair ({k}, {ell}) outside 1..{N}")

    def pair_case(self, k: int, ell: int) -> Tuple[RegCase, int, int]:
        """Regular-factor case and the coefficients of ln(s+t) and ln(2T-s-t)."""
        N = self.mesh.N
        if N == 1:
            return RegCase.SINGLE, 1, 1
        if k == ell == 1:
            return RegCase.FIRST, 1, 0
        if k == ell == N:
            return RegCase.LAST, 0, 1
        return RegCase.GENERAL, 0, 0

    def _cached(self, cache: dict, key, build):
        rule = cache.get(key)
        if rule is None and key not in cache:
            rule = build()
            with self._lock:
                cache.setdefault(key, rule)
        return cache[key]

    # -- point rules --------------------------------------------------------

    def pair_rule(self, k: int, ell: int) -> PointRule:
        """Weighted points for Q(o, i) of the pair (k, l); includes the -1/pi."""
        self._check_pair(k, ell)
        return self._cached(self._pair_rules, (k, ell), lambda: self._build_pair_rule(k, ell))

    def _build_pair_rule(self, k: int, ell: int) -> PointRule:
        q = self.qcfg
        mesh = self.mesh
        a_k, _ = mesh.element(k)
        a_l, _ = mesh.element(ell)
        h_k = float(mesh.h[k - 1])
        h_l = float(mesh.h[ell - 1])
        case, c11, cNN = self.pair_case(k, ell)
        parts: List[PointRule] = []

        # regular factor: both triangles of the square, Duffy-mapped to tensor Gauss.
        # A GENERAL pair close to s + t = 0 or 2T keeps a nearly singular ln tan(pi(s+t)/4T)
        # in F and gets a graded tensor rule on the whole square instead.
        graded = None
        if case is RegCase.GENERAL:
            sigma_lo = a_k + a_l
            sigma_gap = 2.0 * mesh.T - (a_k + h_k) - (a_l + h_l)
            x_grading = _grading(sigma_lo / h_k, sigma_gap / h_k)
            y_grading = _grading(sigma_lo / h_l, sigma_gap / h_l)
            if x_grading[0] < 1.0 or y_grading[0] < 1.0:
                graded = _graded_tensor(q.K_reg, x_grading, y_grading)
        if graded is not None:
            xi, eta, w = graded
            parts.append(PointRule(xi, eta, w * self.kctx.reg_factor(case, a_k + h_k * xi, a_l + h_l * eta)))
        else:
            u, v, w = _tensor(q.K_reg)
            for xi, eta, jac in (((1.0 - u) * v, v, v), (u, (1.0 - v) * u, u)):
                F = self.kctx.reg_factor(case, a_k + h_k * xi, a_l + h_l * eta)
                parts.append(PointRule(xi, eta, w * jac * F))

        # ln|s - t|
        if k == ell:
            x, y, w = _tensor(q.K_1)
            parts.append(PointRule(x, y, math.log(h_k) * w))
            s, t, w = logtensor_points(q.K_log)
            parts.append(PointRule(s, t, w))
        elif k == ell + 1:
            x, y, w = duffy_log_points(h_k, h_l, q)
            parts.append(PointRule(x, 1.0 - y, w))
        elif k + 1 == ell:
            x, y, w = duffy_log_points(h_k, h_l, q)
            parts.append(PointRule(1.0 - x, y, w))
        else:
            # separated pair; the gap is measured from the facing edges
            gap = a_k - a_l - h_l if k > ell else a_l - a_k - h_k
            x_grading = (gap / h_k, "a" if k > ell else "b")
            y_grading = (gap / h_l, "b" if k > ell else "a")
            x, y, w = _graded_tensor(q.K_reg, x_grading, y_grading)
            parts.append(PointRule(x, y, w * np.log(np.abs(a_k + h_k * x - a_l - h_l * y))))

        # ln(s + t) on the first element
        if c11:
            x, y, w = _tensor(q.K_1)
            parts.append(PointRule(x, y, math.log(h_k) * w))
            x, y, w = duffy_log_points(1.0, 1.0, q)
            parts.append(PointRule(x, y, w))

        # ln(2T - s - t) on the last element, in reflected coordinates
        if cNN:
            x, y, w = _tensor(q.K_1)
            parts.append(PointRule(x, y, -math.log(h_k) * w))
            x, y, w = duffy_log_points(1.0, 1.0, q)
            parts.append(PointRule(1.0 - x, 1.0 - y, -w))

        rule = PointRule.concat(parts).scaled(-1.0 / np.pi)
        logger.debug(f"pair ({k}, {ell}): {case.value}, {rule.w.size} points")
        return rule

    def boundary_rule(self, ell: int) -> PointRule:
        """(eta, w) with sum w o(eta) ~ int_0^1 o(eta) ln tan(pi t / 4T) d eta on element l."""
        self._check_pair(1, ell)
        return self._cached(self._boundary_rules, ell, lambda: self._build_boundary_rule(ell))

    def _build_boundary_rule(self, ell: int) -> PointRule:
        q = self.qcfg
        a, _ = self.mesh.element(ell)
        h = float(self.mesh.h[ell - 1])
        if ell > 1:
            # ln tan(pi t/4T) is singular at t = 0, a / h away
            eta, w = near_singular_rule(q.K_reg, a / h, "a")
            return PointRule(eta, eta, w * self.kctx.log_tan(a + h * eta))

        # ln tan = F + ln h + ln eta on the first element
        gl = gauss_legendre(q.K_reg)
        g1 = gauss_legendre(q.K_1)
        gj = gauss_log(q.K_log)
        F = self.kctx.reg_factor(RegCase.FIRST_POINT, 0.0, h * gl.nodes)
        eta = np.concatenate([gl.nodes, g1.nodes, gj.nodes])
        w = np.concatenate([gl.weights * F, math.log(h) * g1.weights, -gj.weights])
        return PointRule(eta, eta, w)

    def j_rule(self, k: int, ell: int, which: int) -> Optional[PointRule]:
        """
        (eta, w) for J^which[m] = int_0^1 o(eta) [ln tan(pi(x+t)/4T) + ln tan(pi|t-x|/4T)] d eta,
        x = t_{k-1} (which=0) or t_k (which=1). None when the integrand vanishes.
        """
        self._check_pair(k, ell)
        if which not in (0, 1):
            raise _fail(f"J index must be 0 or 1, got {which}")
        return self._cached(self._j_rules, (k, ell, which), lambda: self._build_j_rule(k, ell, which))

    def _build_j_rule(self, k: int, ell: int, which: int) -> Optional[PointRule]:
        mesh = self.mesh
        if which == 1 and k == mesh.N:
            # calK(T, t) = 0
            return None
        q = self.qcfg
        T = mesh.T
        x = float(mesh.breakpoints[k - 1 + which])
        a_l, _ = mesh.element(ell)
        h_l = float(mesh.h[ell - 1])
        case, c11, cNN = self.pair_case(k, ell)

        if case is RegCase.GENERAL:
            # ln tan(pi(x+t)/4T) stays in F; grade toward x + t = 0 or 2T when close
            grading = _grading((x + a_l) / h_l, (2.0 * T - x - a_l - h_l) / h_l)
        else:
            grading = (math.inf, "a")
        eta, w = near_singular_rule(q.K_reg, *grading)
        F = self.kctx.reg_factor(case, np.full(eta.size, x), a_l + h_l * eta)
        etas = [eta]
        weights = [w * F]

        # ln|t - x|
        if (which == 0 and k == ell) or (which == 1 and k + 1 == ell):
            zero_at = "start"
        elif (which == 0 and k == ell + 1) or (which == 1 and k == ell):
            zero_at = "end"
        else:
            zero_at = None
        eta, w = _log_affine_rule(a_l - x, h_l, zero_at, q)
        etas.append(eta)
        weights.append(w)

        if c11:
            eta, w = _log_affine_rule(x + a_l, h_l, "start" if x == 0.0 else None, q)
            etas.append(eta)
            weights.append(w)
        if cNN:
            eta, w = _log_affine_rule(2.0 * T - x - a_l, -h_l, "end" if x == T else None, q)
            etas.append(eta)
            weights.append(-w)

        eta = np.concatenate(etas)
        return PointRule(eta, eta, np.concatenate(weights))

    # -- local blocks -------------------------------------------------------

    def _double(self, k: int, ell: int, inner_deriv: int, outer_deriv: int) -> np.ndarray:
        rule = self.pair_rule(k, ell)
        inner = shape_table(self.deg[k], rule.xi, inner_deriv)
        outer = shape_table(self.deg[ell], rule.eta, outer_deriv)
        return (inner * rule.w) @ outer.T

    def _boundary(self, ell: int, outer_deriv: int) -> np.ndarray:
        rule = self.boundary_rule(ell)
        return shape_table(self.deg[ell], rule.eta, outer_deriv) @ rule.w

    def local_M(self, k: int, ell: int, boundary: bool = True) -> LocalBlock:
        """
        M_{k,l}[n, m] = <H_T psi_n on element k, psi_m on element l>.

        ``boundary=False`` drops the point term phi(0) calK(0, t), which only
        the first element carries.
        """
        h_l = float(self.mesh.h[ell - 1])
        values = h_l * self._double(k, ell, 1, 0)
        if boundary and k == 1:
            psi0 = shape_table(self.deg[k], 0.0, 0)
            values -= (2.0 * h_l / np.pi) * np.outer(psi0, self._boundary(ell, 0))
        return LocalBlock(k, ell, values)

    def local_A(self, k: int, ell: int, boundary: bool = True) -> LocalBlock:
        """A_{k,l}[n, m] = <H_T psi_n on element k, d/dt psi_m on element l>."""
        values = self._double(k, ell, 1, 1)
        if boundary and k == 1:
            psi0 = shape_table(self.deg[k], 0.0, 0)
            values -= (2.0 / np.pi) * np.outer(psi0, self._boundary(ell, 1))
        return LocalBlock(k, ell, values)

    def compute_J(self, k: int, ell: int, which: int) -> np.ndarray:
        """J^which_{k,l}[m] for every local mode m of element l."""
        rule = self.j_rule(k, ell, which)
        if rule is None:
            return np.zeros(self.deg[ell] + 1)
        return shape_table(self.deg[ell], rule.eta, 1) @ rule.w

    def local_B(self, k: int, ell: int) -> LocalBlock:
        """B_{k,l}[n, m] = <H_T d/dt psi_n on element k, d/dt psi_m on element l>."""
        h_k = float(self.mesh.h[k - 1])
        p_k = self.deg[k]
        values = self._double(k, ell, 2, 1) / h_k if p_k >= 2 else np.zeros((p_k + 1, self.deg[ell] + 1))
        dpsi0 = shape_table(p_k, 0.0, 1)
        dpsi1 = shape_table(p_k, 1.0, 1)
        values = values + (
            np.outer(dpsi1, self.compute_J(k, ell, 1)) - np.outer(dpsi0, self.compute_J(k, ell, 0))
        ) / (np.pi * h_k)
        return LocalBlock(k, ell, values)

    def local(self, kind: str, k: int, ell: int) -> LocalBlock:
        if kind == "M":
            return self.local_M(k, ell)
        if kind == "A":
            return self.local_A(k, ell)
        if kind == "B":
            return self.local_B(k, ell)
        raise _fail(f"unknown matrix kind '{kind}'")

    # -- global matrices ----------------------------------------------------

    def _blocks(self, kind: str) -> List[LocalBlock]:
        N = self.mesh.N
        pairs = [(k, ell) for k in range(1, N + 1) for ell in range(1, N + 1)]
        desc = f"Assembling {kind}"
        if self.threads > 1:
            with ThreadPoolExecutor(max_workers=self.threads) as executor:
                jobs = executor.map(lambda kl: self.local(kind, *kl), pairs)
                return list(tqdm(jobs, total=len(pairs), desc=desc, disable=not self.progress))
        return [self.local(kind, k, ell) for k, ell in tqdm(pairs, desc=desc, disable=not self.progress)]

    def assemble(self, kind: str) -> GlobalMatrix:
        """
        Global M x M matrix, accumulated in lexicographic (k, l) order.

        Returns:
            GlobalMatrix whose rows index the transformed basis function
        """
        if kind not in KINDS:
            raise _fail(f"unknown matrix kind '{kind}'")
        M = self.dofmap.M
        out = np.zeros((M, M))
        for block in self._blocks(kind):
            rows = self.dofmap.element_dofs[block.k - 1]
            cols = self.dofmap.element_dofs[block.ell - 1]
            out[np.ix_(rows, cols)] += block.values
        logger.debug(f"Assembled {kind}: {M}x{M}")
        return GlobalMatrix(kind, out)

    def assemble_broken(self, kind: str) -> np.ndarray:
        """
        M x sum(p_l + 1) matrix with columns indexed by local shape functions.

        Column offset_l + m holds the pairing with psi_m on element l alone.
        """
        if kind not in KINDS:
            raise _fail(f"unknown matrix kind '{kind}'")
        offsets = self.dofmap.local_offsets()
        out = np.zeros((self.dofmap.M, self.dofmap.n_local))
        for block in self._blocks(kind):
            rows = self.dofmap.element_dofs[block.k - 1]
            start = offsets[block.ell - 1]
            out[rows, start : start + block.cols] += block.values
        return out


def local_M(k: int, ell: int, mesh: TemporalMesh, deg: DegreeVector, qcfg: Optional[QuadConfig] = None) -> LocalBlock:
    return Assembler(mesh, deg, qcfg).local_M(k, ell)


def local_A(k: int, ell: int, mesh: TemporalMesh, deg: DegreeVector, qcfg: Optional[QuadConfig] = None) -> LocalBlock:
    return Assembler(mesh, deg, qcfg).local_A(k, ell)


def local_B(k: int, ell: int, mesh: TemporalMesh, deg: DegreeVector, qcfg: Optional[QuadConfig] = None) -> LocalBlock:
    return Assembler(mesh, deg, qcfg).local_B(k, ell)


def compute_J(
    k: int, ell: int, which: int, mesh: TemporalMesh, deg: DegreeVector, qcfg: Optional[QuadConfig] = None
) -> np.ndarray:
    return Assembler(mesh, deg, qcfg).compute_J(k, ell, which)


def assemble(
    kind: str,
    mesh: TemporalMesh,
    deg: DegreeVector,
    dofmap: Optional[DofMap] = None,
    qcfg: Optional[QuadConfig] = None,
    threads: int = 1,
) -> GlobalMatrix:
    """Assemble one global matrix; see Assembler.assemble."""
    return Assembler(mesh, deg, qcfg, dofmap=dofmap, threads=threads).assemble(kind)
