"""
Discrete systems for the model ODEs

    parabolic:   u' + mu u = f,        u(0) = 0
    hyperbolic:  u'' + mu u = f,       u(0) = u'(0) = 0

tested with H_T v_h, their solution by dense LU, error norms and the h / hp
convergence loops.
"""

import logging
import math
import time
from dataclasses import dataclass
from typing import Callable, Dict, List, Optional, Union

import numpy as np
import scipy.linalg
from tqdm import tqdm

from .assembly import Assembler, GlobalMatrix, QuadConfig
from .exceptions import ConfigurationError, InvalidArgumentError, ProjectionError, SingularSystemError
from .mesh import DegreeVector, DofMap, TemporalMesh, build_dofmap, make_geometric, make_uniform
from .quadrature import gauss_legendre, graded_rule
from .shapefn import shape_table


logger = logging.getLogger(__name__)

Func = Callable[[np.ndarray], np.ndarray]

PIVOT_MIN = 1e-300
RESIDUAL_WARN = 1e-12
GRADING_LEVELS = 12
GRADING_RATIO = 0.25


def _fail(message: str) -> InvalidArgumentError:
    return InvalidArgumentError(message, tag="solver")


@dataclass(frozen=True)
class OdeProblem:
    """Model ODE with right-hand side and optional exact solution."""

    kind: str
    mu: float
    f: Func
    u_exact: Optional[Func] = None
    du_exact: Optional[Func] = None
    label: str = ""

    def __post_init__(self):
        if self.kind not in ("parabolic", "hyperbolic"):
            raise _fail(f"problem kind must be parabolic or hyperbolic, got '{self.kind}'")
        if self.mu < 0:
            raise _fail(f"mu must be >= 0, got {self.mu}")

    @property
    def has_exact(self) -> bool:
        return self.u_exact is not None and self.du_exact is not None

    @classmethod
    def from_preset(cls, kind: str, mu: float, load: str) -> "OdeProblem":
        """
        Build a problem from a load preset.

        Presets:
            one          f = 1, exact solution for every mu >= 0
            poly:c0,c1.. f = sum c_i t^i, exact solution for mu = 0
            power:alpha  manufactured u = t^alpha
        """
        load = str(load).strip()
        mu = float(mu)
        if load == "one":
            return cls(kind, mu, lambda t: np.ones_like(np.asarray(t, dtype=float)),
                       *_one_exact(kind, mu), label=load)
        if load.startswith("poly:"):
            try:
                coef = [float(c) for c in load.split(":", 1)[1].split(",") if c.strip()]
            except ValueError:
                raise ConfigurationError(f"cannot parse load preset '{load}'") from None
            if not coef:
                raise ConfigurationError(f"load preset '{load}' has no coefficients")
            f = np.polynomial.Polynomial(coef)
            u = du = None
            if mu == 0.0:
                shift = 1 if kind == "parabolic" else 2
                U = f.integ(shift)
                u, du = U, U.deriv()
            return cls(kind, mu, f, u, du, label=load)
        if load.startswith("power:"):
            try:
                alpha = float(load.split(":", 1)[1])
            except ValueError:
                raise ConfigurationError(f"cannot parse load preset '{load}'") from None
            return _power_problem(kind, mu, alpha, load)
        raise ConfigurationError(f"unknown load preset '{load}' (one | poly:c0,c1,... | power:alpha)")


def _one_exact(kind: str, mu: float):
    if kind == "parabolic":
        if mu == 0.0:
            return (lambda t: np.asarray(t, dtype=float), lambda t: np.ones_like(np.asarray(t, dtype=float)))
        return (lambda t: -np.expm1(-mu * np.asarray(t)) / mu, lambda t: np.exp(-mu * np.asarray(t)))
    if mu == 0.0:
        return (lambda t: 0.5 * np.asarray(t, dtype=float) ** 2, lambda t: np.asarray(t, dtype=float))
    w = math.sqrt(mu)
    return (lambda t: (1.0 - np.cos(w * np.asarray(t))) / mu, lambda t: np.sin(w * np.asarray(t)) / w)


def _power_problem(kind: str, mu: float, alpha: float, label: str) -> OdeProblem:
    # f must lie in L2(0, T)
    bound = 0.5 if kind == "parabolic" else 1.5
    if not alpha > bound:
        raise ConfigurationError(f"power:{alpha} gives a load outside L2 for {kind} problems (need alpha > {bound})")

    def u(t):
        return np.asarray(t, dtype=float) ** alpha

    def du(t):
        return alpha * np.asarray(t, dtype=float) ** (alpha - 1.0)

    if kind == "parabolic":
        def f(t):
            t = np.asarray(t, dtype=float)
            return alpha * t ** (alpha - 1.0) + mu * t ** alpha
    else:
        def f(t):
            t = np.asarray(t, dtype=float)
            return alpha * (alpha - 1.0) * t ** (alpha - 2.0) + mu * t ** alpha

    return OdeProblem(kind, mu, f, u, du, label=label)


@dataclass
class DiscreteSolution:
    """
    Coefficients over the zero-trace basis phi_2..phi_M.

    ``coeffs[j]`` multiplies the global basis function with 0-based index j+1,
    so u_h(0) = 0 by construction.
    """

    coeffs: np.ndarray
    residual: float = 0.0
    mesh: Optional[TemporalMesh] = None
    deg: Optional[DegreeVector] = None
    dofmap: Optional[DofMap] = None

    @property
    def full_coefficients(self) -> np.ndarray:
        return np.concatenate(([0.0], self.coeffs))

    def _require_space(self) -> None:
        if self.mesh is None or self.deg is None or self.dofmap is None:
            raise _fail("solution is not attached to a mesh")

    def local(self, ell: int) -> np.ndarray:
        self._require_space()
        return self.full_coefficients[self.dofmap.element_dofs[ell - 1]]

    def evaluate(self, t: Union[float, np.ndarray], deriv: int = 0) -> np.ndarray:
        """u_h (deriv=0) or u_h' (deriv=1) at points in [0, T]."""
        self._require_space()
        t_arr = np.atleast_1d(np.asarray(t, dtype=float))
        bp = self.mesh.breakpoints
        idx = np.clip(np.searchsorted(bp, t_arr, side="right"), 1, self.mesh.N)
        out = np.zeros_like(t_arr)
        for ell in np.unique(idx):
            sel = idx == ell
            a, _ = self.mesh.element(int(ell))
            h = float(self.mesh.h[ell - 1])
            xi = np.clip((t_arr[sel] - a) / h, 0.0, 1.0)
            out[sel] = self.local(int(ell)) @ shape_table(self.deg[int(ell)], xi, deriv) / h ** deriv
        return out


@dataclass(frozen=True)
class ErrorNorms:
    """L2 and H1-seminorm errors and their geometric mean."""

    L2: float
    H1semi: float

    @property
    def bracket(self) -> float:
        return math.sqrt(self.L2 * self.H1semi)


def _element_rule(ell: int, order: int, graded: bool):
    """Reference nodes/weights on [0, 1]; the first element is graded towards 0."""
    if ell == 1 and graded:
        return graded_rule(0.0, 1.0, order, levels=GRADING_LEVELS, ratio=GRADING_RATIO, toward="a")
    rule = gauss_legendre(order)
    return rule.nodes, rule.weights


def _as_array(matrix) -> np.ndarray:
    return matrix.values if isinstance(matrix, GlobalMatrix) else np.asarray(matrix, dtype=float)


def build_system(problem: OdeProblem, M_mat, A_mat=None, B_mat=None) -> np.ndarray:
    """
    Parabolic: A~ + mu M~.  Hyperbolic: (B~)^T + mu M~.

    Tilde matrices are the trailing (M-1) x (M-1) blocks.
    """
    M = _as_array(M_mat)
    if M.ndim != 2 or M.shape[0] != M.shape[1]:
        raise _fail(f"M^HT must be square, got shape {M.shape}")
    if problem.kind == "parabolic":
        if A_mat is None:
            raise _fail("parabolic system needs A^HT")
        base = _as_array(A_mat)
        if base.shape != M.shape:
            raise _fail(f"A^HT shape {base.shape} does not match M^HT shape {M.shape}")
        base = base[1:, 1:]
    else:
        if B_mat is None:
            raise _fail("hyperbolic system needs B^HT")
        B = _as_array(B_mat)
        if B.shape != M.shape:
            raise _fail(f"B^HT shape {B.shape} does not match M^HT shape {M.shape}")
        base = B[1:, 1:].T
    return base + problem.mu * M[1:, 1:]


def project_load(
    f: Func, mesh: TemporalMesh, deg: DegreeVector, graded: bool = True
) -> np.ndarray:
    """
    Element-wise L2 projection of f, local coefficients concatenated element by element.

    Raises:
        ProjectionError: singular local mass matrix or non-finite load values
    """
    blocks = []
    for ell in range(1, mesh.N + 1):
        p = deg[ell]
        a, _ = mesh.element(ell)
        h = float(mesh.h[ell - 1])
        xi, w = _element_rule(ell, p + 4, graded)
        psi = shape_table(p, xi, 0)
        values = np.asarray(f(a + h * xi), dtype=float)
        if not np.all(np.isfinite(values)):
            raise ProjectionError(f"load is not finite on element {ell}")
        gram = (psi * w) @ psi.T
        rhs = (psi * w) @ values
        try:
            blocks.append(scipy.linalg.cho_solve(scipy.linalg.cho_factor(gram), rhs))
        except (np.linalg.LinAlgError, scipy.linalg.LinAlgError) as e:
            raise ProjectionError(f"local mass matrix on element {ell} is singular: {e}") from e
    return np.concatenate(blocks)


def build_rhs(
    problem: OdeProblem, mesh: TemporalMesh, deg: DegreeVector, dofmap: DofMap, M_broken: np.ndarray
) -> np.ndarray:
    """
    F[i] = <f, H_T phi_{i+1}> for the zero-trace test functions.

    f is projected element by element and paired through the column-broken
    M^HT, which is exact for the projected load also when it is discontinuous.
    """
    M_broken = np.asarray(M_broken, dtype=float)
    if M_broken.shape != (dofmap.M, dofmap.n_local):
        raise _fail(f"broken M^HT must have shape {(dofmap.M, dofmap.n_local)}, got {M_broken.shape}")
    coeffs = project_load(problem.f, mesh, deg)
    return M_broken[1:, :] @ coeffs


def gather_columns(broken: np.ndarray, dofmap: DofMap) -> np.ndarray:
    """Sum the local columns of a broken matrix into global columns."""
    out = np.zeros((broken.shape[0], dofmap.M))
    offsets = dofmap.local_offsets()
    for ell, dofs in enumerate(dofmap.element_dofs):
        out[:, dofs] += broken[:, offsets[ell] : offsets[ell] + dofs.size]
    return out


def lu_solve(
    system: np.ndarray,
    rhs: np.ndarray,
    mesh: Optional[TemporalMesh] = None,
    deg: Optional[DegreeVector] = None,
    dofmap: Optional[DofMap] = None,
) -> DiscreteSolution:
    """
    Solve by LU with partial pivoting.

    The relative residual ||Ax - b||_inf / (||A||_inf ||x||_inf) is stored on
    the result and logged when above 1e-12.

    Raises:
        SingularSystemError: a pivot below 1e-300 in magnitude
    """
    A = np.asarray(system, dtype=float)
    b = np.asarray(rhs, dtype=float)
    if A.ndim != 2 or A.shape[0] != A.shape[1] or b.shape != (A.shape[0],):
        raise _fail(f"incompatible system {A.shape} and right-hand side {b.shape}")
    if not (np.all(np.isfinite(A)) and np.all(np.isfinite(b))):
        raise _fail("system or right-hand side is not finite")

    lu, piv = scipy.linalg.lu_factor(A, check_finite=False)
    pivots = np.abs(np.diag(lu))
    if pivots.size and pivots.min() < PIVOT_MIN:
        raise SingularSystemError(f"numerically singular system: pivot {pivots.min():.3e}")
    x = scipy.linalg.lu_solve((lu, piv), b, check_finite=False)

    scale = np.linalg.norm(A, np.inf) * np.linalg.norm(x, np.inf)
    residual = float(np.linalg.norm(A @ x - b, np.inf) / scale) if scale > 0 else float(np.linalg.norm(b, np.inf))
    if residual > RESIDUAL_WARN:
        logger.warning(f"LU residual {residual:.3e} above {RESIDUAL_WARN:g}")
    return DiscreteSolution(x, residual, mesh, deg, dofmap)


def error_norms(sol: DiscreteSolution, u_exact: Func, du_exact: Func, graded: bool = True) -> ErrorNorms:
    """
    ||u - u_h||_L2 and ||u' - u_h'||_L2 by per-element Gauss rules of order p + 6.

    The first element is split geometrically towards t = 0 so that solutions
    like t^(3/4) are integrated accurately.
    """
    sol._require_space()
    mesh, deg = sol.mesh, sol.deg
    l2 = 0.0
    h1 = 0.0
    for ell in range(1, mesh.N + 1):
        p = deg[ell]
        a, _ = mesh.element(ell)
        h = float(mesh.h[ell - 1])
        xi, w = _element_rule(ell, p + 6, graded)
        t = a + h * xi
        c = sol.local(ell)
        uh = c @ shape_table(p, xi, 0)
        duh = c @ shape_table(p, xi, 1) / h
        l2 += h * float(np.sum(w * (np.asarray(u_exact(t)) - uh) ** 2))
        h1 += h * float(np.sum(w * (np.asarray(du_exact(t)) - duh) ** 2))
    return ErrorNorms(math.sqrt(l2), math.sqrt(h1))


def solve_problem(
    problem: OdeProblem,
    mesh: TemporalMesh,
    deg: DegreeVector,
    K: Optional[int] = None,
    threads: int = 1,
) -> DiscreteSolution:
    """Assemble, build the system and right-hand side, and solve on one mesh."""
    dofmap = build_dofmap(mesh, deg)
    asm = Assembler(mesh, deg, QuadConfig.from_K(K, deg.p_max), dofmap=dofmap, threads=threads)
    M_broken = asm.assemble_broken("M")
    M_glob = gather_columns(M_broken, dofmap)
    if problem.kind == "parabolic":
        system = build_system(problem, M_glob, A_mat=asm.assemble("A"))
    else:
        system = build_system(problem, M_glob, B_mat=asm.assemble("B"))
    rhs = build_rhs(problem, mesh, deg, dofmap, M_broken)
    return lu_solve(system, rhs, mesh, deg, dofmap)


@dataclass
class StudyParams:
    """Parameters of an h or hp study."""

    T: float = 1.0
    p: int = 2
    sigma: float = 0.17
    N_min: int = 2
    N_max: int = 10
    K: int = 20
    threads: int = 1
    progress: bool = False

    def levels(self, study: str) -> List[int]:
        if study == "hp":
            return list(range(max(self.N_min, 2), self.N_max + 1))
        if study == "h":
            out, N = [], self.N_min
            while N <= self.N_max:
                out.append(N)
                N *= 2
            return out
        raise _fail(f"study must be h or hp, got '{study}'")

    def discretization(self, study: str, N: int):
        if study == "hp":
            return make_geometric(N, self.T, self.sigma), DegreeVector.linear(N)
        return make_uniform(N, self.T), DegreeVector.uniform(N, self.p)


@dataclass(frozen=True)
class StudyLevel:
    N: int
    M: int
    h_max: float
    L2: float
    H1semi: float
    bracket: float
    residual: float
    seconds: float

    def as_row(self) -> Dict[str, float]:
        return {
            "N": self.N, "M": self.M, "h_max": self.h_max, "L2": self.L2,
            "H1semi": self.H1semi, "bracket": self.bracket,
            "residual": self.residual, "seconds": self.seconds,
        }


def run_study(study: str, problem: OdeProblem, params: StudyParams) -> List[StudyLevel]:
    """
    Solve on a sequence of meshes and record the errors.

    h study: uniform meshes, N = N_min, 2 N_min, ... <= N_max, degree p.
    hp study: geometric meshes with grading sigma and p_l = l, N = N_min..N_max.
    """
    if not problem.has_exact:
        raise ConfigurationError(f"load '{problem.label}' has no exact solution for mu={problem.mu}")

    levels = params.levels(study)
    logger.info("=" * 80)
    logger.info(f"{study}-study: {problem.kind}, mu={problem.mu}, load={problem.label}, N={levels}")
    logger.info("=" * 80)

    rows = []
    for N in tqdm(levels, desc=f"{study}-study", disable=not params.progress):
        start = time.perf_counter()
        mesh, deg = params.discretization(study, N)
        sol = solve_problem(problem, mesh, deg, params.K, params.threads)
        norms = error_norms(sol, problem.u_exact, problem.du_exact)
        elapsed = time.perf_counter() - start
        row = StudyLevel(N, sol.dofmap.M, mesh.h_max, norms.L2, norms.H1semi, norms.bracket, sol.residual, elapsed)
        logger.info(f"N={N:3d} M={row.M:4d} L2={row.L2:.3e} H1={row.H1semi:.3e} bracket={row.bracket:.3e}")
        rows.append(row)
    return rows
