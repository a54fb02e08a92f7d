"""
Temporal meshes, polynomial degree vectors and the global DOF map.

Meshes partition (0, T) by breakpoints 0 = t_0 < ... < t_N = T. Global
basis functions are numbered vertices first (t_0, ..., t_N get indices
1..N+1) and bubbles afterwards, element by element, so that the only basis
function not vanishing at t = 0 is the first one.
"""

import logging
import math
from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional, Sequence

import numpy as np

from .exceptions import InvalidArgumentError


logger = logging.getLogger(__name__)


def _fail(message: str) -> InvalidArgumentError:
    return InvalidArgumentError(message, tag="mesh")


@dataclass(frozen=True)
class TemporalMesh:
    """Partition of (0, T) into N elements."""

    T: float
    breakpoints: np.ndarray

    def __post_init__(self):
        t = np.array(self.breakpoints, dtype=float)
        if not (self.T > 0 and math.isfinite(self.T)):
            raise _fail(f"time horizon must be positive, got T={self.T}")
        if t.ndim != 1 or t.size < 2:
            raise _fail("a mesh needs at least two breakpoints")
        if t[0] != 0.0 or t[-1] != self.T:
            raise _fail(f"breakpoints must run from 0 to T={self.T}, got {t[0]}..{t[-1]}")
        if np.any(np.diff(t) <= 0):
            raise _fail("breakpoints must be strictly increasing")
        t.setflags(write=False)
        object.__setattr__(self, "breakpoints", t)

    @property
    def N(self) -> int:
        """Number of elements."""
        return self.breakpoints.size - 1

    @property
    def h(self) -> np.ndarray:
        """Element sizes h_1..h_N (0-based array)."""
        return np.diff(self.breakpoints)

    @property
    def h_max(self) -> float:
        return float(self.h.max())

    @property
    def theorem41_ok(self) -> bool:
        """True when max h_l <= T/2, the mesh condition for exponential convergence."""
        return self.h_max <= self.T / 2

    def element(self, ell: int) -> tuple:
        """Endpoints (t_{l-1}, t_l) of element ``ell`` (1-based)."""
        if not 1 <= ell <= self.N:
            raise _fail(f"element index {ell} outside 1..{self.N}")
        return float(self.breakpoints[ell - 1]), float(self.breakpoints[ell])

    def scaled(self, factor: float) -> "TemporalMesh":
        """The same mesh on (0, factor*T)."""
        return TemporalMesh(self.T * factor, self.breakpoints * factor)

    def describe(self) -> Dict[str, Any]:
        return {"T": self.T, "N": self.N, "breakpoints": self.breakpoints.tolist()}


def make_uniform(N: int, T: float) -> TemporalMesh:
    """Uniform mesh t_l = T*l/N."""
    if N < 1:
        raise _fail(f"uniform mesh needs N >= 1, got {N}")
    if not T > 0:
        raise _fail(f"time horizon must be positive, got T={T}")
    t = T * np.arange(N + 1) / N
    t[-1] = T
    return TemporalMesh(T, t)


def make_geometric(N: int, T: float, sigma: float) -> TemporalMesh:
    """Geometric mesh t_0 = 0, t_l = T*sigma^(N-l), refined towards t = 0."""
    if N < 2:
        raise _fail(f"geometric mesh needs N >= 2, got {N}")
    if not 0 < sigma < 1:
        raise _fail(f"grading parameter must lie in (0, 1), got sigma={sigma}")
    if not T > 0:
        raise _fail(f"time horizon must be positive, got T={T}")
    t = np.zeros(N + 1)
    t[1:] = T * sigma ** np.arange(N - 1, -1, -1, dtype=float)
    t[-1] = T
    return TemporalMesh(T, t)


def make_dyadic(N: int, T: float) -> TemporalMesh:
    """Dyadic mesh t_0 = 0, t_l = 2^(l-N)*T."""
    if N < 1:
        raise _fail(f"dyadic mesh needs N >= 1, got {N}")
    if not T > 0:
        raise _fail(f"time horizon must be positive, got T={T}")
    t = np.zeros(N + 1)
    t[1:] = np.ldexp(T, np.arange(1 - N, 1))
    return TemporalMesh(T, t)


def make_explicit(breakpoints: Sequence[float], T: Optional[float] = None) -> TemporalMesh:
    """Mesh from explicit breakpoints; T defaults to the last breakpoint."""
    t = np.asarray(breakpoints, dtype=float)
    if t.ndim != 1 or t.size < 2:
        raise _fail(f"explicit mesh needs at least two breakpoints, got {t.size}")
    return TemporalMesh(float(t[-1]) if T is None else T, t)


def mesh_from_spec(spec: Dict[str, Any]) -> TemporalMesh:
    """
    Build a mesh from a config mapping.

    Args:
        spec: ``{kind: uniform|geometric|dyadic|explicit, N, T, sigma?, breakpoints?}``

    Returns:
        The constructed mesh
    """
    kind = spec.get("kind", "uniform")
    T = float(spec.get("T", 1.0))
    if kind == "uniform":
        return make_uniform(int(spec["N"]), T)
    if kind == "geometric":
        return make_geometric(int(spec["N"]), T, float(spec.get("sigma", 0.17)))
    if kind == "dyadic":
        return make_dyadic(int(spec["N"]), T)
    if kind == "explicit":
        points = spec.get("breakpoints")
        if not points:
            raise _fail("explicit mesh needs a breakpoint list")
        return make_explicit(points, spec.get("T"))
    raise _fail(f"unknown mesh kind '{kind}'")


@dataclass(frozen=True)
class DegreeVector:
    """Polynomial degrees p_1..p_N, each at least 1."""

    p: tuple

    def __post_init__(self):
        p = tuple(int(v) for v in self.p)
        if not p:
            raise _fail("degree vector is empty")
        if any(v < 1 for v in p):
            raise _fail(f"all degrees must be >= 1, got {p}")
        object.__setattr__(self, "p", p)

    def __len__(self) -> int:
        return len(self.p)

    def __getitem__(self, ell: int) -> int:
        """Degree of element ``ell`` (1-based)."""
        return self.p[ell - 1]

    @property
    def p_max(self) -> int:
        return max(self.p)

    @classmethod
    def uniform(cls, N: int, p: int) -> "DegreeVector":
        return cls((p,) * N)

    @classmethod
    def linear(cls, N: int) -> "DegreeVector":
        """Degrees p_l = l, the hp distribution on geometric meshes."""
        return cls(tuple(range(1, N + 1)))

    @classmethod
    def from_spec(cls, spec: str, N: int) -> "DegreeVector":
        """Parse ``uniform:p``, ``linear`` or a comma separated list."""
        spec = str(spec).strip()
        if spec.startswith("uniform:"):
            return cls.uniform(N, int(spec.split(":", 1)[1]))
        if spec == "linear":
            return cls.linear(N)
        try:
            values = tuple(int(v) for v in spec.split(",") if v.strip())
        except ValueError:
            raise _fail(f"cannot parse degree spec '{spec}'") from None
        if len(values) != N:
            raise _fail(f"degree list has {len(values)} entries for {N} elements")
        return cls(values)


@dataclass(frozen=True)
class DofMap:
    """
    Global numbering alpha(m, l) of local shape functions.

    ``element_dofs[l-1][m-1]`` is the 0-based global index of local mode m on
    element l; ``alpha`` exposes the same map 1-based.
    """

    M: int
    element_dofs: List[np.ndarray] = field(repr=False)

    def alpha(self, m: int, ell: int) -> int:
        dofs = self.element_dofs[ell - 1]
        if not 1 <= m <= dofs.size:
            raise _fail(f"local mode {m} outside 1..{dofs.size} on element {ell}")
        return int(dofs[m - 1]) + 1

    @property
    def n_local(self) -> int:
        """Total number of local shape functions, sum of (p_l + 1)."""
        return sum(d.size for d in self.element_dofs)

    def local_offsets(self) -> np.ndarray:
        """Start of each element's block in the broken (local) numbering."""
        sizes = [d.size for d in self.element_dofs]
        return np.concatenate(([0], np.cumsum(sizes)[:-1])).astype(int)


def build_dofmap(mesh: TemporalMesh, deg: DegreeVector) -> DofMap:
    """Vertices get 1..N+1, bubbles N+2 onward element by element."""
    if len(deg) != mesh.N:
        raise _fail(f"{len(deg)} degrees for a mesh with {mesh.N} elements")

    N = mesh.N
    next_bubble = N + 1
    element_dofs = []
    for ell in range(1, N + 1):
        p = deg[ell]
        dofs = np.empty(p + 1, dtype=int)
        dofs[0] = ell - 1
        dofs[1] = ell
        for m in range(2, p + 1):
            dofs[m] = next_bubble
            next_bubble += 1
        dofs.setflags(write=False)
        element_dofs.append(dofs)

    M = next_bubble
    logger.debug(f"DOF map: N={N}, M={M}")
    return DofMap(M=M, element_dofs=element_dofs)
