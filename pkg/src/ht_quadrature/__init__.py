"""
ht-quadrature

Assembly of the modified Hilbert transformation matrices M^HT, A^HT and B^HT
for piecewise-polynomial temporal finite elements, a spectral reference to
check them against, and h / hp solvers for the parabolic and hyperbolic
model ODEs.
"""

__version__ = "1.0.0"
__author__ = "HTQ Project Team"

from .mesh import TemporalMesh, DegreeVector, DofMap, build_dofmap, mesh_from_spec
from .quadrature import gauss_legendre, gauss_log, logtensor_apply
from .kernels import KernelContext, RegCase
from .assembly import Assembler, QuadConfig, assemble
from .spectral import oracle_matrix, ht_pointwise_lemma22, ht_apply_piecewise
from .solver import OdeProblem, solve_problem, run_study
from .studies import StudyRunner

__all__ = [
    "TemporalMesh",
    "DegreeVector",
    "DofMap",
    "build_dofmap",
    "mesh_from_spec",
    "gauss_legendre",
    "gauss_log",
    "logtensor_apply",
    "KernelContext",
    "RegCase",
    "Assembler",
    "QuadConfig",
    "assemble",
    "oracle_matrix",
    "ht_pointwise_lemma22",
    "ht_apply_piecewise",
    "OdeProblem",
    "solve_problem",
    "run_study",
    "StudyRunner",
]
