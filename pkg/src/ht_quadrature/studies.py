"""
Study orchestrator.

Runs one command (assemble, oracle, quad-study, solve, rules) from a
validated Config and writes its CSV, JSON sidecar and plot script.
"""

import logging
import os
import platform
import time
from dataclasses import asdict
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence, Tuple

import numpy as np
import scipy
from tqdm import tqdm

from . import __version__
from .assembly import Assembler, QuadConfig
from .config import Config
from .exceptions import InvalidArgumentError
from .mesh import DegreeVector, DofMap, TemporalMesh, build_dofmap, mesh_from_spec
from .plotting import h_study_script, hp_study_script, quad_study_script, write_script
from .quadrature import LEGENDRE, LOGJACOBI, gauss_legendre, gauss_log
from .solver import OdeProblem, StudyParams, run_study
from .spectral import KINDS, oracle_matrix
from .utils import ensure_dir, format_duration, write_json, write_matrix_csv, write_rows_csv


logger = logging.getLogger(__name__)

QUAD_STUDY_COLUMNS = ("K", "errM", "errA", "errB")
SOLVE_COLUMNS = ("N", "M", "h_max", "L2", "H1semi", "bracket", "residual")
RULES_COLUMNS = ("node", "weight")
RULES_DIGITS = 18


def log_fit(x: Sequence[float], y: Sequence[float], log_x: bool = False) -> Dict[str, float]:
    """
    Least-squares line through (x, ln y) or (ln x, ln y).

    Returns:
        slope, intercept and the correlation coefficient; empty when fewer
        than two positive samples remain
    """
    x_arr = np.asarray(x, dtype=float)
    y_arr = np.asarray(y, dtype=float)
    keep = y_arr > 0
    if log_x:
        keep &= x_arr > 0
    if np.count_nonzero(keep) < 2:
        return {}
    xs = np.log(x_arr[keep]) if log_x else x_arr[keep]
    ys = np.log(y_arr[keep])
    slope, intercept = np.polyfit(xs, ys, 1)
    corr = float(np.corrcoef(xs, ys)[0, 1]) if np.ptp(xs) > 0 and np.ptp(ys) > 0 else 0.0
    return {"slope": float(slope), "intercept": float(intercept), "correlation": corr}


def check_writable(path: Path) -> None:
    """Fail before any computation when ``path`` cannot be written."""
    parent = path.parent
    if not parent.is_dir():
        raise FileNotFoundError(f"Output directory does not exist: {parent}")
    if not os.access(parent, os.W_OK):
        raise PermissionError(f"Output directory is not writable: {parent}")


class StudyRunner:
    """Runs commands against one configuration."""

    def __init__(self, config: Config, argv: Optional[List[str]] = None):
        """
        Initialize StudyRunner.

        Args:
            config: Configuration, validated here
            argv: Command line to store in every sidecar for replay
        """
        self.config = config.validate()
        self.argv = list(argv or [])

    # -- helpers ------------------------------------------------------------

    def discretization(self) -> Tuple[TemporalMesh, DegreeVector, DofMap]:
        mesh = mesh_from_spec(self.config.mesh.as_spec())
        deg = DegreeVector.from_spec(self.config.degrees.spec, mesh.N)
        return mesh, deg, build_dofmap(mesh, deg)

    def quad_config(self, deg: DegreeVector, K: Optional[int] = None) -> QuadConfig:
        q = self.config.quadrature
        return QuadConfig.from_K(K if K is not None else q.K, deg.p_max, q.K_log)

    def output_path(self, output: Optional[str], default_name: str) -> Path:
        """Explicit paths must already have a directory; the default one is created."""
        if output:
            path = Path(output)
        else:
            path = ensure_dir(self.config.output.dir) / default_name
        check_writable(path)
        return path

    def _metadata(self, command: str, started: float, **extra: Any) -> Dict[str, Any]:
        data = {
            "command": command,
            "argv": self.argv,
            "versions": {
                "ht_quadrature": __version__,
                "numpy": np.__version__,
                "scipy": scipy.__version__,
                "python": platform.python_version(),
            },
            "config": self.config.to_dict(),
            "seconds": time.perf_counter() - started,
        }
        data.update(extra)
        return data

    def _banner(self, title: str) -> None:
        logger.info("=" * 80)
        logger.info(title)
        logger.info("=" * 80)

    @property
    def _digits(self) -> int:
        return self.config.output.digits

    # -- commands -----------------------------------------------------------

    def assemble(self, kind: str, output: Optional[str] = None) -> Dict[str, Any]:
        """Assemble M^HT, A^HT or B^HT on the configured mesh."""
        started = time.perf_counter()
        mesh, deg, dofmap = self.discretization()
        path = self.output_path(output, f"assemble_{kind}.csv")
        qcfg = self.quad_config(deg)

        self._banner(f"ASSEMBLE {kind}: N={mesh.N}, M={dofmap.M}, K={qcfg.K_reg}, K_log={qcfg.K_log}")
        asm = Assembler(
            mesh, deg, qcfg, dofmap=dofmap,
            threads=self.config.parallel.threads, progress=True,
        )
        matrix = asm.assemble(kind)

        write_matrix_csv(str(path), matrix.values, self._digits)
        sidecar = write_json(
            str(path.with_suffix(".json")),
            self._metadata(
                "assemble", started, kind=kind, mesh=mesh.describe(), degrees=list(deg.p),
                orders=asdict(qcfg), M=dofmap.M,
            ),
        )
        logger.info(f"Assembled {kind} in {format_duration(time.perf_counter() - started)}")
        return {"command": "assemble", "kind": kind, "matrix": matrix.values, "csv": str(path), "json": sidecar}

    def oracle(self, kind: str, output: Optional[str] = None) -> Dict[str, Any]:
        """Spectral reference matrix with its certificate."""
        started = time.perf_counter()
        mesh, deg, dofmap = self.discretization()
        path = self.output_path(output, f"oracle_{kind}.csv")

        self._banner(f"ORACLE {kind}: N={mesh.N}, M={dofmap.M}, K_F={self.config.spectral.K_F}")
        result = oracle_matrix(kind, mesh, deg, dofmap, self.config.spectral, progress=True)

        write_matrix_csv(str(path), result.matrix, self._digits)
        sidecar = write_json(
            str(path.with_suffix(".json")),
            self._metadata(
                "oracle", started, mesh=mesh.describe(), degrees=list(deg.p), M=dofmap.M,
                **result.metadata(),
            ),
        )
        return {
            "command": "oracle", "kind": kind, "matrix": result.matrix,
            "certificate": result.certificate, "csv": str(path), "json": sidecar,
        }

    def quad_study(self, output: Optional[str] = None) -> Dict[str, Any]:
        """
        Max-norm error of the assembled matrices against the oracle for each K.

        The oracle matrices are computed once; every K gets a fresh Assembler.
        """
        started = time.perf_counter()
        mesh, deg, dofmap = self.discretization()
        path = self.output_path(output, "quad_study.csv")
        q = self.config.quadrature
        K_values = list(range(q.K_min, q.K_max + 1))

        self._banner(
            f"QUADRATURE STUDY: T={mesh.T:g}, N={mesh.N}, degrees={list(deg.p)}, M={dofmap.M}, "
            f"K={K_values[0]}..{K_values[-1]}"
        )
        references = {}
        certificates = {}
        for kind in KINDS:
            result = oracle_matrix(kind, mesh, deg, dofmap, self.config.spectral)
            references[kind] = result.matrix
            certificates[kind] = result.metadata()

        rows = []
        for K in tqdm(K_values, desc="quad-study"):
            qcfg = self.quad_config(deg, K)
            if rows and rows[-1]["K"] == qcfg.K_reg:
                logger.info(f"K={K} runs as K={qcfg.K_reg} for degree {deg.p_max}; row already written")
                continue
            asm = Assembler(mesh, deg, qcfg, dofmap=dofmap, threads=self.config.parallel.threads)
            row: Dict[str, Any] = {"K": qcfg.K_reg}
            for kind in KINDS:
                row[f"err{kind}"] = float(np.max(np.abs(asm.assemble(kind).values - references[kind])))
            logger.info(f"K={qcfg.K_reg:2d} errM={row['errM']:.3e} errA={row['errA']:.3e} errB={row['errB']:.3e}")
            rows.append(row)

        fits = {
            f"err{kind}": log_fit([r["K"] for r in rows], [r[f"err{kind}"] for r in rows])
            for kind in KINDS
        }
        write_rows_csv(str(path), QUAD_STUDY_COLUMNS, rows, self._digits)
        sidecar = write_json(
            str(path.with_suffix(".json")),
            self._metadata(
                "quad-study", started, mesh=mesh.describe(), degrees=list(deg.p), M=dofmap.M,
                oracle=certificates, fits=fits,
            ),
        )
        script = None
        if self.config.output.plot_script:
            script = write_script(
                str(path.with_suffix(".plot.py")),
                quad_study_script(path.name, f"T={mesh.T:g}, N={mesh.N}, M={dofmap.M}"),
            )

        self._banner("QUADRATURE STUDY COMPLETED")
        return {"command": "quad-study", "rows": rows, "fits": fits, "csv": str(path), "json": sidecar, "plot": script}

    def solve(self, output: Optional[str] = None) -> Dict[str, Any]:
        """h or hp convergence study for the configured model ODE."""
        started = time.perf_counter()
        s = self.config.solver
        path = self.output_path(output, f"solve_{s.kind}_{s.study}.csv")
        problem = OdeProblem.from_preset(s.kind, s.mu, s.load)
        params = StudyParams(
            T=s.T, p=s.p, sigma=s.sigma, N_min=s.N_min, N_max=s.N_max, K=s.K,
            threads=self.config.parallel.threads, progress=True,
        )

        levels = run_study(s.study, problem, params)
        rows = [level.as_row() for level in levels]

        if s.study == "hp":
            fits = {"bracket_vs_sqrtM": log_fit([np.sqrt(r["M"]) for r in rows], [r["bracket"] for r in rows])}
            text = hp_study_script(path.name, f"{s.kind}, {problem.label}, sigma={s.sigma:g}")
        else:
            fits = {"bracket_vs_h": log_fit([r["h_max"] for r in rows], [r["bracket"] for r in rows], log_x=True)}
            text = h_study_script(path.name, f"{s.kind}, {problem.label}, p={s.p}")

        write_rows_csv(str(path), SOLVE_COLUMNS, rows, self._digits)
        sidecar = write_json(
            str(path.with_suffix(".json")),
            self._metadata(
                "solve", started, problem=problem.label, fits=fits,
                timings=[r["seconds"] for r in rows],
            ),
        )
        script = write_script(str(path.with_suffix(".plot.py")), text) if self.config.output.plot_script else None

        self._banner(f"{s.study.upper()} STUDY COMPLETED: {len(rows)} levels")
        return {"command": "solve", "rows": rows, "fits": fits, "csv": str(path), "json": sidecar, "plot": script}

    def rules(self, kind: str, K: int, output: Optional[str] = None) -> Dict[str, Any]:
        """Dump the nodes and weights of a Gauss-Legendre or log-weight rule."""
        started = time.perf_counter()
        if kind == "log":
            rule = gauss_log(K)
        elif kind == "legendre":
            rule = gauss_legendre(K)
        else:
            raise InvalidArgumentError(f"rule kind must be legendre or log, got '{kind}'", tag="cli")
        path = self.output_path(output, f"rules_{kind}_{K}.csv")

        rows = [{"node": float(x), "weight": float(w)} for x, w in zip(rule.nodes, rule.weights)]
        write_rows_csv(str(path), RULES_COLUMNS, rows, RULES_DIGITS)
        sidecar = write_json(
            str(path.with_suffix(".json")),
            self._metadata("rules", started, kind=LOGJACOBI if kind == "log" else LEGENDRE, K=K),
        )
        return {"command": "rules", "rows": rows, "csv": str(path), "json": sidecar}
