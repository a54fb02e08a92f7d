"""
Plot-script emission.

Figures are not rendered here; each function returns the text of a small
matplotlib script that reads the CSV written next to it and saves a PDF.
"""

import logging
from pathlib import Path

from .utils import atomic_write


logger = logging.getLogger(__name__)


_HEADER = '''#!/usr/bin/env python3
import csv

import numpy as np
import matplotlib.pyplot as plt

INFILE = {csv!r}
OUTFILE = {pdf!r}

with open(INFILE) as f:
    rows = list(csv.DictReader(f))
col = lambda name: np.array([float(r[name]) for r in rows])
'''


def quad_study_script(csv_name: str, title: str = "") -> str:
    """Max-norm error against the spectral reference versus K, log-y."""
    pdf = str(Path(csv_name).with_suffix(".pdf"))
    return _HEADER.format(csv=csv_name, pdf=pdf) + f'''
K = col("K")
plt.figure(figsize=(7, 6))
for name, marker in (("errM", "o"), ("errA", "s"), ("errB", "^")):
    plt.semilogy(K, col(name), marker + "-", label=name[3:] + "$^{{HT}}$")
plt.grid(True)
plt.xlabel("$K$")
plt.ylabel("max-norm error")
plt.title({title!r})
plt.legend(loc="upper right")
plt.savefig(OUTFILE, bbox_inches="tight")
'''


def h_study_script(csv_name: str, title: str = "") -> str:
    """Errors versus h on log-log axes with a fitted rate."""
    pdf = str(Path(csv_name).with_suffix(".pdf"))
    return _HEADER.format(csv=csv_name, pdf=pdf) + f'''
h = col("h_max")
err = col("bracket")
q = np.polyfit(np.log(h[-3:]), np.log(err[-3:]), 1)
plt.figure(figsize=(7, 6))
plt.loglog(h, err, "ko-", label="bracket error, rate %.2f" % q[0])
plt.loglog(h, col("L2"), "b^--", label="$L^2$ error")
plt.grid(True)
plt.xlabel("$h$")
plt.ylabel("error")
plt.title({title!r})
plt.legend(loc="upper left")
plt.savefig(OUTFILE, bbox_inches="tight")
'''


def hp_study_script(csv_name: str, title: str = "") -> str:
    """Errors versus sqrt(M), log-y."""
    pdf = str(Path(csv_name).with_suffix(".pdf"))
    return _HEADER.format(csv=csv_name, pdf=pdf) + f'''
root_M = np.sqrt(col("M"))
plt.figure(figsize=(7, 6))
plt.semilogy(root_M, col("bracket"), "ko-", label="bracket error")
plt.semilogy(root_M, col("L2"), "b^--", label="$L^2$ error")
plt.grid(True)
plt.xlabel(r"$\\sqrt{{M}}$")
plt.ylabel("error")
plt.title({title!r})
plt.legend(loc="upper right")
plt.savefig(OUTFILE, bbox_inches="tight")
'''


def write_script(path: str, text: str) -> str:
    """Write a plot script next to its CSV."""
    with atomic_write(path) as f:
        f.write(text)
    logger.info(f"Plot script written to {path}")
    return str(path)
