"""Relative error metrics, convergence rates and result tables."""
from dataclasses import dataclass
import math

import numpy as np

from .assembly import energy_norm

TABLE_COLUMNS = (
    "MeshSize", "NbCells", "NbInternalEdges", "EdgeDegree",
    "L2Error", "H1Error", "EnergyError", "CellCondition",
)


@dataclass
class ErrorReport:
    """One row of a result table.  Errors are ``nan`` when undefined."""

    h: float
    n_cells: int
    n_internal_faces: int
    k: int
    E0: float
    E1: float
    Ea: float
    condition: float
    gamma: float = 0.0
    label: str = ""

    def row(self):
        return (self.h, self.n_cells, self.n_internal_faces, self.k,
                self.E0, self.E1, self.Ea, self.condition)


def _ratio(num, den):
    return math.sqrt(num / den) if den > 0 else math.nan


def compute_errors(disc, solution, exact, label=""):
    """Relative L2, broken H1 and energy errors against an exact field.

    The exact solution is represented through its interpolant and its
    elliptic projection on each element, so that errors vanish when the
    discrete solution reproduces it.
    """
    mesh = disc.mesh
    cell_i, face_i = disc.interpolate(exact)
    num_t = den_t = num_f = den_f = num_1 = den_1 = 0.0
    for i, ops in enumerate(disc.operators):
        d = solution.cell_dofs[i] - cell_i[i]
        M = ops.unknown_basis.mass
        num_t += d @ M @ d
        den_t += cell_i[i] @ M @ cell_i[i]
        pi = ops.elliptic_project(exact)
        d1 = solution.reconstructions[i] - pi
        num_1 += d1 @ ops.stiffness @ d1
        den_1 += pi @ ops.stiffness @ pi
    for f in mesh.faces:
        idx = disc.face_dofs(f.index)
        M = disc.face_bases[f.index].mass
        d = solution.face_dofs[idx] - face_i[idx]
        num_f += f.diameter * (d @ M @ d)
        den_f += f.diameter * (face_i[idx] @ M @ face_i[idx])
    E0 = _ratio(num_t, den_t) + _ratio(num_f, den_f)
    diff_cells = [a - b for a, b in zip(solution.cell_dofs, cell_i)]
    num_a = energy_norm(disc, diff_cells, solution.face_dofs - face_i)
    den_a = energy_norm(disc, cell_i, face_i)
    Ea = num_a / den_a if den_a > 0 else math.nan
    return ErrorReport(
        h=mesh.h,
        n_cells=mesh.n_elements,
        n_internal_faces=mesh.n_internal_faces,
        k=disc.k,
        E0=E0,
        E1=_ratio(num_1, den_1),
        Ea=Ea,
        condition=disc.cell_condition(),
        gamma=disc.enrichment.gamma,
        label=label,
    )


def pairwise_rates(h, e):
    """``log(e_i / e_{i+1}) / log(h_i / h_{i+1})``; ``nan`` where undefined."""
    h, e = np.asarray(h, dtype=float), np.asarray(e, dtype=float)
    if len(h) < 2:
        raise ValueError("at least two results are needed for a rate")
    if np.any(np.diff(h) >= 0):
        raise ValueError("mesh sizes must be strictly decreasing")
    with np.errstate(divide="ignore", invalid="ignore"):
        r = np.log(e[:-1] / e[1:]) / np.log(h[:-1] / h[1:])
    return np.where(np.isfinite(r), r, np.nan)


def lsq_rate(h, e, last=3):
    """Least-squares slope of ``log e`` against ``log h`` over the last ``last`` results."""
    h, e = np.asarray(h, dtype=float)[-last:], np.asarray(e, dtype=float)[-last:]
    if len(h) < 2 or np.any(~np.isfinite(e)) or np.any(e <= 0):
        return math.nan
    return float(np.polyfit(np.log(h), np.log(e), 1)[0])


def convergence_rates(reports, last=3):
    """Per-metric pairwise rates and least-squares slopes.

    Returns ``{metric: {"pairwise": array, "lsq": float}}`` for E0, E1, Ea.
    """
    h = [r.h for r in reports]
    out = {}
    for name in ("E0", "E1", "Ea"):
        e = [getattr(r, name) for r in reports]
        out[name] = {"pairwise": pairwise_rates(h, e), "lsq": lsq_rate(h, e, last)}
    return out


def _fmt(v):
    if isinstance(v, (int, np.integer)):
        return "%d" % v
    return "%.10e" % v


def format_table(reports, failed=(), reference_power=False):
    """Whitespace table of reports.

    ``failed`` holds ``(h, k, reason)`` entries written as comment rows.
    With ``reference_power`` a ``RefHk`` column ``h**k`` is appended.
    """
    cols = TABLE_COLUMNS + (("RefHk",) if reference_power else ())
    lines = [" ".join(cols)]
    for r in reports:
        row = list(r.row())
        if reference_power:
            row.append(r.h ** r.k)
        lines.append(" ".join(_fmt(v) for v in row))
    for h, k, reason in failed:
        lines.append("# FAILED MeshSize=%s EdgeDegree=%d %s" % (_fmt(float(h)), k, reason))
    return "\n".join(lines) + "\n"


def read_table(stream):
    """Parse a table written by :func:`format_table` into a dict of columns."""
    header, rows = None, []
    for line in stream:
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        if header is None:
            header = line.split()
            continue
        rows.append([float(t) for t in line.split()])
    data = np.array(rows).reshape(-1, len(header)) if header else np.zeros((0, 0))
    return {name: data[:, i] for i, name in enumerate(header or ())}
