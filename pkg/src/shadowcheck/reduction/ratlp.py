"""Exact rational feasibility LP by two-phase simplex with Bland's rule."""
from fractions import Fraction

from ..errors import SolverError


def _pivot(tab, basis, row, col):
    prow = tab[row]
    inv = 1 / prow[col]
    if inv != 1:
        tab[row] = prow = [v * inv if v else v for v in prow]
    nz = [j for j, v in enumerate(prow) if v]
    for r, trow in enumerate(tab):
        if r == row:
            continue
        f = trow[col]
        if f:
            for j in nz:
                trow[j] -= f * prow[j]
    basis[row] = col


def _simplex(tab, basis, ncols, cap):
    """Minimize the objective stored in the last row (reduced costs, rhs last column)."""
    obj = tab[-1]
    for _ in range(cap):
        col = next((j for j in range(ncols) if obj[j] < 0), None)
        if col is None:
            return
        best, row = None, None
        for r in range(len(tab) - 1):
            a = tab[r][col]
            if a > 0:
                ratio = tab[r][-1] / a
                if best is None or ratio < best or (ratio == best and basis[r] < basis[row]):
                    best, row = ratio, r
        if row is None:
            raise SolverError("rational LP phase is unbounded")
        _pivot(tab, basis, row, col)
        obj = tab[-1]
    raise SolverError(f"rational simplex hit its pivot cap ({cap})")


def feasible_point(a_eq, b_eq, a_ub, b_ub, nvars, cap=100_000):
    """Find ``x >= 0`` with ``a_eq x = b_eq`` and ``a_ub x <= b_ub``, exactly.

    Rows are sparse dicts ``{var: coefficient}`` and right-hand sides are
    Fractions (or ints).  Returns a list of Fractions, or None when the system
    is infeasible.  Phase one minimizes the sum of artificial variables.
    """
    rows = [(dict(r), Fraction(b), None) for r, b in zip(a_eq, b_eq)]
    rows += [(dict(r), Fraction(b), k) for k, (r, b) in enumerate(zip(a_ub, b_ub))]
    nslack = len(a_ub)
    nrows = len(rows)
    ncols = nvars + nslack + nrows
    tab = []
    basis = []
    zero = Fraction(0)
    for i, (coef, rhs, slack) in enumerate(rows):
        line = [zero] * (ncols + 1)
        for j, v in coef.items():
            line[j] = Fraction(v)
        if slack is not None:
            line[nvars + slack] = Fraction(1)
        if rhs < 0:
            line = [-v for v in line]
            rhs = -rhs
        line[nvars + nslack + i] = Fraction(1)
        line[-1] = rhs
        tab.append(line)
        basis.append(nvars + nslack + i)
    obj = [zero] * (ncols + 1)
    for line in tab:
        for j in range(nvars + nslack):
            obj[j] -= line[j]
        obj[-1] -= line[-1]
    tab.append(obj)
    _simplex(tab, basis, nvars + nslack, cap)
    if tab[-1][-1] != 0:
        return None
    x = [Fraction(0)] * nvars
    for r, b in enumerate(basis):
        if b < nvars:
            x[b] = tab[r][-1]
    return x
