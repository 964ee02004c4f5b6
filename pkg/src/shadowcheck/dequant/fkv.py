"""Row/column-sampled low-rank sketches of Hermitian observables."""
import math
from dataclasses import dataclass, field

import numpy as np

from ..errors import BudgetExceededError, InvalidInputError
from ..rng import as_generator
from .sq import RowCombination

DEFAULT_P = 200
MAX_P = 5000


def rank_cutoff_bound(fro2, eta, l=0.5):
    """Smallest rank ``r >= (F^2 - eta) / l^2``, clamped at zero.

    Eigenvalues of magnitude at least ``l`` number at most ``F^2 / l^2``;
    keeping ``r`` of them loses at most ``eta`` Frobenius mass.
    """
    if not (0 < l <= 1):
        raise InvalidInputError("need 0 < l <= 1")
    if eta < 0:
        raise InvalidInputError("need eta >= 0")
    return max(0, math.ceil((fro2 - eta) / l**2 - 1e-12))


@dataclass
class FkvSketch:
    """Sketch of one observable ``O`` (given with SQ access as ``op``).

    ``S`` has rows ``O[rows[s], :] * row_scale[s]``; ``W`` is ``S`` restricted
    to the sampled columns and rescaled.  Each kept index ``t`` in ``T``
    defines ``v_t = S^dagger u_t / sigma_t``.
    """

    op: object
    rows: np.ndarray
    row_scale: np.ndarray
    cols: np.ndarray
    col_scale: np.ndarray
    W: np.ndarray
    U: np.ndarray
    sigma: np.ndarray
    T: np.ndarray
    gamma: float
    r: int
    report: dict = field(default_factory=dict)

    @property
    def p(self):
        return self.rows.size

    def coefs(self):
        """Coefficients ``c[s, k]`` with ``v_{T[k]} = sum_s c[s, k] O[:, rows[s]]``."""
        return (self.row_scale[:, None] * self.U[:, self.T]) / self.sigma[self.T]

    def vectors(self):
        """The kept ``v_t`` as explicit columns, shape ``(N, |T|)`` (desk-scale checks)."""
        return self.op.block(np.arange(self.op.N), self.rows) @ self.coefs()

    def combinations(self):
        """Query-and-sample access to each kept ``v_t``."""
        c = self.coefs()
        return [RowCombination(self.op, self.rows, c[:, k]) for k in range(c.shape[1])]

    def approximation(self):
        """Explicit ``Pi O Pi`` with ``Pi = sum_t v_t v_t^dagger`` (desk-scale checks)."""
        v = self.vectors()
        o = self.op.dense()
        pv = v @ (v.conj().T @ o @ v) @ v.conj().T
        return pv


def fkv_sketch(op, r, eps=None, delta=0.1, p=DEFAULT_P, phi=1.0, rng=None):
    """Sketch ``op`` (an :class:`SqMatrix`) down to at most ``r`` directions.

    ``p`` rows are drawn by row norm and rescaled to form ``S``; ``p``
    columns of ``S`` are drawn by the averaged in-row distribution and
    rescaled to form ``W``.  The top ``r`` left singular vectors of ``W`` are
    kept when ``||W^dagger u_t||^2 >= gamma ||W||_F^2`` with
    ``gamma = phi * delta / (8 r)``.  ``eps`` is recorded for the report; the
    sample size is the budget ``p``.
    """
    rng = as_generator(rng)
    if r < 0 or p < 1:
        raise InvalidInputError("need r >= 0 and p >= 1")
    if p > MAX_P:
        raise BudgetExceededError(f"p = {p} exceeds the sketch budget {MAX_P}")
    r = min(int(r), p)
    if op.fro2 == 0:
        empty = np.array([], dtype=np.int64)
        report = {"p": p, "r": r, "eps": eps, "delta": delta, "kept": 0, "degenerate": True}
        return FkvSketch(op, empty, np.array([]), empty, np.array([]), np.zeros((0, 0)),
                         np.zeros((0, 0)), np.array([]), empty, 0.0, r, report)
    probs = op.row_norms2 / op.fro2
    rows = op.sample_rows(rng, p)
    row_scale = 1 / np.sqrt(p * probs[rows])
    # column draw: a uniform sampled row, then a column inside it; all rows of
    # S have the same norm so this is the column-norm distribution of S
    picked = rows[rng.integers(0, p, p)]
    cols = op.sample_in_rows(picked, rng)
    S_cols = op.block(rows, cols) * row_scale[:, None]
    s_row2 = op.row_norms2[rows] * row_scale**2
    q = (np.abs(S_cols) ** 2 / s_row2[:, None]).mean(axis=0)
    col_scale = 1 / np.sqrt(p * q)
    W = S_cols * col_scale[None, :]
    U, sv, _ = np.linalg.svd(W, full_matrices=False)
    U, sv = U[:, :r], sv[:r]
    fro2_w = float(np.sum(np.abs(W) ** 2))
    gamma = phi * delta / (8 * max(r, 1))
    T = np.flatnonzero(sv**2 >= gamma * fro2_w) if r else np.array([], dtype=np.int64)
    report = {"p": p, "r": r, "eps": eps, "delta": delta, "gamma": gamma, "kept": int(T.size),
              "fro2_W": fro2_w, "sigma": sv.tolist()}
    if T.size == 0:
        report["degenerate"] = True
    return FkvSketch(op, rows, row_scale, cols, col_scale, W, U, sv, T, gamma, r, report)
