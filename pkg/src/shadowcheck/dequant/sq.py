"""Sampling-and-query (SQ) access to vectors and Hermitian matrices.

A vector with SQ access answers entry queries, reports its norm, and samples
indices ``i`` with probability ``|v(i)|^2 / ||v||^2``.  Oversampled access
(``phi > 1``) samples from a majorant ``|v~(i)|^2 >= |v(i)|^2`` with
``||v~||^2 = phi ||v||^2`` instead; estimators reweight accordingly.

Matrices come either explicitly or as ``A = sum_t lambda_t w_t w_t^dagger``
with orthonormal ``w_t`` (factorized), which supports very large ``N``.
"""
import numpy as np

from .. import kernels
from ..errors import DimensionError, InvalidInputError


class Sampler:
    """Index sampler proportional to fixed nonnegative weights (alias method)."""

    def __init__(self, weights):
        w = np.asarray(weights, dtype=float).ravel()
        if w.size == 0 or not w.sum() > 0 or np.any(w < 0):
            raise InvalidInputError("cannot sample from an all-zero or negative weight vector")
        self.n = w.size
        self.prob, self.alias = kernels.alias_table(w)

    def draw(self, rng, size):
        k = rng.integers(0, self.n, size)
        keep = rng.random(size) < self.prob[k]
        return np.where(keep, k, self.alias[k])


class SqVector:
    """Explicit vector with (optionally oversampled) SQ access.

    ``phi`` builds the majorant ``|v~(i)|^2 = |v(i)|^2 + (phi - 1) ||v||^2 / N``;
    an explicit ``majorant`` array of squared weights may be given instead.
    """

    def __init__(self, values, phi=1.0, majorant=None):
        v = np.asarray(values, dtype=np.complex128).ravel()
        if v.size == 0:
            raise InvalidInputError("empty vector")
        self.values = v
        self.norm2 = float(np.sum(np.abs(v) ** 2))
        if self.norm2 == 0:
            raise InvalidInputError("SQ access needs a nonzero vector")
        if majorant is None:
            if phi < 1:
                raise InvalidInputError("phi must be at least 1")
            majorant = np.abs(v) ** 2 + (phi - 1) * self.norm2 / v.size
        majorant = np.asarray(majorant, dtype=float)
        if majorant.shape != v.shape or np.any(majorant < np.abs(v) ** 2 * (1 - 1e-12)):
            raise InvalidInputError("majorant must dominate |v|^2 entrywise")
        self.tilde = majorant
        self.tilde_norm2 = float(majorant.sum())
        self.phi = self.tilde_norm2 / self.norm2
        self._sampler = Sampler(majorant)

    @property
    def N(self):
        return self.values.size

    def query(self, idx):
        return self.values[idx]

    def tilde2(self, idx):
        return self.tilde[idx]

    def sample(self, rng, size):
        return self._sampler.draw(rng, size)


class SqMatrix:
    """Hermitian matrix with SQ access to rows and to the row-norm vector."""

    def __init__(self, explicit=None, lambdas=None, vectors=None, check=True, allow_zero=False):
        if explicit is not None:
            a = np.asarray(explicit, dtype=np.complex128)
            if a.ndim != 2 or a.shape[0] != a.shape[1]:
                raise DimensionError("explicit SQ matrix must be square")
            if check and not np.allclose(a, a.conj().T, atol=1e-10):
                raise InvalidInputError("SQ matrices here must be Hermitian")
            self.kind = "explicit"
            self.A = a
            self.N = a.shape[0]
            sq = np.abs(a) ** 2
            self.row_norms2 = sq.sum(axis=1)
            self.fro2 = float(self.row_norms2.sum())
            rows = sq / np.where(self.row_norms2 > 0, self.row_norms2, 1.0)[:, None]
            self._flat_cdf = (np.cumsum(rows, axis=1) + np.arange(self.N)[:, None]).ravel()
        else:
            lam = np.asarray(lambdas, dtype=float).ravel()
            w = np.asarray(vectors, dtype=np.complex128)
            if w.ndim != 2 or w.shape[1] != lam.size:
                raise DimensionError("factor vectors must be N x rank")
            if check and w.shape[0] <= 4096:
                gram = w.conj().T @ w
                if not np.allclose(gram, np.eye(lam.size), atol=1e-8):
                    raise InvalidInputError("factor vectors must be orthonormal")
            self.kind = "factorized"
            self.lam = lam
            self.W = w
            self.N = w.shape[0]
            self._absw2 = np.abs(w) ** 2
            self.row_norms2 = self._absw2 @ (lam**2)
            self.fro2 = float(np.sum(lam**2))
        if self.fro2 == 0:
            if not allow_zero:
                raise InvalidInputError("SQ access needs a nonzero matrix")
            self._rows = None
            return
        if self.kind == "factorized":
            self._col = [Sampler(self._absw2[:, t]) for t in range(lam.size)]
            self._lam_pick = Sampler(np.abs(lam))
        self._rows = Sampler(self.row_norms2)

    @property
    def fro(self):
        return float(np.sqrt(self.fro2))

    def dense(self):
        if self.kind == "explicit":
            return self.A
        return (self.W * self.lam) @ self.W.conj().T

    def entries(self, i, j):
        """``A[i, j]`` for broadcastable index arrays."""
        i = np.asarray(i)
        j = np.asarray(j)
        if self.kind == "explicit":
            return self.A[i, j]
        return np.sum(self.W[i] * self.lam * self.W[j].conj(), axis=-1)

    def block(self, rows, cols):
        """Submatrix ``A[rows][:, cols]``."""
        rows = np.asarray(rows)
        cols = np.asarray(cols)
        if self.kind == "explicit":
            return self.A[np.ix_(rows, cols)]
        return (self.W[rows] * self.lam) @ self.W[cols].conj().T

    def row(self, i):
        if self.kind == "explicit":
            return self.A[i]
        return (self.W[i] * self.lam) @ self.W.conj().T

    def sample_rows(self, rng, size):
        return self._rows.draw(rng, size)

    def sample_in_rows(self, rows, rng):
        """One column per given row, drawn with probability ``|A_ij|^2 / ||A_i||^2``."""
        rows = np.asarray(rows, dtype=np.int64)
        if np.any(self.row_norms2[rows] <= 0):
            raise InvalidInputError("cannot sample inside an all-zero row")
        if self.kind == "explicit":
            idx = np.searchsorted(self._flat_cdf, rows + rng.random(rows.size), side="right")
            return np.clip(idx - rows * self.N, 0, self.N - 1)
        # rejection from the Cauchy-Schwarz majorant: t ~ |a_t|, then j ~ |w_t(j)|^2
        out = np.empty(rows.size, dtype=np.int64)
        todo = np.arange(rows.size)
        while todo.size:
            a = np.abs(self.lam * self.W[rows[todo]])
            asum = a.sum(axis=1)
            acdf = np.cumsum(a, axis=1) / asum[:, None]
            t = np.minimum((acdf < rng.random(todo.size)[:, None]).sum(axis=1), self.lam.size - 1)
            j = np.empty(todo.size, dtype=np.int64)
            for tt in np.unique(t):
                sel = np.flatnonzero(t == tt)
                j[sel] = self._col[tt].draw(rng, sel.size)
            num = np.abs(self.entries(rows[todo], j)) ** 2
            den = asum * np.sum(a * self._absw2[j], axis=1)
            ok = rng.random(todo.size) * den <= num
            out[todo[ok]] = j[ok]
            todo = todo[~ok]
        return out

    def sample_entries(self, rng, size, values=False):
        """Index pairs ``(i, j)`` with probability ``|A_ij|^2 / ||A||_F^2``.

        With ``values=True`` the entries ``A_ij`` are returned as a third array.
        """
        if self.kind == "explicit":
            rows = self.sample_rows(rng, size)
            cols = self.sample_in_rows(rows, rng)
            return (rows, cols, self.A[rows, cols]) if values else (rows, cols)
        # joint rejection: t ~ |lambda_t|, then i, j ~ |w_t|^2 independently
        lam_abs = np.abs(self.lam)
        bound = lam_abs.sum()
        out_i = np.empty(size, dtype=np.int64)
        out_j = np.empty(size, dtype=np.int64)
        out_a = np.empty(size, dtype=np.complex128)
        filled = 0
        while filled < size:
            want = size - filled
            batch = int(want * bound**2 / self.fro2 * 1.1) + 16
            t = self._lam_pick.draw(rng, batch)
            i = np.empty(batch, dtype=np.int64)
            j = np.empty(batch, dtype=np.int64)
            for tt in np.unique(t):
                sel = np.flatnonzero(t == tt)
                i[sel] = self._col[tt].draw(rng, sel.size)
                j[sel] = self._col[tt].draw(rng, sel.size)
            wi = self.W[i]
            wj = self.W[j]
            a = np.einsum("bt,bt->b", wi * self.lam, wj.conj())
            den = bound * np.einsum("bt,bt->b", np.abs(wi) ** 2 * lam_abs, np.abs(wj) ** 2)
            ok = np.flatnonzero(rng.random(batch) * den <= np.abs(a) ** 2)[:want]
            out_i[filled: filled + ok.size] = i[ok]
            out_j[filled: filled + ok.size] = j[ok]
            out_a[filled: filled + ok.size] = a[ok]
            filled += ok.size
        return (out_i, out_j, out_a) if values else (out_i, out_j)


def build_sq(data, phi=1.0):
    """SQ access for an explicit vector, an explicit matrix, or ``(lambdas, vectors)``."""
    if isinstance(data, (SqVector, SqMatrix)):
        return data
    if isinstance(data, tuple) and len(data) == 2:
        return SqMatrix(lambdas=data[0], vectors=data[1])
    arr = np.asarray(data)
    if arr.ndim == 1:
        return SqVector(arr, phi=phi)
    if arr.ndim == 2:
        return SqMatrix(explicit=arr)
    raise InvalidInputError("build_sq expects a vector, a matrix or a factorization")


class RowCombination:
    """The vector ``v = sum_s c_s A[:, i_s]`` for a Hermitian SQ matrix ``A``.

    Sampling uses the majorant
    ``|v~(x)|^2 = (sum_s |c_s|) sum_s |c_s| |A[i_s, x]|^2``, whose total
    ``||v~||^2`` is known exactly, so this is oversampled SQ access.
    """

    CHUNK = 8192

    def __init__(self, op, rows, coefs):
        self.op = op
        self.rows = np.asarray(rows, dtype=np.int64)
        self.coefs = np.asarray(coefs, dtype=np.complex128)
        self.abs_c = np.abs(self.coefs)
        self.c1 = float(self.abs_c.sum())
        weights = self.abs_c * op.row_norms2[self.rows]
        self.tilde_norm2 = self.c1 * float(weights.sum())
        self._pick = Sampler(weights) if weights.sum() > 0 else None
        # factorized matrices give O(rank) queries: v(x) = W[x] @ z
        self._z = None
        if op.kind == "factorized":
            self._z = op.lam * (op.W[self.rows].conj().T @ self.coefs)

    @property
    def N(self):
        return self.op.N

    def _chunked(self, x, fn):
        x = np.asarray(x)
        if x.size <= self.CHUNK:
            return fn(x)
        return np.concatenate([fn(x[lo: lo + self.CHUNK]) for lo in range(0, x.size, self.CHUNK)])

    def query(self, x):
        if self._z is not None:
            return self.op.W[np.asarray(x)] @ self._z
        return self._chunked(x, lambda xs: self.op.block(xs, self.rows) @ self.coefs)

    def tilde2(self, x):
        return self._chunked(x, lambda xs: self.c1 * (np.abs(self.op.block(xs, self.rows)) ** 2 @ self.abs_c))

    def sample(self, rng, size):
        if self._pick is None:
            raise InvalidInputError("zero combination cannot be sampled")
        s = self._pick.draw(rng, size)
        return self.op.sample_in_rows(self.rows[s], rng)
