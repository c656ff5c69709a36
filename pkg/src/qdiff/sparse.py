"""Canonical real sparse matrix backed by scipy CSR storage."""

from __future__ import annotations

from pathlib import Path

import numpy as np
import scipy.sparse as sp


class SparseMatrix:
    """Real sparse matrix in canonical compressed-row form.

    Entries are sorted by (row, col), duplicates are summed and exact zeros
    are dropped on construction, so two matrices with the same entries compare
    equal entry-for-entry.
    """

    __slots__ = ("_csr",)

    def __init__(self, data):
        if isinstance(data, SparseMatrix):
            csr = data._csr.copy()
        elif sp.issparse(data):
            csr = sp.csr_matrix(data, dtype=float, copy=True)
        else:
            arr = np.asarray(data, dtype=float)
            if arr.ndim != 2:
                raise ValueError(f"expected a 2-D array, got shape {arr.shape}")
            csr = sp.csr_matrix(arr)
        if np.iscomplexobj(csr.data):
            raise TypeError("SparseMatrix holds real entries only")
        csr.sum_duplicates()
        csr.eliminate_zeros()
        csr.sort_indices()
        csr.data.flags.writeable = False
        self._csr = csr

    @classmethod
    def from_coo(cls, rows, cols, vals, shape) -> "SparseMatrix":
        rows = np.asarray(rows, dtype=np.int64)
        cols = np.asarray(cols, dtype=np.int64)
        if rows.size and (rows.min() < 0 or rows.max() >= shape[0] or cols.min() < 0 or cols.max() >= shape[1]):
            raise IndexError("entry index out of range")
        return cls(sp.coo_matrix((np.asarray(vals, dtype=float), (rows, cols)), shape=shape))

    @classmethod
    def identity(cls, n: int) -> "SparseMatrix":
        return cls(sp.identity(n, format="csr"))

    @property
    def csr(self) -> sp.csr_matrix:
        return self._csr

    @property
    def shape(self) -> tuple[int, int]:
        return self._csr.shape

    @property
    def n_rows(self) -> int:
        return self._csr.shape[0]

    @property
    def n_cols(self) -> int:
        return self._csr.shape[1]

    @property
    def nnz(self) -> int:
        return self._csr.nnz

    def entries(self) -> list[tuple[int, int, float]]:
        coo = self._csr.tocoo()
        return list(zip(coo.row.tolist(), coo.col.tolist(), coo.data.tolist()))

    def toarray(self) -> np.ndarray:
        return self._csr.toarray()

    def sparsity(self) -> int:
        """Maximum number of nonzeros in any row."""
        if self.n_rows == 0:
            return 0
        return int(np.diff(self._csr.indptr).max())

    def transpose(self) -> "SparseMatrix":
        return SparseMatrix(self._csr.T)

    @property
    def T(self) -> "SparseMatrix":
        return self.transpose()

    def symmetric(self) -> bool:
        if self.n_rows != self.n_cols:
            return False
        return (self._csr != self._csr.T).nnz == 0

    def antisymmetric(self) -> bool:
        if self.n_rows != self.n_cols:
            return False
        return (self._csr + self._csr.T).nnz == 0

    def __matmul__(self, other):
        if isinstance(other, SparseMatrix):
            return SparseMatrix(self._csr @ other._csr)
        return self._csr @ np.asarray(other)

    def __eq__(self, other):
        if not isinstance(other, SparseMatrix):
            return NotImplemented
        return self.shape == other.shape and self.entries() == other.entries()

    def __repr__(self):
        return f"SparseMatrix(shape={self.shape}, nnz={self.nnz})"

    def save_text(self, path, header: str = "") -> None:
        """Write ``row col value`` lines (0-based) after a ``%`` comment header."""
        lines = []
        for line in (header or "").splitlines():
            lines.append(f"% {line}")
        lines.append(f"% shape {self.n_rows} {self.n_cols} nnz {self.nnz}")
        for r, c, v in self.entries():
            lines.append(f"{r} {c} {v!r}")
        Path(path).write_text("\n".join(lines) + "\n")

    @classmethod
    def load_text(cls, path) -> "SparseMatrix":
        shape = None
        rows, cols, vals = [], [], []
        for raw in Path(path).read_text().splitlines():
            line = raw.strip()
            if not line:
                continue
            if line.startswith("%"):
                parts = line[1:].split()
                if len(parts) >= 3 and parts[0] == "shape":
                    shape = (int(parts[1]), int(parts[2]))
                continue
            r, c, v = line.split()
            rows.append(int(r))
            cols.append(int(c))
            vals.append(float(v))
        if shape is None:
            shape = (max(rows, default=-1) + 1, max(cols, default=-1) + 1)
        return cls.from_coo(rows, cols, vals, shape)


def save_vector(path, vec, header: str = "") -> None:
    """One value per line; ``%`` lines are comments."""
    lines = [f"% {line}" for line in (header or "").splitlines()]
    lines += [repr(float(x)) for x in np.asarray(vec, dtype=float).ravel()]
    Path(path).write_text("\n".join(lines) + "\n")


def load_vector(path) -> np.ndarray:
    vals = [float(s) for s in Path(path).read_text().split("\n") if s.strip() and not s.startswith("%")]
    return np.array(vals)


def as_csr(mat) -> sp.csr_matrix:
    if isinstance(mat, SparseMatrix):
        return mat.csr
    if sp.issparse(mat):
        return sp.csr_matrix(mat)
    return sp.csr_matrix(np.asarray(mat, dtype=float))
