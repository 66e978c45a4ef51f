"""Truncated multi-mode bosonic Fock space and sparse operator algebra.

A :class:`FockSpace` enumerates all occupation tuples ``(n_0, ..., n_{L-1})``
with ``0 <= n_m <= cutoffs[m]`` and maps them bijectively onto basis indices
(mixed radix, last mode fastest).  Every operator is a :class:`MatrixOperator`,
a thin immutable wrapper around a sparse complex matrix over one space.

Ladder conventions: ``lower`` maps occupation n to n-1 with amplitude sqrt(n)
(zero on n=0); ``raise`` maps n to n+1 with amplitude sqrt(n+1) and annihilates
the cutoff state (hard truncation).  Identities that rely on unbounded raising
therefore hold only on basis states far enough below the cutoffs; see
:meth:`FockSpace.interior_columns`.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Iterator, Sequence

import numpy as np
import scipy.sparse as sp

DEFAULT_MAX_DIM = 2_000_000

_KINDS = ("lower", "raise")


class CapacityError(ValueError):
    """Requested basis would exceed the configured maximum dimension."""


class SpaceMismatchError(ValueError):
    """Two operands live on different Fock spaces."""


class FockSpace:
    """Dense-indexed occupation basis with one hard cutoff per mode."""

    def __init__(self, cutoffs: Sequence[int], mode_labels: Sequence | None = None,
                 max_dim: int = DEFAULT_MAX_DIM):
        cutoffs = tuple(int(c) for c in cutoffs)
        if len(cutoffs) == 0:
            raise ValueError("a Fock space needs at least one mode")
        if any(c < 0 for c in cutoffs):
            raise ValueError(f"cutoffs must be nonnegative, got {cutoffs}")
        dim = 1
        for c in cutoffs:
            dim *= c + 1
            if dim > max_dim:
                raise CapacityError(
                    f"basis dimension exceeds max_dim={max_dim} for cutoffs {cutoffs}")
        if mode_labels is None:
            mode_labels = tuple(range(len(cutoffs)))
        else:
            mode_labels = tuple(mode_labels)
            if len(mode_labels) != len(cutoffs):
                raise ValueError("mode_labels and cutoffs must have equal length")

        self.cutoffs = cutoffs
        self.mode_labels = mode_labels
        self.nmodes = len(cutoffs)
        self.dim = dim
        self._label_index = {lab: m for m, lab in enumerate(mode_labels)}

        radix = np.array([c + 1 for c in cutoffs], dtype=np.int64)
        strides = np.ones(self.nmodes, dtype=np.int64)
        for m in range(self.nmodes - 2, -1, -1):
            strides[m] = strides[m + 1] * radix[m + 1]
        self.strides = strides

        occ = np.empty((dim, self.nmodes), dtype=np.int64)
        rem = np.arange(dim, dtype=np.int64)
        for m in range(self.nmodes):
            occ[:, m] = rem // strides[m]
            rem = rem % strides[m]
        occ.setflags(write=False)
        self.occupations = occ

    def __eq__(self, other):
        return (isinstance(other, FockSpace)
                and self.cutoffs == other.cutoffs
                and self.mode_labels == other.mode_labels)

    def __hash__(self):
        return hash((self.cutoffs, self.mode_labels))

    def __repr__(self):
        return f"FockSpace(cutoffs={self.cutoffs}, dim={self.dim})"

    def mode_index(self, label) -> int:
        try:
            return self._label_index[label]
        except KeyError:
            raise ValueError(f"no mode labelled {label!r}") from None

    def index_of(self, occupations: Sequence[int]) -> int:
        occ = np.asarray(occupations, dtype=np.int64)
        if occ.shape != (self.nmodes,):
            raise ValueError(f"expected {self.nmodes} occupations, got {occ.shape}")
        if np.any(occ < 0) or np.any(occ > np.array(self.cutoffs)):
            raise ValueError(f"occupations {tuple(occupations)} outside cutoffs {self.cutoffs}")
        return int(occ @ self.strides)

    def occupation_of(self, index: int) -> tuple[int, ...]:
        if not 0 <= index < self.dim:
            raise ValueError(f"basis index {index} out of range")
        return tuple(int(x) for x in self.occupations[index])

    def interior_columns(self, margins) -> np.ndarray:
        """Basis indices whose occupations satisfy occ[m] + margins[m] <= cutoff[m].

        ``margins`` is an int (same margin on every mode) or one int per mode.
        Raising-type operators applied to these columns cannot touch truncation.
        """
        if np.isscalar(margins):
            margins = [int(margins)] * self.nmodes
        margins = np.asarray(margins, dtype=np.int64)
        ok = np.all(self.occupations + margins <= np.array(self.cutoffs), axis=1)
        return np.nonzero(ok)[0]

    def _check_mode(self, mode: int):
        if not 0 <= mode < self.nmodes:
            raise ValueError(f"mode {mode} out of range for {self.nmodes} modes")


def build_space(cutoffs: Sequence[int], mode_labels: Sequence | None = None,
                max_dim: int = DEFAULT_MAX_DIM) -> FockSpace:
    """Build the truncated occupation basis; dim = prod(cutoffs[m] + 1)."""
    return FockSpace(cutoffs, mode_labels, max_dim)


@dataclass(frozen=True)
class NumberState:
    """One occupation-basis vector, given by its occupation tuple."""

    occupations: tuple[int, ...]

    def __init__(self, occupations: Iterable[int]):
        object.__setattr__(self, "occupations", tuple(int(n) for n in occupations))
        if any(n < 0 for n in self.occupations):
            raise ValueError(f"occupations must be nonnegative, got {self.occupations}")

    def index(self, space: FockSpace) -> int:
        return space.index_of(self.occupations)


class MatrixOperator:
    """Sparse complex matrix over a FockSpace basis.

    Treated as immutable: every operation returns a new instance and the
    underlying matrix is never modified in place.
    """

    def __init__(self, space: FockSpace, matrix):
        matrix = sp.csr_matrix(matrix, dtype=np.complex128)
        if matrix.shape != (space.dim, space.dim):
            raise ValueError(f"matrix shape {matrix.shape} does not match dim {space.dim}")
        self.space = space
        self.matrix = matrix

    # -- algebra -----------------------------------------------------------
    def _coerce(self, other: "MatrixOperator"):
        if not isinstance(other, MatrixOperator):
            raise TypeError(f"expected MatrixOperator, got {type(other).__name__}")
        if other.space != self.space:
            raise SpaceMismatchError("operators live on different spaces")
        return other

    def __add__(self, other):
        other = self._coerce(other)
        return MatrixOperator(self.space, self.matrix + other.matrix)

    def __sub__(self, other):
        other = self._coerce(other)
        return MatrixOperator(self.space, self.matrix - other.matrix)

    def __neg__(self):
        return MatrixOperator(self.space, -self.matrix)

    def __mul__(self, scalar):
        return MatrixOperator(self.space, self.matrix * complex(scalar))

    __rmul__ = __mul__

    def __matmul__(self, other):
        other = self._coerce(other)
        return MatrixOperator(self.space, self.matrix @ other.matrix)

    def adjoint(self) -> "MatrixOperator":
        return MatrixOperator(self.space, self.matrix.conj().T.tocsr())

    # -- queries -----------------------------------------------------------
    def max_abs(self) -> float:
        if self.matrix.nnz == 0:
            return 0.0
        return float(np.max(np.abs(self.matrix.data)))

    def max_abs_on_columns(self, columns) -> float:
        sub = self.matrix.tocsc()[:, np.asarray(columns, dtype=int)]
        if sub.nnz == 0:
            return 0.0
        return float(np.max(np.abs(sub.data)))

    def is_hermitian(self, tol: float = 1e-12) -> bool:
        return (self - self.adjoint()).max_abs() <= tol

    def entries(self) -> Iterator[tuple[int, int, complex]]:
        """Stored entries sorted by (row, col); exact zeros are dropped."""
        coo = self.matrix.tocoo()
        order = np.lexsort((coo.col, coo.row))
        for i in order:
            v = coo.data[i]
            if v != 0:
                yield int(coo.row[i]), int(coo.col[i]), complex(v)

    def write_csv(self, path):
        """Debug dump: one `row,col,re,im` line per stored entry, sorted keys."""
        with open(path, "w") as fh:
            fh.write("row,col,re,im\n")
            for r, c, v in self.entries():
                fh.write(f"{r},{c},{v.real:.12g},{v.imag:.12g}\n")

    def toarray(self) -> np.ndarray:
        return self.matrix.toarray()

    def __repr__(self):
        return f"MatrixOperator(dim={self.space.dim}, nnz={self.matrix.nnz})"


def identity(space: FockSpace) -> MatrixOperator:
    return MatrixOperator(space, sp.identity(space.dim, dtype=np.complex128, format="csr"))


def zero_operator(space: FockSpace) -> MatrixOperator:
    return MatrixOperator(space, sp.csr_matrix((space.dim, space.dim), dtype=np.complex128))


def ladder(space: FockSpace, mode: int, kind: str) -> MatrixOperator:
    """Single-mode ladder operator.

    ``kind="lower"``: n -> n-1 with amplitude sqrt(n), zero on the vacuum of
    that mode.  ``kind="raise"``: n -> n+1 with amplitude sqrt(n+1), zero on
    the cutoff state.
    """
    space._check_mode(mode)
    if kind not in _KINDS:
        raise ValueError(f"kind must be one of {_KINDS}, got {kind!r}")
    occ = space.occupations
    if kind == "lower":
        cols = np.nonzero(occ[:, mode] > 0)[0]
        rows = cols - space.strides[mode]
        data = np.sqrt(occ[cols, mode].astype(float))
    else:
        cols = np.nonzero(occ[:, mode] < space.cutoffs[mode])[0]
        rows = cols + space.strides[mode]
        data = np.sqrt(occ[cols, mode].astype(float) + 1.0)
    m = sp.csr_matrix((data, (rows, cols)), shape=(space.dim, space.dim), dtype=np.complex128)
    return MatrixOperator(space, m)


def number_op(space: FockSpace, mode: int) -> MatrixOperator:
    """Number operator of one mode (diagonal)."""
    space._check_mode(mode)
    diag = space.occupations[:, mode].astype(np.complex128)
    return MatrixOperator(space, sp.diags(diag).tocsr())


def commutator(a: MatrixOperator, b: MatrixOperator) -> MatrixOperator:
    """AB - BA; both operators must live on the same space."""
    return a @ b - b @ a


def expectation(state: NumberState, op: MatrixOperator) -> complex:
    """<phi_state, A phi_state> on the occupation-basis vector of ``state``."""
    j = state.index(op.space)
    return complex(op.matrix[j, j])


def matrix_element(bra: NumberState, op: MatrixOperator, ket: NumberState) -> complex:
    """<phi_bra, A phi_ket> between two occupation-basis vectors."""
    i = bra.index(op.space)
    j = ket.index(op.space)
    return complex(op.matrix[i, j])
