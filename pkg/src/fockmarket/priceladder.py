"""Price-controlled cash ladder operators.

The operator built here removes (or adds) as many cash quanta in one step as
the price mode currently holds: on a basis vector with cash occupation k and
price occupation M, the lowering variant maps to sqrt(k(k-1)...(k-M+1)) times
the vector with cash k-M (identity when M=0, zero when M>k), and the raising
variant maps to sqrt((k+1)(k+2)...(k+M)) times the vector with cash k+M.  The
two variants are mutual adjoints wherever truncation cannot interfere.
"""

from __future__ import annotations

import math
import warnings

import numpy as np
import scipy.sparse as sp

from .fock import FockSpace, MatrixOperator

_WEIGHT_KINDS = ("falling", "rising")

# beyond this the amplitude is accumulated in log space and the operator is
# flagged saturated
SATURATION_THRESHOLD = 1e300


class SaturationWarning(RuntimeWarning):
    """A factorial weight exceeded the direct-product range."""


def factorial_weight(k: int, M: int, kind: str) -> float:
    """Falling k(k-1)...(k-M+1) or rising (k+1)(k+2)...(k+M) factorial.

    Exact integer accumulation, so intermediate overflow cannot occur; values
    beyond float range come back as inf (pair with log_factorial_weight then).
    M=0 is the empty product 1; falling with M>k is 0.
    """
    k, M = int(k), int(M)
    if k < 0 or M < 0:
        raise ValueError("k and M must be nonnegative")
    if kind not in _WEIGHT_KINDS:
        raise ValueError(f"kind must be one of {_WEIGHT_KINDS}, got {kind!r}")
    if M == 0:
        return 1.0
    if kind == "falling":
        if M > k:
            return 0.0
        value = 1
        for i in range(M):
            value *= k - i
    else:
        value = 1
        for i in range(M):
            value *= k + 1 + i
    try:
        return float(value)
    except OverflowError:
        return math.inf


def log_factorial_weight(k: int, M: int, kind: str) -> float:
    """log of factorial_weight via lgamma; -inf where the weight is 0."""
    k, M = int(k), int(M)
    if k < 0 or M < 0:
        raise ValueError("k and M must be nonnegative")
    if kind not in _WEIGHT_KINDS:
        raise ValueError(f"kind must be one of {_WEIGHT_KINDS}, got {kind!r}")
    if M == 0:
        return 0.0
    if kind == "falling":
        if M > k:
            return -math.inf
        return math.lgamma(k + 1) - math.lgamma(k - M + 1)
    return math.lgamma(k + M + 1) - math.lgamma(k + 1)


def cash_power_op(space: FockSpace, cash_mode: int, price_mode: int,
                  kind: str) -> MatrixOperator:
    """Cash ladder controlled by the price mode.

    ``kind="lower"`` removes, ``kind="raise"`` adds, exactly as many cash
    quanta as the price occupation of each basis vector.  Raising annihilates
    states whose target cash occupation exceeds the cash cutoff, mirroring the
    single-mode truncation policy.
    """
    space._check_mode(cash_mode)
    space._check_mode(price_mode)
    if cash_mode == price_mode:
        raise ValueError("cash_mode and price_mode must differ")
    if kind not in ("lower", "raise"):
        raise ValueError(f"kind must be 'lower' or 'raise', got {kind!r}")

    occ = space.occupations
    kcut = space.cutoffs[cash_mode]
    stride = space.strides[cash_mode]
    price = occ[:, price_mode]
    cash = occ[:, cash_mode]

    rows_all, cols_all, data_all = [], [], []
    saturated = False
    # weights depend only on (cash, price); group by price value
    for M in range(space.cutoffs[price_mode] + 1):
        sel = price == M
        if M == 0:
            cols = np.nonzero(sel)[0]
            rows = cols
            data = np.ones(cols.size)
        elif kind == "lower":
            cols = np.nonzero(sel & (cash >= M))[0]
            rows = cols - M * stride
            k = cash[cols].astype(float)
            # product of M small integers: exact in double precision here;
            # inf from an overflowing trial product routes to the log branch
            with np.errstate(over="ignore"):
                data = np.ones(cols.size)
                for i in range(M):
                    data *= k - i
            if data.size and np.max(data) > SATURATION_THRESHOLD:
                saturated = True
                logs = np.array([log_factorial_weight(int(kk), M, "falling") for kk in k])
                data = np.exp(0.5 * logs)
            else:
                data = np.sqrt(data)
        else:
            cols = np.nonzero(sel & (cash + M <= kcut))[0]
            rows = cols + M * stride
            k = cash[cols].astype(float)
            with np.errstate(over="ignore"):
                data = np.ones(cols.size)
                for i in range(M):
                    data *= k + 1 + i
            if data.size and np.max(data) > SATURATION_THRESHOLD:
                saturated = True
                logs = np.array([log_factorial_weight(int(kk), M, "rising") for kk in k])
                data = np.exp(0.5 * logs)
            else:
                data = np.sqrt(data)
        rows_all.append(rows)
        cols_all.append(cols)
        data_all.append(data)

    if saturated:
        warnings.warn("factorial weights above 1e300; amplitudes accumulated "
                      "in log space", SaturationWarning, stacklevel=2)
    rows = np.concatenate(rows_all)
    cols = np.concatenate(cols_all)
    data = np.concatenate(data_all)
    m = sp.csr_matrix((data, (rows, cols)), shape=(space.dim, space.dim),
                      dtype=np.complex128)
    return MatrixOperator(space, m)
