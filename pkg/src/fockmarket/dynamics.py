"""Exact Heisenberg evolution, closed-form price/supply, portfolio, series.

Evolution goes through a full Hermitian eigendecomposition (spaces stay below
a few thousand dimensions) cached on the operator object, so repeated
observables under one Hamiltonian cost one decomposition.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .fock import MatrixOperator, NumberState, commutator, number_op
from .models import MarketModel, interior_margins, sector_exact

HERMITICITY_TOL = 1e-12


class MarginError(ValueError):
    """Initial state too close to a cutoff for the requested computation."""


@dataclass
class TimeSeries:
    """Sampled trajectory (t, value); times strictly increasing."""

    times: np.ndarray
    values: np.ndarray
    label: str = "value"

    def __post_init__(self):
        self.times = np.asarray(self.times, dtype=float)
        self.values = np.asarray(self.values)
        if self.times.ndim != 1 or self.times.shape != self.values.shape:
            raise ValueError("times and values must be 1-d and equally long")
        if self.times.size > 1 and np.any(np.diff(self.times) <= 0):
            raise ValueError("times must be strictly increasing")

    def write_csv(self, path):
        """Header `t,<label>`, one row per sample, 12 significant digits."""
        is_complex = np.iscomplexobj(self.values)
        with open(path, "w") as fh:
            if is_complex:
                fh.write(f"t,{self.label}_re,{self.label}_im\n")
                for t, v in zip(self.times, self.values):
                    fh.write(f"{t:.12g},{v.real:.12g},{v.imag:.12g}\n")
            else:
                fh.write(f"t,{self.label}\n")
                for t, v in zip(self.times, self.values):
                    fh.write(f"{t:.12g},{v:.12g}\n")


@dataclass
class SeriesCoefficients:
    """Short-time expansion: value(t) ~ sum_m coeffs[m] * t**m."""

    coeffs: list
    order: int

    def evaluate(self, t):
        t = np.asarray(t, dtype=float)
        out = np.zeros_like(t, dtype=complex)
        for m in range(self.order, -1, -1):
            out = out * t + self.coeffs[m]
        return out


def _as_hamiltonian(model_or_op) -> MatrixOperator:
    if isinstance(model_or_op, MarketModel):
        return model_or_op.hamiltonian
    return model_or_op


def eigensystem(op: MatrixOperator):
    """(eigenvalues, eigenvectors) of a Hermitian operator, cached on it.

    The matrix is symmetrized before decomposition; an asymmetry beyond
    1e-12 aborts instead of being silently averaged away.
    """
    cached = getattr(op, "_eig", None)
    if cached is not None:
        return cached
    asym = (op - op.adjoint()).max_abs()
    if asym > 2 * HERMITICITY_TOL:
        raise ValueError(f"operator is not Hermitian (asymmetry {asym:.3e})")
    dense = op.toarray()
    dense = 0.5 * (dense + dense.conj().T)
    w, v = np.linalg.eigh(dense)
    op._eig = (w, v)
    return w, v


def evolve_expectation(model, X: MatrixOperator, state: NumberState, times,
                       label: str = "value") -> TimeSeries:
    """Expectation of the Heisenberg-evolved X on a number state.

    When a model is passed, the state must sit in a sector the truncated
    space represents exactly (cutoffs at or above the conserved totals), so
    no boundary artifact can reach the result at any time.
    """
    H = _as_hamiltonian(model)
    if isinstance(model, MarketModel) and not sector_exact(model.space, state):
        raise MarginError("cutoffs are below the state's conserved totals; "
                          "evolution would touch the truncation boundary")
    w, v = eigensystem(H)
    j = state.index(H.space)
    coef = v[j, :].conj()
    Xd = X.matrix @ v
    Xv = v.conj().T @ Xd
    times = np.asarray(times, dtype=float)
    vals = np.empty(times.size, dtype=complex)
    for i, t in enumerate(times):
        phase = np.exp(-1j * w * t) * coef
        vals[i] = phase.conj() @ (Xv @ phase)
    if np.max(np.abs(vals.imag)) < 1e-9 and X.is_hermitian(1e-9):
        vals = vals.real
    return TimeSeries(times, vals, label)


def price_supply_closed_form(M: float, O: float, t, lam: float = 1.0):
    """Decoupled supply/price block solution.

    P(t) = ((M+O) + (M-O) cos(2 lam t)) / 2 and O(t) its mirror image; their
    sum stays at M+O for all t.
    """
    t = np.asarray(t, dtype=float)
    c = np.cos(2.0 * lam * t)
    P = 0.5 * ((M + O) + (M - O) * c)
    Osup = 0.5 * ((M + O) - (M - O) * c)
    return P, Osup


def portfolio_operator(model: MarketModel, trader: int = 1, t: float = 0.0,
                       gamma: float | None = None) -> MatrixOperator:
    """Wealth observable of one trader, optionally Heisenberg-evolved.

    Two-trader: price * shares + cash, with the price an operator.
    Effective-L: gamma * shares + cash with a caller-supplied share value
    gamma (no default; the market-decided value need not equal the cash
    step).  Evolution uses H(t) conjugation via the cached eigensystem.
    """
    space = model.space
    if model.kind == "two-trader":
        n = number_op(space, space.mode_index(("share", trader)))
        k = number_op(space, space.mode_index(("cash", trader)))
        P = number_op(space, space.mode_index(("price", None)))
        pi0 = P @ n + k
    elif model.kind == "effective-L":
        if gamma is None:
            raise ValueError("effective-L portfolio needs an explicit gamma")
        n = number_op(space, space.mode_index(("share", trader)))
        k = number_op(space, space.mode_index(("cash", trader)))
        pi0 = gamma * n + k
    else:
        raise ValueError(f"portfolio_operator does not support kind {model.kind!r}")
    if t == 0.0:
        return pi0
    w, v = eigensystem(model.hamiltonian)
    phase = np.exp(1j * w * t)
    core = v.conj().T @ pi0.toarray() @ v
    evolved = v @ (phase[:, None] * core * phase.conj()[None, :]) @ v.conj().T
    return MatrixOperator(space, evolved)


def heisenberg_series(model, X: MatrixOperator, state: NumberState,
                      order: int) -> SeriesCoefficients:
    """Short-time expansion coefficients of the evolved expectation of X.

    coeffs[m] = (i^m / m!) <[H, [H, ... [H, X]]]> with m nested brackets,
    so the truncated sum reproduces the exact expectation to O(t^(m+1)).
    The state must either sit in an exactly represented sector or keep
    `order` applications' worth of distance from every cutoff.
    """
    H = _as_hamiltonian(model)
    space = H.space
    if isinstance(model, MarketModel) and not sector_exact(space, state):
        margins = interior_margins(model, applications=order)
        occ = np.asarray(state.occupations)
        if np.any(occ + margins > np.asarray(space.cutoffs)):
            raise MarginError(f"state {state.occupations} violates the order-{order} "
                              f"boundary margin {margins}")
    j = state.index(space)
    coeffs = []
    nested = X
    fact = 1.0
    for m in range(order + 1):
        if m > 0:
            nested = commutator(H, nested)
            fact *= m
        coeffs.append((1j ** m) / fact * complex(nested.matrix[j, j]))
    return SeriesCoefficients(coeffs, order)
