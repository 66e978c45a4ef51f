"""Thermodynamic-limit solution of the fixed-cash-step market.

In the limit of many traders with uniform couplings the collective exchange
operator freezes into a complex constant X0, and the per-trader share count
follows a single cosine law with angular frequency
omega = sqrt((Phi - nu)^2 + 16 |X0|^2), where Phi is the common cash/share
frequency difference and nu the phase rate of the frozen collective operator.
An adaptive ODE integration of the reduced two-variable system serves as an
independent oracle for that closed form.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.integrate import solve_ivp

from .fock import (FockSpace, MatrixOperator, commutator, ladder, number_op)
from .dynamics import TimeSeries


class DegenerateParametersError(ValueError):
    """Phi = nu together with X0 = 0 leaves the oscillation frequency zero."""


@dataclass
class MeanFieldParams:
    """Inputs of the limit solution.

    Phi is the common beta - alpha difference; nu the phase rate of the
    collective constant; X0 the frozen collective amplitude; n0, k0 the
    initial mean share and cash occupations; gamma_share the market-decided
    share value entering the portfolio.
    """

    Phi: float
    nu: float
    X0: complex
    n0: float
    k0: float
    gamma_share: float = 1.0

    @property
    def omega(self) -> float:
        return math.sqrt((self.Phi - self.nu) ** 2 + 16.0 * abs(self.X0) ** 2)

    def _require_omega(self) -> float:
        w = self.omega
        if w == 0.0:
            raise DegenerateParametersError("Phi = nu and X0 = 0: frequency is zero")
        return w


def x_operator(space: FockSpace, trader: int) -> MatrixOperator:
    """Exchange operator of one trader: lower a share, raise a cash quantum."""
    m_a = space.mode_index(("share", trader))
    m_c = space.mode_index(("cash", trader))
    return ladder(space, m_a, "lower") @ ladder(space, m_c, "raise")


def x_algebra(space: FockSpace, i: int, j: int) -> dict[str, MatrixOperator]:
    """The three commutators closing the exchange algebra.

    Keys: "XXdag" for [X_i, X_j^dag], "Xn" for [X_i, n_j], "Xk" for
    [X_i, k_j].  On interior states they equal delta_ij (k_i - n_i),
    delta_ij X_i and -delta_ij X_i respectively.
    """
    Xi = x_operator(space, i)
    Xj = x_operator(space, j)
    nj = number_op(space, space.mode_index(("share", j)))
    kj = number_op(space, space.mode_index(("cash", j)))
    return {
        "XXdag": commutator(Xi, Xj.adjoint()),
        "Xn": commutator(Xi, nj),
        "Xk": commutator(Xi, kj),
    }


def meanfield_n(t, p: MeanFieldParams):
    """Closed-form mean share count; n(0) = n0 and period 2 pi / omega."""
    w = p._require_omega()
    t = np.asarray(t, dtype=float)
    c = np.cos(w * t)
    val = (p.n0 * (p.Phi - p.nu) ** 2
           - 8.0 * abs(p.X0) ** 2 * (p.k0 * (c - 1.0) - p.n0 * (c + 1.0))) / w ** 2
    return val if val.ndim else float(val)


def meanfield_portfolio(t, p: MeanFieldParams):
    """Share value times share count plus cash, via the closed-form n(t).

    Affine in n(t) with slope gamma_share - 1: a unit-renormalized price
    means every trade swaps one share against one cash quantum, so only the
    gap between the market value and that unit moves the portfolio.
    """
    pi0 = p.gamma_share * p.n0 + p.k0
    n_t = meanfield_n(t, p)
    return pi0 + (p.gamma_share - 1.0) * (n_t - p.n0)


def integrate_meanfield_ode(p: MeanFieldParams, times,
                            rtol: float = 1e-10, atol: float = 1e-12) -> TimeSeries:
    """Adaptive integration of the reduced collective system.

    Variables are the per-trader exchange amplitude x(t) (starting from 0 on
    a number state) and the mean share count n(t); the conserved per-trader
    total Q = n0 + k0 enters the drive.  The frozen collective constant
    carries the phase convention X(t) = X0 * exp(i nu t); with that
    convention the closed form meanfield_n solves this system exactly, which
    is what the cross-check calibrates.
    """
    times = np.asarray(times, dtype=float)
    Q = p.n0 + p.k0
    X0 = complex(p.X0)
    nu = p.nu

    def rhs(t, y):
        x, n = y[0], y[1]
        Xt = X0 * np.exp(1j * nu * t)
        dx = 1j * p.Phi * x + 2j * Xt * (2.0 * n - Q)
        dn = 2j * (x * np.conj(Xt) - Xt * np.conj(x))
        return [dx, dn]

    y0 = np.array([0.0 + 0.0j, p.n0 + 0.0j])
    sol = solve_ivp(rhs, (times[0], times[-1]), y0, t_eval=times,
                    method="DOP853", rtol=rtol, atol=atol)
    if not sol.success:
        raise RuntimeError(f"ODE integration failed: {sol.message}")
    return TimeSeries(times, sol.y[1], label="n")
