"""First-iterate approximation of the open market's portfolio dynamics.

With reservoir frequencies constant over the label set, the exchange
operators acquire pure oscillating phases chi(t) and chi~(t) at zeroth order;
feeding the first-iterate correction back into the share/cash equations turns
the drift into two cumulative integrals of one complex function r(t) built
from four phase integrals (eta functions) and two state coefficients w1, w2.
The portfolio change splits into the classical price swing n (O-M) sin^2 and
the r-driven correction.

All phase integrals are smooth bounded oscillatory functions; the point API
uses adaptive quadrature, trajectories use a refined-grid cumulative Simpson
rule, and a fixed-step Simpson oracle cross-validates both.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.integrate import cumulative_simpson, quad, simpson

from .dynamics import TimeSeries
from .fock import NumberState, build_space, expectation, ladder
from .priceladder import cash_power_op, factorial_weight


@dataclass
class FplParams:
    """Regime and initial data of the first-iterate approximation.

    M, O: initial price and supply quanta.  lam: coupling (> 0 except via the
    explicit lam=0 branch).  omega_a/omega_c: system share/cash frequencies;
    Omega_A/Omega_C: the reservoir ones, constant over the label set (the
    approximation's validity regime).  n, k: system initial occupations;
    n_res, k_res, f_k0: single-reservoir-trader data feeding the computed
    state coefficients.  Explicit w1, w2 override the computed ones.
    """

    M: int
    O: int
    lam: float
    omega_a: float
    omega_c: float
    Omega_A: float
    Omega_C: float
    n: int
    k: int
    n_res: int = 1
    k_res: int = 1
    f_k0: complex = 1.0
    w1: float | None = None
    w2: float | None = None

    def __post_init__(self):
        if self.M < 0 or self.O < 0:
            raise ValueError("M and O must be nonnegative")
        if self.lam < 0:
            raise ValueError("lam must be nonnegative")


@dataclass
class FplTrajectory:
    """Price mean, occupations and portfolio change on one time grid."""

    times: np.ndarray
    Pc: TimeSeries
    n_t: TimeSeries
    k_t: TimeSeries
    delta_pi: TimeSeries

    def write_csv(self, path):
        with open(path, "w") as fh:
            fh.write("t,Pc,n,k,delta_pi\n")
            for i, t in enumerate(self.times):
                fh.write(f"{t:.12g},{self.Pc.values[i]:.12g},"
                         f"{self.n_t.values[i]:.12g},{self.k_t.values[i]:.12g},"
                         f"{self.delta_pi.values[i]:.12g}\n")


def price_mean(t, p: FplParams):
    """Classical price P_c(t) = ((M+O) + (M-O) cos(2 lam t)) / 2."""
    t = np.asarray(t, dtype=float)
    out = 0.5 * ((p.M + p.O) + (p.M - p.O) * np.cos(2.0 * p.lam * t))
    return out if out.ndim else float(out)


def phase_coefficients(p: FplParams) -> tuple[float, float, float, float]:
    """(alpha, beta, alpha~, beta~); beta's are 0/0 at lam = 0, hence the error."""
    if p.lam == 0.0:
        raise ValueError("lam = 0: use the explicit zero-coupling branch")
    alpha = 0.5 * ((p.M + p.O) * p.omega_c - 2.0 * p.omega_a)
    beta = p.omega_c * (p.M - p.O) / (4.0 * p.lam)
    alpha_t = 0.5 * ((p.M + p.O) * p.Omega_C - 2.0 * p.Omega_A)
    beta_t = p.Omega_C * (p.M - p.O) / (4.0 * p.lam)
    return alpha, beta, alpha_t, beta_t


def phases(t, p: FplParams):
    """chi(t) = alpha t + beta sin(2 lam t) and its reservoir twin."""
    alpha, beta, alpha_t, beta_t = phase_coefficients(p)
    t = np.asarray(t, dtype=float)
    s = np.sin(2.0 * p.lam * t)
    return alpha * t + beta * s, alpha_t * t + beta_t * s


def _integrands(p: FplParams):
    def f_eta1(u):
        chi, _ = phases(u, p)
        return (price_mean(u, p) * p.omega_c - p.omega_a) * np.exp(1j * chi)

    def f_eta2(u):
        _, chi_t = phases(u, p)
        return np.exp(1j * chi_t)

    def f_eta1t(u):
        _, chi_t = phases(u, p)
        return (price_mean(u, p) * p.Omega_C - p.Omega_A) * np.exp(1j * chi_t)

    def f_eta2t(u):
        chi, _ = phases(u, p)
        return np.exp(1j * chi)

    return f_eta1, f_eta2, f_eta1t, f_eta2t


def eta_functions(t: float, p: FplParams, epsrel: float = 1e-9):
    """Adaptive-quadrature phase integrals at one time.

    eta1 = 1 + i int_0^t (P_c w_c - w_a) e^{i chi}; eta2 = i lam int_0^t
    e^{i chi~}; the reservoir twins swap frequencies and phases.
    """
    f1, f2, f1t, f2t = _integrands(p)

    def cquad(f):
        if t == 0.0:
            return 0.0 + 0.0j
        val, _ = quad(f, 0.0, t, complex_func=True, epsabs=1e-12,
                      epsrel=epsrel, limit=400)
        return val

    eta1 = 1.0 + 1j * cquad(f1)
    eta2 = 1j * p.lam * cquad(f2)
    eta1t = 1.0 + 1j * cquad(f1t)
    eta2t = 1j * p.lam * cquad(f2t)
    return eta1, eta2, eta1t, eta2t


def eta_functions_simpson(t: float, p: FplParams, points_per_unit: int = 10_000):
    """Fixed-step Simpson oracle for the phase integrals (cross-validation)."""
    if t == 0.0:
        return 1.0 + 0j, 0j, 1.0 + 0j, 0j
    npanels = max(2, int(math.ceil(t * points_per_unit)))
    npanels += npanels % 2
    grid = np.linspace(0.0, t, npanels + 1)
    f1, f2, f1t, f2t = _integrands(p)

    def simp(f):
        y = f(grid)
        return simpson(y.real, x=grid) + 1j * simpson(y.imag, x=grid)

    return (1.0 + 1j * simp(f1), 1j * p.lam * simp(f2),
            1.0 + 1j * simp(f1t), 1j * p.lam * simp(f2t))


def omega_coefficients(p: FplParams) -> tuple[float, float]:
    """State coefficients of r(t) for a single-trader reservoir.

    w1 = |f|^2 (1+n) k_fall [n' ko_rise - (1+n') ko_fall] and w2 with the
    roles of system and reservoir swapped inside the bracket; both vanish
    when the cash falling factorials die (M above both cash holdings) and
    coincide when the two traders start identically.
    """
    f2 = abs(complex(p.f_k0)) ** 2
    k_fall = factorial_weight(p.k, p.M, "falling")
    k_rise = factorial_weight(p.k, p.M, "rising")
    ko_fall = factorial_weight(p.k_res, p.M, "falling")
    ko_rise = factorial_weight(p.k_res, p.M, "rising")
    w1 = f2 * (1 + p.n) * k_fall * (p.n_res * ko_rise - (1 + p.n_res) * ko_fall)
    w2 = f2 * (1 + p.n_res) * ko_fall * (p.n * k_rise - (1 + p.n) * k_fall)
    return w1, w2


def _w_pair(p: FplParams) -> tuple[float, float]:
    if p.w1 is not None or p.w2 is not None:
        if p.w1 is None or p.w2 is None:
            raise ValueError("override either both of w1, w2 or neither")
        return float(p.w1), float(p.w2)
    return omega_coefficients(p)


def r_of_t(t: float, p: FplParams) -> complex:
    """r(t) = w1 eta1 conj(eta2~) + w2 eta2 conj(eta1~) (adaptive etas)."""
    w1, w2 = _w_pair(p)
    eta1, eta2, eta1t, eta2t = eta_functions(t, p)
    return w1 * eta1 * np.conj(eta2t) + w2 * eta2 * np.conj(eta1t)


def _fine_grid(times: np.ndarray, refine: int):
    segments = [np.array([times[0]])]
    for i in range(times.size - 1):
        segments.append(np.linspace(times[i], times[i + 1], refine + 1)[1:])
    grid = np.concatenate(segments)
    sample = np.arange(0, grid.size, refine)
    return grid, sample


def _cumulative(y: np.ndarray, x: np.ndarray) -> np.ndarray:
    re = cumulative_simpson(y.real, x=x, initial=0.0)
    im = cumulative_simpson(y.imag, x=x, initial=0.0)
    return re + 1j * im


def trajectory(p: FplParams, times, refine: int = 32) -> FplTrajectory:
    """n(t), k(t), P_c(t) and the portfolio change on the given grid.

    n(t) = n - 2 lam Im int_0^t r, k(t) = k + 2 lam Im int_0^t P_c r, and
    delta_pi(t) = n (O-M) sin^2(lam t) + (-2 lam Im{int r} (M + (O-M)
    sin^2(lam t)) + 2 lam Im{int P_c r}).  Cumulative integrals accumulate
    segment by segment on a grid refined `refine`-fold between samples; at
    lam = 0 every drive term vanishes and the constant branch is returned.
    """
    times = np.asarray(times, dtype=float)
    if times.size < 1 or times[0] != 0.0:
        raise ValueError("trajectory times must start at 0")
    if times.size > 1 and np.any(np.diff(times) <= 0):
        raise ValueError("trajectory times must be increasing")

    if p.lam == 0.0:
        const = np.full(times.size, float(p.M))
        zero = np.zeros(times.size)
        return FplTrajectory(
            times,
            Pc=TimeSeries(times, const, "Pc"),
            n_t=TimeSeries(times, np.full(times.size, float(p.n)), "n"),
            k_t=TimeSeries(times, np.full(times.size, float(p.k)), "k"),
            delta_pi=TimeSeries(times, zero, "delta_pi"),
        )

    w1, w2 = _w_pair(p)
    grid, sample = _fine_grid(times, refine)
    chi, chi_t = phases(grid, p)
    Pc = price_mean(grid, p)

    eta1 = 1.0 + 1j * _cumulative((Pc * p.omega_c - p.omega_a) * np.exp(1j * chi), grid)
    eta2 = 1j * p.lam * _cumulative(np.exp(1j * chi_t), grid)
    eta1t = 1.0 + 1j * _cumulative((Pc * p.Omega_C - p.Omega_A) * np.exp(1j * chi_t), grid)
    eta2t = 1j * p.lam * _cumulative(np.exp(1j * chi), grid)

    r = w1 * eta1 * np.conj(eta2t) + w2 * eta2 * np.conj(eta1t)
    int_r = _cumulative(r, grid)
    int_pr = _cumulative(Pc * r, grid)

    s2 = np.sin(p.lam * grid) ** 2
    n_t = p.n - 2.0 * p.lam * int_r.imag
    k_t = p.k + 2.0 * p.lam * int_pr.imag
    dpi = (p.n * (p.O - p.M) * s2
           + (-2.0 * p.lam * int_r.imag * (p.M + (p.O - p.M) * s2)
              + 2.0 * p.lam * int_pr.imag))

    return FplTrajectory(
        times,
        Pc=TimeSeries(times, Pc[sample], "Pc"),
        n_t=TimeSeries(times, n_t[sample], "n"),
        k_t=TimeSeries(times, k_t[sample], "k"),
        delta_pi=TimeSeries(times, dpi[sample], "delta_pi"),
    )


def _mean_exchange_overlap(p: FplParams) -> complex:
    """<state| z+ Z(f) |state> on the two-trader number state (it vanishes)."""
    n_tot = p.n + p.n_res
    k_tot = p.k + p.k_res + p.M  # margin for one price-controlled raise
    space = build_space(
        (n_tot + 1, n_tot + 1, k_tot, k_tot, max(p.M, 1)),
        (("share", "sys"), ("share", "res"), ("cash", "sys"), ("cash", "res"),
         ("price", None)))
    z = ladder(space, 0, "lower") @ cash_power_op(space, 2, 4, "raise")
    Zk = ladder(space, 1, "lower") @ cash_power_op(space, 3, 4, "raise")
    Zf = complex(p.f_k0) * Zk
    state = NumberState((p.n, p.n_res, p.k, p.k_res, p.M))
    return expectation(state, z.adjoint() @ Zf)


def zeroth_order_check(p: FplParams, times, tol: float = 1e-12) -> bool:
    """Confirm the zeroth iterate leaves n(t) and k(t) frozen.

    The zeroth-order r is the exchange overlap times a pure phase; on number
    states the overlap vanishes, so both cumulative drives stay below tol.
    """
    times = np.asarray(times, dtype=float)
    if p.lam == 0.0:
        return True
    w0 = _mean_exchange_overlap(p)
    grid, sample = _fine_grid(times, 16)
    chi, chi_t = phases(grid, p)
    r0 = w0 * np.exp(-1j * (chi - chi_t))
    int_r0 = _cumulative(r0, grid)
    int_pr0 = _cumulative(price_mean(grid, p) * r0, grid)
    drift_n = np.max(np.abs(2.0 * p.lam * int_r0.imag[sample]))
    drift_k = np.max(np.abs(2.0 * p.lam * int_pr0.imag[sample]))
    return bool(max(drift_n, drift_k) < tol)
