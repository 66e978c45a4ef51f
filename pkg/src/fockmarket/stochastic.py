"""Long-time Markovian generator of the open market and stationarity tests.

After rescaling time by the squared coupling, the reservoir collapses into
four complex constants (two per channel: share-exchange and supply/price).
Their real parts are sums of Dirac masses sitting on the zeros of two
resonance functions over the finite reservoir label set; on a discrete set
the masses act as zero-set indicators.  The generator built from those
constants decides whether the trader's occupations and portfolio drift.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .fock import (FockSpace, MatrixOperator, NumberState, build_space,
                   commutator, ladder, number_op)
from .models import ModelParams
from .priceladder import cash_power_op, factorial_weight


@dataclass
class EpsilonProfile:
    """Resonance functions over the reservoir label set.

    eps_Z(k) = P_mean (Omega_C(k) - omega_c) - (Omega_A(k) - omega_a) with the
    price entering through its state mean; eps_O(k) = omega_p - Omega_O(k).
    """

    eps_Z: dict
    eps_O: dict
    price_mean: float

    def zeros(self, which: str, zero_tol: float) -> tuple:
        eps = self.eps_Z if which == "Z" else self.eps_O
        return tuple(k for k in sorted(eps) if abs(eps[k]) < zero_tol)


@dataclass
class GammaCoefficients:
    """The four channel constants; real parts are nonnegative delta sums."""

    gz_a: complex = 0.0
    gz_b: complex = 0.0
    go_a: complex = 0.0
    go_b: complex = 0.0


def epsilon_profiles(params: ModelParams, P_mean: float) -> EpsilonProfile:
    """Evaluate both resonance functions on the reservoir label set."""
    lam_set = params.reservoir_labels
    if not lam_set:
        raise ValueError("params carry no reservoir labels")
    eps_Z = {k: P_mean * (params.Omega_C[k] - params.omega_c)
             - (params.Omega_A[k] - params.omega_a) for k in lam_set}
    eps_O = {k: params.omega_p - params.Omega_O[k] for k in lam_set}
    return EpsilonProfile(eps_Z, eps_O, float(P_mean))


def _delta_mass(eps: float, zero_tol: float, width: float) -> float:
    if width > 0.0:
        return (width / math.pi) / (eps * eps + width * width)
    return 1.0 if abs(eps) < zero_tol else 0.0


def _reservoir_occupations(params: ModelParams, reservoir_state: NumberState) -> dict:
    """Unpack (shares..., cash..., supply...) blocks, label order, per k."""
    lam_set = params.reservoir_labels
    occ = reservoir_state.occupations
    if len(occ) != 3 * len(lam_set):
        raise ValueError(f"reservoir state needs {3 * len(lam_set)} occupations "
                         f"(share, cash, supply blocks over {lam_set})")
    nL = len(lam_set)
    return {k: (occ[i], occ[nL + i], occ[2 * nL + i])
            for i, k in enumerate(lam_set)}


def gamma_real_parts(params: ModelParams, reservoir_state: NumberState,
                     profile: EpsilonProfile, zero_tol: float = 1e-12,
                     width: float = 0.0) -> GammaCoefficients:
    """Real parts of the channel constants on a number-state reservoir.

    Each is pi times a sum over reservoir labels of |coupling|^2 times the
    reservoir second moment times the delta mass of the matching resonance
    function.  The second moments at integer price mean M are
    (N_k+1) * falling(K_k, M) and N_k * rising(K_k, M) for the exchange
    channel, O_k + 1 and O_k for the supply channel.  Imaginary parts
    (principal values) are left at zero.
    """
    M = profile.price_mean
    if M < 0 or M != int(M):
        raise ValueError("price mean must be a nonnegative integer for "
                         "number-state reservoir moments")
    M = int(M)
    occs = _reservoir_occupations(params, reservoir_state)
    gz_a = gz_b = go_a = go_b = 0.0
    for k in params.reservoir_labels:
        Nk, Kk, Ok = occs[k]
        dz = _delta_mass(profile.eps_Z[k], zero_tol, width)
        do = _delta_mass(profile.eps_O[k], zero_tol, width)
        f2 = abs(complex(params.f[k])) ** 2
        g2 = abs(complex(params.g[k])) ** 2
        gz_a += math.pi * f2 * (Nk + 1) * factorial_weight(Kk, M, "falling") * dz
        gz_b += math.pi * f2 * Nk * factorial_weight(Kk, M, "rising") * dz
        go_a += math.pi * g2 * (Ok + 1) * do
        go_b += math.pi * g2 * Ok * do
    return GammaCoefficients(gz_a, gz_b, go_a, go_b)


def system_space(share_cut: int, cash_cut: int, price_cut: int,
                 max_dim: int = 500_000) -> FockSpace:
    """System-only space (one trader's share, cash and the price mode)."""
    return build_space((share_cut, cash_cut, price_cut),
                       (("share", "sys"), ("cash", "sys"), ("price", None)),
                       max_dim=max_dim)


def _system_ops(space: FockSpace):
    m_a = space.mode_index(("share", "sys"))
    m_c = space.mode_index(("cash", "sys"))
    m_p = space.mode_index(("price", None))
    z = ladder(space, m_a, "lower") @ cash_power_op(space, m_c, m_p, "raise")
    p = ladder(space, m_p, "lower")
    return z, p


def generator_apply(X: MatrixOperator, gammas: GammaCoefficients,
                    space: FockSpace) -> MatrixOperator:
    """Apply the Markovian generator to a system observable.

    L(X) = gz_a [z+,X] z - conj(gz_a) z+ [z,X] + gz_b [z,X] z+
         - conj(gz_b) z [z+,X]  plus the same pattern with (go_a, go_b, p).
    X must live on the system-only space.
    """
    if X.space != space:
        raise ValueError("X must act on the given system space")
    for kind, owner in space.mode_labels:
        if kind == "supply" or (kind in ("share", "cash") and owner != "sys"):
            raise ValueError("X touches reservoir modes; the generator acts on "
                             "system observables only")
    z, p = _system_ops(space)

    def channel(ga, gb, s):
        sd = s.adjoint()
        out = complex(ga) * (commutator(sd, X) @ s)
        out = out - np.conj(complex(ga)) * (sd @ commutator(s, X))
        out = out + complex(gb) * (commutator(s, X) @ sd)
        out = out - np.conj(complex(gb)) * (s @ commutator(sd, X))
        return out

    return channel(gammas.gz_a, gammas.gz_b, z) + channel(gammas.go_a, gammas.go_b, p)


@dataclass
class StationarityVerdict:
    """Flags plus the evidence they rest on."""

    portfolio_stationary: bool
    occupations_stationary: bool
    evidence: dict = field(default_factory=dict)

    def to_report(self) -> str:
        lines = [f"portfolio_stationary={str(self.portfolio_stationary).lower()}",
                 f"occupations_stationary={str(self.occupations_stationary).lower()}"]
        for key in sorted(self.evidence):
            val = self.evidence[key]
            if isinstance(val, float):
                lines.append(f"{key}={val:.12g}")
            else:
                lines.append(f"{key}={val}")
        return "\n".join(lines) + "\n"


def stationarity_verdict(params: ModelParams, reservoir_state: NumberState,
                         P_mean: float, zero_tol: float = 1e-12) -> StationarityVerdict:
    """Decide drift of the portfolio and of the occupations.

    The portfolio is stationary iff the supply resonance function has no zero
    on the label set; the share and cash occupations are stationary iff the
    exchange resonance function has none.  Evidence records the zero sets and
    the max-norms of the generated drifts of the portfolio, share and cash
    observables on a small interior-safe system space.
    """
    profile = epsilon_profiles(params, P_mean)
    zeros_Z = profile.zeros("Z", zero_tol)
    zeros_O = profile.zeros("O", zero_tol)
    gammas = gamma_real_parts(params, reservoir_state, profile, zero_tol)

    M = int(profile.price_mean)
    space = system_space(2, 2 * (M + 1) + 2, M + 1)
    m_n = number_op(space, 0)
    m_k = number_op(space, 1)
    m_P = number_op(space, 2)
    pi_op = m_P @ m_n + m_k
    norms = {
        "norm_L_portfolio": generator_apply(pi_op, gammas, space).max_abs(),
        "norm_L_shares": generator_apply(m_n, gammas, space).max_abs(),
        "norm_L_cash": generator_apply(m_k, gammas, space).max_abs(),
    }
    evidence = {
        "zeros_eps_Z": ",".join(map(str, zeros_Z)) or "none",
        "zeros_eps_O": ",".join(map(str, zeros_O)) or "none",
        "re_gamma_Z_a": float(np.real(gammas.gz_a)),
        "re_gamma_Z_b": float(np.real(gammas.gz_b)),
        "re_gamma_O_a": float(np.real(gammas.go_a)),
        "re_gamma_O_b": float(np.real(gammas.go_b)),
    }
    evidence.update(norms)
    return StationarityVerdict(portfolio_stationary=not zeros_O,
                               occupations_stationary=not zeros_Z,
                               evidence=evidence)


def second_order_term(gammas: GammaCoefficients, system_state: NumberState) -> complex:
    """Linear-response rate: the brace of the leading long-time term.

    Returns w(z+z) gz_a + w(zz+) gz_b + w(p+p) go_a + w(pp+) go_b evaluated on
    a system number state (n shares, k cash, price M); the corresponding
    contribution to the rescaled expansion is -t times this value.
    """
    occ = system_state.occupations
    if len(occ) != 3:
        raise ValueError("system state needs (share, cash, price) occupations")
    n, k, M = occ
    zdz = n * factorial_weight(k, M, "rising")
    zzd = (n + 1) * factorial_weight(k, M, "falling")
    return (zdz * complex(gammas.gz_a) + zzd * complex(gammas.gz_b)
            + M * complex(gammas.go_a) + (M + 1) * complex(gammas.go_b))
