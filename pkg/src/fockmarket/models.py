"""Market Hamiltonians on truncated Fock spaces.

Three models share one bookkeeping scheme.  Mode labels are ``(kind, owner)``
tuples with kind in {"share", "cash", "supply", "price"}:

* two-trader:  shares/cash owned by traders 1 and 2, one supply and one price
  mode; the trade term exchanges one share against exactly as many cash quanta
  as the price mode holds.
* effective-L: L traders, the cash moved per trade is a fixed integer power M
  instead of the price operator.
* open-market: one distinguished trader ("sys") coupled to a finite reservoir
  of other traders labelled by Lambda; supply lives on the reservoir side.

The fixed mode ordering is shares, then cash, then supply, then price, owners
in index order, which keeps basis indices stable across runs.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np

from .fock import (FockSpace, MatrixOperator, NumberState, identity, ladder,
                   number_op, zero_operator)
from .priceladder import cash_power_op

MODEL_KINDS = ("two-trader", "effective-L", "open-market")


@dataclass
class ModelParams:
    """All Hamiltonian coefficients; unused fields may stay at their defaults.

    Reservoir maps (Omega_A, Omega_C, Omega_O, f, g) share one finite key set
    Lambda.  The trader interaction matrix p_matrix must be symmetric with
    zero diagonal.
    """

    omega_a: float = 0.0
    omega_c: float = 0.0
    omega_p: float = 0.0
    Omega_A: Mapping | None = None
    Omega_C: Mapping | None = None
    Omega_O: Mapping | None = None
    alpha: Sequence[float] = ()
    beta: Sequence[float] = ()
    p_matrix: Sequence[Sequence[float]] | None = None
    lam: float = 0.0
    f: Mapping | None = None
    g: Mapping | None = None

    def __post_init__(self):
        if self.lam < 0:
            raise ValueError("lam must be nonnegative")
        if self.p_matrix is not None:
            p = np.asarray(self.p_matrix, dtype=float)
            if p.ndim != 2 or p.shape[0] != p.shape[1]:
                raise ValueError("p_matrix must be square")
            if np.any(np.diag(p) != 0):
                raise ValueError("p_matrix must have zero diagonal")
            if not np.allclose(p, p.T):
                raise ValueError("p_matrix must be symmetric")
            if np.any(p < 0):
                raise ValueError("p_matrix must be nonnegative")
            self.p_matrix = p
        maps = [m for m in (self.Omega_A, self.Omega_C, self.Omega_O) if m is not None]
        keysets = {frozenset(m.keys()) for m in maps}
        if len(keysets) > 1:
            raise ValueError("reservoir frequency maps must share one label set")

    @property
    def reservoir_labels(self) -> tuple:
        """Sorted finite label set Lambda of the reservoir."""
        for m in (self.Omega_A, self.Omega_C, self.Omega_O, self.f, self.g):
            if m is not None:
                return tuple(sorted(m.keys()))
        return ()


@dataclass
class MarketModel:
    """A built model: space, Hermitian Hamiltonian, and its named parts.

    ``parts`` holds "diag" (free number terms), "trade" (share-cash exchange)
    and "h_po" (the supply/price block including its coupling).  Their sum is
    ``hamiltonian``.
    """

    kind: str
    params: ModelParams
    space: FockSpace
    hamiltonian: MatrixOperator
    parts: dict = field(default_factory=dict)
    meta: dict = field(default_factory=dict)

    @property
    def h_po(self) -> MatrixOperator:
        return self.parts["h_po"]

    def mode(self, label) -> int:
        return self.space.mode_index(label)


# ---------------------------------------------------------------------------
# label layouts
# ---------------------------------------------------------------------------

def two_trader_labels() -> tuple:
    return (("share", 1), ("share", 2), ("cash", 1), ("cash", 2),
            ("supply", None), ("price", None))


def effective_labels(L: int) -> tuple:
    if L < 2:
        raise ValueError("need at least two traders")
    share = tuple(("share", i) for i in range(1, L + 1))
    cash = tuple(("cash", i) for i in range(1, L + 1))
    return share + cash + (("supply", None), ("price", None))


def open_market_labels(reservoir_labels: Sequence) -> tuple:
    lam = tuple(sorted(reservoir_labels))
    if not lam:
        raise ValueError("reservoir label set Lambda must be nonempty")
    share = (("share", "sys"),) + tuple(("share", k) for k in lam)
    cash = (("cash", "sys"),) + tuple(("cash", k) for k in lam)
    supply = tuple(("supply", k) for k in lam)
    return share + cash + supply + (("price", None),)


def default_cutoffs(mode_labels: Sequence, initial: NumberState) -> tuple[int, ...]:
    """Cutoffs that make truncation exact for the given initial number state.

    Total shares, total cash and total supply+price quanta are conserved by
    every model here, so capping each mode of a kind at that kind's conserved
    total confines the dynamics to an exactly represented sector.
    """
    occ = initial.occupations
    if len(occ) != len(mode_labels):
        raise ValueError("initial state and labels disagree on mode count")
    totals = {"share": 0, "cash": 0, "po": 0}
    for (kind, _), n in zip(mode_labels, occ):
        totals["po" if kind in ("supply", "price") else kind] += n
    out = []
    for kind, _ in mode_labels:
        out.append(totals["po" if kind in ("supply", "price") else kind])
    return tuple(out)


def sector_exact(space: FockSpace, state: NumberState) -> bool:
    """True when every cutoff is at least the state's conserved kind total."""
    totals = {"share": 0, "cash": 0, "po": 0}
    for (kind, _), n in zip(space.mode_labels, state.occupations):
        totals["po" if kind in ("supply", "price") else kind] += n
    for (kind, _), cut in zip(space.mode_labels, space.cutoffs):
        if cut < totals["po" if kind in ("supply", "price") else kind]:
            return False
    return True


def _modes_of_kind(space: FockSpace, kind: str) -> list[int]:
    return [m for m, (k, _) in enumerate(space.mode_labels) if k == kind]


def interior_margins(model: MarketModel, applications: int = 1) -> list[int]:
    """Per-mode margins covering `applications` actions of the Hamiltonian.

    One application moves at most one quantum on share/supply/price modes and
    at most the price cutoff (or the fixed power M) on cash modes.
    """
    space = model.space
    if model.kind == "effective-L":
        cash_step = model.meta["M"]
    else:
        price_mode = _modes_of_kind(space, "price")[0]
        cash_step = space.cutoffs[price_mode]
    out = []
    for kind, _ in space.mode_labels:
        out.append(applications * (cash_step if kind == "cash" else 1))
    return out


# ---------------------------------------------------------------------------
# builders
# ---------------------------------------------------------------------------

def _require_labels(space: FockSpace, labels) -> None:
    missing = [lab for lab in labels if lab not in space._label_index]
    if missing:
        raise ValueError(f"space is missing modes {missing}")


def build_two_trader(params: ModelParams, space: FockSpace) -> MarketModel:
    """Two traders exchanging one share against price-many cash quanta.

    H0 carries the per-trader share/cash frequencies plus one quantum each of
    supply and price energy; the interaction exchanges a single share between
    the traders while the buyer pays and the seller collects exactly the price
    mode's occupation, plus the supply/price swap term.
    """
    labels = two_trader_labels()
    _require_labels(space, labels)
    if len(params.alpha) != 2 or len(params.beta) != 2:
        raise ValueError("two-trader model needs alpha and beta of length 2")
    m_a = [space.mode_index(("share", i)) for i in (1, 2)]
    m_c = [space.mode_index(("cash", i)) for i in (1, 2)]
    m_o = space.mode_index(("supply", None))
    m_p = space.mode_index(("price", None))

    diag = zero_operator(space)
    for i in range(2):
        diag = diag + params.alpha[i] * number_op(space, m_a[i])
        diag = diag + params.beta[i] * number_op(space, m_c[i])

    a1d = ladder(space, m_a[0], "raise")
    a2 = ladder(space, m_a[1], "lower")
    c1_lo = cash_power_op(space, m_c[0], m_p, "lower")
    c2_hi = cash_power_op(space, m_c[1], m_p, "raise")
    trade_fwd = a1d @ a2 @ c1_lo @ c2_hi
    trade = trade_fwd + trade_fwd.adjoint()

    o = ladder(space, m_o, "lower")
    p = ladder(space, m_p, "lower")
    h_po = (number_op(space, m_o) + number_op(space, m_p)
            + o.adjoint() @ p + p.adjoint() @ o)

    h = diag + trade + h_po
    return MarketModel("two-trader", params, space, h,
                       parts={"diag": diag, "trade": trade, "h_po": h_po})


def build_effective_L(params: ModelParams, M: int, space: FockSpace) -> MarketModel:
    """L-trader model with the fixed integer cash step M replacing the price.

    The trade term moves one share between traders i and j with weight
    p_matrix[i, j] while m cash quanta flow the other way; the supply/price
    block is identical to the two-trader one but fully decoupled from trading.
    """
    M = int(M)
    if M < 0:
        raise ValueError("M must be a nonnegative integer")
    p_mat = params.p_matrix
    if p_mat is None:
        raise ValueError("effective-L model needs p_matrix")
    L = p_mat.shape[0]
    labels = effective_labels(L)
    _require_labels(space, labels)
    if len(params.alpha) != L or len(params.beta) != L:
        raise ValueError(f"alpha and beta must have length {L}")
    m_a = [space.mode_index(("share", i)) for i in range(1, L + 1)]
    m_c = [space.mode_index(("cash", i)) for i in range(1, L + 1)]
    m_o = space.mode_index(("supply", None))
    m_p = space.mode_index(("price", None))

    diag = zero_operator(space)
    for i in range(L):
        diag = diag + params.alpha[i] * number_op(space, m_a[i])
        diag = diag + params.beta[i] * number_op(space, m_c[i])

    raise_ops = [ladder(space, m, "raise") for m in m_a]
    lower_ops = [ladder(space, m, "lower") for m in m_a]
    cash_lo = [ladder_power(space, m, M, "lower") for m in m_c]
    cash_hi = [ladder_power(space, m, M, "raise") for m in m_c]

    trade = zero_operator(space)
    for i in range(L):
        for j in range(L):
            w = float(p_mat[i, j])
            if w == 0.0:
                continue
            term = raise_ops[i] @ lower_ops[j] @ cash_lo[i] @ cash_hi[j]
            trade = trade + w * (term + term.adjoint())

    o = ladder(space, m_o, "lower")
    p = ladder(space, m_p, "lower")
    h_po = (number_op(space, m_o) + number_op(space, m_p)
            + o.adjoint() @ p + p.adjoint() @ o)

    h = diag + trade + h_po
    return MarketModel("effective-L", params, space, h,
                       parts={"diag": diag, "trade": trade, "h_po": h_po},
                       meta={"M": M, "L": L})


def ladder_power(space: FockSpace, mode: int, M: int, kind: str) -> MatrixOperator:
    """M-fold ladder power on one mode (identity for M=0)."""
    if M == 0:
        return identity(space)
    step = ladder(space, mode, kind)
    out = step
    for _ in range(M - 1):
        out = out @ step
    return out


def build_open_market(params: ModelParams, space: FockSpace) -> MarketModel:
    """One trader coupled to a finite reservoir of traders and supply modes.

    H0 carries the system and reservoir frequencies; the coupling lam scales
    both the smeared share-exchange term and the supply/price swap.  All
    reservoir maps are indexed by the same finite label set Lambda.
    """
    lam_set = params.reservoir_labels
    if not lam_set:
        raise ValueError("open-market model needs a nonempty reservoir label set")
    for name in ("Omega_A", "Omega_C", "Omega_O", "f", "g"):
        m = getattr(params, name)
        if m is None or set(m.keys()) != set(lam_set):
            raise ValueError(f"params.{name} must be defined on Lambda={lam_set}")
    labels = open_market_labels(lam_set)
    _require_labels(space, labels)

    m_a = space.mode_index(("share", "sys"))
    m_c = space.mode_index(("cash", "sys"))
    m_p = space.mode_index(("price", None))

    diag = (params.omega_a * number_op(space, m_a)
            + params.omega_c * number_op(space, m_c))
    po_diag = params.omega_p * number_op(space, m_p)

    z = ladder(space, m_a, "lower") @ cash_power_op(space, m_c, m_p, "raise")
    Zf = zero_operator(space)
    og = zero_operator(space)
    for k in lam_set:
        m_A = space.mode_index(("share", k))
        m_C = space.mode_index(("cash", k))
        m_ok = space.mode_index(("supply", k))
        diag = diag + params.Omega_A[k] * number_op(space, m_A)
        diag = diag + params.Omega_C[k] * number_op(space, m_C)
        po_diag = po_diag + params.Omega_O[k] * number_op(space, m_ok)
        Zk = ladder(space, m_A, "lower") @ cash_power_op(space, m_C, m_p, "raise")
        Zf = Zf + complex(params.f[k]) * Zk
        og = og + complex(params.g[k]) * ladder(space, m_ok, "lower")

    p = ladder(space, m_p, "lower")
    trade = params.lam * (z.adjoint() @ Zf + Zf.adjoint() @ z)
    h_po = po_diag + params.lam * (p.adjoint() @ og + og.adjoint() @ p)

    h = diag + trade + h_po
    return MarketModel("open-market", params, space, h,
                       parts={"diag": diag, "trade": trade, "h_po": h_po},
                       meta={"Lambda": lam_set})


# ---------------------------------------------------------------------------
# conserved operators
# ---------------------------------------------------------------------------

def conserved_operators(model: MarketModel) -> dict[str, MatrixOperator]:
    """Constants of motion of the model, keyed by name.

    Always includes total shares N, total cash K and the supply+price total
    Gamma.  The closed models also get Delta = o - p; the effective-L model
    additionally gets Q_j = n_j + k_j / M per trader (the combination the
    trade term leaves untouched), which no longer commutes with the
    Hamiltonian once the cash step is the dynamical price.
    """
    space = model.space
    N = zero_operator(space)
    for m in _modes_of_kind(space, "share"):
        N = N + number_op(space, m)
    K = zero_operator(space)
    for m in _modes_of_kind(space, "cash"):
        K = K + number_op(space, m)
    G = zero_operator(space)
    for m in _modes_of_kind(space, "supply") + _modes_of_kind(space, "price"):
        G = G + number_op(space, m)
    out = {"N": N, "K": K, "Gamma": G}

    if model.kind in ("two-trader", "effective-L"):
        m_o = space.mode_index(("supply", None))
        m_p = space.mode_index(("price", None))
        out["Delta"] = ladder(space, m_o, "lower") - ladder(space, m_p, "lower")

    if model.kind == "effective-L":
        M = model.meta["M"]
        if M >= 1:
            for i in range(1, model.meta["L"] + 1):
                ni = number_op(space, space.mode_index(("share", i)))
                ki = number_op(space, space.mode_index(("cash", i)))
                out[f"Q_{i}"] = ni + (1.0 / M) * ki
    return out
