"""Monetary flux calculus: price schedules to incentives and back.

With ``s`` the market saturation, an agent entering at ``s`` expects the
resale revenue ``v_r(s) = int_s^1 pi(s')/s' ds'`` and the incentive
``v_i = v_r - pi``. A commission factor ``gamma`` scales each resale
payment; the remainder leaves the market to the collector.

Inversion uses the integrated-by-parts form of the inverse operator,

    pi(s) = -v(s) + (1 / E(s)) int_0^s v dE,   E(s) = exp(-int_s^1 gamma/tau),

which for ``gamma = 1`` is the familiar ``mean_{[0,s]} v - v(s)`` and needs
no numerical differentiation of ``v``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import DomainError, InconsistentTargetError
from .numerics import (
    DEFAULT_GRID,
    GridFunction,
    cumulative_integral,
    grid,
    integrate,
    log_singular_fit,
    power_weighted_cumulative,
    tail_integral_over_s,
)

ZERO_SUM_TOL = 1e-3
COMPATIBILITY_TOL = 1e-3


@dataclass(frozen=True)
class PriceSchedule:
    """Resale price as a function of saturation.

    ``closure_jump`` is set by :func:`~mlincentive.scenarios.apply_market_closure`
    to the size of the price step it introduced.
    """

    pi: GridFunction
    closure_jump: float | None = None

    def __post_init__(self):
        if not isinstance(self.pi, GridFunction):
            object.__setattr__(self, "pi", GridFunction(self.pi))
        if self.pi.singular:
            raise DomainError("prices must be bounded; got a singular grid function")

    @classmethod
    def from_callable(cls, func, n_points=DEFAULT_GRID):
        return cls(GridFunction.from_callable(func, n_points))

    @classmethod
    def constant(cls, value, n_points=DEFAULT_GRID):
        return cls(GridFunction.constant(value, n_points))

    @property
    def values(self) -> np.ndarray:
        return self.pi.values

    @property
    def n_points(self) -> int:
        return self.pi.n_points

    @property
    def nonneg(self) -> bool:
        return bool(self.pi.values.min() >= 0.0)

    @property
    def max(self) -> float:
        return float(self.pi.values.max())


@dataclass(frozen=True)
class IncentiveProfile:
    """Expected incentive ``v_i`` and, when known, resale revenue ``v_r``.

    ``gamma`` records the commission the profile was produced with (None
    means no commission). A singular ``v_i`` diverges like ``ln s`` at 0.
    """

    v_i: GridFunction
    v_r: GridFunction | None = None
    gamma: GridFunction | None = None

    def __post_init__(self):
        if not isinstance(self.v_i, GridFunction):
            object.__setattr__(self, "v_i", GridFunction(self.v_i))

    @classmethod
    def from_callable(cls, func, n_points=DEFAULT_GRID, singular=False):
        return cls(GridFunction.from_callable(func, n_points, singular=singular))

    @property
    def singular(self) -> bool:
        return self.v_i.singular

    @property
    def n_points(self) -> int:
        return self.v_i.n_points


@dataclass(frozen=True)
class CommissionPolicy:
    """Commission factor ``0 <= gamma(s) <= 1``."""

    gamma: GridFunction

    def __post_init__(self):
        if not isinstance(self.gamma, GridFunction):
            object.__setattr__(self, "gamma", GridFunction(self.gamma))
        g = self.gamma.values
        if g.min() < 0.0 or g.max() > 1.0:
            raise DomainError("commission factor must lie in [0, 1]")

    @classmethod
    def constant(cls, value, n_points=DEFAULT_GRID):
        return cls(GridFunction.constant(value, n_points))

    @classmethod
    def from_callable(cls, func, n_points=DEFAULT_GRID):
        return cls(GridFunction.from_callable(func, n_points))


@dataclass(frozen=True)
class TransactionCosts:
    buyer_cost: float = 0.0
    seller_cost: float = 0.0

    def __post_init__(self):
        for name in ("buyer_cost", "seller_cost"):
            val = getattr(self, name)
            if not math.isfinite(val) or val < 0.0:
                raise DomainError(f"{name} must be finite and >= 0, got {val}")


def _same_grid(a: GridFunction, b: GridFunction, what: str):
    if a.n_points != b.n_points:
        raise DomainError(f"{what}: grid sizes differ ({a.n_points} vs {b.n_points})")


def _profile_from_flow(flow: np.ndarray, pi: np.ndarray, gamma=None) -> IncentiveProfile:
    """Profile for resale payments ``flow`` (= gamma * pi) at price ``pi``."""
    v_r = tail_integral_over_s(flow)
    singular = flow[0] != 0.0
    if singular:
        v_r[0] = v_r[1]
    v_i = v_r - pi
    if singular:
        v_i[0] = v_i[1]
    return IncentiveProfile(
        GridFunction(v_i, singular=singular), GridFunction(v_r, singular=singular), gamma
    )


def apply_K(pi: PriceSchedule) -> IncentiveProfile:
    """Incentive ``v_i(s) = int_s^1 pi/s' ds' - pi(s)`` of a price schedule."""
    p = pi.values
    return _profile_from_flow(p, p)


def apply_K_commission(pi: PriceSchedule, gamma: CommissionPolicy) -> IncentiveProfile:
    """Incentive when each resale pays only ``gamma * pi`` to the seller."""
    _same_grid(pi.pi, gamma.gamma, "apply_K_commission")
    p = pi.values
    return _profile_from_flow(gamma.gamma.values * p, p, gamma.gamma)


def _exponent_weights(n: int, gamma: GridFunction | None):
    """Factor ``E(s) = exp(-int_s^1 gamma/tau)`` as ``s**g0 * phi(s)``.

    Returns ``(g0, phi, G)`` with ``g0 = gamma(0)``, ``phi`` smooth and
    ``G = int_s^1 gamma/tau`` (infinite at the first node).
    """
    s = grid(n)
    if gamma is None:
        g0, phi, gam = 1.0, np.ones(n), np.ones(n)
    else:
        gam = gamma.values
        g0 = float(gam[0])
        if g0 <= 0.0:
            raise DomainError(
                "commission factor vanishes at s=0: the exponent integral "
                "int_0 gamma/tau converges and the inverse leaves pi(0) undetermined"
            )
        phi = np.exp(-tail_integral_over_s(gam - g0))
    G = np.empty(n)
    G[0] = np.inf
    G[1:] = -g0 * np.log(s[1:]) - np.log(phi[1:])
    return g0, phi, gam, G


def _invert(v: GridFunction, gamma: GridFunction | None) -> np.ndarray:
    n = v.n_points
    s = v.s
    g0, phi, gam, G = _exponent_weights(n, gamma)
    if v.singular:
        # v = c (G - 1) + w with w bounded; the inverse of c (G - 1) is c
        c, rem = log_singular_fit(v.values, basis=G)
        w = rem + c
    else:
        c, w = 0.0, v.values
    # int_0^s w dE with dE = gamma * phi * sigma**(g0 - 1) dsigma
    integral = power_weighted_cumulative(w * gam * phi, g0 - 1.0)
    pi = np.empty(n)
    pi[0] = c
    E = s[1:] ** g0 * phi[1:]
    pi[1:] = c - w[1:] + integral[1:] / E
    return pi


def zero_sum_residual(profile: IncentiveProfile) -> float:
    """``int_0^1 v_i ds``: zero for a closed market, ``-v_c`` with commission."""
    return integrate(profile.v_i)


def invert_K(v_i: IncentiveProfile, tol: float = ZERO_SUM_TOL) -> PriceSchedule:
    """Price schedule whose incentive is ``v_i``.

    Raises
    ------
    InconsistentTargetError
        If ``|int v_i| > tol``: no closed market has this incentive.
    """
    residual = zero_sum_residual(v_i)
    if abs(residual) > tol:
        raise InconsistentTargetError("target incentive violates the zero-sum condition", residual)
    return PriceSchedule(GridFunction(_invert(v_i.v_i, None)))


def invert_K_commission(
    v: IncentiveProfile, gamma: CommissionPolicy, tol: float = COMPATIBILITY_TOL
) -> PriceSchedule:
    """Price schedule whose incentive under commission ``gamma`` is ``v``.

    The result must satisfy ``v(1) = -pi(1)``; a larger defect than ``tol``
    raises :class:`InconsistentTargetError`. A commission factor equal to 0
    at ``s = 0`` raises :class:`DomainError`.
    """
    _same_grid(v.v_i, gamma.gamma, "invert_K_commission")
    pi = _invert(v.v_i, gamma.gamma)
    defect = float(v.v_i.values[-1] + pi[-1])
    if abs(defect) > tol:
        raise InconsistentTargetError("target incompatible with commission policy at s=1", defect)
    return PriceSchedule(GridFunction(pi))


def collector_share(pi: PriceSchedule, gamma: CommissionPolicy) -> float:
    """Normalised money taken out by the collector, ``int (1-gamma) pi``."""
    _same_grid(pi.pi, gamma.gamma, "collector_share")
    return integrate(GridFunction((1.0 - gamma.gamma.values) * pi.values))


def apply_transaction_costs(profile: IncentiveProfile, costs: TransactionCosts) -> IncentiveProfile:
    """Incentive with constant seller and buyer transaction costs.

    The seller's cost reduces every resale payment (``+ seller_cost * ln s``),
    the buyer's cost adds to the price paid.
    """
    v = profile.v_i
    s = v.s
    log_s = np.empty_like(s)
    log_s[1:] = np.log(s[1:])
    log_s[0] = log_s[1]
    vi = v.values + costs.seller_cost * log_s - costs.buyer_cost
    vr = None
    if profile.v_r is not None:
        vr = GridFunction(
            profile.v_r.values + costs.seller_cost * log_s,
            singular=profile.v_r.singular or costs.seller_cost > 0,
        )
    singular = v.singular or costs.seller_cost > 0
    if v.singular and costs.seller_cost > 0:
        # the log terms may cancel; decide from the fitted coefficient
        c, _ = log_singular_fit(vi)
        singular = abs(c) > 1e-9
    if singular:
        vi[0] = vi[1]
    return IncentiveProfile(GridFunction(vi, singular=singular), vr, profile.gamma)


def positivity_check(profile: IncentiveProfile):
    """Whether the price behind ``v_i`` is positive on the interior grid.

    The price is positive at ``s`` exactly when the mean of ``v_i`` over
    ``[0, s]`` exceeds ``v_i(s)``. Returns ``(ok, first_violation)`` with
    ``first_violation`` the smallest interior saturation where it fails,
    or None.
    """
    v = profile.v_i
    s = v.s
    interior = slice(1, v.n_points - 1)
    if v.singular:
        margin = _invert(v, None)[interior]
    else:
        mean = cumulative_integral(v)[interior] / s[interior]
        margin = mean - v.values[interior]
    bad = np.nonzero(margin <= 0.0)[0]
    if bad.size == 0:
        return True, None
    return False, float(s[interior][bad[0]])
