"""Integer-agent market: exact incentive sums, the continuum error bound and
a Monte-Carlo resale simulator.

Agents ``k = 1..n_inf`` enter one at a time at saturation ``k/n_inf``. Agent
1 buys from the root (the originator); every later agent buys from a holder
drawn uniformly. By default the root sells only to agent 1, so agent ``k'``
chooses among the ``k' - 1`` earlier agents and the expected incentive is

    sum_{k'=k+1}^{n} pi(k'/n) / (k' - 1) - pi(k/n).

``root_in_pool=True`` keeps the root among the sellers instead.

Money in the simulator is booked in integer ticks of ``1 / TICKS`` currency
units so that the ledger identity (agents + collector + root = 0) holds
exactly.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import DomainError
from .flux import CommissionPolicy, PriceSchedule
from .numerics import BERNOULLI_2, GridFunction, grid

TICKS = 10**9
_BLOCK_RUNS = 512


@dataclass(frozen=True)
class DiscreteMarket:
    """Market of ``n_inf`` agents with price ``pi`` at ``k / n_inf``.

    ``pi`` is a vectorised callable of saturation or a :class:`PriceSchedule`
    (evaluated by linear interpolation).
    """

    n_inf: int
    pi: object

    def __post_init__(self):
        if int(self.n_inf) != self.n_inf or self.n_inf < 2:
            raise DomainError(f"n_inf must be an integer >= 2, got {self.n_inf}")

    def price_at(self, s):
        if isinstance(self.pi, PriceSchedule):
            return self.pi.pi(s)
        return np.broadcast_to(np.asarray(self.pi(np.asarray(s, dtype=float)), dtype=float), np.shape(s))

    def prices(self) -> np.ndarray:
        """``pi(k / n_inf)`` for ``k = 1..n_inf`` (index ``k - 1``)."""
        return np.array(self.price_at(np.arange(1, self.n_inf + 1) / self.n_inf), dtype=float)

    def schedule(self, n_points=None) -> PriceSchedule:
        """Price on a saturation grid; by default the agent-aligned grid."""
        n_points = self.n_inf + 1 if n_points is None else n_points
        return PriceSchedule(GridFunction(self.price_at(grid(n_points))))

    @property
    def pi_max(self) -> float:
        if isinstance(self.pi, PriceSchedule):
            return max(self.pi.max, float(self.prices().max()))
        fine = self.price_at(grid(4097))
        return float(max(np.max(fine), self.prices().max()))

    @property
    def nonneg(self) -> bool:
        if isinstance(self.pi, PriceSchedule):
            return self.pi.nonneg and self.prices().min() >= 0.0
        return bool(self.price_at(grid(4097)).min() >= 0.0 and self.prices().min() >= 0.0)


def _gamma_at(gamma, x):
    if gamma is None:
        return np.ones_like(x)
    g = gamma.gamma if isinstance(gamma, CommissionPolicy) else gamma
    return g(x)


def expected_incentives(market: DiscreteMarket, gamma=None, root_in_pool=False) -> np.ndarray:
    """Expected incentive of every agent, index ``k - 1``.

    With commission ``gamma`` each resale pays ``gamma * pi`` to the seller.
    """
    n = market.n_inf
    p = market.prices()
    k = np.arange(1, n + 1)
    paid = _gamma_at(gamma, k / n) * p
    pool = k if root_in_pool else k - 1
    terms = np.zeros(n)
    terms[1:] = paid[1:] / pool[1:]
    # tail[k-1] = sum over k' > k
    tail = np.zeros(n)
    tail[:-1] = np.cumsum(terms[::-1])[::-1][1:]
    return tail - p


def discrete_incentive(market: DiscreteMarket, k: int) -> float:
    """Expected incentive of agent ``k`` in the integer-agent market."""
    if int(k) != k or not 1 <= k <= market.n_inf:
        raise DomainError(f"agent index must lie in 1..{market.n_inf}, got {k}")
    n = market.n_inf
    kp = np.arange(k + 1, n + 1)
    revenue = math.fsum(market.price_at(kp / n) / (kp - 1)) if kp.size else 0.0
    return revenue - float(market.price_at(np.array([k / n]))[0])


def error_bound(market: DiscreteMarket, s):
    """Bound on ``|v_i(s) - discrete incentive at k = s n_inf|``.

    First two terms of the asymptotic series; requires a non-negative price
    and ``s * n_inf >= 1``. ``s`` may be an array.
    """
    if not market.nonneg:
        raise DomainError("the error bound holds for non-negative prices only")
    s = np.asarray(s, dtype=float)
    r = s * market.n_inf
    if np.any(r < 1.0 - 1e-12):
        raise DomainError(f"need s * n_inf >= 1, got {np.min(r)}")
    out = 0.5 * market.pi_max * ((1.0 + s) / r + BERNOULLI_2 * (1.0 + s * s) / r**2)
    return float(out) if out.ndim == 0 else out


def log_scaling_probe(pi, k: int, sizes) -> list[float]:
    """Discrete incentive of a fixed early agent ``k`` for several market sizes."""
    return [discrete_incentive(DiscreteMarket(int(n), pi), k) for n in sizes]


@dataclass
class AbmRun:
    """One realisation of the resale market.

    Arrays are indexed by ``k - 1``. Monetary totals are also kept in integer
    ticks (``*_ticks``) for the exact ledger check.
    """

    seed: int
    realized_revenue: np.ndarray
    realized_incentive: np.ndarray
    holder_count: np.ndarray
    total_commission: float
    root_revenue: float
    revenue_ticks: np.ndarray
    price_ticks: np.ndarray
    commission_ticks: int
    root_ticks: int

    @property
    def ledger_residual_ticks(self) -> int:
        """Agents' net gain plus the money that left the agent population.

        Zero for every run: the market only moves money around.
        """
        agents = int(self.revenue_ticks.sum()) - int(self.price_ticks.sum())
        return agents + self.commission_ticks + self.root_ticks


def _tick_prices(market, gamma):
    n = market.n_inf
    p = market.prices()
    if p.min() < 0.0:
        raise DomainError("resale simulation needs non-negative prices")
    price_t = np.rint(p * TICKS).astype(np.int64)
    g = _gamma_at(gamma, np.arange(1, n + 1) / n)
    share_t = np.floor(g * price_t).astype(np.int64)
    return price_t, share_t


def _simulate_block(rng, runs, price_t, share_t, root_in_pool):
    """Revenue ticks of shape ``(runs, n + 1)``; column 0 is the root."""
    n = price_t.size
    # seller of agent k' (k' = 2..n)
    kp = np.arange(2, n + 1)
    u = rng.random((runs, n - 1))
    if root_in_pool:
        seller = np.floor(u * kp).astype(np.int64)
    else:
        seller = np.floor(u * (kp - 1)).astype(np.int64) + 1
    flat = seller + (n + 1) * np.arange(runs)[:, None]
    weights = np.broadcast_to(share_t[1:].astype(float), (runs, n - 1))
    rev = np.bincount(flat.ravel(), weights=weights.ravel(), minlength=runs * (n + 1))
    rev = rev.reshape(runs, n + 1)
    rev[:, 0] += share_t[0]  # agent 1 buys from the root
    return np.rint(rev).astype(np.int64)


def simulate_resale_abm(
    market: DiscreteMarket, gamma: CommissionPolicy | None = None, seed: int = 0, root_in_pool=False
) -> AbmRun:
    """Simulate one resale market with uniform seller choice."""
    price_t, share_t = _tick_prices(market, gamma)
    rng = np.random.default_rng(seed)
    rev = _simulate_block(rng, 1, price_t, share_t, root_in_pool)[0]
    agent_rev = rev[1:]
    commission = int((price_t - share_t).sum())
    root = int(rev[0])
    return AbmRun(
        seed=seed,
        realized_revenue=agent_rev / TICKS,
        realized_incentive=(agent_rev - price_t) / TICKS,
        holder_count=np.arange(1, market.n_inf + 1) + 1,
        total_commission=commission / TICKS,
        root_revenue=root / TICKS,
        revenue_ticks=agent_rev,
        price_ticks=price_t,
        commission_ticks=commission,
        root_ticks=root,
    )


@dataclass
class CohortSummary:
    """Per-agent Monte-Carlo statistics over ``runs`` realisations."""

    k: np.ndarray
    mean_incentive: np.ndarray
    stderr: np.ndarray
    expected_incentive: np.ndarray
    runs: int
    max_ledger_residual_ticks: int

    def columns(self) -> dict:
        return {
            "k": self.k,
            "mean_incentive": self.mean_incentive,
            "stderr": self.stderr,
            "expected_incentive": self.expected_incentive,
        }

    def z_scores(self) -> np.ndarray:
        diff = self.mean_incentive - self.expected_incentive
        return np.divide(diff, self.stderr, out=np.zeros_like(diff), where=self.stderr > 0)


def resale_cohort_stats(
    market: DiscreteMarket,
    gamma: CommissionPolicy | None = None,
    runs: int = 1000,
    seed: int = 0,
    root_in_pool=False,
) -> CohortSummary:
    """Run ``runs`` independent markets and summarise each agent's incentive."""
    if runs < 2:
        raise DomainError("need at least two runs for a standard error")
    price_t, share_t = _tick_prices(market, gamma)
    n = market.n_inf
    rng = np.random.default_rng(seed)
    total = np.zeros(n)
    total_sq = np.zeros(n)
    commission = int((price_t - share_t).sum())
    worst = 0
    done = 0
    while done < runs:
        m = min(_BLOCK_RUNS, runs - done)
        rev = _simulate_block(rng, m, price_t, share_t, root_in_pool)
        inc = (rev[:, 1:] - price_t) / TICKS
        total += inc.sum(0)
        total_sq += (inc * inc).sum(0)
        resid = rev[:, 1:].sum(1) - price_t.sum() + commission + rev[:, 0]
        worst = max(worst, int(np.abs(resid).max()))
        done += m
    mean = total / runs
    var = np.maximum(total_sq / runs - mean**2, 0.0) * runs / (runs - 1)
    return CohortSummary(
        k=np.arange(1, n + 1),
        mean_incentive=mean,
        stderr=np.sqrt(var / runs),
        expected_incentive=expected_incentives(market, gamma, root_in_pool),
        runs=runs,
        max_ledger_residual_ticks=worst,
    )
