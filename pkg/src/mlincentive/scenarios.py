"""Spike schedules, free-rider and sleeper set-ups, parameter sweeps,
forward pricing with a fairness report, and market closure."""

from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, replace

import numpy as np

from .competition import CompetitionScenario, Good, UtilityDistribution, solve_dynamics, weibull_1_2
from .errors import DomainError, SweepError
from .flux import (
    CommissionPolicy,
    IncentiveProfile,
    PriceSchedule,
    apply_K,
    apply_K_commission,
    invert_K,
    invert_K_commission,
)
from .numerics import DEFAULT_GRID, GridFunction

FAIRNESS_TOL = 1e-6


@dataclass(frozen=True)
class SpikeSpec:
    """Tent function rising linearly to ``amplitude`` at ``m`` and back to 0 at 1."""

    m: float
    amplitude: float = 1.0

    def __post_init__(self):
        if not 0.0 < self.m < 1.0:
            raise DomainError(f"spike peak m must lie in (0, 1), got {self.m}")
        if not (self.amplitude > 0 and math.isfinite(self.amplitude)):
            raise DomainError(f"spike amplitude must be positive, got {self.amplitude}")

    def __call__(self, s):
        s = np.asarray(s, dtype=float)
        m = self.m
        return self.amplitude * np.where(s <= m, s / m, (1.0 - s) / (1.0 - m))


def spike(spec: SpikeSpec, n_points: int = DEFAULT_GRID) -> GridFunction:
    return GridFunction.from_callable(spec, n_points)


def _as_spike(x) -> SpikeSpec:
    return x if isinstance(x, SpikeSpec) else SpikeSpec(float(x))


def free_rider_scenario(
    m: float,
    epsilon: float,
    popularity: SpikeSpec | float = 0.5,
    n_points: int = DEFAULT_GRID,
    distribution: UtilityDistribution | None = None,
) -> CompetitionScenario:
    """Good A priced by a spike peaking at ``m`` against a free copy B.

    Both goods share the popularity spike.
    """
    pop = spike(_as_spike(popularity), n_points)
    a = Good(PriceSchedule(spike(SpikeSpec(m), n_points)), pop, "A")
    b = Good(PriceSchedule.constant(0.0, n_points), pop, "B")
    return CompetitionScenario(a, b, epsilon, distribution or weibull_1_2())


def symmetric_scenario(
    m: float,
    epsilon: float,
    popularity: SpikeSpec | float = 0.5,
    n_points: int = DEFAULT_GRID,
) -> CompetitionScenario:
    """Two identical goods; the market splits evenly."""
    pop = spike(_as_spike(popularity), n_points)
    price = PriceSchedule(spike(SpikeSpec(m), n_points))
    return CompetitionScenario(Good(price, pop, "A"), Good(price, pop, "B"), epsilon)


def sleeper_scenario(
    m_a: float,
    m_pa: float = 0.7,
    m_pb: float = 0.3,
    epsilon: float = 0.0,
    n_points: int = DEFAULT_GRID,
    distribution: UtilityDistribution | None = None,
) -> CompetitionScenario:
    """Late-popularity good A against early-popularity good B.

    B's price spike is centred at 0.5.
    """
    if not m_pa > m_pb:
        raise DomainError(f"a sleeper needs m_pa > m_pb, got m_pa={m_pa}, m_pb={m_pb}")
    a = Good(PriceSchedule(spike(SpikeSpec(m_a), n_points)), spike(SpikeSpec(m_pa), n_points), "A")
    b = Good(PriceSchedule(spike(SpikeSpec(0.5), n_points)), spike(SpikeSpec(m_pb), n_points), "B")
    return CompetitionScenario(a, b, epsilon, distribution or weibull_1_2())


# ---------------------------------------------------------------------------
# sweeps

DEFAULT_M_GRID = tuple(round(0.05 * i, 2) for i in range(1, 20))
DEFAULT_EPSILON_GRID = tuple(round(0.1 * i, 1) for i in range(11))


@dataclass(frozen=True)
class SweepSpec:
    """Grid of price peaks ``m`` and couplings ``epsilon``.

    ``template`` is ``"free_rider"`` (``m`` is A's price peak, ``popularity``
    the shared popularity peak) or ``"sleeper"`` (``m`` is ``m_a``;
    ``m_pa``, ``m_pb`` fixed).
    """

    m_grid: tuple = DEFAULT_M_GRID
    epsilon_grid: tuple = DEFAULT_EPSILON_GRID
    template: str = "free_rider"
    popularity: float = 0.5
    m_pa: float = 0.7
    m_pb: float = 0.3
    n_points: int = DEFAULT_GRID
    workers: int = 1

    def __post_init__(self):
        object.__setattr__(self, "m_grid", tuple(float(m) for m in self.m_grid))
        object.__setattr__(self, "epsilon_grid", tuple(float(e) for e in self.epsilon_grid))
        if not self.m_grid or not self.epsilon_grid:
            raise DomainError("sweep grids must be non-empty")
        for m in self.m_grid:
            if not 0.0 < m < 1.0:
                raise DomainError(f"sweep m values must lie in (0, 1), got {m}")
        for e in self.epsilon_grid:
            if not (e >= 0.0 and math.isfinite(e)):
                raise DomainError(f"sweep epsilon values must be >= 0, got {e}")
        if self.template not in ("free_rider", "sleeper"):
            raise DomainError(f"unknown sweep template {self.template!r}")
        if self.template == "sleeper" and not self.m_pa > self.m_pb:
            raise DomainError("sleeper template needs m_pa > m_pb")

    def scenario(self, m: float, epsilon: float) -> CompetitionScenario:
        if self.template == "free_rider":
            return free_rider_scenario(m, epsilon, self.popularity, self.n_points)
        return sleeper_scenario(m, self.m_pa, self.m_pb, epsilon, self.n_points)


@dataclass
class Surface:
    """Final share ``S[i, j]`` and total turnover ``T[i, j]`` of good A at
    ``(m_grid[i], epsilon_grid[j])``."""

    m_grid: tuple
    epsilon_grid: tuple
    S: np.ndarray
    T: np.ndarray
    multiple_roots: np.ndarray
    template: str = "free_rider"
    n_points: int = DEFAULT_GRID

    def columns(self) -> dict:
        mm, ee = np.meshgrid(self.m_grid, self.epsilon_grid, indexing="ij")
        return {"m": mm.ravel(), "epsilon": ee.ravel(), "S_a": self.S.ravel(), "T_a": self.T.ravel()}

    def _col(self, epsilon):
        try:
            return self.epsilon_grid.index(float(epsilon))
        except ValueError:
            raise DomainError(f"epsilon={epsilon} is not on the sweep grid") from None

    def argmax_share(self, epsilon) -> float:
        return self.m_grid[int(np.argmax(self.S[:, self._col(epsilon)]))]

    def argmax_turnover(self, epsilon) -> float:
        return self.m_grid[int(np.argmax(self.T[:, self._col(epsilon)]))]


def _solve_cell(args):
    spec, m, eps = args
    try:
        tr = solve_dynamics(spec.scenario(m, eps))
    except Exception as exc:  # attach the cell and re-raise in the parent
        return ("error", repr(exc))
    return (tr.final_share_a, tr.total_turnover_a, tr.multiple_roots)


def sweep(spec: SweepSpec) -> Surface:
    """Solve every ``(m, epsilon)`` cell; results do not depend on ``workers``."""
    cells = [(spec, m, e) for m in spec.m_grid for e in spec.epsilon_grid]
    if spec.workers > 1:
        with ProcessPoolExecutor(max_workers=spec.workers) as pool:
            results = list(pool.map(_solve_cell, cells))
    else:
        results = [_solve_cell(c) for c in cells]
    shape = (len(spec.m_grid), len(spec.epsilon_grid))
    S, T = np.empty(shape), np.empty(shape)
    multi = np.zeros(shape, dtype=bool)
    for idx, ((_, m, e), res) in enumerate(zip(cells, results)):
        if res[0] == "error":
            raise SweepError(m, e, res[1])
        i, j = divmod(idx, shape[1])
        S[i, j], T[i, j], multi[i, j] = res
    return Surface(spec.m_grid, spec.epsilon_grid, S, T, multi, spec.template, spec.n_points)


# ---------------------------------------------------------------------------
# forward pricing


@dataclass
class DesignResult:
    """Designed price and the fairness report ``min_s (v_i + u)``.

    ``reading`` is ``"expected"`` (target incentive) or ``"realized"``
    (incentive recomputed from the designed price).
    """

    price: PriceSchedule
    margin: float
    worst_s: float
    passed: bool
    reading: str
    fairness_u: float


def design_price(
    target: IncentiveProfile,
    gamma: CommissionPolicy | None = None,
    fairness_u: float = 0.0,
    reading: str = "expected",
    tol: float = FAIRNESS_TOL,
) -> DesignResult:
    """Price schedule producing ``target`` and its fairness check ``v_i >= -u``.

    Raises :class:`~mlincentive.errors.InconsistentTargetError` when the
    target admits no price.
    """
    if not (fairness_u >= 0.0 and math.isfinite(fairness_u)):
        raise DomainError(f"fairness_u must be finite and >= 0, got {fairness_u}")
    if reading not in ("expected", "realized"):
        raise DomainError(f"unknown fairness reading {reading!r}")
    if gamma is None:
        price = invert_K(target)
    else:
        price = invert_K_commission(target, gamma)
    if reading == "expected":
        v = target.v_i
    else:
        v = (apply_K(price) if gamma is None else apply_K_commission(price, gamma)).v_i
    vals = v.values + fairness_u
    start = 1 if v.singular else 0
    j = start + int(np.argmin(vals[start:]))
    margin = float(vals[j])
    return DesignResult(price, margin, float(v.s[j]), margin >= -tol, reading, fairness_u)


def apply_market_closure(pi: PriceSchedule, s_close: float) -> PriceSchedule:
    """Set the price to zero from ``s_close`` on.

    Grid nodes at or after ``s_close`` are zeroed; ``closure_jump`` records
    the size of the resulting step (0 when nothing changes).
    """
    if not 0.0 < s_close <= 1.0:
        raise DomainError(f"s_close must lie in (0, 1], got {s_close}")
    if s_close == 1.0:
        return replace(pi, closure_jump=0.0)
    s = pi.pi.s
    vals = pi.values.copy()
    jump = float(np.interp(s_close, s, pi.values))
    vals[s >= s_close - 1e-12] = 0.0
    return PriceSchedule(GridFunction(vals), closure_jump=jump)


def closed_scenario(scenario: CompetitionScenario, s_close: float) -> CompetitionScenario:
    """Copy of ``scenario`` with market closure applied to good A."""
    a = scenario.good_a
    return replace(scenario, good_a=replace(a, price=apply_market_closure(a.price, s_close)))
