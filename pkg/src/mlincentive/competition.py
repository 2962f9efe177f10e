"""Competition of two substitute goods in a multi-level market.

An agent entering at saturation ``s`` buys good A with probability
``rho(p_a, q_b; delta) = P(u_a - u_b + delta > 0)`` where ``u_a``, ``u_b`` are
individual utilities drawn from popularity-dependent distributions and
``delta`` is the decision bias

    delta = ur_a rho_pop_a - ur_b rho_pop_b - (pi_a - pi_b) + eps (2 s_a/s - 1).

``ur_x`` is the bare resale revenue ``int_s^1 pi_x/s'`` and ``rho_pop_x`` the
purchase probability from popularity alone. The share of A follows
``s_a(s) = int_0^s rho(s') ds'``, which is marched with a Heun
predictor-corrector on the saturation grid.

For the Weibull ``f(u; 1, 2)`` utility in translation form the decision
probability has the closed form (``x >= 0``)

    rho(x) = 1 - exp(-x**2)/2 + sqrt(2 pi)/4 x exp(-x**2/2) erfc(x/sqrt(2)),

extended by ``rho(-x) = 1 - rho(x)``. The variant with ``-exp(-x**2/2)`` in
place of ``-exp(-x**2)/2`` gives ``rho(0) = 0`` and disagrees with direct
quadrature; it is not used.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import special

from .errors import ConsistencyError, DomainError
from .flux import PriceSchedule
from .numerics import (
    GridFunction,
    bisect,
    cumulative_integral,
    quad,
    tail_integral_over_s,
)

_SQRT2 = math.sqrt(2.0)
_WEIBULL_C = math.sqrt(2.0 * math.pi) / 4.0
_NORMALIZATION_TOL = 1e-6


# ---------------------------------------------------------------------------
# utility distributions


@dataclass(frozen=True, eq=False)
class UtilityDistribution:
    """Distribution of individual utilities, parametrised by popularity.

    ``pdf(p, x)`` and ``cdf(p, x)`` are vectorised over ``x``. In
    translation form they equal ``pdf0(x - p)`` and ``cdf0(x - p)`` with a
    base distribution supported on ``[0, support]``.
    """

    family: str
    pdf: object
    cdf: object
    translation: bool = True
    support: float = math.inf
    _rho_table: object = field(default=None, repr=False)

    def lower(self, p: float) -> float:
        return p if self.translation else 0.0

    def upper(self, p: float) -> float:
        return p + self.support if self.translation else self.support

    def mass(self, p: float = 0.0) -> float:
        return quad(lambda x: self.pdf(p, x), self.lower(p), self.upper(p))

    def rho_shift(self, x):
        """Decision probability as a function of ``delta + p_a - p_b``.

        Only defined in translation form.
        """
        if not self.translation:
            raise DomainError("rho_shift needs a distribution in translation form")
        if self.family == "weibull_1_2":
            return rho_weibull_closed(x)
        return self._rho_table(x)


def weibull_1_2() -> UtilityDistribution:
    """Weibull ``f(x; 1, 2) = 2 x exp(-x**2)`` translated by the popularity."""

    def pdf(p, x):
        y = np.asarray(x, dtype=float) - p
        return np.where(y > 0, 2.0 * y * np.exp(-y * y), 0.0)

    def cdf(p, x):
        y = np.asarray(x, dtype=float) - p
        return np.where(y > 0, -np.expm1(-y * y), 0.0)

    return UtilityDistribution("weibull_1_2", pdf, cdf)


def tabulated(x, density) -> UtilityDistribution:
    """Translation-form distribution with a tabulated, piecewise linear PDF.

    ``x`` must start at 0 and increase. The density is not renormalised: a
    total mass off by more than 1e-6 raises :class:`DomainError`.
    """
    x = np.asarray(x, dtype=float)
    d = np.asarray(density, dtype=float)
    if x.ndim != 1 or x.shape != d.shape or x.size < 2:
        raise DomainError("tabulated PDF needs matching 1-d arrays")
    if x[0] != 0.0 or np.any(np.diff(x) <= 0):
        raise DomainError("tabulated PDF abscissae must start at 0 and increase")
    if np.any(d < 0):
        raise DomainError("tabulated PDF must be non-negative")
    dx = np.diff(x)
    slopes = np.diff(d) / dx
    cum = np.concatenate(([0.0], np.cumsum(0.5 * (d[1:] + d[:-1]) * dx)))
    if abs(cum[-1] - 1.0) > _NORMALIZATION_TOL:
        raise DomainError(f"tabulated PDF is not normalised (mass {cum[-1]:.8f})")
    top = x[-1]

    def pdf(p, xx):
        y = np.asarray(xx, dtype=float) - p
        return np.where((y >= 0) & (y <= top), np.interp(y, x, d), 0.0)

    def cdf(p, xx):
        y = np.clip(np.asarray(xx, dtype=float) - p, 0.0, top)
        i = np.clip(np.searchsorted(x, y, side="right") - 1, 0, x.size - 2)
        t = y - x[i]
        val = cum[i] + d[i] * t + 0.5 * slopes[i] * t * t
        return np.where(np.asarray(xx, dtype=float) - p >= top, cum[-1], val)

    gx, gw = np.polynomial.legendre.leggauss(3)

    def rho_shift(z):
        # pdf is linear and cdf quadratic between merged breakpoints, so a
        # 3-point Gauss rule per piece is exact
        z = float(z)
        if z >= top:
            return 1.0
        if z <= -top:
            return 0.0
        pts = np.unique(np.clip(np.concatenate((x, x - z)), 0.0, top))
        lo, hi = pts[:-1], pts[1:]
        mid, half = 0.5 * (lo + hi), 0.5 * (hi - lo)
        u = mid[:, None] + half[:, None] * gx
        vals = pdf(0.0, u) * cdf(0.0, u + z)
        return float(np.sum(half * (vals @ gw)))

    def rho_table(v):
        v = np.asarray(v, dtype=float)
        if v.ndim == 0:
            return rho_shift(v)
        return np.array([rho_shift(t) for t in v.ravel()]).reshape(v.shape)

    return UtilityDistribution(
        "tabulated", pdf, cdf, translation=True, support=float(top), _rho_table=rho_table
    )


def _rho_quadrature(dist, p, q, delta):
    """``int dmu(p, u) M(q, u + delta)`` by adaptive quadrature."""
    lo, hi = dist.lower(p), dist.upper(p)
    # M(q, .) vanishes below its support: start where it becomes positive
    start = max(lo, dist.lower(q) - delta)
    if start >= hi:
        return 0.0
    def integrand(u):
        return float(dist.pdf(p, u) * dist.cdf(q, u + delta))

    return quad(integrand, start, hi)


def rho_general(dist: UtilityDistribution, p_a: float, q_b: float, delta: float) -> float:
    """Probability of buying A at popularities ``p_a``, ``q_b`` and bias ``delta``."""
    if p_a < 0 or q_b < 0:
        raise DomainError("popularities must be non-negative")
    for pop in {p_a, q_b}:
        mass = dist.mass(pop)
        if abs(mass - 1.0) > _NORMALIZATION_TOL:
            raise DomainError(f"utility distribution not normalised at p={pop}: mass {mass:.8f}")
    if math.isinf(delta):
        return 1.0 if delta > 0 else 0.0
    return _rho_quadrature(dist, p_a, q_b, delta)


def rho_b_general(dist: UtilityDistribution, p_a: float, q_b: float, delta: float) -> float:
    """Probability of buying B, ``P(u_b - u_a - delta > 0)``, by quadrature."""
    if math.isinf(delta):
        return 0.0 if delta > 0 else 1.0
    return _rho_quadrature(dist, q_b, p_a, -delta)


def rho_weibull_closed(delta):
    """Closed-form decision probability for translated Weibull ``f(u; 1, 2)``."""
    x = np.asarray(delta, dtype=float)
    a = np.abs(x)
    with np.errstate(over="ignore", invalid="ignore"):
        r = 1.0 - 0.5 * np.exp(-a * a) + _WEIBULL_C * a * np.exp(-0.5 * a * a) * special.erfc(a / _SQRT2)
    r = np.where(np.isinf(a), 1.0, r)
    out = np.where(x >= 0, r, 1.0 - r)
    return float(out) if out.ndim == 0 else out


def _rho_scalar_weibull(x: float) -> float:
    a = abs(x)
    if a > 38.0:
        r = 1.0
    else:
        r = 1.0 - 0.5 * math.exp(-a * a) + _WEIBULL_C * a * math.exp(-0.5 * a * a) * math.erfc(a / _SQRT2)
    return r if x >= 0 else 1.0 - r


# ---------------------------------------------------------------------------
# goods, scenarios, trajectories


@dataclass(frozen=True)
class Good:
    price: PriceSchedule
    popularity: GridFunction
    label: str = ""

    def __post_init__(self):
        if self.popularity.values.min() < 0:
            raise DomainError(f"popularity of good {self.label!r} must be non-negative")
        if self.popularity.n_points != self.price.n_points:
            raise DomainError("price and popularity must share a grid")


@dataclass(frozen=True)
class CompetitionScenario:
    good_a: Good
    good_b: Good
    epsilon: float = 0.0
    distribution: UtilityDistribution = field(default_factory=weibull_1_2)

    def __post_init__(self):
        if not (self.epsilon >= 0 and math.isfinite(self.epsilon)):
            raise DomainError(f"multiplier coupling must be finite and >= 0, got {self.epsilon}")
        if self.good_a.price.n_points != self.good_b.price.n_points:
            raise DomainError("both goods must share a grid")

    @property
    def n_points(self) -> int:
        return self.good_a.price.n_points

    def rho(self, p, q, delta):
        """Decision probability for A; fast path in translation form."""
        if self.distribution.translation:
            return self.distribution.rho_shift(delta + p - q)
        return rho_general(self.distribution, p, q, delta)


@dataclass
class Trajectory:
    """Solved market evolution on the saturation grid."""

    s: np.ndarray
    share_a: np.ndarray
    rho: np.ndarray
    delta: np.ndarray
    du_i: np.ndarray
    du_m: np.ndarray
    dpi: np.ndarray
    dp: np.ndarray
    ur_a: np.ndarray
    ur_b: np.ndarray
    rho_pop_a: np.ndarray
    t_a: np.ndarray
    t_b: np.ndarray
    vr_a_actual: np.ndarray
    vr_b_actual: np.ndarray
    pi_a: np.ndarray
    pi_b: np.ndarray
    initial_rho: float
    multiple_roots: bool = False
    singular_revenue: bool = False

    @property
    def share_b(self) -> np.ndarray:
        return self.s - self.share_a

    @property
    def final_share_a(self) -> float:
        return float(self.share_a[-1])

    @property
    def final_share_b(self) -> float:
        return float(self.share_b[-1])

    @property
    def total_turnover_a(self) -> float:
        return float(self.t_a[-1])

    @property
    def total_turnover_b(self) -> float:
        return float(self.t_b[-1])

    @property
    def ur_a_expected(self) -> np.ndarray:
        return self.ur_a * self.rho_pop_a

    @property
    def ur_b_expected(self) -> np.ndarray:
        return self.ur_b * (1.0 - self.rho_pop_a)

    @property
    def vi_a_actual(self) -> np.ndarray:
        return self.vr_a_actual - self.pi_a

    @property
    def vi_b_actual(self) -> np.ndarray:
        return self.vr_b_actual - self.pi_b

    def turnover_by_share(self, good="a") -> float:
        """Total turnover as ``int pi d s_x`` over the good's own share."""
        sx = self.share_a if good == "a" else self.share_b
        p = self.pi_a if good == "a" else self.pi_b
        return float(np.sum(0.5 * (p[1:] + p[:-1]) * np.diff(sx)))

    def columns(self) -> dict:
        return {
            "s": self.s,
            "share_a": self.share_a,
            "rho": self.rho,
            "delta": self.delta,
            "du_i": self.du_i,
            "du_m": self.du_m,
            "t_a": self.t_a,
            "t_b": self.t_b,
            "vr_a_actual": self.vr_a_actual,
            "vi_a_actual": self.vi_a_actual,
            "ur_a_expected": self.ur_a_expected,
            "share_b": self.share_b,
            "vr_b_actual": self.vr_b_actual,
            "vi_b_actual": self.vi_b_actual,
            "ur_b_expected": self.ur_b_expected,
        }


def bare_resales_revenue(good: Good) -> GridFunction:
    """``int_s^1 pi(s')/s' ds'``; singular at 0 when ``pi(0) != 0``."""
    p = good.price.values
    ur = tail_integral_over_s(p)
    singular = p[0] != 0.0
    if singular:
        ur[0] = ur[1]
    return GridFunction(ur, singular=singular)


@dataclass
class _Biases:
    s: np.ndarray
    ur_a: np.ndarray
    ur_b: np.ndarray
    rho_pop_a: np.ndarray
    dpi: np.ndarray
    dp: np.ndarray
    base: np.ndarray  # delta without the multiplier term
    singular: bool


def _biases(scenario: CompetitionScenario) -> _Biases:
    a, b = scenario.good_a, scenario.good_b
    ua = bare_resales_revenue(a)
    ub = bare_resales_revenue(b)
    pa, pb = a.popularity.values, b.popularity.values
    if scenario.distribution.translation:
        rho_pop_a = np.asarray(scenario.distribution.rho_shift(pa - pb), dtype=float)
        rho_pop_b = np.asarray(scenario.distribution.rho_shift(pb - pa), dtype=float)
    else:
        rho_pop_a = np.array([rho_general(scenario.distribution, x, y, 0.0) for x, y in zip(pa, pb)])
        rho_pop_b = np.array([rho_general(scenario.distribution, y, x, 0.0) for x, y in zip(pa, pb)])
    dpi = a.price.values - b.price.values
    base = ua.values * rho_pop_a - ub.values * rho_pop_b - dpi
    return _Biases(
        s=a.price.pi.s,
        ur_a=ua.values,
        ur_b=ub.values,
        rho_pop_a=rho_pop_a,
        dpi=dpi,
        dp=pa - pb,
        base=base,
        singular=ua.singular or ub.singular,
    )


def decision_bias(s: float, share_a: float, scenario: CompetitionScenario, _b: _Biases | None = None) -> float:
    """Decision bias at saturation ``s > 0`` given the current share of A."""
    if s <= 0:
        raise DomainError("decision bias at s=0 is undefined; use initial_rho")
    b = _b if _b is not None else _biases(scenario)
    base = float(np.interp(s, b.s, b.base))
    return base + scenario.epsilon * (2.0 * share_a / s - 1.0)


@dataclass(frozen=True)
class InitialRho:
    value: float
    roots: tuple
    multiple: bool


def initial_rho(scenario: CompetitionScenario, scan_points=10001, _b: _Biases | None = None) -> InitialRho:
    """Purchase probability of A as ``s -> 0``.

    Solves ``r = rho(delta_0(r))``, where the multiplier term is
    ``eps (2 r - 1)``. If several roots exist the one nearest to
    ``rho(delta_0(1/2))`` is chosen and ``multiple`` is set.
    """
    b = _b if _b is not None else _biases(scenario)
    base0, dp0 = float(b.base[0]), float(b.dp[0])
    p0a = float(scenario.good_a.popularity.values[0])
    p0b = float(scenario.good_b.popularity.values[0])
    eps = scenario.epsilon

    def rho_of(r):
        delta = base0 + eps * (2.0 * r - 1.0)
        if scenario.distribution.translation:
            return float(scenario.distribution.rho_shift(delta + dp0))
        return rho_general(scenario.distribution, p0a, p0b, delta)

    if eps == 0.0:
        r = rho_of(0.5)
        return InitialRho(r, (r,), False)

    def g(r):
        return rho_of(r) - r

    rs = np.linspace(0.0, 1.0, scan_points)
    gv = np.array([g(r) for r in rs])
    roots = []
    for i in range(scan_points - 1):
        if gv[i] == 0.0:
            roots.append(float(rs[i]))
        elif gv[i] * gv[i + 1] < 0.0:
            roots.append(bisect(g, rs[i], rs[i + 1], tol=1e-14))
    if gv[-1] == 0.0:
        roots.append(1.0)
    if not roots:
        raise ConsistencyError("no fixed point for the initial purchase probability")
    target = rho_of(0.5)
    best = min(roots, key=lambda r: (abs(r - target), r))
    return InitialRho(best, tuple(roots), len(roots) > 1)


def _actual_revenue(s, price, rho, share):
    """``int_s^1 pi rho / s_x ds'`` written as a ``1/s'`` tail integral."""
    ratio = np.zeros_like(s)
    pos = share > 0
    ratio[pos] = s[pos] / share[pos]
    ratio[0] = 1.0 / rho[0] if rho[0] > 0 else 0.0
    q = price * rho * ratio
    vr = tail_integral_over_s(q)
    if q[0] != 0.0:
        vr[0] = vr[1]
    return vr


def solve_dynamics(scenario: CompetitionScenario) -> Trajectory:
    """March the share of A over the saturation grid."""
    b = _biases(scenario)
    s = b.s
    n = s.size
    h = 1.0 / (n - 1)
    eps = scenario.epsilon
    init = initial_rho(scenario, _b=b)
    dist = scenario.distribution
    base = b.base.tolist()
    dp = b.dp.tolist()
    s_list = s.tolist()
    pa = scenario.good_a.popularity.values
    pb = scenario.good_b.popularity.values

    if dist.translation and dist.family == "weibull_1_2":
        rho_fn = _rho_scalar_weibull
    elif dist.translation:
        rho_fn = lambda x: float(dist.rho_shift(x))  # noqa: E731
    else:
        rho_fn = None

    def f(j, sa):
        delta = base[j] + eps * (2.0 * sa / s_list[j] - 1.0)
        if rho_fn is not None:
            return rho_fn(delta + dp[j]), delta
        return rho_general(dist, float(pa[j]), float(pb[j]), delta), delta

    share = np.zeros(n)
    rho = np.zeros(n)
    delta = np.zeros(n)
    rho[0] = init.value
    delta[0] = base[0] + eps * (2.0 * init.value - 1.0)
    sa = 0.0
    r0 = init.value
    for j in range(n - 1):
        pred = sa + h * r0
        r1, _ = f(j + 1, pred)
        sa = sa + 0.5 * h * (r0 + r1)
        share[j + 1] = sa
        r0, d0 = f(j + 1, sa)
        rho[j + 1] = r0
        delta[j + 1] = d0

    if np.any(rho < -1e-12) or np.any(rho > 1 + 1e-12):
        raise ConsistencyError("decision probability left [0, 1]")
    if np.any(share < -1e-12) or np.any(share > s + 1e-12):
        raise ConsistencyError("share of A left [0, s]")

    du_m = np.empty(n)
    du_m[1:] = eps * (2.0 * share[1:] / s[1:] - 1.0)
    du_m[0] = eps * (2.0 * init.value - 1.0)
    pi_a = scenario.good_a.price.values
    pi_b = scenario.good_b.price.values
    rho_b = 1.0 - rho
    t_a = cumulative_integral(GridFunction(pi_a * rho))
    t_b = cumulative_integral(GridFunction(pi_b * rho_b))
    return Trajectory(
        s=s,
        share_a=share,
        rho=rho,
        delta=delta,
        du_i=b.base.copy(),
        du_m=du_m,
        dpi=b.dpi,
        dp=b.dp,
        ur_a=b.ur_a,
        ur_b=b.ur_b,
        rho_pop_a=b.rho_pop_a,
        t_a=t_a,
        t_b=t_b,
        vr_a_actual=_actual_revenue(s, pi_a, rho, share),
        vr_b_actual=_actual_revenue(s, pi_b, rho_b, s - share),
        pi_a=pi_a,
        pi_b=pi_b,
        initial_rho=init.value,
        multiple_roots=init.multiple,
        singular_revenue=b.singular,
    )


# ---------------------------------------------------------------------------
# Monte-Carlo oracle


@dataclass
class CompetitionAbmRun:
    seed: int
    n_inf: int
    bought_a: np.ndarray  # bool per agent, index k - 1
    turnover_a: float
    turnover_b: float

    @property
    def final_share_a(self) -> float:
        return float(self.bought_a.sum()) / self.n_inf

    def share_a_at(self, s) -> np.ndarray:
        """Empirical share of A (in saturation units) at saturations ``s``."""
        counts = np.concatenate(([0], np.cumsum(self.bought_a)))
        k = np.floor(np.asarray(s) * self.n_inf + 1e-9).astype(int)
        return counts[k] / self.n_inf


def simulate_competition_abm(scenario: CompetitionScenario, n_inf: int, seed: int = 0) -> CompetitionAbmRun:
    """Agents enter one by one and pick A or B from sampled utilities.

    Agent ``k`` (at ``s = k / n_inf``) draws ``u_a``, ``u_b`` from the
    popularity-translated distributions and buys A iff
    ``u_a - u_b + delta > 0``, with the multiplier term evaluated on the
    empirical share of the ``k - 1`` earlier agents.
    """
    if n_inf < 10:
        raise DomainError("n_inf must be at least 10")
    dist = scenario.distribution
    if not (dist.translation and dist.family == "weibull_1_2"):
        raise DomainError("the competition oracle samples the translated Weibull distribution only")
    b = _biases(scenario)
    init = initial_rho(scenario, _b=b)
    rng = np.random.default_rng(seed)
    k = np.arange(1, n_inf + 1)
    sk = k / n_inf
    base = np.interp(sk, b.s, b.base)
    pa = scenario.good_a.popularity(sk)
    pb = scenario.good_b.popularity(sk)
    draw = rng.weibull(2.0, size=(2, n_inf))
    x = (pa + draw[0]) - (pb + draw[1]) + base
    eps = scenario.epsilon
    bought = np.zeros(n_inf, dtype=bool)
    xl = x.tolist()
    n_a = 0
    for i in range(n_inf):
        frac = n_a / i if i > 0 else init.value
        if xl[i] + eps * (2.0 * frac - 1.0) > 0.0:
            bought[i] = True
            n_a += 1
    price_a = scenario.good_a.price.pi(sk)
    price_b = scenario.good_b.price.pi(sk)
    return CompetitionAbmRun(
        seed=seed,
        n_inf=n_inf,
        bought_a=bought,
        turnover_a=float(price_a[bought].sum()) / n_inf,
        turnover_b=float(price_b[~bought].sum()) / n_inf,
    )
