"""Grid functions on the saturation interval and the numerical kernels used
throughout the package.

Every function of saturation ``s`` lives on a uniform grid over ``[0, 1]``.
Integrals against the weight ``1/s`` are done by product integration: the
integrand is interpolated by a local quadratic and the weight is integrated
exactly, so a constant price gives ``-ln s`` to rounding.

A :class:`GridFunction` flagged ``singular`` carries a logarithmic
singularity at ``s = 0``. Its value at the first node is a proxy (the value
at ``s = h``) and integrals over ``[0, h]`` use the local model
``c ln s + b0 + b1 s + b2 s**2`` fitted to the first interior nodes. The
residual of that model is ``O(h**3 ln h)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import integrate as _integrate
from scipy import optimize as _optimize
from scipy import special as _special

from .errors import BracketError, DomainError

DEFAULT_GRID = 4097

EULER_GAMMA = 0.57721566490153286061
BERNOULLI_2 = 1.0 / 6.0
BERNOULLI_4 = -1.0 / 30.0

# nodes used for the local logarithmic fit at a singular endpoint
_LOG_FIT_NODES = 6

_GL_T, _GL_W = np.polynomial.legendre.leggauss(20)
_GL_T = 0.5 * (_GL_T + 1.0)
_GL_W = 0.5 * _GL_W


def grid(n_points: int) -> np.ndarray:
    """Uniform saturation grid ``s_j = j / (n_points - 1)``."""
    if n_points < 2:
        raise DomainError(f"grid needs at least 2 points, got {n_points}")
    return np.linspace(0.0, 1.0, n_points)


@dataclass(frozen=True, eq=False)
class GridFunction:
    """Real function of saturation sampled on the uniform grid.

    Parameters
    ----------
    values : array_like
        Samples at ``s_j = j / (n - 1)``.
    singular : bool
        True if the function diverges logarithmically at ``s = 0``; then
        ``values[0]`` is only a proxy equal to ``values[1]``.
    """

    values: np.ndarray
    singular: bool = False
    _s: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        v = np.array(self.values, dtype=float)
        if v.ndim != 1 or v.size < 2:
            raise DomainError("a GridFunction needs a 1-d array of at least 2 samples")
        if not np.all(np.isfinite(v)):
            raise DomainError("GridFunction values must be finite")
        v.setflags(write=False)
        object.__setattr__(self, "values", v)
        object.__setattr__(self, "_s", grid(v.size))

    @classmethod
    def from_callable(cls, func, n_points=DEFAULT_GRID, singular=False):
        """Sample ``func`` (vectorised over ``s``) on the grid.

        For ``singular=True`` the function is not evaluated at 0.
        """
        s = grid(n_points)
        if singular:
            vals = np.empty(n_points)
            vals[1:] = np.broadcast_to(func(s[1:]), n_points - 1)
            vals[0] = vals[1]
        else:
            vals = np.broadcast_to(np.asarray(func(s), dtype=float), n_points).copy()
        return cls(vals, singular=singular)

    @classmethod
    def constant(cls, value, n_points=DEFAULT_GRID):
        return cls(np.full(n_points, float(value)))

    @property
    def n_points(self) -> int:
        return self.values.size

    @property
    def s(self) -> np.ndarray:
        return self._s

    @property
    def h(self) -> float:
        return 1.0 / (self.n_points - 1)

    def __call__(self, x):
        return np.interp(x, self._s, self.values)

    def _check_compatible(self, other):
        if other.n_points != self.n_points:
            raise DomainError(
                f"grid mismatch: {self.n_points} vs {other.n_points} points"
            )

    def __add__(self, other):
        if isinstance(other, GridFunction):
            self._check_compatible(other)
            return GridFunction(self.values + other.values, self.singular or other.singular)
        return GridFunction(self.values + float(other), self.singular)

    __radd__ = __add__

    def __neg__(self):
        return GridFunction(-self.values, self.singular)

    def __sub__(self, other):
        return self + (-other)

    def __mul__(self, scalar):
        return GridFunction(self.values * float(scalar), self.singular)

    __rmul__ = __mul__

    def max_abs_diff(self, other, lo=0.0, hi=1.0) -> float:
        """Sup-norm distance on the nodes inside ``[lo, hi]``."""
        self._check_compatible(other)
        mask = (self._s >= lo - 1e-15) & (self._s <= hi + 1e-15)
        return float(np.max(np.abs(self.values[mask] - other.values[mask])))


# ---------------------------------------------------------------------------
# quadrature on the grid


def _cell_integrals(values: np.ndarray, h: float) -> np.ndarray:
    """Integral over each grid cell of the local quadratic interpolant."""
    v = values
    n = v.size
    if n == 2:
        return np.array([0.5 * h * (v[0] + v[1])])
    out = np.empty(n - 1)
    out[:-1] = h * (5.0 * v[:-2] + 8.0 * v[1:-1] - v[2:]) / 12.0
    out[-1] = h * (-v[-3] + 8.0 * v[-2] + 5.0 * v[-1]) / 12.0
    return out


def log_singular_fit(values: np.ndarray, basis: np.ndarray | None = None):
    """Split off the singular part of a function that diverges at ``s = 0``.

    Fits ``f ~ c * basis + b0 + b1 s + b2 s**2`` on the first interior nodes
    (``basis`` defaults to ``ln s``) and returns ``(c, remainder)`` where
    ``remainder = f - c * basis`` on all nodes, extrapolated to ``s = 0``.
    """
    values = np.asarray(values, dtype=float)
    n = values.size
    s = grid(n)
    if basis is None:
        basis = np.empty(n)
        basis[1:] = np.log(s[1:])
        basis[0] = np.nan
    m = min(_LOG_FIT_NODES, n - 1)
    j = np.arange(1, m + 1, dtype=float)
    cols = [basis[1 : m + 1], np.ones(m), j, j * j][: max(2, min(4, m))]
    coef, *_ = np.linalg.lstsq(np.column_stack(cols), values[1 : m + 1], rcond=None)
    c = float(coef[0])
    rem = values - c * basis
    rem[0] = float(coef[1])
    return c, rem


def cumulative_integral(f: GridFunction) -> np.ndarray:
    """``F_j = int_0^{s_j} f ds`` at every node."""
    if f.singular:
        c, rem = log_singular_fit(f.values)
        s = f.s
        out = np.concatenate(([0.0], np.cumsum(_cell_integrals(rem, f.h))))
        xlogx = np.zeros_like(s)
        xlogx[1:] = s[1:] * np.log(s[1:])
        return out + c * (xlogx - s)
    return np.concatenate(([0.0], np.cumsum(_cell_integrals(f.values, f.h))))


def _partial_cell(values, h, x):
    """``int_{s_k}^x`` of the local quadratic, ``s_k`` the node left of ``x``."""
    n = values.size
    k = min(int(math.floor(x / h)), n - 2)
    H = x - k * h
    if H <= 0.0:
        return k, 0.0
    if n == 2:
        d1 = (values[1] - values[0]) / h
        return k, values[0] * H + d1 * H * H / 2.0
    i0 = min(k, n - 3)
    y0, y1, y2 = values[i0 : i0 + 3]
    x0 = i0 * h
    d1 = (y1 - y0) / h
    d2 = (y2 - 2.0 * y1 + y0) / (2.0 * h * h)
    # antiderivative of y0 + d1 (t - x0) + d2 (t - x0)(t - x0 - h)
    def prim(t):
        u = t - x0
        return y0 * u + d1 * u * u / 2.0 + d2 * (u**3 / 3.0 - h * u * u / 2.0)

    return k, prim(x) - prim(k * h)


def integrate(f: GridFunction, a: float = 0.0, b: float = 1.0) -> float:
    """Integral of a grid function over ``[a, b]`` within ``[0, 1]``."""
    if not (0.0 <= a <= b <= 1.0):
        raise DomainError(f"integration bounds must satisfy 0 <= a <= b <= 1, got [{a}, {b}]")
    if a == b:
        return 0.0
    if f.singular:
        c, rem = log_singular_fit(f.values)
        base = GridFunction(rem)

        def xlogx(x):
            return x * math.log(x) - x if x > 0.0 else 0.0

        return integrate(base, a, b) + c * (xlogx(b) - xlogx(a))
    F = cumulative_integral(f)
    h = f.h

    def at(x):
        k, part = _partial_cell(f.values, h, x)
        return F[k] + part

    return float(at(b) - at(a))


def _power_cell_weights(n: int, a: float, first: int):
    """Product weights for ``int_{s_k}^{s_{k+1}} f(s) (s/h)**a ds / h``.

    Covers cells ``k >= first`` (cell 0 only when ``a > -1``). Returns
    ``(W, start)``: cell ``k`` equals ``W[k-first] @ f[start:start+3]``.
    """
    k = np.arange(first, n - 1, dtype=float)[:, None]
    start = np.arange(first, n - 1)
    offset = np.zeros((k.shape[0], 1))
    offset[-1] = -1.0
    start[-1] -= 1
    x0 = offset
    x1 = offset + 1.0
    x2 = offset + 2.0
    t = _GL_T[None, :]
    L0 = (t - x1) * (t - x2) / ((x0 - x1) * (x0 - x2))
    L1 = (t - x0) * (t - x2) / ((x1 - x0) * (x1 - x2))
    L2 = (t - x0) * (t - x1) / ((x2 - x0) * (x2 - x1))
    with np.errstate(divide="ignore", invalid="ignore"):
        wgt = _GL_W[None, :] * (t + k) ** a
    W = np.stack([(L0 * wgt).sum(1), (L1 * wgt).sum(1), (L2 * wgt).sum(1)], axis=1)
    if first == 0:
        # t**a is singular at t=0: use exact moments on the first cell
        mu = [1.0 / (m + a + 1.0) for m in range(3)]
        W[0] = [(mu[2] - 3.0 * mu[1] + 2.0 * mu[0]) / 2.0, 2.0 * mu[1] - mu[2], (mu[2] - mu[1]) / 2.0]
    return W, start


_WEIGHT_CACHE: dict[tuple, tuple[np.ndarray, np.ndarray]] = {}


def _cached_weights(n, a, first):
    key = (n, float(a), first)
    if key not in _WEIGHT_CACHE:
        _WEIGHT_CACHE[key] = _power_cell_weights(n, a, first)
    return _WEIGHT_CACHE[key]


def power_weighted_cumulative(values, a: float) -> np.ndarray:
    """``int_0^{s_j} f(s) s**a ds`` at every node, for ``a > -1``."""
    v = np.asarray(values, dtype=float)
    n = v.size
    if a <= -1.0:
        raise DomainError(f"weight exponent must exceed -1, got {a}")
    if n < 3:
        raise DomainError("power-weighted integration needs at least 3 nodes")
    h = 1.0 / (n - 1)
    W, start = _cached_weights(n, a, 0)
    idx = start[:, None] + np.arange(3)[None, :]
    cells = np.einsum("ij,ij->i", W, v[idx]) * h ** (a + 1.0)
    return np.concatenate(([0.0], np.cumsum(cells)))


def tail_integral_over_s(values) -> np.ndarray:
    """``I_j = int_{s_j}^1 f(s')/s' ds'`` at every node.

    The first entry is ``+-inf`` when ``f(0) != 0`` (logarithmic divergence)
    and finite otherwise.
    """
    v = np.asarray(values, dtype=float)
    n = v.size
    cells = np.empty(n - 1)
    if n == 2:
        cells[0] = v[1]
    else:
        W, start = _cached_weights(n, -1.0, 1)
        idx = start[:, None] + np.arange(3)[None, :]
        cells[1:] = np.einsum("ij,ij->i", W, v[idx])
        cells[0] = 1.5 * v[1] - 0.25 * v[2]
    out = np.zeros(n)
    out[:-1] = np.cumsum(cells[::-1])[::-1]
    if v[0] != 0.0:
        out[0] = math.copysign(math.inf, v[0])
    return out


def quad(func, a: float, b: float, **kwargs) -> float:
    """Adaptive quadrature for closed-form integrands."""
    opts = {"epsabs": 1e-13, "epsrel": 1e-12, "limit": 500}
    opts.update(kwargs)
    val, _ = _integrate.quad(func, a, b, **opts)
    return float(val)


# ---------------------------------------------------------------------------
# special functions


def erf(x):
    """Error function."""
    out = _special.erf(x)
    return float(out) if np.ndim(out) == 0 else out


def sine_integral(x):
    """``Si(x) = int_0^x sin(t)/t dt`` for ``x >= 0``."""
    xa = np.asarray(x, dtype=float)
    if np.any(xa < 0):
        raise DomainError("sine_integral is defined here for x >= 0 only")
    out = _special.sici(xa)[0]
    return float(out) if np.ndim(out) == 0 else out


def digamma(n: int) -> float:
    """Digamma at a positive integer, ``-gamma_E + sum_{j<n} 1/j``."""
    if isinstance(n, bool) or int(n) != n or n < 1:
        raise DomainError(f"digamma is implemented for positive integers, got {n!r}")
    n = int(n)
    if n == 1:
        return -EULER_GAMMA
    return math.fsum(np.concatenate(([-EULER_GAMMA], 1.0 / np.arange(1, n))))


def bisect(g, lo: float, hi: float, tol: float = 1e-12) -> float:
    """Root of ``g`` in ``[lo, hi]`` by bisection."""
    glo, ghi = g(lo), g(hi)
    if glo == 0.0:
        return float(lo)
    if ghi == 0.0:
        return float(hi)
    if np.sign(glo) == np.sign(ghi):
        raise BracketError(f"no sign change on [{lo}, {hi}]: g={glo:.3e}, {ghi:.3e}")
    return float(_optimize.bisect(g, lo, hi, xtol=tol, maxiter=200))
