"""Cancellation-safe kernel primitives and history quadrature weights.

The memory kernel is w_mu(t) = t^(mu-1) / Gamma(mu).  The time stepping
scheme couples step n to past step j through the weight

    beta_nj = integral over I_j of [w_nu(t_{n-1}-s) - w_nu(t_n-s)] ds > 0,

with diagonal weight beta_nn = k_n^nu / Gamma(1+nu).  Direct evaluation of
beta_nj loses precision once the step sizes are small relative to the
separation of the intervals, so three stable routes are provided:

* an exact closed form for adjacent intervals (j = n-1),
* an even-power series in the source step for separated intervals,
* a square-root closed form special to nu = 1/2.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from scipy.special import gamma as _gamma

from .time_mesh import TimeMesh


class SeriesConvergenceError(RuntimeError):
    """Raised when the separated-interval series fails to meet tolerance.

    Attributes:
        last_ratio: magnitude of the last successive-term ratio observed.
    """

    def __init__(self, msg: str, last_ratio: float):
        super().__init__(msg)
        self.last_ratio = last_ratio


@dataclass(frozen=True)
class KernelParams:
    """Fractional order of the memory kernel, 0 < nu < 1."""

    nu: float

    def __post_init__(self):
        if not 0.0 < self.nu < 1.0:
            raise ValueError(f"nu must lie in (0, 1), got {self.nu}")


@dataclass(frozen=True)
class SeriesControl:
    """Truncation control for the separated-interval series."""

    rel_tol: float = 1e-15
    max_terms: int = 50

    def __post_init__(self):
        if self.rel_tol <= 0.0:
            raise ValueError("rel_tol must be positive")
        if self.max_terms < 1:
            raise ValueError("max_terms must be at least 1")


def omega(mu: float, t: float) -> float:
    """Kernel w_mu(t) = t^(mu-1) / Gamma(mu) for t > 0."""
    if t <= 0.0:
        raise ValueError(f"omega requires t > 0, got {t}")
    if mu <= 0.0 and mu == math.floor(mu):
        raise ValueError(f"Gamma pole at mu = {mu}")
    return t ** (mu - 1.0) / _gamma(mu)


def d_mu(mu: float, x: float) -> float:
    """D_mu(x) = 1 - (1-x)^mu, evaluated without cancellation for small x."""
    if not 0.0 <= x < 1.0:
        raise ValueError(f"d_mu requires 0 <= x < 1, got {x}")
    return -math.expm1(mu * math.log1p(-x))


def b_mu(mu: float, t: float, k: float) -> float:
    """Local kernel average B_mu(t, k) = w_{1+mu}(t+k/2) - w_{1+mu}(t-k/2).

    For positive integer mu the result is a polynomial in t, valid for any
    real t; otherwise the interval (t-k/2, t+k/2) must avoid the kernel
    singularity, i.e. t > k/2, and the difference is computed through
    D_mu to avoid cancellation when k << t.
    """
    if k <= 0.0:
        raise ValueError(f"b_mu requires k > 0, got {k}")
    if mu >= 1.0 and mu == math.floor(mu):
        return _b_int(int(mu), t, k)
    if t <= 0.5 * k:
        raise ValueError(f"b_mu singular branch requires t > k/2, got t={t}, k={k}")
    a = t + 0.5 * k
    return omega(1.0 + mu, a) * d_mu(mu, k / a)


def _b_int(p: int, t: float, k: float) -> float:
    # B_p(t,k) = [(t+k/2)^p - (t-k/2)^p] / p! written as a product sum,
    # which is exact for any t and free of cancellation.
    a = t + 0.5 * k
    b = t - 0.5 * k
    acc = 0.0
    for q in range(p):
        acc += a**q * b ** (p - 1 - q)
    return k * acc / math.factorial(p)


def beta_diag(params: KernelParams, mesh: TimeMesh, n: int) -> float:
    """Diagonal weight beta_nn = k_n^nu / Gamma(1+nu)."""
    k = mesh.step(n)
    return k**params.nu / _gamma(1.0 + params.nu)


def beta_adjacent(nu: float, k_prev: float, k_cur: float) -> float:
    """Exact weight for adjacent intervals.

    beta = w_{1+nu}(k_max) * [1 + x^nu - (1+x)^nu] with x = k_min/k_max,
    the bracket evaluated through expm1/log1p to avoid cancellation.
    """
    k_hi = max(k_prev, k_cur)
    x = min(k_prev, k_cur) / k_hi
    # (1+x)^nu = 1 + y^nu with y < x, so the bracket is y^nu * ((x/y)^nu - 1).
    y = math.exp(math.log(math.expm1(nu * math.log1p(x))) / nu)
    bracket = y**nu * math.expm1(nu * math.log(x / y))
    return omega(1.0 + nu, k_hi) * bracket


def beta_separated_series(
    nu: float, source: tuple[float, float], target: tuple[float, float],
    ctl: SeriesControl = SeriesControl(),
) -> float:
    """Series evaluation of beta for a separated interval pair.

    source = (t_{j-1}, t_j) and target = (t_{n-1}, t_n) must be disjoint
    with the source strictly left of the target.  The expansion is in even
    powers of the source step about the centre distance; successive term
    ratios approach (k_j / (2*Delta - k_n))^2 < 1.
    """
    s0, s1 = source
    t0, t1 = target
    kj = s1 - s0
    kn = t1 - t0
    delta = 0.5 * (t0 + t1) - 0.5 * (s0 + s1)
    if delta <= 0.5 * (kj + kn):
        raise ValueError("series branch requires disjoint source left of target")
    total = 0.0
    prev = None
    ratio = (kj / (2.0 * delta - kn)) ** 2  # limiting successive-term ratio
    for p in range(ctl.max_terms):
        term = -b_mu(nu - 2 * p - 1, delta, kn) * kj ** (2 * p + 1) / (
            math.factorial(2 * p + 1) * 4**p
        )
        total += term
        if abs(term) < ctl.rel_tol * abs(total):
            return total
        if prev is not None and prev != 0.0:
            ratio = abs(term / prev)
        prev = term
    raise SeriesConvergenceError(
        f"weight series did not reach rel_tol={ctl.rel_tol} in "
        f"{ctl.max_terms} terms (last term ratio {ratio:.3g})",
        last_ratio=ratio,
    )


def beta_direct(nu: float, source: tuple[float, float], target: tuple[float, float]) -> float:
    """Direct difference beta = B_nu(Delta - k_j/2, k_n) - B_nu(Delta + k_j/2, k_n).

    Exact in real arithmetic but loses precision for well-separated
    intervals; kept as an independent cross-check of the series branch.
    """
    s0, s1 = source
    t0, t1 = target
    kj = s1 - s0
    kn = t1 - t0
    delta = 0.5 * (t0 + t1) - 0.5 * (s0 + s1)
    return b_mu(nu, delta - 0.5 * kj, kn) - b_mu(nu, delta + 0.5 * kj, kn)


def beta_half(source: tuple[float, float], target: tuple[float, float]) -> float:
    """Closed form for nu = 1/2 built from the four corner square roots."""
    s0, s1 = source
    t0, t1 = target
    kj = s1 - s0
    kn = t1 - t0
    delta = 0.5 * (t0 + t1) - 0.5 * (s0 + s1)
    rpp = math.sqrt(delta + 0.5 * kj + 0.5 * kn)
    rpm = math.sqrt(delta + 0.5 * kj - 0.5 * kn)
    rmp = math.sqrt(delta - 0.5 * kj + 0.5 * kn)
    rmm = math.sqrt(delta - 0.5 * kj - 0.5 * kn)
    g32 = _gamma(1.5)
    return (
        kn * kj / g32
        / ((rmp + rmm) * (rpp + rpm))
        * (1.0 / (rpp + rmp) + 1.0 / (rpm + rmm))
    )


def beta_interval(
    nu: float, source: tuple[float, float], target: tuple[float, float],
    ctl: SeriesControl = SeriesControl(),
) -> float:
    """Stable weight for an arbitrary source/target interval pair.

    Dispatch: adjacent closed form when the intervals touch, the nu = 1/2
    square-root form when applicable, otherwise the even-power series.
    """
    s0, s1 = source
    t0, t1 = target
    if s1 == t0:
        return beta_adjacent(nu, s1 - s0, t1 - t0)
    if nu == 0.5:
        return beta_half(source, target)
    return beta_separated_series(nu, source, target, ctl)


def beta_offdiag(
    params: KernelParams, mesh: TimeMesh, ctl: SeriesControl, n: int, j: int
) -> float:
    """History weight beta_nj for 1 <= j <= n-1."""
    if not 1 <= j <= n - 1:
        raise ValueError(f"beta_offdiag requires 1 <= j <= n-1, got n={n}, j={j}")
    mesh._check_index(n)
    lv = mesh.levels
    return beta_interval(params.nu, (lv[j - 1], lv[j]), (lv[n - 1], lv[n]), ctl)


class WeightEngine:
    """Cached weight evaluation for one mesh and kernel order.

    On uniform meshes beta_nj depends only on the lag n - j, which reduces
    the setup cost for all N(N-1)/2 weights to O(N) evaluations.
    """

    def __init__(self, params: KernelParams, mesh: TimeMesh,
                 ctl: SeriesControl = SeriesControl()):
        self.params = params
        self.mesh = mesh
        self.ctl = ctl
        self._diag: dict[int, float] = {}
        self._cache: dict[tuple[int, int], float] = {}

    def diag(self, n: int) -> float:
        if n not in self._diag:
            self._diag[n] = beta_diag(self.params, self.mesh, n)
        return self._diag[n]

    def offdiag(self, n: int, j: int) -> float:
        key = (n - j, 0) if self.mesh.uniform else (n, j)
        val = self._cache.get(key)
        if val is None:
            val = beta_offdiag(self.params, self.mesh, self.ctl, n, j)
            self._cache[key] = val
        return val
