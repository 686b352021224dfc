"""Independent oracles: the exact separable benchmark solution and the
direct quadratic-cost history summation.

The benchmark problem (unit-coefficient initial mode, eigenvalue 1,
forcing 1 + sin(pi t)) has the Laplace transform

    uhat(z) = (1 + 1/z + pi/(z^2 + pi^2)) / (z + z^(1-nu)),

inverted numerically on a hyperbolic contour wrapped around the negative
real axis.  The imaginary-axis pole pair from the forcing is removed
analytically and restored as residues, so the contour quadrature only
sees the branch cut.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass

import numpy as np
from scipy.special import gamma as _gamma

from .spatial_fem import SpatialGrid, sine_mode
from .time_mesh import TimeMesh


class ContourAccuracyError(RuntimeError):
    """Raised when the contour quadrature's error estimate is too large."""


@dataclass(frozen=True)
class LaplaceContour:
    """Hyperbolic contour z(x) = scale/t * (1 + sin(i x - angle)).

    Defaults follow the standard optimized parameters for integrands
    analytic off the negative real axis: scale 4.4921 * nodes, asymptotic
    half-angle 1.1721, uniform step 1.0818 / nodes.
    """

    nodes: int = 32
    scale: float = 4.4921
    angle: float = 1.1721

    def __post_init__(self):
        if self.nodes < 8:
            raise ValueError("need at least 8 quadrature nodes")

    def quadrature(self, t: float, nodes: int | None = None):
        """Contour points and trapezoid weights (z, w) for time t; the
        inversion is sum of Re(w * e^{z t} * fhat(z)).

        The contour size is always set from the base node count, so that
        raising `nodes` refines the rule on a fixed contour; growing the
        contour with the node count would amplify roundoff instead.
        """
        K = self.nodes if nodes is None else nodes
        hstep = 1.0818 / K
        # The exponential factor on the contour grows like
        # exp((1 - sin(angle)) * scale * K_mu), so the contour size is
        # capped at its 32-node value to keep roundoff near 1e-11;
        # node counts beyond that only refine the quadrature rule.
        mu = self.scale * min(self.nodes, 32) / t
        x = hstep * np.arange(-K, K + 1)
        z = mu * (1.0 + np.sin(1j * x - self.angle))
        dz = 1j * mu * np.cos(1j * x - self.angle)
        w = hstep * dz / (2j * np.pi)
        return z, w


def _u11_hat(nu: float, z: complex, forced: bool) -> complex:
    num = 1.0 + (1.0 / z + np.pi / (z * z + np.pi**2) if forced else 0.0)
    return num / (z + z ** (1.0 - nu))


def _forcing_residue(nu: float) -> complex:
    # residue of uhat at z = i pi, from the pi/(z^2+pi^2) forcing term
    zp = 1j * math.pi
    return 1.0 / (2j * (zp + zp ** (1.0 - nu)))


def u11(nu: float, t: float, contour: LaplaceContour = LaplaceContour(),
        forced: bool = True) -> float:
    """Time factor of the exact benchmark solution at time t > 0.

    forced=False gives the homogeneous relaxation (the Mittag-Leffler
    function of -t^nu).  Raises ContourAccuracyError if the internal
    half-node-count estimate of the quadrature error exceeds 1e-8.
    """
    if t <= 0.0:
        raise ValueError("u11 requires t > 0")
    base = _u11_eval(nu, t, contour, forced, contour.nodes)
    fine = _u11_eval(nu, t, contour, forced, 2 * contour.nodes)
    if abs(fine - base) > 1e-8:
        raise ContourAccuracyError(
            f"contour error estimate {abs(fine - base):.3g} at t={t}"
        )
    return fine


def _u11_eval(nu: float, t: float, contour: LaplaceContour, forced: bool,
              nodes: int) -> float:
    z, w = contour.quadrature(t, nodes)
    if forced:
        res = _forcing_residue(nu)
        zp = 1j * math.pi

        def fhat(zz):
            return _u11_hat(nu, zz, True) - res / (zz - zp) - res.conjugate() / (zz + zp)

        pole_part = 2.0 * (res * cmath.exp(zp * t)).real
    else:
        def fhat(zz):
            return _u11_hat(nu, zz, False)

        pole_part = 0.0
    vals = np.array([fhat(zz) for zz in z])
    return float(np.sum(w * np.exp(z * t) * vals).real) + pole_part


def mittag_leffler_series(nu: float, x: float, terms: int = 60) -> float:
    """Truncated power series of E_nu(x); adequate for |x| <= 1."""
    ks = np.arange(terms)
    return float(np.sum(x**ks / _gamma(1.0 + nu * ks)))


def u11_classical(t: float) -> float:
    """Closed form of the benchmark time factor at nu = 1 (ordinary ODE)."""
    return (
        math.exp(-t)
        + (1.0 - math.exp(-t))
        + (math.pi * math.exp(-t) + math.sin(math.pi * t) - math.pi * math.cos(math.pi * t))
        / (1.0 + math.pi**2)
    )


def exact_field(grid: SpatialGrid, mesh: TimeMesh, nu: float, n: int,
                contour: LaplaceContour = LaplaceContour()) -> np.ndarray:
    """Nodal values of the exact benchmark solution at time level n."""
    mode = sine_mode(grid, 1, 1 if grid.dim == 2 else None)
    return u11(nu, mesh.level(n), contour) * mode


def max_nodal_error(numeric: list[np.ndarray] | np.ndarray,
                    exact: list[np.ndarray] | np.ndarray) -> float:
    """max over steps and nodes of |numeric - exact|."""
    err = 0.0
    for un, ue in zip(numeric, exact, strict=True):
        err = max(err, float(np.max(np.abs(un - ue))))
    return err


def direct_history_sum(weights, values: list[np.ndarray], n: int) -> np.ndarray:
    """Literal sum over j < n of beta_nj * U^j with exact weights.

    The O(n M) equivalence oracle for the fast engine; accumulation runs
    in ascending j so the arithmetic matches the engine's near-field path
    bit for bit.
    """
    if n < 1:
        raise ValueError("step index must be at least 1")
    M = len(values[0]) if values else 0
    acc = np.zeros(M)
    for j in range(1, n):
        acc += weights.offdiag(n, j) * values[j - 1]
    return acc
