"""Rank-r degenerate-kernel approximation of the history weights.

For a source interval contained in (a, b] and a target interval strictly
to the right, the weight beta_nj separates into target-side coefficients
phi_p (kernel averages about the source midpoint sbar) and source-side
moments psi_p (polynomial averages), giving

    beta_nj ~ sum_{p=1}^r phi_pn * psi_pj

with relative error at most 2^(2-nu) (r+1) (eta/2)^r when the source
block length is at most eta times its distance to the target block.
Both coefficient families are generated by short recursions that avoid
the cancellation-prone direct differences.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.special import gamma as _gamma

from .frac_weights import d_mu
from .time_mesh import TimeMesh


@dataclass(frozen=True)
class ExpansionParams:
    """Expansion order r >= 1 and admissibility parameter 0 < eta <= 1."""

    r: int
    eta: float

    def __post_init__(self):
        if self.r < 1:
            raise ValueError("expansion order r must be at least 1")
        if not 0.0 < self.eta <= 1.0:
            raise ValueError("eta must lie in (0, 1]")

    def error_factor(self, nu: float) -> float:
        """Relative error bound factor 2^(2-nu) (r+1) (eta/2)^r."""
        return 2.0 ** (2.0 - nu) * (self.r + 1) * (self.eta / 2.0) ** self.r


def phi_coeffs(nu: float, r: int, sbar: float, t_prev: float, t_next: float) -> np.ndarray:
    """Target-side coefficients phi_1..phi_r for the interval (t_prev, t_next].

    phi_p = kappa_p * D_{p-nu}(x) with x = k_n / (t_next - sbar), where the
    kappa recursion is kappa_1 = (t_prev - sbar)^(nu-1) / Gamma(nu) and
    kappa_{p+1} = (p - nu) / (t_prev - sbar) * kappa_p.  Requires the
    target to lie strictly right of the source midpoint.
    """
    if t_prev <= sbar:
        raise ValueError("target interval must lie strictly right of sbar")
    kn = t_next - t_prev
    x = kn / (t_next - sbar)
    out = np.empty(r)
    kappa = (t_prev - sbar) ** (nu - 1.0) / _gamma(nu)
    for p in range(1, r + 1):
        out[p - 1] = kappa * d_mu(p - nu, x)
        kappa *= (p - nu) / (t_prev - sbar)
    return out


def psi_coeffs(r: int, sbar: float, t_prev: float, t_next: float) -> np.ndarray:
    """Source-side moments psi_1..psi_r for the interval (t_prev, t_next].

    Polynomial recursion: psi_1 = k_j and
    psi_{p+1} = ((t_prev - sbar) psi_p + (k_j / p!) (t_next - sbar)^p) / (p+1),
    valid for any placement of sbar relative to the interval.
    """
    kj = t_next - t_prev
    a = t_prev - sbar
    b = t_next - sbar
    out = np.empty(r)
    out[0] = kj
    fact = 1.0
    for p in range(1, r):
        out[p] = (a * out[p - 1] + (kj / fact) * b**p) / (p + 1)
        fact *= p + 1
    return out


def phi_for_interval(params: ExpansionParams, mesh: TimeMesh, nu: float,
                     sbar: float, n: int) -> np.ndarray:
    """phi coefficients for mesh interval n about the source midpoint sbar."""
    return phi_coeffs(nu, params.r, sbar, mesh.level(n - 1), mesh.level(n))


def psi_for_interval(params: ExpansionParams, mesh: TimeMesh,
                     sbar: float, j: int) -> np.ndarray:
    """psi moments for mesh interval j about the source midpoint sbar."""
    return psi_coeffs(params.r, sbar, mesh.level(j - 1), mesh.level(j))


def tilde_beta(phi: np.ndarray, psi: np.ndarray) -> float:
    """Rank-r approximate weight: the inner product of phi and psi."""
    phi = np.asarray(phi, dtype=float)
    psi = np.asarray(psi, dtype=float)
    if phi.shape != psi.shape:
        raise ValueError(f"coefficient length mismatch: {phi.shape} vs {psi.shape}")
    return float(phi @ psi)


@dataclass
class FarBasis:
    """Expansion data attached to one source block (a, b].

    sbar is the block midpoint; phi/psi tables are filled lazily per
    target or source interval index.
    """

    sbar: float
    phi: dict[int, np.ndarray] = field(default_factory=dict)
    psi: dict[int, np.ndarray] = field(default_factory=dict)
