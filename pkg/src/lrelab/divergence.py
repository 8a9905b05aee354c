"""Rényi divergences, Jensen gaps of the log-partition and its conjugate,
the alpha-skew Jensen-Shannon divergence, and the Chernoff point."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import integrate
from scipy.special import logsumexp, rel_entr

from .density import Density, GaussianDensity, _check_same_backend, normalized
from .errors import BoundaryError, DomainError
from .family import LrePath, solve_monotone

__all__ = [
    "ChernoffResult",
    "chernoff_log_partition",
    "renyi",
    "jensen_gap_primal",
    "jensen_gap_dual",
    "dual_gap_argmax",
    "chernoff_point",
    "alpha_skew_jsd",
    "binary_entropy",
]

CHERNOFF_BRACKET = (1e-6, 1.0 - 1e-6)
CHERNOFF_TOL = 1e-12


@dataclass(frozen=True)
class ChernoffResult:
    beta_star: float
    chernoff_info: float
    kl_to_base: float
    kl_to_target: float

    @property
    def residual(self) -> float:
        return abs(self.kl_to_base - self.kl_to_target)

    def to_dict(self) -> dict:
        return {
            "beta_star": self.beta_star,
            "chernoff_info": self.chernoff_info,
            "kl0": self.kl_to_base,
            "kl1": self.kl_to_target,
        }


def chernoff_log_partition(path: LrePath, beta: float) -> float:
    """``C(beta)``: the log-partition between the *normalized* endpoints."""
    return path.log_partition(beta) - (1.0 - beta) * path.logZ0 - beta * path.logZ1


def renyi(path: LrePath, alpha: float) -> float:
    """Rényi divergence ``D_alpha[pi1 || pi0]`` in nats between normalized endpoints.

    ``alpha = 1`` returns the KL divergence; ``alpha <= 0`` is rejected.
    """
    alpha = float(alpha)
    if alpha <= 0:
        raise DomainError(f"Rényi order must be positive, got alpha={alpha!r}")
    if alpha == 1.0:
        return path.kl_between(1.0, 0.0)
    return chernoff_log_partition(path, alpha) / (alpha - 1.0)


def jensen_gap_primal(path: LrePath, alpha: float, beta0: float = 0.0, beta1: float = 1.0) -> float:
    """``(1-a) psi(b0) + a psi(b1) - psi((1-a) b0 + a b1)``."""
    mid = (1.0 - alpha) * beta0 + alpha * beta1
    return (
        (1.0 - alpha) * path.log_partition(beta0)
        + alpha * path.log_partition(beta1)
        - path.log_partition(mid)
    )


def jensen_gap_dual(path: LrePath, lam: float, beta0: float = 0.0, beta1: float = 1.0):
    """Jensen gap of the conjugate at the moments of ``beta0`` and ``beta1``.

    Returns ``(gap, eta_mix)`` with ``eta_mix = lam*eta0 + (1-lam)*eta1``.
    """
    p0, p1 = path.point(beta0), path.point(beta1)
    eta_mix = lam * p0.eta + (1.0 - lam) * p1.eta
    psi_star_mix, _ = path.conjugate(eta_mix)
    gap = lam * p0.psi_star + (1.0 - lam) * p1.psi_star - psi_star_mix
    return gap, eta_mix


def dual_gap_argmax(path: LrePath, beta0: float = 0.0, beta1: float = 1.0):
    """Maximizer of the dual Jensen gap over ``lam``.

    Stationarity requires the natural parameter at the mixed moment to equal
    the chord slope ``(psi*(eta1) - psi*(eta0)) / (eta1 - eta0)``.  Returns
    ``(lam_star, beta_at_mix)``.
    """
    p0, p1 = path.point(beta0), path.point(beta1)
    if p1.eta == p0.eta:
        raise DomainError("moments at the two endpoints coincide")
    slope = (p1.psi_star - p0.psi_star) / (p1.eta - p0.eta)
    eta_mix = path.moment(slope)
    return (p1.eta - eta_mix) / (p1.eta - p0.eta), slope


def chernoff_point(path: LrePath) -> ChernoffResult:
    """Minimize ``C(beta)`` over (0, 1).

    ``C'(beta) = eta(beta) - (log Z1 - log Z0)`` is increasing, so the minimizer
    is the root of a monotone map, found by safeguarded Newton from 0.5.
    """
    path._require_nondegenerate()
    lo, hi = CHERNOFF_BRACKET
    target = path.log_ratio
    g_lo, g_hi = path.moment(lo) - target, path.moment(hi) - target
    if g_lo >= 0 or g_hi <= 0:
        raise BoundaryError(
            f"Chernoff point pinned to a boundary: C'({lo})={g_lo!r}, C'({hi})={g_hi!r}"
        )

    def fn(b):
        pt = path.point(b)
        return pt.eta, pt.fisher

    beta = solve_monotone(fn, target, lo, hi, x0=0.5, tol=CHERNOFF_TOL)
    return ChernoffResult(
        beta_star=beta,
        chernoff_info=-chernoff_log_partition(path, beta),
        kl_to_base=path.kl_between(beta, 0.0),
        kl_to_target=path.kl_between(beta, 1.0),
    )


def binary_entropy(alpha: float) -> float:
    """``H(alpha)`` in nats."""
    if alpha in (0.0, 1.0):
        return 0.0
    return -alpha * math.log(alpha) - (1.0 - alpha) * math.log(1.0 - alpha)


def alpha_skew_jsd(p: Density, q: Density, alpha: float) -> float:
    """``(1-a) KL[p || m] + a KL[q || m]`` with ``m = (1-a) p + a q``.

    Both densities are normalized internally.  Finite and grid backends are
    exact (trapezoid masses for grids); 1-D Gaussians use adaptive quadrature.
    """
    if not 0.0 < alpha < 1.0:
        raise DomainError(f"alpha must lie in (0, 1), got {alpha!r}")
    _check_same_backend(p, q)
    if isinstance(p, GaussianDensity):
        return _gaussian_skew_jsd(normalized(p), normalized(q), alpha)
    lp = p.log_masses() - logsumexp(p.log_masses())
    lq = q.log_masses() - logsumexp(q.log_masses())
    pp, qq = np.exp(lp), np.exp(lq)
    m = (1.0 - alpha) * pp + alpha * qq
    return float((1.0 - alpha) * rel_entr(pp, m).sum() + alpha * rel_entr(qq, m).sum())


def _gaussian_skew_jsd(p: GaussianDensity, q: GaussianDensity, alpha: float) -> float:
    if p.dim != 1:
        raise DomainError("alpha-skew JSD for Gaussians is only available in one dimension")
    la, lb = math.log1p(-alpha), math.log(alpha)

    def integrand(z):
        lp, lq = p.log_density(z), q.log_density(z)
        lm = np.logaddexp(la + lp, lb + lq)
        return (1.0 - alpha) * math.exp(lp) * (lp - lm) + alpha * math.exp(lq) * (lq - lm)

    sd = math.sqrt(max(p.var[0], q.var[0]))
    lo = min(p.mean[0], q.mean[0]) - 40 * sd
    hi = max(p.mean[0], q.mean[0]) + 40 * sd
    pts = sorted({float(p.mean[0]), float(q.mean[0])})
    value, _ = integrate.quad(integrand, lo, hi, points=pts, limit=400, epsabs=1e-13, epsrel=1e-12)
    return value
