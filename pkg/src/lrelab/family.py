"""Likelihood-ratio exponential family between a base and a target density.

The family is ``pi_beta ∝ pi0^(1-beta) * pi1^beta`` with sufficient statistic
``phi = log pi1 / pi0``.  :class:`LrePath` exposes the log-partition ``psi``,
the moment map ``eta = psi'``, the Fisher information ``psi''``, the convex
conjugate ``psi*`` and the Bregman divergences of both potentials.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import logsumexp

from .density import (
    Density,
    GaussianDensity,
    Quadratic,
    _check_same_backend,
    gaussian_mixture_params,
    geometric_mixture,
    mix_logs,
    normalized,
)
from .errors import DegeneratePathError, DomainError, RangeError

__all__ = ["BetaPoint", "LrePath", "solve_monotone", "DUALITY_TOL", "ROOT_TOL"]

DUALITY_TOL = 1e-9
ROOT_TOL = 1e-10


@dataclass(frozen=True)
class BetaPoint:
    beta: float
    eta: float
    psi: float
    fisher: float

    @property
    def psi_star(self) -> float:
        return self.beta * self.eta - self.psi

    CSV_HEADER = ("beta", "eta", "psi", "psi_star", "fisher")

    def as_row(self) -> dict:
        return {
            "beta": self.beta,
            "eta": self.eta,
            "psi": self.psi,
            "psi_star": self.psi_star,
            "fisher": self.fisher,
        }


def solve_monotone(fn, target, lo, hi, *, x0=None, tol=ROOT_TOL, max_iter=200):
    """Solve ``value(x) = target`` for a nondecreasing map on ``[lo, hi]``.

    ``fn(x)`` returns ``(value, derivative)``.  Newton steps are taken while they
    stay inside the current bracket; otherwise the bracket is bisected.  The
    caller guarantees ``value(lo) <= target <= value(hi)``.
    """
    x = 0.5 * (lo + hi) if x0 is None else min(max(x0, lo), hi)
    for _ in range(max_iter):
        value, slope = fn(x)
        g = value - target
        if abs(g) <= tol:
            return x
        if g < 0:
            lo = x
        else:
            hi = x
        step_ok = slope > 0 and math.isfinite(slope)
        x_new = x - g / slope if step_ok else None
        if x_new is None or not (lo < x_new < hi):
            x_new = 0.5 * (lo + hi)
        if hi - lo <= 4 * np.finfo(float).eps * max(1.0, abs(x)):
            return x_new
        x = x_new
    return x


class LrePath:
    """Geometric path between ``pi0`` and ``pi1`` as a one-parameter family.

    Parameters
    ----------
    pi0, pi1 : Density
        Base and target; unnormalized densities are fine.  Both must use the
        same backend and domain.
    beta_domain : tuple of float
        Interval searched when inverting the moment map.  ``psi`` itself is
        evaluated at any ``beta`` where the integral converges.
    """

    def __init__(self, pi0: Density, pi1: Density, beta_domain=(0.0, 1.0)):
        _check_same_backend(pi0, pi1)
        lo, hi = map(float, beta_domain)
        if not lo < hi:
            raise DomainError(f"beta_domain must be a nonempty interval, got {beta_domain!r}")
        self.pi0 = pi0
        self.pi1 = pi1
        self.beta_domain = (lo, hi)
        self.logZ0 = pi0.log_partition()
        self.logZ1 = pi1.log_partition()

        if isinstance(pi0, GaussianDensity):
            p0, p1 = 1.0 / pi0.var, 1.0 / pi1.var
            self._quad = Quadratic(
                -0.5 * (p1 - p0),
                pi1.mean * p1 - pi0.mean * p0,
                pi1.log_scale
                - pi0.log_scale
                - 0.5 * np.log(pi1.var / pi0.var).sum()
                - 0.5 * (pi1.mean**2 * p1 - pi0.mean**2 * p0).sum(),
            )
            self.degenerate = self._quad.is_constant
        else:
            self._lm0 = pi0.log_masses()
            self._lm1 = pi1.log_masses()
            with np.errstate(invalid="ignore"):
                phi = pi1.log_masses() - pi0.log_masses()
            self._phi = phi
            both = np.isfinite(self._lm0) & np.isfinite(self._lm1)
            either = np.isfinite(self._lm0) | np.isfinite(self._lm1)
            common = phi[both]
            self.degenerate = bool(
                np.array_equal(both, either)
                and common.size > 0
                and np.ptp(common) <= 1e-12 * (1.0 + np.abs(common).max())
            )

    def __repr__(self):
        return f"LrePath(backend={self.pi0.backend!r}, logZ0={self.logZ0:.6g}, logZ1={self.logZ1:.6g})"

    @property
    def backend(self) -> str:
        return self.pi0.backend

    @property
    def log_ratio(self) -> float:
        """``log Z1 - log Z0``: the quantity thermodynamic integration targets."""
        return self.logZ1 - self.logZ0

    def suff_stat(self, z):
        """``log pi1(z) - log pi0(z)``; +-inf where exactly one endpoint vanishes."""
        l0 = np.asarray(self.pi0.log_density(z), dtype=float)
        l1 = np.asarray(self.pi1.log_density(z), dtype=float)
        if np.any(np.isneginf(l0) & np.isneginf(l1)):
            raise DomainError(f"both endpoints have zero mass at {z!r}")
        with np.errstate(invalid="ignore"):
            out = l1 - l0
        return float(out) if out.ndim == 0 else out

    def point(self, beta: float) -> BetaPoint:
        """``psi``, ``eta`` and Fisher information at ``beta`` in one pass."""
        beta = float(beta)
        if isinstance(self.pi0, GaussianDensity):
            mean, var, log_z = gaussian_mixture_params(self.pi0, self.pi1, beta)
            return BetaPoint(
                beta,
                self._quad.gaussian_mean(mean, var),
                log_z,
                self._quad.gaussian_var(mean, var),
            )
        lw = mix_logs(self._lm0, self._lm1, beta)
        if np.all(np.isneginf(lw)):
            raise DomainError(f"geometric mixture has zero mass at beta={beta!r}")
        psi = float(logsumexp(lw))
        p = np.exp(lw - psi)
        pos = p > 0
        phi = self._phi[pos]
        if not np.all(np.isfinite(phi)):
            raise DomainError(f"moment diverges at beta={beta!r} (supports differ)")
        p = p[pos]
        eta = float(p @ phi)
        fisher = float(p @ (phi - eta) ** 2)
        return BetaPoint(beta, eta, psi, fisher)

    def log_partition(self, beta: float) -> float:
        return self.point(beta).psi

    def moment(self, beta: float) -> float:
        return self.point(beta).eta

    def fisher_info(self, beta: float) -> float:
        return self.point(beta).fisher

    def intermediate(self, beta: float) -> Density:
        return normalized(geometric_mixture(self.pi0, self.pi1, beta))

    def moment_range(self) -> tuple[float, float]:
        lo, hi = self.beta_domain
        return self.moment(lo), self.moment(hi)

    def _require_nondegenerate(self) -> None:
        if self.degenerate:
            raise DegeneratePathError("sufficient statistic is constant; psi is affine")

    def beta_at_moment(self, eta: float, *, tol: float = ROOT_TOL, x0=None) -> float:
        """Invert the moment map on ``beta_domain``."""
        self._require_nondegenerate()
        lo, hi = self.beta_domain
        e_lo, e_hi = self.moment_range()
        if eta < e_lo - tol or eta > e_hi + tol:
            raise RangeError(
                f"eta={eta!r} outside attainable range [{e_lo!r}, {e_hi!r}]", e_lo, e_hi
            )
        if abs(eta - e_lo) <= tol:
            return lo
        if abs(eta - e_hi) <= tol:
            return hi

        def fn(b):
            pt = self.point(b)
            return pt.eta, pt.fisher

        return solve_monotone(fn, eta, lo, hi, x0=x0, tol=tol)

    def conjugate(self, eta: float) -> tuple[float, float]:
        """Return ``(psi_star(eta), beta)`` where ``beta`` solves ``eta(beta) = eta``.

        For a normalized base, ``psi_star`` is ``KL[pi_beta || pi0]``; in general
        it is that KL minus ``log Z0``.
        """
        beta = self.beta_at_moment(eta)
        return beta * eta - self.log_partition(beta), beta

    def legendre_residual(self, beta: float) -> float:
        pt = self.point(beta)
        psi_star, _ = self.conjugate(pt.eta)
        return pt.psi + psi_star - beta * pt.eta

    def bregman_psi(self, beta_a: float, beta_b: float) -> float:
        """``psi(a) - psi(b) - (a - b) eta(b)``, equal to ``KL[pi_b || pi_a]``."""
        pb = self.point(beta_b)
        return self.log_partition(beta_a) - pb.psi - (beta_a - beta_b) * pb.eta

    def bregman_psi_star(self, eta_a: float, eta_b: float) -> float:
        """``psi*(a) - psi*(b) - (a - b) beta(b)``, equal to ``KL[pi_a || pi_b]``."""
        ps_a, _ = self.conjugate(eta_a)
        ps_b, beta_b = self.conjugate(eta_b)
        return ps_a - ps_b - (eta_a - eta_b) * beta_b

    def kl_between(self, beta_from: float, beta_to: float) -> float:
        """``KL[pi_{beta_from} || pi_{beta_to}]`` from the normalized log-densities.

        Computed directly from the two members, not through ``psi``, so it serves
        as a cross-check on the Bregman identities.
        """
        if isinstance(self.pi0, GaussianDensity):
            m_f, v_f, _ = gaussian_mixture_params(self.pi0, self.pi1, beta_from)
            m_t, v_t, _ = gaussian_mixture_params(self.pi0, self.pi1, beta_to)
            return float(0.5 * (v_f / v_t + (m_t - m_f) ** 2 / v_t - 1 + np.log(v_t / v_f)).sum())
        lf = mix_logs(self._lm0, self._lm1, float(beta_from))
        lt = mix_logs(self._lm0, self._lm1, float(beta_to))
        lf = lf - logsumexp(lf)
        lt = lt - logsumexp(lt)
        pf = np.exp(lf)
        pos = pf > 0
        if np.any(np.isneginf(lt[pos])):
            return math.inf
        return float(pf[pos] @ (lf[pos] - lt[pos]))

