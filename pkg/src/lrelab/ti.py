"""Thermodynamic integration along the geometric path.

Left and right Riemann sums of ``eta(beta)`` over a schedule bracket
``log Z1 - log Z0`` because ``eta`` is nondecreasing; the gap between them
splits into one symmetrized KL per interval.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .errors import DomainError
from .family import LrePath

__all__ = [
    "BetaSchedule",
    "TiReport",
    "make_schedule",
    "refine",
    "ti_bounds",
    "gap_decomposition",
    "chernoff_on_integrand",
    "DEFAULT_EPS",
]

DEFAULT_EPS = 0.025
SCHEDULE_KINDS = ("uniform", "log_uniform", "moment_spaced")


@dataclass(frozen=True)
class BetaSchedule:
    betas: tuple
    kind: str = "custom"

    def __post_init__(self):
        b = tuple(float(x) for x in self.betas)
        if len(b) < 2:
            raise DomainError("a schedule needs at least two points")
        if b[0] != 0.0 or b[-1] != 1.0:
            raise DomainError(f"schedule must start at 0 and end at 1, got {b[0]}..{b[-1]}")
        if any(y <= x for x, y in zip(b, b[1:])):
            raise DomainError("schedule must be strictly increasing")
        object.__setattr__(self, "betas", b)

    @property
    def K(self) -> int:
        return len(self.betas) - 1

    def __len__(self):
        return len(self.betas)


def make_schedule(kind: str, K: int, path: LrePath | None = None, eps: float = DEFAULT_EPS) -> BetaSchedule:
    """Build a schedule with ``K`` intervals.

    ``uniform`` spaces points evenly.  ``log_uniform`` puts ``K+1`` points
    geometrically on ``[eps, 1]`` and replaces the first by 0.
    ``moment_spaced`` picks ``beta_t`` so that ``eta`` rises in equal steps
    from ``eta(0)`` to ``eta(1)`` and needs ``path``.
    """
    kind = kind.replace("-", "_")
    if K < 1:
        raise DomainError(f"K must be at least 1, got {K}")
    if kind == "uniform":
        betas = np.linspace(0.0, 1.0, K + 1)
    elif kind == "log_uniform":
        if not 0.0 < eps < 0.5:
            raise DomainError(f"eps must lie in (0, 0.5), got {eps!r}")
        betas = np.geomspace(eps, 1.0, K + 1)
        betas[0] = 0.0
    elif kind in ("moment_spaced", "moment"):
        if path is None:
            raise DomainError("moment_spaced schedules need a path")
        path._require_nondegenerate()
        e0, e1 = path.moment(0.0), path.moment(1.0)
        betas = [0.0]
        for t in range(1, K):
            betas.append(path.beta_at_moment(e0 + (t / K) * (e1 - e0), x0=t / K))
        betas.append(1.0)
        kind = "moment_spaced"
    else:
        raise DomainError(f"unknown schedule kind {kind!r}; expected one of {SCHEDULE_KINDS}")
    betas = np.asarray(betas, dtype=float)
    betas[-1] = 1.0
    return BetaSchedule(tuple(betas), kind)


def refine(sched: BetaSchedule, beta: float) -> BetaSchedule:
    """Schedule with ``beta`` inserted (no-op if already present)."""
    if beta in sched.betas:
        return sched
    return BetaSchedule(tuple(sorted(sched.betas + (float(beta),))), "custom")


@dataclass(frozen=True)
class TiReport:
    lower: float
    upper: float
    true_logratio: float
    betas: tuple
    etas: tuple
    per_interval_kls: tuple = field(default=())

    @property
    def gap(self) -> float:
        return self.upper - self.lower

    def to_dict(self) -> dict:
        return {
            "lower": self.lower,
            "upper": self.upper,
            "true_logratio": self.true_logratio,
            "gap": self.gap,
            "per_interval_kls": [list(kl) for kl in self.per_interval_kls],
        }

    def integrand_rows(self) -> list[dict]:
        return [{"beta_t": b, "eta_t": e} for b, e in zip(self.betas, self.etas)]


def ti_bounds(path: LrePath, sched: BetaSchedule | Sequence[float]) -> TiReport:
    if not isinstance(sched, BetaSchedule):
        sched = BetaSchedule(tuple(sched))
    betas = np.asarray(sched.betas)
    etas = np.array([path.moment(b) for b in betas])
    widths = np.diff(betas)
    kls = tuple(
        (path.kl_between(a, b), path.kl_between(b, a)) for a, b in zip(betas[:-1], betas[1:])
    )
    return TiReport(
        lower=float(widths @ etas[:-1]),
        upper=float(widths @ etas[1:]),
        true_logratio=path.log_ratio,
        betas=tuple(betas.tolist()),
        etas=tuple(etas.tolist()),
        per_interval_kls=kls,
    )


def gap_decomposition(path: LrePath, sched: BetaSchedule | Sequence[float]) -> list[float]:
    """Per-interval ``KL[pi_t || pi_t+1] + KL[pi_t+1 || pi_t]``; sums to ``upper - lower``."""
    return [fwd + rev for fwd, rev in ti_bounds(path, sched).per_interval_kls]


def chernoff_on_integrand(path: LrePath) -> tuple[float, float]:
    """Point where the integrand crosses ``log Z1 - log Z0``.

    Returns ``(beta_star, eta_star)``; before ``beta_star`` the integrand
    under-estimates the log ratio, after it over-estimates.
    """
    eta_star = path.log_ratio
    return path.beta_at_moment(eta_star, x0=0.5, tol=1e-12), eta_star
