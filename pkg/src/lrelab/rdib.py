"""Rate-distortion, information bottleneck and the two-multiplier RDC surface.

All solvers work on finite alphabets.  The optimal encoder for multipliers
``(beta_d, beta_c)`` and marginal ``m`` is

    q(z|x) = m(z) exp(-beta_d d(x,z) - beta_c c(x,z) - psi(x))

and Blahut-Arimoto alternates this update with ``m(z) = sum_x q(x) q(z|x)``.
"""
from __future__ import annotations

import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from itertools import product
from typing import Sequence

import numpy as np
from scipy.special import logsumexp, rel_entr

from .density import FiniteDensity
from .errors import ConvergenceError, DomainError, SchemaError
from .family import LrePath
from .hyptest import _workers

__all__ = [
    "RDProblem",
    "RDCSolution",
    "encoder_update",
    "ba_solve",
    "rd_curve",
    "solve_beta_for_D",
    "ib_distortion_from_classifier",
    "rdc_surface",
    "symbol_path",
    "legendre_objective",
]

BA_TOL = 1e-10
BA_MAX_ITER = 100_000


def _prob_vector(v, name: str) -> np.ndarray:
    v = np.asarray(v, dtype=float).reshape(-1)
    if v.size == 0 or np.any(v < 0) or not np.all(np.isfinite(v)):
        raise DomainError(f"{name} must be a nonempty nonnegative vector")
    if abs(v.sum() - 1.0) > 1e-12:
        raise DomainError(f"{name} must sum to 1, sums to {v.sum()!r}")
    return v


@dataclass(frozen=True, eq=False)
class RDProblem:
    """Source ``q(x)``, distortion ``d(x,z)``, optional classifier loss ``c(x,z)``.

    Passing ``m`` fixes the marginal; otherwise Blahut-Arimoto adapts it.
    """

    q: np.ndarray
    d: np.ndarray
    c: np.ndarray | None = None
    m: np.ndarray | None = None

    def __post_init__(self):
        q = _prob_vector(self.q, "source q")
        d = np.asarray(self.d, dtype=float)
        if d.ndim != 2 or d.shape[0] != q.size:
            raise DomainError(f"distortion must be |X|x|Z| with |X|={q.size}, got shape {d.shape}")
        if not np.all(np.isfinite(d)):
            raise DomainError("distortion entries must be finite")
        c = None
        if self.c is not None:
            c = np.asarray(self.c, dtype=float)
            if c.shape != d.shape:
                raise DomainError(f"classifier loss shape {c.shape} != distortion shape {d.shape}")
            if np.any(np.isnan(c)) or np.any(c < 0):
                raise DomainError("classifier loss entries must be nonnegative")
        m = None
        if self.m is not None:
            m = _prob_vector(self.m, "marginal m")
            if m.size != d.shape[1]:
                raise DomainError(f"marginal has {m.size} entries, codebook has {d.shape[1]}")
        object.__setattr__(self, "q", q)
        object.__setattr__(self, "d", d)
        object.__setattr__(self, "c", c)
        object.__setattr__(self, "m", m)

    @property
    def codebook_size(self) -> int:
        return self.d.shape[1]

    @property
    def marginal_mode(self) -> str:
        return "adaptive" if self.m is None else "fixed"

    def with_marginal(self, m) -> "RDProblem":
        return RDProblem(self.q, self.d, self.c, m)

    @classmethod
    def from_dict(cls, doc: dict) -> "RDProblem":
        if not isinstance(doc, dict):
            raise SchemaError("RD problem must be a JSON object")
        missing = {"q", "d"} - set(doc)
        if missing:
            raise SchemaError(f"RD problem is missing {sorted(missing)}")
        try:
            return cls(doc["q"], doc["d"], doc.get("c"), doc.get("m"))
        except (TypeError, ValueError) as exc:
            raise SchemaError(f"malformed RD problem: {exc}") from None

    def to_dict(self) -> dict:
        doc = {"q": self.q.tolist(), "d": self.d.tolist()}
        if self.c is not None:
            doc["c"] = self.c.tolist()
        if self.m is not None:
            doc["m"] = self.m.tolist()
        return doc


@dataclass(frozen=True, eq=False)
class RDCSolution:
    encoder: np.ndarray
    marginal: np.ndarray
    log_norm: np.ndarray
    beta_d: float
    beta_c: float
    rate: float
    distortion: float
    classification: float
    free_energy: float
    first_law_residual: float
    iterations: int
    lagrangian_history: tuple = field(default=(), repr=False)

    @property
    def eta_d(self) -> float:
        return -self.distortion

    @property
    def eta_c(self) -> float:
        return -self.classification

    CSV_HEADER = ("beta_d", "beta_c", "eta_d", "eta_c", "R", "D", "C", "F", "residual")

    def as_row(self) -> dict:
        return {
            "beta_d": self.beta_d,
            "beta_c": self.beta_c,
            "eta_d": self.eta_d,
            "eta_c": self.eta_c,
            "R": self.rate,
            "D": self.distortion,
            "C": self.classification,
            "F": self.free_energy,
            "residual": self.first_law_residual,
        }


def _scaled(beta: float, table: np.ndarray | None) -> np.ndarray | float:
    if table is None or beta == 0:
        return 0.0
    return beta * table


def _expected(q, enc, table) -> float:
    if table is None:
        return 0.0
    with np.errstate(invalid="ignore"):
        terms = np.where(enc > 0, enc * table, 0.0)
    return float(q @ terms.sum(axis=1))


def _log_encoder(p: RDProblem, beta_d, beta_c, m):
    with np.errstate(divide="ignore"):
        log_m = np.log(np.asarray(m, dtype=float))
    logits = np.zeros_like(p.d) + log_m - _scaled(beta_d, p.d) - _scaled(beta_c, p.c)
    psi = logsumexp(logits, axis=1)
    if np.any(np.isneginf(psi)):
        bad = int(np.flatnonzero(np.isneginf(psi))[0])
        raise DomainError(f"encoder row x={bad} has no mass")
    return logits - psi[:, None], psi


def encoder_update(p: RDProblem, beta_d: float, beta_c: float, m) -> tuple[np.ndarray, np.ndarray]:
    """Optimal encoder for a fixed marginal.

    Returns ``(encoder, psi)``; ``psi[x]`` is the per-symbol log-normalizer.
    """
    if beta_d < 0 or beta_c < 0:
        raise DomainError(f"multipliers must be nonnegative, got ({beta_d!r}, {beta_c!r})")
    log_enc, psi = _log_encoder(p, beta_d, beta_c, m)
    return np.exp(log_enc), psi


def ba_solve(
    p: RDProblem,
    beta_d: float,
    beta_c: float = 0.0,
    *,
    tol: float | None = None,
    max_iter: int | None = None,
) -> RDCSolution:
    """Blahut-Arimoto for ``min R + beta_d D + beta_c C``.

    Iterates until the Lagrangian changes by less than ``tol``.  The
    Lagrangian after each encoder update equals the free energy
    ``-E_x psi(x)``; its trace is kept in ``lagrangian_history``.
    """
    if beta_d < 0 or beta_c < 0:
        raise DomainError(f"multipliers must be nonnegative, got ({beta_d!r}, {beta_c!r})")
    if p.c is None and beta_c != 0:
        raise DomainError("beta_c is nonzero but the problem has no classifier loss")
    tol = BA_TOL if tol is None else tol
    max_iter = BA_MAX_ITER if max_iter is None else max_iter
    fixed = p.m is not None
    m = p.m if fixed else np.full(p.codebook_size, 1.0 / p.codebook_size)
    history = []
    for it in range(1, max_iter + 1):
        log_enc, psi = _log_encoder(p, beta_d, beta_c, m)
        history.append(-float(p.q @ psi))
        if fixed or (it > 1 and abs(history[-2] - history[-1]) < tol):
            break
        m = p.q @ np.exp(log_enc)
    else:
        delta = abs(history[-2] - history[-1])
        raise ConvergenceError(
            f"Blahut-Arimoto did not converge in {max_iter} iterations (last change {delta:.3g})",
            residual=delta,
        )

    enc = np.exp(log_enc)
    # rate against the induced marginal, so the residual below also measures
    # how far m is from its own fixed point (zero in fixed mode)
    m_out = m if fixed else p.q @ enc
    rate = float(p.q @ rel_entr(enc, m_out[None, :]).sum(axis=1))
    dist = _expected(p.q, enc, p.d)
    cls = _expected(p.q, enc, p.c)
    free_energy = -float(p.q @ psi)
    residual = -free_energy + rate + beta_d * dist + beta_c * cls
    return RDCSolution(
        encoder=enc,
        marginal=np.asarray(m, dtype=float),
        log_norm=psi,
        beta_d=float(beta_d),
        beta_c=float(beta_c),
        rate=max(rate, 0.0),
        distortion=dist,
        classification=cls,
        free_energy=free_energy,
        first_law_residual=residual,
        iterations=it,
        lagrangian_history=tuple(history),
    )


def _map(fn, items, workers):
    workers = workers or _workers()
    if workers == 1:
        return list(map(fn, items))
    with ThreadPoolExecutor(workers) as pool:
        return list(pool.map(fn, items))


def rd_curve(p: RDProblem, beta_grid: Sequence[float], workers: int | None = None) -> list[tuple]:
    """``(beta, R, D)`` for each multiplier, sorted by distortion."""
    sols = _map(lambda b: ba_solve(p, b, 0.0), list(beta_grid), workers)
    pts = [(s.beta_d, s.rate, s.distortion) for s in sols]
    return sorted(pts, key=lambda t: (t[2], -t[0]))


def solve_beta_for_D(p: RDProblem, target_D: float, hi: float = 64.0, tol: float = 1e-10) -> float:
    """Bisect for the multiplier whose solution has distortion ``target_D``."""
    d_lo = ba_solve(p, 0.0).distortion
    d_hi = ba_solve(p, hi).distortion
    if not d_hi <= target_D <= d_lo:
        raise DomainError(f"distortion {target_D!r} outside reachable [{d_hi!r}, {d_lo!r}]")
    lo = 0.0
    while hi - lo > tol * max(1.0, hi):
        mid = 0.5 * (lo + hi)
        if ba_solve(p, mid).distortion > target_D:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def ib_distortion_from_classifier(p_y_given_x, p_y_given_z) -> np.ndarray:
    """Effective IB distortion ``c(x,z) = -sum_y q(y|x) log p(y|z)``.

    Entries where the decoder gives zero probability to a label of positive
    source probability are ``+inf``; a warning is emitted when that happens.
    """
    qyx = np.asarray(p_y_given_x, dtype=float)
    pyz = np.asarray(p_y_given_z, dtype=float)
    if qyx.ndim != 2 or pyz.ndim != 2 or qyx.shape[1] != pyz.shape[1]:
        raise DomainError("label tables must be |X|x|Y| and |Z|x|Y| with the same |Y|")
    for name, t in (("p(y|x)", qyx), ("p(y|z)", pyz)):
        if np.any(t < 0) or np.any(np.abs(t.sum(axis=1) - 1.0) > 1e-9):
            raise DomainError(f"rows of {name} must be probability vectors")
    with np.errstate(divide="ignore"):
        nll = -np.log(pyz)
    with np.errstate(invalid="ignore"):
        terms = np.where(qyx[:, None, :] > 0, qyx[:, None, :] * nll[None, :, :], 0.0)
    c = terms.sum(axis=2)
    if np.any(np.isinf(c)):
        warnings.warn("classifier assigns zero probability to an observed label; c has +inf entries")
    return c


def rdc_surface(
    p: RDProblem,
    betas_d: Sequence[float],
    betas_c: Sequence[float],
    workers: int | None = None,
) -> list[RDCSolution]:
    """One converged solution per lattice point, ``beta_d`` varying slowest."""
    grid = list(product(betas_d, betas_c))
    return _map(lambda bb: ba_solve(p, bb[0], bb[1]), grid, workers)


def symbol_path(p: RDProblem, x: int, m) -> LrePath:
    """The one-statistic family for source symbol ``x``: ``m(z)`` to ``m(z) exp(-d(x,z))``."""
    with np.errstate(divide="ignore"):
        log_m = np.log(np.asarray(m, dtype=float))
    return LrePath(FiniteDensity(log_m), FiniteDensity(log_m - p.d[x]), beta_domain=(0.0, 64.0))


def legendre_objective(p: RDProblem, m, beta_d: float, beta_c: float, D: float, C: float) -> float:
    """``-beta_d D - beta_c C - E_x psi(x; beta)`` at a fixed marginal.

    Maximized over the multipliers at the ones that produced ``(D, C)``, where
    it equals the rate.
    """
    _, psi = _log_encoder(p, beta_d, beta_c, m)
    return -beta_d * D - beta_c * C - float(p.q @ psi)
