"""Likelihood-ratio tests, Sanov exponents, and Bennett's acceptance ratio.

Orientation
-----------
Everything here uses the log-ratio ``w = log pi1 / pi0``.  For BAR the
classifier posteriors are

    P(f | w) = sigmoid(dF - w + log(n_f / n_r))
    P(r | w) = sigmoid(w - dF - log(n_f / n_r))

with ``dF = log Z1 - log Z0``.  The thermodynamic convention works with the
work ``W = -w`` and free energy ``-dF``; both flips cancel inside the
sigmoid, so estimates agree with that convention up to the sign of ``dF``.
"""
from __future__ import annotations

import csv
import io
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np
from scipy.optimize import brentq
from scipy.special import expit, log_expit

from .density import SampleBatch, sample
from .errors import ConvergenceError, DomainError, RangeError, SchemaError
from .family import LrePath, solve_monotone

__all__ = [
    "LRTest",
    "WorkSamples",
    "BarResult",
    "np_decide",
    "sanov_exponents",
    "variational_solution",
    "mc_error_rates",
    "bar_log_likelihood",
    "bar_score",
    "bar_estimate",
]


@dataclass(frozen=True)
class LRTest:
    threshold_eta: float
    n: int

    def __post_init__(self):
        if self.n < 1:
            raise DomainError(f"test sample count must be at least 1, got {self.n}")


def np_decide(test: LRTest, batch: SampleBatch, path: LrePath) -> bool:
    """Accept H1 iff the mean normalized log-ratio reaches the threshold.

    A tie accepts H1.
    """
    if len(batch) == 0:
        raise DomainError("cannot decide on an empty batch")
    phi = np.asarray(path.suff_stat(batch.points), dtype=float) - path.log_ratio
    return bool(phi.mean() >= test.threshold_eta)


def sanov_exponents(path: LrePath, threshold_eta: float) -> tuple[float, float, float]:
    """Asymptotic type-1 and type-2 error exponents of the threshold test.

    The I-projection of either endpoint onto ``{r : E_r[phi] = threshold}``
    is the family member whose moment equals the threshold.  Returns
    ``(e1, e2, beta)`` with ``e1 = KL[pi_beta || pi0]`` and
    ``e2 = KL[pi_beta || pi1]``.
    """
    shift = path.log_ratio
    try:
        beta = path.beta_at_moment(threshold_eta + shift)
    except RangeError as exc:
        raise RangeError(
            f"threshold {threshold_eta!r} outside attainable range "
            f"[{exc.low - shift!r}, {exc.high - shift!r}]",
            exc.low - shift,
            exc.high - shift,
        ) from None
    return path.kl_between(beta, 0.0), path.kl_between(beta, 1.0), beta


def variational_solution(path: LrePath, rate_R: float) -> tuple[float, float, float]:
    """Best type-2 exponent subject to a type-1 exponent of ``rate_R``.

    Returns ``(beta, e2, lam)`` where ``KL[pi_beta || pi0] = rate_R``,
    ``e2 = KL[pi_beta || pi1]`` and ``lam = (1 - beta) / beta`` is the
    Lagrange multiplier on the rate constraint (infinite at ``beta = 0``).
    """
    path._require_nondegenerate()
    kl_max = path.kl_between(1.0, 0.0)
    if rate_R < 0 or rate_R > kl_max + 1e-12:
        raise RangeError(f"rate {rate_R!r} outside [0, {kl_max!r}]", 0.0, kl_max)
    if rate_R == 0:
        beta = 0.0
    elif rate_R >= kl_max:
        beta = 1.0
    else:
        # d/dbeta KL[pi_beta || pi0] = beta * Var_beta[phi]
        def fn(b):
            return path.kl_between(b, 0.0), b * path.fisher_info(b)

        beta = solve_monotone(fn, rate_R, 0.0, 1.0, tol=1e-14)
    lam = math.inf if beta == 0 else (1.0 - beta) / beta
    return beta, path.kl_between(beta, 1.0), lam


def _workers() -> int:
    try:
        return max(1, int(os.environ.get("LRELAB_THREADS", "1")))
    except ValueError:
        return 1


def mc_error_rates(
    path: LrePath, test: LRTest, trials: int, seed: int, workers: int | None = None
) -> tuple[float, float]:
    """Empirical type-1 and type-2 error rates over ``trials`` batches per hypothesis.

    Each trial draws its own ``n``-sample batch from a seed derived from
    ``(seed, hypothesis, trial)``, so the result does not depend on
    ``workers``.
    """
    if trials < 1:
        raise DomainError(f"trials must be at least 1, got {trials}")
    workers = workers or _workers()
    pi0, pi1 = path.intermediate(0.0), path.intermediate(1.0)

    def count(d, side):
        seeds = np.random.SeedSequence([seed, side]).generate_state(trials, np.uint64)

        def accepts_h1(s):
            return np_decide(test, sample(d, test.n, int(s)), path)

        if workers == 1:
            return sum(map(accepts_h1, seeds))
        with ThreadPoolExecutor(workers) as pool:
            return sum(pool.map(accepts_h1, seeds))

    type1 = count(pi0, 0) / trials
    type2 = (trials - count(pi1, 1)) / trials
    return type1, type2


@dataclass(frozen=True)
class WorkSamples:
    """Log-ratio draws: ``forward`` from pi0, ``reverse`` from pi1."""

    forward: np.ndarray
    reverse: np.ndarray

    def __post_init__(self):
        f = np.asarray(self.forward, dtype=float).reshape(-1)
        r = np.asarray(self.reverse, dtype=float).reshape(-1)
        if f.size + r.size < 2:
            raise DomainError("need at least two work values in total")
        if not (np.all(np.isfinite(f)) and np.all(np.isfinite(r))):
            raise DomainError("work values must be finite")
        object.__setattr__(self, "forward", f)
        object.__setattr__(self, "reverse", r)

    @property
    def n_f(self) -> int:
        return self.forward.size

    @property
    def n_r(self) -> int:
        return self.reverse.size

    @classmethod
    def from_path(cls, path: LrePath, n_f: int, n_r: int, seed: int) -> "WorkSamples":
        ss = np.random.SeedSequence(seed).generate_state(2, np.uint64)
        fwd = sample(path.intermediate(0.0), n_f, int(ss[0])).points
        rev = sample(path.intermediate(1.0), n_r, int(ss[1])).points
        return cls(path.suff_stat(fwd), path.suff_stat(rev))

    def to_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(["direction", "w"])
        writer.writerows(("f", f"{w:.17g}") for w in self.forward)
        writer.writerows(("r", f"{w:.17g}") for w in self.reverse)
        return buf.getvalue()

    @classmethod
    def from_csv(cls, text: str) -> "WorkSamples":
        rows = list(csv.DictReader(io.StringIO(text)))
        if not rows or set(rows[0]) != {"direction", "w"}:
            raise SchemaError("work CSV needs exactly the columns direction,w")
        fwd, rev = [], []
        for i, row in enumerate(rows, start=2):
            try:
                w = float(row["w"])
            except (TypeError, ValueError):
                raise SchemaError(f"line {i}: w={row['w']!r} is not a number") from None
            if row["direction"] == "f":
                fwd.append(w)
            elif row["direction"] == "r":
                rev.append(w)
            else:
                raise SchemaError(f"line {i}: direction must be 'f' or 'r', got {row['direction']!r}")
        return cls(np.array(fwd), np.array(rev))


@dataclass(frozen=True)
class BarResult:
    delta_f_hat: float
    score_residual: float
    stderr_est: float

    def to_dict(self) -> dict:
        return {
            "delta_f_hat": self.delta_f_hat,
            "score_residual": self.score_residual,
            "stderr_est": self.stderr_est,
        }


def _require_both_sides(samples: WorkSamples) -> None:
    if samples.n_f < 1 or samples.n_r < 1:
        raise DomainError("BAR needs at least one forward and one reverse sample")


def bar_log_likelihood(samples: WorkSamples, delta_f: float) -> float:
    """Log-likelihood that each draw is labelled with its true direction."""
    _require_both_sides(samples)
    m = math.log(samples.n_f / samples.n_r)
    return float(
        log_expit(delta_f - samples.forward + m).sum()
        + log_expit(samples.reverse - delta_f - m).sum()
    )


def bar_score(samples: WorkSamples, delta_f: float) -> float:
    """Derivative of the log-likelihood: ``sum_f P(r|w) - sum_r P(f|w)``.

    Strictly decreasing in ``delta_f``; zero where the expected numbers of
    misclassified forward and reverse draws are equal.
    """
    m = math.log(samples.n_f / samples.n_r)
    return float(
        expit(samples.forward - delta_f - m).sum() - expit(delta_f - samples.reverse + m).sum()
    )


def _observed_information(samples: WorkSamples, delta_f: float) -> float:
    m = math.log(samples.n_f / samples.n_r)
    pf = expit(samples.forward - delta_f - m)
    pr = expit(delta_f - samples.reverse + m)
    return float((pf * (1 - pf)).sum() + (pr * (1 - pr)).sum())


def bar_estimate(samples: WorkSamples, max_expand: int = 60) -> BarResult:
    """Maximum-likelihood ``log Z1 - log Z0`` from forward and reverse log-ratios."""
    _require_both_sides(samples)
    m = math.log(samples.n_f / samples.n_r)
    pooled = np.concatenate([samples.forward, samples.reverse])
    lo, hi = pooled.min() - abs(m) - 1.0, pooled.max() + abs(m) + 1.0
    width = hi - lo
    for _ in range(max_expand):
        if bar_score(samples, lo) > 0 > bar_score(samples, hi):
            break
        lo, hi, width = lo - width, hi + width, 2 * width
    else:
        raise ConvergenceError("BAR score has no sign change; samples are degenerate")

    est = brentq(lambda x: bar_score(samples, x), lo, hi, xtol=1e-15, rtol=4 * np.finfo(float).eps)
    info = _observed_information(samples, est)
    # one Newton polish to bring the score residual down to rounding level
    polished = est + bar_score(samples, est) / info
    if abs(bar_score(samples, polished)) < abs(bar_score(samples, est)):
        est = polished
        info = _observed_information(samples, est)
    return BarResult(est, bar_score(samples, est), 1.0 / math.sqrt(info))
