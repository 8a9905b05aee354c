"""Acceptance criteria, one or more tests per criterion.

Test names start with ``test_cNN_``; a criterion passes only if all of its
tests pass.  The terminal summary (see ``conftest.py``) prints one
PASS/FAIL line per criterion.  Run on its own with

    pytest tests/test_acceptance.py -v
"""
import math

import numpy as np
import pytest
from scipy.optimize import minimize_scalar

from conftest import (
    bernoulli_path,
    enum_kl,
    enum_member,
    gauss_kl,
    gauss_path,
    grid_gauss_path,
    hamming_problem,
    path_weights,
    random_finite_path,
    random_gaussian_path,
    rdc_problem,
)
from lrelab import (
    GaussianDensity,
    LRTest,
    WorkSamples,
    ba_solve,
    bar_estimate,
    chernoff_point,
    gap_decomposition,
    jensen_gap_primal,
    make_schedule,
    mc_error_rates,
    renyi,
    rd_curve,
    rdc_surface,
    sanov_exponents,
    ti_bounds,
)
from lrelab.density import gaussian_mixture_params
from lrelab.divergence import binary_entropy
from lrelab.hyptest import bar_score
from lrelab.rdib import solve_beta_for_D

CRITERIA = {
    1: "Legendre duality residual",
    2: "conjugate equals KL to the base",
    3: "Bregman divergences equal reversed KL",
    4: "TI bracket, refinement and gap decomposition",
    5: "Chernoff point conditions",
    6: "Renyi divergence as a Jensen gap",
    7: "Bregman information minimizer",
    8: "binary rate-distortion function",
    9: "RDC first law and BA descent",
    10: "Sanov / Neyman-Pearson exponents",
    11: "Bennett acceptance ratio",
    12: "finite-difference gradient and curvature",
}

SEED = 20240611


def _finite_pool():
    rng = np.random.default_rng(SEED)
    return [random_finite_path(rng, max_atoms=16) for _ in range(20)]


def _gauss_pool():
    rng = np.random.default_rng(SEED + 1)
    return [random_gaussian_path(rng) for _ in range(5)]


FINITE = _finite_pool()
GAUSS = _gauss_pool()
ALL_PATHS = FINITE + GAUSS


def oracle_kl(path, b_from, b_to):
    """KL[pi_from || pi_to] by plain enumeration or the Gaussian closed form."""
    if isinstance(path.pi0, GaussianDensity):
        mf, vf, _ = gaussian_mixture_params(path.pi0, path.pi1, b_from)
        mt, vt, _ = gaussian_mixture_params(path.pi0, path.pi1, b_to)
        return float(sum(gauss_kl(a, b, c, d) for a, b, c, d in zip(mf, vf, mt, vt)))
    w0, w1 = path_weights(path)
    return enum_kl(enum_member(w0, w1, b_from), enum_member(w0, w1, b_to))


# ---------------------------------------------------------------- 1


def test_c01_legendre_residual():
    rng = np.random.default_rng(SEED + 10)
    worst = 0.0
    for path in ALL_PATHS:
        for beta in rng.uniform(0.0, 1.0, 50):
            worst = max(worst, abs(path.legendre_residual(beta)))
    print(f"max |psi + psi* - beta eta| = {worst:.3g}")
    assert worst <= 1e-9


# ---------------------------------------------------------------- 2


def test_c02_conjugate_is_kl():
    rng = np.random.default_rng(SEED + 20)
    worst = 0.0
    for path in ALL_PATHS:
        for beta in rng.uniform(0.0, 1.0, 10):
            psi_star, _ = path.conjugate(path.moment(beta))
            worst = max(worst, abs(psi_star - oracle_kl(path, beta, 0.0)))
    print(f"max |psi*(eta) - KL[pi_beta||pi0]| = {worst:.3g}")
    assert worst <= 1e-9


# ---------------------------------------------------------------- 3


def test_c03_bregman_equals_reversed_kl():
    rng = np.random.default_rng(SEED + 30)
    worst = 0.0
    for _ in range(100):
        path = ALL_PATHS[int(rng.integers(len(ALL_PATHS)))]
        b, b2 = rng.uniform(0.0, 1.0, 2)
        kl = oracle_kl(path, b2, b)
        d_psi = path.bregman_psi(b, b2)
        d_star = path.bregman_psi_star(path.moment(b2), path.moment(b))
        worst = max(worst, abs(d_psi - kl), abs(d_star - kl))
    print(f"max Bregman/KL mismatch = {worst:.3g}")
    assert worst <= 1e-9


# ---------------------------------------------------------------- 4

TI_PATHS = [bernoulli_path(), gauss_path(), gauss_path(mu=3.0, log_scale=1.2)] + [
    random_finite_path(np.random.default_rng(SEED + 40 + i), normalized_base=False) for i in range(5)
]


@pytest.mark.parametrize("kind", ["uniform", "log_uniform", "moment_spaced"])
def test_c04_ti_bracket_and_refinement(kind):
    for path in TI_PATHS:
        prev = None
        for K in (1, 2, 4, 8, 16):
            rep = ti_bounds(path, make_schedule(kind, K, path))
            assert rep.lower <= rep.true_logratio <= rep.upper
            if prev is not None:
                assert rep.lower >= prev.lower and rep.upper <= prev.upper
            prev = rep


@pytest.mark.parametrize("kind", ["uniform", "log_uniform", "moment_spaced"])
def test_c04_gap_equals_symmetrized_kl(kind):
    worst = 0.0
    for path in TI_PATHS:
        for K in (1, 2, 4, 8, 16):
            sched = make_schedule(kind, K, path)
            rep = ti_bounds(path, sched)
            b = sched.betas
            oracle = sum(oracle_kl(path, x, y) + oracle_kl(path, y, x) for x, y in zip(b[:-1], b[1:]))
            worst = max(worst, abs(rep.gap - oracle), abs(rep.gap - sum(gap_decomposition(path, sched))))
    print(f"max |gap - sum sym KL| = {worst:.3g}")
    assert worst <= 1e-9


# ---------------------------------------------------------------- 5


def test_c05_chernoff_conditions():
    for path in [bernoulli_path()] + ALL_PATHS:
        res = chernoff_point(path)
        b = res.beta_star
        assert abs(oracle_kl(path, b, 0.0) - oracle_kl(path, b, 1.0)) <= 1e-8
        assert abs(path.moment(b) - (path.log_partition(1.0) - path.log_partition(0.0))) <= 1e-8


def test_c05_gaussian_closed_form():
    res = chernoff_point(gauss_path())
    assert abs(res.beta_star - 0.5) <= 1e-8
    assert abs(res.chernoff_info - 0.5) <= 1e-8


# ---------------------------------------------------------------- 6


def test_c06_renyi_is_jensen_gap():
    rng = np.random.default_rng(SEED + 60)
    worst = 0.0
    for i in range(50):
        path = FINITE[i % len(FINITE)]
        alpha = rng.uniform(0.02, 0.98)
        b0, b1 = rng.uniform(0.0, 1.0, 2)
        # plain-probability Renyi between the two members
        w0, w1 = path_weights(path)
        p, q = enum_member(w0, w1, b1), enum_member(w0, w1, b0)
        d_alpha = math.log(np.sum(p**alpha * q ** (1 - alpha))) / (alpha - 1)
        worst = max(worst, abs((1 - alpha) * d_alpha - jensen_gap_primal(path, alpha, b0, b1)))
    print(f"max |(1-a) D_a - Jensen gap| = {worst:.3g}")
    assert worst <= 1e-9


def test_c06_scaled_renyi_concave():
    alphas = np.linspace(0.02, 0.98, 49)
    for path in FINITE[:10] + GAUSS:
        vals = np.array([(1 - a) * renyi(path, a) for a in alphas])
        assert np.max(np.diff(vals, 2)) <= 1e-9


def test_c06_max_gap_is_chernoff_information():
    for path in [bernoulli_path(), gauss_path()] + FINITE[:10] + GAUSS:
        best = minimize_scalar(
            lambda a: -jensen_gap_primal(path, a), bounds=(0.0, 1.0), method="bounded",
            options={"xatol": 1e-12},
        )
        assert abs(-best.fun - chernoff_point(path).chernoff_info) <= 1e-7


# ---------------------------------------------------------------- 7


def test_c07_bregman_information():
    rng = np.random.default_rng(SEED + 70)
    for i in range(20):
        path = ALL_PATHS[i % len(ALL_PATHS)]
        k = int(rng.integers(2, 6))
        betas = rng.uniform(0.0, 1.0, k)
        w = rng.dirichlet(np.ones(k))
        mean = float(w @ betas)

        def objective(s):
            # sum_i w_i D_psi[beta_i : s] = sum_i w_i KL[pi_s || pi_beta_i]
            return sum(wi * oracle_kl(path, s, bi) for wi, bi in zip(w, betas))

        at_mean = objective(mean)
        for s in np.clip(mean + rng.normal(0, 0.15, 10), 0.0, 1.0):
            assert at_mean <= objective(s)
        jensen = float(w @ [path.log_partition(b) for b in betas]) - path.log_partition(mean)
        assert abs(at_mean - jensen) <= 1e-9


# ---------------------------------------------------------------- 8


@pytest.mark.parametrize("D", [0.1, 0.25, 0.4])
def test_c08_binary_rate_distortion(D):
    p = hamming_problem()
    beta = solve_beta_for_D(p, D)
    sol = ba_solve(p, beta)
    exact = math.log(2) - binary_entropy(D)
    assert abs(sol.rate - exact) <= 1e-6
    (_, r1, d1), (_, r0, d0) = rd_curve(p, [beta - 0.01, beta + 0.01])
    slope = (r1 - r0) / (d1 - d0)
    target = -math.log((1 - D) / D)
    assert abs(slope - target) <= 0.02 * abs(target)


# ---------------------------------------------------------------- 9


def test_c09_rdc_first_law_and_descent():
    lattice = [0.0, 0.5, 1.0, 2.0, 4.0]
    sols = rdc_surface(rdc_problem(), lattice, lattice)
    assert len(sols) == 25
    worst = max(abs(s.first_law_residual) for s in sols)
    rises = max(float(np.max(np.diff(s.lagrangian_history), initial=0.0)) for s in sols)
    print(f"max first-law residual = {worst:.3g}; largest Lagrangian increase = {rises:.3g}")
    assert worst <= 1e-8
    assert rises <= 0.0


# ---------------------------------------------------------------- 10


def test_c10_empirical_type1_exponent():
    path = bernoulli_path()
    n, trials = 200, 5000
    e1, _, _ = sanov_exponents(path, 0.0)
    type1, _ = mc_error_rates(path, LRTest(0.0, n), trials, seed=SEED)
    emp = -math.log(type1) / n if type1 > 0 else math.inf
    print(f"type-1 rate = {type1}, empirical exponent = {emp}, KL exponent = {e1:.6f}")
    assert abs(emp - e1) <= 0.25 * e1


def test_c10_chernoff_threshold_exponents_agree():
    path = bernoulli_path()
    res = chernoff_point(path)
    e1, e2, _ = sanov_exponents(path, path.moment(res.beta_star) - path.log_ratio)
    assert abs(e1 - e2) <= 1e-8


# ---------------------------------------------------------------- 11


def test_c11_bar_equal_error_residual():
    s = WorkSamples.from_path(gauss_path(log_scale=1.7), 10_000, 10_000, seed=0)
    res = bar_estimate(s)
    assert abs(bar_score(s, res.delta_f_hat)) <= 1e-8


def test_c11_bar_coverage():
    path = gauss_path(log_scale=1.7)
    hits = 0
    for seed in range(20):
        res = bar_estimate(WorkSamples.from_path(path, 10_000, 10_000, seed))
        hits += abs(res.delta_f_hat - 1.7) <= 3 * res.stderr_est
    print(f"{hits}/20 estimates within 3 standard errors")
    assert hits >= 18


# ---------------------------------------------------------------- 12

FD_PATHS = [bernoulli_path(), gauss_path(), grid_gauss_path(n=801)] + FINITE[:8] + GAUSS


def test_c12_finite_differences():
    betas = np.linspace(0.05, 0.95, 20)
    h1, h2 = 1e-5, 1e-3
    worst1 = worst2 = 0.0
    for path in FD_PATHS:
        for b in betas:
            psi = path.log_partition
            d1 = (psi(b + h1) - psi(b - h1)) / (2 * h1)
            d2 = (psi(b + h2) - 2 * psi(b) + psi(b - h2)) / h2**2
            worst1 = max(worst1, abs(d1 - path.moment(b)))
            worst2 = max(worst2, abs(d2 - path.fisher_info(b)))
    print(f"max |dpsi - eta| = {worst1:.3g}; max |d2psi - fisher| = {worst2:.3g}")
    assert worst1 <= 1e-6
    assert worst2 <= 1e-4


if __name__ == "__main__":
    raise SystemExit(pytest.main([__file__, "-v"]))
