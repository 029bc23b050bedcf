import math

import mpmath
import numpy as np
import pytest
from scipy import integrate, optimize

from covertbeam import covert_metrics as cm
from covertbeam.exceptions import InvalidInputError

from helpers import crandn, detector_mc_oracle


def exp_pdf(t, lam):
    return math.exp(-t / lam) / lam


def kl_quad_oracle(lam0, lam1):
    """Numerical integration of the defining integral over the power domain.

    The log-density difference is expanded analytically so the integrand stays
    finite where the density underflows.
    """
    def integrand(t):
        log_diff = (-t / lam0 - math.log(lam0)) - (-t / lam1 - math.log(lam1))
        return exp_pdf(t, lam0) * log_diff

    val, err = integrate.quad(integrand, 0.0, np.inf, limit=200)
    assert err < 1e-7
    return val


def tv_quad_oracle(lam0, lam1):
    val, err = integrate.quad(
        lambda t: abs(exp_pdf(t, lam1) - exp_pdf(t, lam0)), 0.0, np.inf, limit=200)
    assert err < 1e-6
    return 0.5 * val


# ---------------------------------------------------------------------------
# rates
# ---------------------------------------------------------------------------


def test_rate_carol_h0_zero_beam():
    h = np.array([1.0 + 1j, 0.5])
    assert cm.rate_carol_h0(np.zeros(2), h, 1.0) == 0.0


def test_rate_carol_h0_unit_snr():
    # arrange |h_c^H w|^2 = sigma_c^2 -> exactly 1 bit
    h = np.array([2.0, 0.0], dtype=complex)
    w = np.array([0.5, 0.0], dtype=complex)
    assert abs(cm.rate_carol_h0(w, h, 1.0) - 1.0) < 1e-15


def test_rate_bob_zero_beam():
    h = np.array([1.0, 2.0], dtype=complex)
    assert cm.rate_bob(np.ones(2), np.zeros(2), h, 1.0) == 0.0


def test_rate_bob_two_bits():
    # h_b^H w_c1 = 0 and |h_b^H w_b|^2 = 3 sigma_b^2 -> log2(4) = 2 bits
    h_b = np.array([1.0, 0.0], dtype=complex)
    w_c1 = np.array([0.0, 1.0], dtype=complex)
    w_b = np.array([math.sqrt(3.0), 0.0], dtype=complex)
    assert abs(cm.rate_bob(w_c1, w_b, h_b, 1.0) - 2.0) < 1e-12


def test_rates_extended_precision_oracle():
    rng = np.random.default_rng(0)
    mpmath.mp.dps = 50
    for _ in range(25):
        h_c, h_b, w0, w1, wb = (crandn(rng, 4) for _ in range(5))
        s2 = float(rng.uniform(0.2, 3.0))

        def mp_rate(num_vec, den_vec=None):
            num = mpmath.mpf(abs(np.vdot(h_c, num_vec)) ** 2)
            den = mpmath.mpf(s2) + (abs(np.vdot(h_c, den_vec)) ** 2 if den_vec is not None else 0)
            return float(mpmath.log(1 + num / den) / mpmath.log(2))

        assert abs(cm.rate_carol_h0(w0, h_c, s2) - mp_rate(w0)) < 1e-12
        assert abs(cm.rate_carol_h1(w1, wb, h_c, s2) - mp_rate(w1, wb)) < 1e-12
        num = mpmath.mpf(abs(np.vdot(h_b, wb)) ** 2)
        den = mpmath.mpf(s2) + abs(np.vdot(h_b, w1)) ** 2
        want = float(mpmath.log(1 + num / den) / mpmath.log(2))
        assert abs(cm.rate_bob(w1, wb, h_b, s2) - want) < 1e-12


def test_rate_rejects_bad_noise():
    with pytest.raises(InvalidInputError):
        cm.rate_carol_h0(np.ones(2), np.ones(2), 0.0)


# ---------------------------------------------------------------------------
# lambdas
# ---------------------------------------------------------------------------


def test_lambdas_orthogonal_beams():
    h_w = np.array([1.0, 0.0], dtype=complex)
    perp = np.array([0.0, 1.0], dtype=complex)
    lp = cm.lambdas(perp, perp, perp, h_w, 2.0)
    assert lp.lambda0 == lp.lambda1 == 2.0


def test_lambdas_zf_structure_gives_equal_means():
    # w_b orthogonal to h_w and w_c1 = w_c0: perfect cover
    rng = np.random.default_rng(1)
    h_w = crandn(rng, 3)
    w_c0 = crandn(rng, 3)
    w_b = np.cross(h_w.conj(), np.array([1.0, 0, 0]))  # orthogonal to h_w
    assert abs(np.vdot(h_w, w_b)) < 1e-12
    lp = cm.lambdas(w_c0, w_c0, w_b, h_w, 1.0)
    assert abs(lp.lambda0 - lp.lambda1) < 1e-12


def test_lambdas_random_direct_evaluation():
    rng = np.random.default_rng(2)
    w0, w1, wb, h = (crandn(rng, 5) for _ in range(4))
    lp = cm.lambdas(w0, w1, wb, h, 0.7)
    assert abs(lp.lambda0 - (abs(np.vdot(h, w0)) ** 2 + 0.7)) < 1e-12
    assert abs(lp.lambda1 - (abs(np.vdot(h, w1)) ** 2 + abs(np.vdot(h, wb)) ** 2 + 0.7)) < 1e-12


def test_likelihood_params_validation():
    with pytest.raises(InvalidInputError):
        cm.LikelihoodParams(0.0, 1.0)


# ---------------------------------------------------------------------------
# KL divergences
# ---------------------------------------------------------------------------


def test_kl_zero_at_equal_means():
    lp = cm.LikelihoodParams(1.0, 1.0)
    assert cm.kl_01(lp) == 0.0
    assert cm.kl_10(lp) == 0.0


def test_kl_01_against_quadrature_oracle():
    lp = cm.LikelihoodParams(1.0, 2.0)
    oracle = kl_quad_oracle(1.0, 2.0)
    assert abs(oracle - (math.log(2.0) - 0.5)) < 1e-9  # frozen: 0.19314718...
    assert abs(cm.kl_01(lp) - oracle) < 1e-9

    lp = cm.LikelihoodParams(2.0, 1.0)
    oracle = kl_quad_oracle(2.0, 1.0)
    assert abs(oracle - (1.0 - math.log(2.0))) < 1e-9  # frozen: 0.30685281...
    assert abs(cm.kl_01(lp) - oracle) < 1e-9


def test_kl_swap_symmetry():
    rng = np.random.default_rng(3)
    for _ in range(100):
        a, b = rng.uniform(0.1, 10.0, 2)
        assert abs(cm.kl_01(cm.LikelihoodParams(a, b))
                   - cm.kl_10(cm.LikelihoodParams(b, a))) < 1e-14


def test_kl_nonnegative():
    rng = np.random.default_rng(4)
    for _ in range(200):
        lp = cm.LikelihoodParams(*np.exp(rng.uniform(-3, 3, 2)))
        assert cm.kl_01(lp) >= 0.0
        assert cm.kl_10(lp) >= 0.0


# ---------------------------------------------------------------------------
# KL ratio interval
# ---------------------------------------------------------------------------


def test_kl_interval_epsilon_zero():
    iv = cm.kl_interval(0.0)
    assert iv.a_bar == iv.b_bar == 1.0


def test_kl_interval_against_brentq_oracle():
    # Independent root finder; the 0.1 digits quoted alongside the defining
    # equation are confirmed here to be a_bar ~ 0.8240, b_bar ~ 1.2300.
    f = lambda x: math.log(x) + 1.0 / x - 1.0 - 0.02
    a_ref = optimize.brentq(f, 1e-9, 1.0, xtol=1e-15)
    b_ref = optimize.brentq(f, 1.0, 10.0, xtol=1e-15)
    iv = cm.kl_interval(0.1)
    assert abs(iv.a_bar - a_ref) < 1e-10
    assert abs(iv.b_bar - b_ref) < 1e-10
    assert abs(iv.a_bar - 0.826) < 3e-3
    assert abs(iv.b_bar - 1.230) < 3e-3


def test_kl_interval_defining_residual():
    for eps in (0.01, 0.05, 0.1, 0.3, 0.9):
        iv = cm.kl_interval(eps)
        target = 2.0 * eps * eps
        for x in (iv.a_bar, iv.b_bar):
            assert abs(math.log(x) + 1.0 / x - 1.0 - target) < 1e-10
        assert iv.a_bar <= 1.0 <= iv.b_bar


def test_kl_interval_equivalence_with_constraint():
    # ratio inside [a_bar, b_bar] <=> kl_01 <= 2 eps^2
    rng = np.random.default_rng(5)
    iv = cm.kl_interval(0.1)
    budget = 0.02
    for _ in range(500):
        ratio = float(np.exp(rng.uniform(-1.0, 1.0)))
        lp = cm.LikelihoodParams(1.0, ratio)
        inside = iv.a_bar <= ratio <= iv.b_bar
        assert inside == (cm.kl_01(lp) <= budget + 1e-12)


def test_kl_interval_rejects_negative():
    with pytest.raises(InvalidInputError):
        cm.kl_interval(-0.1)


# ---------------------------------------------------------------------------
# detector
# ---------------------------------------------------------------------------


def test_detector_degenerate_equal_means():
    det = cm.detector(cm.LikelihoodParams(1.0, 1.0))
    assert det.threshold == 1.0
    assert abs(det.p_fa - math.exp(-1.0)) < 1e-15
    assert abs(det.p_md - (1.0 - math.exp(-1.0))) < 1e-15
    assert det.xi == 1.0


def test_detector_frozen_one_two():
    det = cm.detector(cm.LikelihoodParams(1.0, 2.0))
    assert abs(det.threshold - 2.0 * math.log(2.0)) < 1e-14
    assert abs(det.p_fa - 0.25) < 1e-14
    assert abs(det.p_md - 0.5) < 1e-14
    assert abs(det.xi - 0.75) < 1e-14


def test_detector_monte_carlo_oracle_one_two():
    det = cm.detector(cm.LikelihoodParams(1.0, 2.0))
    rng = np.random.default_rng(123)
    p_fa, p_md = detector_mc_oracle(1.0, 2.0, det.threshold, 1_000_000, rng)
    se = 3.0 / math.sqrt(1_000_000)
    assert abs(p_fa - det.p_fa) < se
    assert abs(p_md - det.p_md) < se


def test_detector_extreme_ratio():
    det = cm.detector(cm.LikelihoodParams(1.0, 100.0))
    assert abs(det.p_fa - 100.0 ** (-100.0 / 99.0)) < 1e-14
    assert abs(det.p_md - (1.0 - 100.0 ** (-1.0 / 99.0))) < 1e-14
    assert abs(det.p_fa - 0.0095) < 2e-4
    assert abs(det.p_md - 0.0455) < 2e-4
    rng = np.random.default_rng(321)
    p_fa, p_md = detector_mc_oracle(1.0, 100.0, det.threshold, 1_000_000, rng)
    assert abs(p_fa - det.p_fa) < 3.0 * math.sqrt(det.p_fa * (1 - det.p_fa) / 1e6)
    assert abs(p_md - det.p_md) < 3.0 * math.sqrt(det.p_md * (1 - det.p_md) / 1e6)


def test_detector_swapped_means_keeps_xi_below_one():
    det = cm.detector(cm.LikelihoodParams(2.0, 1.0))
    # mirror of the (1, 2) case: decision regions swap sides
    assert abs(det.xi - 0.75) < 1e-14
    assert abs(det.p_fa - 0.5) < 1e-14
    assert abs(det.p_md - 0.25) < 1e-14
    rng = np.random.default_rng(11)
    p_fa, p_md = detector_mc_oracle(2.0, 1.0, det.threshold, 500_000, rng)
    assert abs(p_fa - det.p_fa) < 3.0 / math.sqrt(500_000) + 1e-3
    assert abs(p_md - det.p_md) < 3.0 / math.sqrt(500_000) + 1e-3


def test_detector_no_overflow_at_extreme_ratios():
    for ratio in (1e-3, 1e3):
        det = cm.detector(cm.LikelihoodParams(1.0, ratio))
        assert 0.0 <= det.p_fa <= 1.0 and 0.0 <= det.p_md <= 1.0
        assert 0.0 <= det.xi <= 1.0 + 1e-12


def test_xi_monotone_in_log_ratio_divergence():
    # distinguishability grows with |ln ratio|: xi non-increasing on each side
    grid = np.exp(np.linspace(0.0, 5.0, 40))
    xis = [cm.detector(cm.LikelihoodParams(1.0, r)).xi for r in grid]
    assert all(b <= a + 1e-12 for a, b in zip(xis, xis[1:]))
    xis_dn = [cm.detector(cm.LikelihoodParams(1.0, 1.0 / r)).xi for r in grid]
    assert all(b <= a + 1e-12 for a, b in zip(xis_dn, xis_dn[1:]))


# ---------------------------------------------------------------------------
# total variation and Pinsker
# ---------------------------------------------------------------------------


def test_tv_zero_at_equal_means():
    assert cm.total_variation(cm.LikelihoodParams(3.0, 3.0)) == 0.0


def test_tv_against_quadrature_oracle():
    assert abs(cm.total_variation(cm.LikelihoodParams(1.0, 2.0)) - 0.25) < 1e-12
    for lam0, lam1 in [(1.0, 2.0), (2.0, 1.0), (0.3, 5.0)]:
        got = cm.total_variation(cm.LikelihoodParams(lam0, lam1))
        assert abs(got - tv_quad_oracle(lam0, lam1)) < 5e-8


def test_xi_identity_and_pinsker_ten_thousand_pairs():
    rng = np.random.default_rng(99)
    for _ in range(10_000):
        lam0 = float(np.exp(rng.uniform(-1.5, 1.5)))
        ratio = float(np.exp(rng.uniform(-math.log(1000.0), math.log(1000.0))))
        lp = cm.LikelihoodParams(lam0, lam0 * ratio)
        det = cm.detector(lp)
        vt = cm.total_variation(lp)
        assert vt == 1.0 - det.xi  # exact identity by construction
        assert vt >= -1e-15
        assert vt <= math.sqrt(cm.kl_01(lp) / 2.0) + 1e-12
        assert vt <= math.sqrt(cm.kl_10(lp) / 2.0) + 1e-12
