"""Closed-form covertness and detection mathematics.

The warden observes a circularly-symmetric Gaussian sample whose power
|y_w|^2 is exponential with mean lambda0 (cover only) or lambda1 (cover plus
covert stream).  Everything here is a closed form in (lambda0, lambda1):
instantaneous rates, the KL divergences between the two received-signal
densities, the two-sided ratio interval equivalent to a KL budget, the
energy-detector threshold with its error probabilities, and the total
variation / Pinsker relations that tie detection error to KL.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .exceptions import InvalidInputError

__all__ = [
    "LikelihoodParams",
    "DetectionStats",
    "KlInterval",
    "rate_carol_h0",
    "rate_carol_h1",
    "rate_bob",
    "lambdas",
    "kl_01",
    "kl_10",
    "kl_interval",
    "detector",
    "total_variation",
]

# Relative lambda gap below which the two hypotheses are treated as identical.
_DEGENERATE_RTOL = 1e-12


@dataclass(frozen=True)
class LikelihoodParams:
    """Mean received powers at the warden under the two hypotheses (watts)."""

    lambda0: float
    lambda1: float

    def __post_init__(self):
        if not (self.lambda0 > 0.0 and self.lambda1 > 0.0):
            raise InvalidInputError("lambda0 and lambda1 must be strictly positive")

    @property
    def ratio(self) -> float:
        return self.lambda1 / self.lambda0


@dataclass(frozen=True)
class DetectionStats:
    """Optimal energy-detector operating point: threshold and error rates."""

    threshold: float
    p_fa: float
    p_md: float
    xi: float


@dataclass(frozen=True)
class KlInterval:
    """Roots (a_bar <= 1 <= b_bar) of ln(x) + 1/x - 1 = 2 eps^2."""

    a_bar: float
    b_bar: float


def _abs2(x: complex | np.ndarray) -> float:
    return float(np.abs(x) ** 2)


def rate_carol_h0(w_c0: np.ndarray, h_c: np.ndarray, sigma_c2: float) -> float:
    """Carol's rate when only the cover beam transmits: log2(1 + |h_c^H w_c0|^2 / sigma_c^2)."""
    if sigma_c2 <= 0:
        raise InvalidInputError("sigma_c2 must be positive")
    return math.log2(1.0 + _abs2(np.vdot(h_c, w_c0)) / sigma_c2)


def rate_carol_h1(w_c1: np.ndarray, w_b: np.ndarray, h_c: np.ndarray, sigma_c2: float) -> float:
    """Carol's rate with the covert stream active; Bob's beam enters as interference."""
    if sigma_c2 <= 0:
        raise InvalidInputError("sigma_c2 must be positive")
    sig = _abs2(np.vdot(h_c, w_c1))
    interf = _abs2(np.vdot(h_c, w_b))
    return math.log2(1.0 + sig / (interf + sigma_c2))


def rate_bob(w_c1: np.ndarray, w_b: np.ndarray, h_b: np.ndarray, sigma_b2: float) -> float:
    """Bob's rate; the H1 cover beam enters as interference."""
    if sigma_b2 <= 0:
        raise InvalidInputError("sigma_b2 must be positive")
    sig = _abs2(np.vdot(h_b, w_b))
    interf = _abs2(np.vdot(h_b, w_c1))
    return math.log2(1.0 + sig / (interf + sigma_b2))


def lambdas(
    w_c0: np.ndarray,
    w_c1: np.ndarray,
    w_b: np.ndarray,
    h_w: np.ndarray,
    sigma_w2: float,
) -> LikelihoodParams:
    """Warden mean powers: lambda0 = |h_w^H w_c0|^2 + sigma_w^2 and
    lambda1 = |h_w^H w_c1|^2 + |h_w^H w_b|^2 + sigma_w^2."""
    if sigma_w2 <= 0:
        raise InvalidInputError("sigma_w2 must be positive")
    lam0 = _abs2(np.vdot(h_w, w_c0)) + sigma_w2
    lam1 = _abs2(np.vdot(h_w, w_c1)) + _abs2(np.vdot(h_w, w_b)) + sigma_w2
    return LikelihoodParams(lambda0=lam0, lambda1=lam1)


def kl_01(lp: LikelihoodParams) -> float:
    """KL divergence from the cover-only density to the transmitting density:
    ln(lambda1/lambda0) + lambda0/lambda1 - 1."""
    r = lp.ratio
    return math.log(r) + 1.0 / r - 1.0


def kl_10(lp: LikelihoodParams) -> float:
    """KL divergence in the opposite direction: ln(lambda0/lambda1) + lambda1/lambda0 - 1."""
    r = lp.ratio
    return -math.log(r) + r - 1.0


def _f(x: float) -> float:
    """The ratio function f(x) = ln x + 1/x - 1 (zero at x = 1, convex)."""
    return math.log(x) + 1.0 / x - 1.0


def _bisect_f(target: float, lo: float, hi: float, increasing: bool) -> float:
    """Plain bisection for f(x) = target on a bracket where f is monotone."""
    flo, fhi = _f(lo) - target, _f(hi) - target
    if flo == 0.0:
        return lo
    if fhi == 0.0:
        return hi
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        fm = _f(mid) - target
        if fm == 0.0 or (hi - lo) < 1e-16 * max(1.0, hi):
            return mid
        # On an increasing branch the root is to the left of points with fm > 0.
        if (fm > 0.0) == increasing:
            hi = mid
        else:
            lo = mid
    return 0.5 * (lo + hi)


def kl_interval(epsilon: float) -> KlInterval:
    """Two-sided ratio interval equivalent to a KL budget of 2 eps^2.

    Solves ln(x) + 1/x - 1 = 2 eps^2 by safeguarded bisection on the two
    monotone branches: one root in (0, 1], one in [1, inf) (the upper bracket
    doubles until it encloses the root).  epsilon = 0 returns the degenerate
    interval (1, 1).
    """
    if epsilon < 0:
        raise InvalidInputError("epsilon must be non-negative")
    if epsilon == 0.0:
        return KlInterval(1.0, 1.0)
    target = 2.0 * epsilon * epsilon
    # Lower branch: f decreases from +inf at 0+ to 0 at 1.
    lo = 1e-12
    while _f(lo) < target:  # only for absurdly large epsilon
        lo *= 0.5
    a_bar = _bisect_f(target, lo, 1.0, increasing=False)
    # Upper branch: f increases from 0 at 1; double until past the target.
    hi = 2.0
    while _f(hi) < target:
        hi *= 2.0
    b_bar = _bisect_f(target, 1.0, hi, increasing=True)
    return KlInterval(a_bar=a_bar, b_bar=b_bar)


def detector(lp: LikelihoodParams) -> DetectionStats:
    """Optimal likelihood-ratio energy detector for the warden.

    The detection threshold on |y_w|^2 is the crossing point of the two
    exponential densities, phi* = lambda0 lambda1 ln(lambda1/lambda0) /
    (lambda1 - lambda0).  For lambda1 > lambda0 the detector declares
    "transmitting" above the threshold, giving

        p_fa = (lambda1/lambda0)^(-lambda1/(lambda1-lambda0)),
        p_md = 1 - (lambda1/lambda0)^(-lambda0/(lambda1-lambda0));

    for lambda1 < lambda0 the decision regions swap sides and the mirrored
    expressions apply, so xi = p_fa + p_md <= 1 in both cases.  When the two
    means agree to within 1e-12 relative, the continuous limit is used:
    phi* = lambda0, p_fa = e^-1, p_md = 1 - e^-1, xi = 1.
    """
    lam0, lam1 = lp.lambda0, lp.lambda1
    if abs(lam1 - lam0) <= _DEGENERATE_RTOL * lam0:
        return DetectionStats(threshold=lam0, p_fa=math.exp(-1.0), p_md=1.0 - math.exp(-1.0), xi=1.0)
    log_r = math.log(lam1) - math.log(lam0)
    phi = lam0 * lam1 * log_r / (lam1 - lam0)
    # Tail probabilities of |y|^2 >= phi under each hypothesis, in log space.
    e0 = math.exp(-phi / lam0)
    e1 = math.exp(-phi / lam1)
    if lam1 > lam0:
        p_fa, p_md = e0, 1.0 - e1
    else:
        p_fa, p_md = 1.0 - e0, e1
    return DetectionStats(threshold=phi, p_fa=p_fa, p_md=p_md, xi=p_fa + p_md)


def total_variation(lp: LikelihoodParams) -> float:
    """Total variation between the warden's two received-signal densities.

    Computed as 1 - xi from the optimal detector, which is exact because the
    detector's threshold is the densities' crossing point.
    """
    return 1.0 - detector(lp).xi
