"""Robust beamformer synthesis under ellipsoidal warden-channel uncertainty.

The designer only knows an estimate h_w_hat of the warden channel and a
support ellipsoid for the error.  The covertness budget KL <= 2 eps^2 is
equivalent to a two-sided bound a_eff <= lambda1/lambda0 <= b_eff on the
warden's received-power ratio; requiring it for every error in the ellipsoid
is an infinite constraint family, which the S-procedure turns into two finite
linear matrix inequalities in the lifted beamformer matrices plus two
nonnegative multipliers.  The resulting feasibility subproblems slot into the
same SINR bisection as the perfect-knowledge design.

Both KL orientations are supported: constraining KL(cover || transmit) uses
the ratio interval (a_bar, b_bar) directly, while constraining
KL(transmit || cover) bounds lambda0/lambda1 in (a_bar, b_bar), i.e.
lambda1/lambda0 in (1/b_bar, 1/a_bar); the LMI machinery is shared.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import conic, covert_metrics, cxmat
from .channel import ChannelSet, CoverBeam, CsiErrorEllipsoid, ScenarioParams
from .conic import ConicProblem, TraceConstraint
from .covert_metrics import KlInterval
from .designs import (
    BeamformerSolution,
    BisectionConfig,
    POWER_SLACK,
    _principal_vector,
    _qos_row,
    _power_row,
    _sinr_row,
    bisect_max_r,
    r_upper_bound,
)
from .exceptions import InfeasibleScenarioError, InvalidInputError, RecoveryFailedError

__all__ = [
    "RobustProblemSpec",
    "LmiPair",
    "WorstCaseReport",
    "build_lmis",
    "robust_design",
    "nonrobust_baseline",
    "verify_worst_case",
]


@dataclass(frozen=True)
class RobustProblemSpec:
    """Everything the robust designer may see: the estimate, the error
    ellipsoid, the cover beam, the publicly known channels and the covertness
    budget.  The true warden channel is deliberately absent."""

    direction: str
    interval: KlInterval
    ellipsoid: CsiErrorEllipsoid
    h_w_hat: np.ndarray
    cover: CoverBeam
    h_b: np.ndarray
    h_c: np.ndarray
    sigma_w2: float
    epsilon: float

    def __post_init__(self):
        if self.direction not in ("kl01", "kl10"):
            raise InvalidInputError("direction must be 'kl01' or 'kl10'")
        if self.sigma_w2 <= 0:
            raise InvalidInputError("sigma_w2 must be positive")
        if not 0.0 < self.epsilon <= 1.0:
            raise InvalidInputError("robust designs need epsilon in (0, 1]")
        ref = covert_metrics.kl_interval(self.epsilon)
        if abs(ref.a_bar - self.interval.a_bar) > 1e-9 or abs(ref.b_bar - self.interval.b_bar) > 1e-9:
            raise InvalidInputError("interval is not the root pair for this epsilon")
        if self.ellipsoid.n != np.asarray(self.h_w_hat).size:
            raise InvalidInputError("ellipsoid dimension does not match h_w_hat")

    @classmethod
    def from_channels(cls, params: ScenarioParams, ch: ChannelSet,
                      ellipsoid: CsiErrorEllipsoid, cover: CoverBeam,
                      direction: str = "kl01") -> "RobustProblemSpec":
        return cls(direction=direction,
                   interval=covert_metrics.kl_interval(params.epsilon),
                   ellipsoid=ellipsoid, h_w_hat=ch.h_w_hat, cover=cover,
                   h_b=ch.h_b, h_c=ch.h_c, sigma_w2=params.sigma_w2,
                   epsilon=params.epsilon)

    @property
    def effective_interval(self) -> tuple[float, float]:
        """Bounds on lambda1/lambda0 implied by the chosen KL orientation."""
        a, b = self.interval.a_bar, self.interval.b_bar
        if self.direction == "kl01":
            return a, b
        return 1.0 / b, 1.0 / a

    def realized_kl(self, w_c1: np.ndarray, w_b: np.ndarray, dh: np.ndarray) -> float:
        """KL in this spec's orientation at the true channel h_w_hat + dh."""
        h = self.h_w_hat + dh
        lp = covert_metrics.lambdas(self.cover.w_c0, w_c1, w_b, h, self.sigma_w2)
        return covert_metrics.kl_01(lp) if self.direction == "kl01" else covert_metrics.kl_10(lp)


def _hermitian_basis(d: int):
    """Orthogonal Hermitian basis of real dimension d^2 (entry extractors)."""
    basis = []
    for i in range(d):
        e = np.zeros((d, d), dtype=complex)
        e[i, i] = 1.0
        basis.append(e)
    for i in range(d):
        for j in range(i + 1, d):
            s = np.zeros((d, d), dtype=complex)
            s[i, j] = s[j, i] = 0.5
            basis.append(s)
            a = np.zeros((d, d), dtype=complex)
            a[i, j] = 0.5j
            a[j, i] = -0.5j
            basis.append(a)
    return basis


@dataclass(frozen=True)
class LmiPair:
    """The two S-procedure restrictions as affine matrix forms of size N+1.

    lower: [[What + eta1 C_w, What hhat], [hhat^H What, hhat^H What hhat
    - sigma_w^2 (a_eff - 1) - eta1 v_w]] with What = W_b + W_c1 - a_eff P0,
    and the mirrored upper form with Wtil = W_b + W_c1 - b_eff P0 negated.
    Both must be PSD at any accepted design point.
    """

    a_eff: float
    b_eff: float
    h_w_hat: np.ndarray
    cover_gram: np.ndarray
    c_w: np.ndarray
    v_w: float
    sigma_w2: float

    @property
    def n(self) -> int:
        return self.h_w_hat.size

    def _u(self) -> np.ndarray:
        return np.vstack([np.eye(self.n, dtype=complex), self.h_w_hat.conj()[None, :]])

    def _d(self) -> np.ndarray:
        d = np.zeros((self.n + 1, self.n + 1), dtype=complex)
        d[: self.n, : self.n] = self.c_w
        d[self.n, self.n] = -self.v_w
        return d

    def evaluate(self, w_b: np.ndarray, w_c1: np.ndarray,
                 eta1: float, eta2: float) -> tuple[np.ndarray, np.ndarray]:
        """LMI matrices at a concrete point (for verification and tests)."""
        u = self._u()
        d = self._d()
        e_corner = np.zeros((self.n + 1, self.n + 1), dtype=complex)
        e_corner[self.n, self.n] = 1.0
        w_sum = w_b + w_c1
        what = w_sum - self.a_eff * self.cover_gram
        wtil = w_sum - self.b_eff * self.cover_gram
        m1 = u @ what @ u.conj().T + eta1 * d - self.sigma_w2 * (self.a_eff - 1.0) * e_corner
        m2 = -(u @ wtil @ u.conj().T) + eta2 * d + self.sigma_w2 * (self.b_eff - 1.0) * e_corner
        return cxmat.herm(m1), cxmat.herm(m2)

    def blocks(self) -> list:
        n = self.n
        return [("S1", n + 1), ("S2", n + 1), ("eta1", 1), ("eta2", 1)]

    def linking_constraints(self) -> list:
        """Equality rows pinning the slack blocks S1/S2 to their affine forms.

        One row per Hermitian basis element B of dimension N+1:
        <B, S1> - <U^H B U, W_b + W_c1> - eta1 <B, D> = <B, K1> and the
        mirrored row for S2, where U stacks the identity over hhat^H and
        D = diag(C_w, -v_w).
        """
        u = self._u()
        d = self._d()
        n = self.n
        e_corner = np.zeros((n + 1, n + 1), dtype=complex)
        e_corner[n, n] = 1.0
        p0_lift = u @ self.cover_gram @ u.conj().T
        k1 = -self.a_eff * p0_lift - self.sigma_w2 * (self.a_eff - 1.0) * e_corner
        k2 = self.b_eff * p0_lift + self.sigma_w2 * (self.b_eff - 1.0) * e_corner

        rows = []
        for basis in _hermitian_basis(n + 1):
            ub = cxmat.herm(u.conj().T @ basis @ u)
            bd = float(np.real(np.trace(basis @ d)))
            rows.append(TraceConstraint(
                {"S1": basis, "W_b": -ub, "W_c1": -ub, "eta1": [[-bd]]},
                float(np.real(np.trace(basis @ k1))), "=="))
            rows.append(TraceConstraint(
                {"S2": basis, "W_b": ub, "W_c1": ub, "eta2": [[-bd]]},
                float(np.real(np.trace(basis @ k2))), "=="))
        return rows


def build_lmis(spec: RobustProblemSpec) -> LmiPair:
    """S-procedure restriction of the two-sided covertness bound over the ellipsoid."""
    a_eff, b_eff = spec.effective_interval
    return LmiPair(
        a_eff=a_eff, b_eff=b_eff, h_w_hat=np.asarray(spec.h_w_hat, dtype=complex),
        cover_gram=cxmat.outer(spec.cover.w_c0), c_w=spec.ellipsoid.c_w,
        v_w=spec.ellipsoid.v_w, sigma_w2=spec.sigma_w2)


@dataclass(frozen=True)
class WorstCaseReport:
    max_kl: float
    violation_fraction: float
    samples: int
    mean_kl: float = 0.0


def _sample_errors(ell: CsiErrorEllipsoid, samples: int, seed: int,
                   boundary_fraction: float = 0.25) -> np.ndarray:
    """Uniform-in-ellipsoid error draws, with a leading slice projected to the
    boundary shell (the binding point of a quadratic constraint over an
    ellipsoid lies on the boundary)."""
    rng = np.random.default_rng(seed)
    n = ell.n
    dirs = (rng.standard_normal((samples, n)) + 1j * rng.standard_normal((samples, n)))
    dirs /= np.linalg.norm(dirs, axis=1, keepdims=True)
    radii = rng.random(samples) ** (1.0 / (2 * n))
    n_boundary = int(boundary_fraction * samples)
    radii[:n_boundary] = 1.0
    u = radii[:, None] * dirs
    chol = np.linalg.cholesky(ell.c_w)
    return math.sqrt(ell.v_w) * np.linalg.solve(chol.conj().T, u.T).T


def verify_worst_case(sol: BeamformerSolution, spec: RobustProblemSpec,
                      samples: int = 10_000, seed: int = 0) -> WorstCaseReport:
    """Empirical worst-case covertness check by ellipsoid sampling.

    Draws errors uniformly in the ellipsoid (25% boundary-biased), evaluates
    the realized KL (in the spec's orientation) at each perturbed channel and
    reports the max and the fraction exceeding the budget 2 eps^2.
    """
    dh = _sample_errors(spec.ellipsoid, samples, seed)
    hs = spec.h_w_hat[None, :] + dh
    z0 = hs.conj() @ spec.cover.w_c0
    z1 = hs.conj() @ sol.w_c1
    zb = hs.conj() @ sol.w_b
    lam0 = np.abs(z0) ** 2 + spec.sigma_w2
    lam1 = np.abs(z1) ** 2 + np.abs(zb) ** 2 + spec.sigma_w2
    ratio = lam1 / lam0
    if spec.direction == "kl01":
        kl = np.log(ratio) + 1.0 / ratio - 1.0
    else:
        kl = -np.log(ratio) + ratio - 1.0
    budget = 2.0 * spec.epsilon ** 2
    return WorstCaseReport(
        max_kl=float(kl.max()),
        violation_fraction=float(np.mean(kl > budget)),
        samples=samples,
        mean_kl=float(kl.mean()),
    )


# ---------------------------------------------------------------------------
# Robust design
# ---------------------------------------------------------------------------


def _qos_polish(w_c1, w_b, h_c, tau1, sigma_c2):
    """Nearest-to-unity per-beam rescale restoring the Carol-rate equality.

    The equality gamma^2 a1 - beta^2 b1 = c1 is one affine condition on the
    squared scales; the closest point to (1, 1) on that line is closed form.
    """
    a1 = sigma_c2 * float(np.abs(np.vdot(h_c, w_c1)) ** 2)
    b1 = tau1 * float(np.abs(np.vdot(h_c, w_b)) ** 2)
    c1 = tau1 * sigma_c2
    u = np.array([a1, -b1])
    uu = float(u @ u)
    if uu <= 0:
        return None
    x = np.array([1.0, 1.0]) + u * (c1 - float(u @ np.array([1.0, 1.0]))) / uu
    gamma2, beta2 = x
    if gamma2 <= 0 or beta2 < 0:
        return None
    return math.sqrt(gamma2) * w_c1, math.sqrt(beta2) * w_b


def _interval_rows(h_ref: np.ndarray, lo_ratio: float, hi_ratio: float,
                   tau2_hat: float, sigma_w2: float) -> list:
    """Two-sided ratio bound at a fixed reference channel as trace rows."""
    hw = cxmat.outer(h_ref)
    lam0 = tau2_hat + sigma_w2
    return [
        TraceConstraint({"W_c1": hw, "W_b": hw}, lo_ratio * lam0 - sigma_w2, ">="),
        TraceConstraint({"W_c1": hw, "W_b": hw}, hi_ratio * lam0 - sigma_w2, "<="),
    ]


def _extract_pair(final: conic.ConicSolution):
    w_mat_b, w_mat_c = final.blocks["W_b"], final.blocks["W_c1"]
    v_b, gap_b = _principal_vector(w_mat_b)
    v_c, gap_c = _principal_vector(w_mat_c)
    return w_mat_b, w_mat_c, v_b, v_c, gap_b, gap_c


def robust_design(params: ScenarioParams, spec: RobustProblemSpec,
                  cfg: BisectionConfig | None = None, seed: int = 0,
                  verify_samples: int = 2048) -> BeamformerSolution:
    """SINR bisection over the S-procedure-restricted feasibility subproblems.

    Each subproblem carries the SINR target, the Carol-rate equality, the
    power budget and the two covertness LMIs (as slack PSD blocks tied by
    linking equalities, with the multipliers as 1x1 PSD blocks).  After the
    bisection a minimum-power solve extracts the beamformers; recovered
    rank-one candidates must re-pass the sampled worst-case covertness check
    before they are accepted.
    """
    cfg = cfg or BisectionConfig()
    n = params.n
    if np.asarray(spec.h_w_hat).size != n:
        raise InvalidInputError("spec dimension does not match params.n")
    lmis = build_lmis(spec)
    linking = lmis.linking_constraints()
    blocks = [("W_b", n), ("W_c1", n)] + lmis.blocks()

    ch_view = ChannelSet(h_b=spec.h_b, h_c=spec.h_c, h_w=np.asarray(spec.h_w_hat),
                         h_w_hat=np.asarray(spec.h_w_hat), dh_w=np.zeros(n, dtype=complex))

    def rows(r: float, p_total: float) -> list:
        return [
            _sinr_row(spec.h_b, r, params.sigma_b2),
            _qos_row(spec.h_c, spec.cover.tau1, params.sigma_c2),
            _power_row(n, p_total),
        ] + linking

    n_solves = [0]

    def feasible(r: float) -> bool:
        n_solves[0] += 1
        prob = ConicProblem.feasibility(blocks, rows(r, params.p_total))
        return conic.check_feasible(prob).feasible

    r_up = cfg.r_upper_init if cfg.r_upper_init is not None else r_upper_bound(params, ch_view)
    try:
        r_lo, steps = bisect_max_r(feasible, r_up, cfg)
    except InfeasibleScenarioError:
        raise InfeasibleScenarioError(
            "robust design infeasible at zero SINR target",
            detail="covertness LMIs unsatisfiable under the power budget") from None

    eye = np.eye(n)
    width = cfg.zeta * r_up
    margin = 1e-5 * params.p_total
    budget = 2.0 * spec.epsilon ** 2
    accepted = None
    final = None
    last_reason = "no extraction attempt succeeded"
    for backoff in (0.5, 1.5, 4.0, 16.0):
        r_solve = max(0.0, r_lo - backoff * width)
        final = conic.solve_sdp(ConicProblem.minimize(
            blocks, {"W_b": eye, "W_c1": eye}, rows(r_solve, params.p_total - margin)))
        if final.status not in ("optimal", "max-iterations"):
            last_reason = f"extraction solve status {final.status}"
            continue
        w_mat_b, w_mat_c, v_b, v_c, gap_b, gap_c = _extract_pair(final)

        candidates = []
        if max(gap_b, gap_c) <= 1e-3:
            candidates.append((v_c, v_b))
        if max(gap_b, gap_c) > 1e-6:
            candidates.extend(_randomized_pairs(w_mat_c, w_mat_b, seed, trials=64))
        for cand_c, cand_b in candidates:
            pair = _qos_polish(cand_c, cand_b, spec.h_c, spec.cover.tau1, params.sigma_c2)
            if pair is None:
                continue
            w_c1, w_b = pair
            power = float(np.linalg.norm(w_b) ** 2 + np.linalg.norm(w_c1) ** 2)
            if power > params.p_total + 0.5 * POWER_SLACK:
                continue
            probe = BeamformerSolution(w_c1=w_c1, w_b=w_b, W_c1=w_mat_c, W_b=w_mat_b,
                                       r_b=0.0, rank_gap={}, residuals={})
            check = verify_worst_case(probe, spec, samples=verify_samples, seed=seed + 1)
            if check.violation_fraction > 0.0 or check.max_kl > budget:
                last_reason = (f"recovered vectors violate covertness "
                               f"(max kl {check.max_kl:.3e} vs {budget:.3e})")
                continue
            accepted = (w_c1, w_b, w_mat_c, w_mat_b, gap_c, gap_b)
            break
        if accepted is not None:
            break
    if accepted is None:
        raise RecoveryFailedError(f"robust rank-one recovery failed: {last_reason}")
    w_c1, w_b, w_mat_c, w_mat_b, gap_c, gap_b = accepted

    eta1 = float(np.real(final.blocks["eta1"][0, 0]))
    eta2 = float(np.real(final.blocks["eta2"][0, 0]))
    m1, m2 = lmis.evaluate(cxmat.outer(w_b), cxmat.outer(w_c1), eta1, eta2)
    lp_hat = covert_metrics.lambdas(spec.cover.w_c0, w_c1, w_b, np.asarray(spec.h_w_hat),
                                    spec.sigma_w2)
    qos_bits = covert_metrics.rate_carol_h1(w_c1, w_b, spec.h_c, params.sigma_c2) \
        - math.log2(1.0 + spec.cover.tau1 / params.sigma_c2)
    power = float(np.linalg.norm(w_b) ** 2 + np.linalg.norm(w_c1) ** 2)
    r_b = float(np.abs(np.vdot(spec.h_b, w_b)) ** 2
                / (np.abs(np.vdot(spec.h_b, w_c1)) ** 2 + params.sigma_b2))
    a_eff, b_eff = spec.effective_interval
    return BeamformerSolution(
        w_c1=w_c1, w_b=w_b, W_c1=w_mat_c, W_b=w_mat_b, r_b=r_b,
        rank_gap={"W_c1": gap_c, "W_b": gap_b},
        residuals={
            "qos_rate_gap_bits": qos_bits,
            "power_excess": max(0.0, power - params.p_total),
            "nominal_ratio": lp_hat.ratio,
            "nominal_kl": spec.realized_kl(w_c1, w_b, np.zeros(n, dtype=complex)),
        },
        diagnostics={
            "method": f"robust-{spec.direction}",
            "bisection_steps": steps,
            "feasibility_solves": n_solves[0],
            "r_bisect": r_lo,
            "r_upper": r_up,
            "interval_low": a_eff,
            "interval_high": b_eff,
            "eta1": eta1,
            "eta2": eta2,
            "lmi_lower_min_eig": float(np.linalg.eigvalsh(m1).min()),
            "lmi_upper_min_eig": float(np.linalg.eigvalsh(m2).min()),
        },
    )


def _randomized_pairs(w_mat_c, w_mat_b, seed: int, trials: int):
    rng = np.random.default_rng(seed)

    def chol_like(mat):
        vals, vecs = cxmat.eig_hermitian(mat)
        return vecs * np.sqrt(np.maximum(vals, 0.0))

    lc, lb = chol_like(w_mat_c), chol_like(w_mat_b)
    n = w_mat_c.shape[0]
    out = []
    for _ in range(trials):
        gc = (rng.standard_normal(n) + 1j * rng.standard_normal(n)) / math.sqrt(2)
        gb = (rng.standard_normal(n) + 1j * rng.standard_normal(n)) / math.sqrt(2)
        out.append((lc @ gc, lb @ gb))
    return out


def nonrobust_baseline(params: ScenarioParams, ch: ChannelSet, cover: CoverBeam,
                       epsilon: float, cfg: BisectionConfig | None = None) -> BeamformerSolution:
    """Covertness-interval design that trusts the estimate h_w_hat as truth.

    Identical machinery to the perfect-knowledge pipeline, with the
    perfect-cover equality relaxed to a_bar <= lambda1/lambda0 <= b_bar
    evaluated at h_w_hat only.  It satisfies the budget exactly when the
    estimate is exact and serves as the comparison baseline for worst-case
    verification sweeps.
    """
    cfg = cfg or BisectionConfig()
    if epsilon <= 0:
        raise InvalidInputError("baseline needs epsilon > 0")
    interval = covert_metrics.kl_interval(epsilon)
    n = params.n
    h_hat = ch.h_w_hat
    tau2_hat = float(np.abs(np.vdot(h_hat, cover.w_c0)) ** 2)
    blocks = [("W_b", n), ("W_c1", n)]

    def rows(r: float, p_total: float) -> list:
        return [
            _sinr_row(ch.h_b, r, params.sigma_b2),
            _qos_row(ch.h_c, cover.tau1, params.sigma_c2),
            _power_row(n, p_total),
        ] + _interval_rows(h_hat, interval.a_bar, interval.b_bar, tau2_hat, params.sigma_w2)

    n_solves = [0]

    def feasible(r: float) -> bool:
        n_solves[0] += 1
        prob = ConicProblem.feasibility(blocks, rows(r, params.p_total))
        return conic.check_feasible(prob).feasible

    r_up = cfg.r_upper_init if cfg.r_upper_init is not None else r_upper_bound(params, ch)
    r_lo, steps = bisect_max_r(feasible, r_up, cfg)

    eye = np.eye(n)
    width = cfg.zeta * r_up
    margin = 1e-5 * params.p_total
    lam0_hat = tau2_hat + params.sigma_w2
    result = None
    for backoff in (0.5, 1.5, 4.0, 16.0):
        r_solve = max(0.0, r_lo - backoff * width)
        final = conic.solve_sdp(ConicProblem.minimize(
            blocks, {"W_b": eye, "W_c1": eye}, rows(r_solve, params.p_total - margin)))
        if final.status not in ("optimal", "max-iterations"):
            continue
        w_mat_b, w_mat_c, v_b, v_c, gap_b, gap_c = _extract_pair(final)
        pair = _qos_polish(v_c, v_b, ch.h_c, cover.tau1, params.sigma_c2)
        if pair is None:
            continue
        w_c1, w_b = pair
        # Nudge the nominal ratio back inside the interval if polish drifted it out.
        q = float(np.abs(np.vdot(h_hat, w_c1)) ** 2 + np.abs(np.vdot(h_hat, w_b)) ** 2)
        lo = interval.a_bar * lam0_hat - params.sigma_w2
        hi = interval.b_bar * lam0_hat - params.sigma_w2
        if not (lo <= q <= hi):
            target = min(max(q, lo + 1e-12 * lam0_hat), hi - 1e-12 * lam0_hat)
            scaled = _polish_ratio(w_c1, w_b, h_hat, ch.h_c, cover.tau1, params.sigma_c2, target)
            if scaled is not None:
                w_c1, w_b = scaled
        power = float(np.linalg.norm(w_b) ** 2 + np.linalg.norm(w_c1) ** 2)
        if power <= params.p_total + 0.5 * POWER_SLACK:
            result = (w_c1, w_b, w_mat_c, w_mat_b, gap_c, gap_b)
            break
    if result is None:
        raise RecoveryFailedError("baseline extraction failed at every back-off")
    w_c1, w_b, w_mat_c, w_mat_b, gap_c, gap_b = result

    lp_hat = covert_metrics.lambdas(cover.w_c0, w_c1, w_b, h_hat, params.sigma_w2)
    r_b = float(np.abs(np.vdot(ch.h_b, w_b)) ** 2
                / (np.abs(np.vdot(ch.h_b, w_c1)) ** 2 + params.sigma_b2))
    qos_bits = covert_metrics.rate_carol_h1(w_c1, w_b, ch.h_c, params.sigma_c2) \
        - covert_metrics.rate_carol_h0(cover.w_c0, ch.h_c, params.sigma_c2)
    return BeamformerSolution(
        w_c1=w_c1, w_b=w_b, W_c1=w_mat_c, W_b=w_mat_b, r_b=r_b,
        rank_gap={"W_c1": gap_c, "W_b": gap_b},
        residuals={
            "qos_rate_gap_bits": qos_bits,
            "power_excess": max(0.0, float(np.linalg.norm(w_b) ** 2
                                           + np.linalg.norm(w_c1) ** 2) - params.p_total),
            "nominal_ratio": lp_hat.ratio,
            "nominal_kl01": covert_metrics.kl_01(lp_hat),
        },
        diagnostics={
            "method": "nonrobust",
            "bisection_steps": steps,
            "feasibility_solves": n_solves[0],
            "r_bisect": r_lo,
            "r_upper": r_up,
            "interval_low": interval.a_bar,
            "interval_high": interval.b_bar,
        },
    )


def _polish_ratio(w_c1, w_b, h_ref, h_c, tau1, sigma_c2, q_target):
    """Joint rescale hitting the QoS equality and a target warden power exactly
    (same 2x2 system as the perfect-knowledge polish, with q_target as the
    cover-side right-hand side)."""
    a1 = sigma_c2 * float(np.abs(np.vdot(h_c, w_c1)) ** 2)
    b1 = tau1 * float(np.abs(np.vdot(h_c, w_b)) ** 2)
    c1 = tau1 * sigma_c2
    a2 = float(np.abs(np.vdot(h_ref, w_c1)) ** 2)
    b2 = float(np.abs(np.vdot(h_ref, w_b)) ** 2)
    det = a1 * b2 + a2 * b1
    if det <= 1e-14 * max(1.0, a1 * b2, a2 * b1):
        return None
    gamma2, beta2 = np.linalg.solve(np.array([[a1, -b1], [a2, b2]]),
                                    np.array([c1, q_target]))
    if gamma2 <= 0 or beta2 < 0:
        return None
    return math.sqrt(gamma2) * w_c1, math.sqrt(beta2) * w_b
