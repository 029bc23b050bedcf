"""Perfect-knowledge beamformer synthesis.

Two designs are provided.  The bisection design lifts the rank-one beamformers
to PSD matrices, drops the rank constraints and runs a feasibility bisection on
Bob's SINR target r_b: the lifted feasibility subproblem is convex, and the set
of feasible r_b is an interval, so bisection converges to the best target.  The
zero-forcing design decouples into a minimum-power SDP for the H1 cover beam
(orthogonal to Bob) and a closed-form projection beamformer for Bob (orthogonal
to Carol and the warden).

Both return a :class:`BeamformerSolution` carrying the recovered vectors, the
lifted matrices, rank gaps and a per-constraint residual report.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np

from . import conic, covert_metrics, cxmat
from .channel import ChannelSet, CoverBeam, ScenarioParams
from .conic import ConicProblem, TraceConstraint
from .exceptions import (
    DegenerateGeometryError,
    InfeasibleScenarioError,
    InvalidInputError,
    RecoveryFailedError,
)

__all__ = [
    "BeamformerSolution",
    "BisectionConfig",
    "covert_design",
    "covert_feasibility_problem",
    "r_upper_bound",
    "zf_design",
    "rank_one_recover",
    "multiplexing_gain_probe",
    "zf_stage1_problem",
]

RANK_ONE_GAP_TOL = 1e-6
POWER_SLACK = 1e-6


@dataclass(frozen=True)
class BisectionConfig:
    """Bisection controls: ``zeta`` is the relative bracket width (in the linear
    SINR domain, as a fraction of the upper bound) at which the search stops."""

    zeta: float = 1e-4
    r_upper_init: float | None = None
    max_outer: int = 60

    def __post_init__(self):
        if self.zeta <= 0:
            raise InvalidInputError("zeta must be positive")
        if self.r_upper_init is not None and self.r_upper_init < 0:
            raise InvalidInputError("r_upper_init must be non-negative")
        if self.max_outer < 1:
            raise InvalidInputError("max_outer must be at least 1")


@dataclass(frozen=True)
class BeamformerSolution:
    """Design output: beamformer vectors, lifted matrices and quality report."""

    w_c1: np.ndarray
    w_b: np.ndarray
    W_c1: np.ndarray
    W_b: np.ndarray
    r_b: float
    rank_gap: dict
    residuals: dict
    diagnostics: dict = field(default_factory=dict)

    @property
    def rate_b(self) -> float:
        return math.log2(1.0 + self.r_b)

    @property
    def total_power(self) -> float:
        return float(np.linalg.norm(self.w_b) ** 2 + np.linalg.norm(self.w_c1) ** 2)

    def as_report(self) -> dict:
        """JSON-friendly per-run design report."""
        return {
            "r_b": float(self.r_b),
            "rate_b": float(self.rate_b),
            "total_power": self.total_power,
            "rank_gap": {k: float(v) for k, v in self.rank_gap.items()},
            "residuals": {k: float(v) for k, v in self.residuals.items()},
            "diagnostics": {k: (float(v) if isinstance(v, (int, float, np.floating)) else v)
                            for k, v in self.diagnostics.items()},
        }


# ---------------------------------------------------------------------------
# Lifted feasibility subproblem pieces
# ---------------------------------------------------------------------------


def _sinr_row(h_b: np.ndarray, r: float, sigma_b2: float) -> TraceConstraint:
    """<H_b, W_b> >= r (<H_b, W_c1> + sigma_b^2) as a <= row."""
    hb = cxmat.outer(h_b)
    return TraceConstraint({"W_b": -hb, "W_c1": r * hb}, -r * sigma_b2, "<=")


def _qos_row(h_c: np.ndarray, tau1: float, sigma_c2: float) -> TraceConstraint:
    """Carol rate equality: sigma_c^2 <H_c, W_c1> = tau1 <H_c, W_b> + tau1 sigma_c^2."""
    hc = cxmat.outer(h_c)
    return TraceConstraint({"W_c1": sigma_c2 * hc, "W_b": -tau1 * hc}, tau1 * sigma_c2, "==")


def _cover_row(h_w: np.ndarray, tau2: float) -> TraceConstraint:
    """Perfect-cover equality: <H_w, W_c1> + <H_w, W_b> = tau2."""
    hw = cxmat.outer(h_w)
    return TraceConstraint({"W_c1": hw, "W_b": hw}, tau2, "==")


def _power_row(n: int, p_total: float) -> TraceConstraint:
    eye = np.eye(n)
    return TraceConstraint({"W_c1": eye, "W_b": eye}, p_total, "<=")


def _covert_rows(params: ScenarioParams, ch: ChannelSet, cover: CoverBeam, r: float):
    return [
        _sinr_row(ch.h_b, r, params.sigma_b2),
        _qos_row(ch.h_c, cover.tau1, params.sigma_c2),
        _cover_row(ch.h_w, cover.tau2),
        _power_row(params.n, params.p_total),
    ]


def covert_feasibility_problem(params: ScenarioParams, ch: ChannelSet,
                               cover: CoverBeam, r: float) -> ConicProblem:
    """The lifted feasibility subproblem the covert bisection asks at target r."""
    n = params.n
    return ConicProblem.feasibility([("W_b", n), ("W_c1", n)],
                                    _covert_rows(params, ch, cover, r))


def r_upper_bound(params: ScenarioParams, ch: ChannelSet) -> float:
    """Maximum-ratio SINR bound P_total ||h_b||^2 / sigma_b^2.

    No feasible SINR of the lifted problem can exceed it: the numerator is at
    most P_total ||h_b||^2 by Cauchy-Schwarz and the power budget, and the
    denominator is at least sigma_b^2.
    """
    return params.p_total * float(np.linalg.norm(ch.h_b) ** 2) / params.sigma_b2


def bisect_max_r(feasible, r_upper: float, cfg: BisectionConfig):
    """Generic SINR bisection: find the largest r with ``feasible(r)`` true.

    Assumes monotone feasibility (feasible at r implies feasible below r),
    which holds for the lifted subproblems.  Returns (r_low, steps) where
    r_low is the last midpoint confirmed feasible (0 when only the base point
    is) and the final bracket width is below zeta * r_upper.
    """
    if not feasible(0.0):
        raise InfeasibleScenarioError("design infeasible even at zero SINR target")
    if r_upper <= 0.0:
        return 0.0, 0
    r_lo, r_hi = 0.0, r_upper
    width_stop = cfg.zeta * r_upper
    steps = 0
    while (r_hi - r_lo) >= width_stop and steps < cfg.max_outer:
        mid = 0.5 * (r_lo + r_hi)
        if feasible(mid):
            r_lo = mid
        else:
            r_hi = mid
        steps += 1
    return r_lo, steps


# ---------------------------------------------------------------------------
# Rank-one recovery
# ---------------------------------------------------------------------------


def _principal_vector(w_mat: np.ndarray) -> tuple[np.ndarray, float]:
    """Scaled principal eigenvector of a PSD matrix and the rank gap lam2/lam1."""
    vals, vecs = cxmat.eig_hermitian(w_mat)
    lam1 = float(max(vals[0], 0.0))
    if lam1 <= 0.0:
        return np.zeros(w_mat.shape[0], dtype=complex), 0.0
    gap = float(max(vals[1], 0.0) / lam1) if len(vals) > 1 else 0.0
    v = math.sqrt(lam1) * vecs[:, 0]
    # Deterministic phase: largest entry real positive.
    k = int(np.argmax(np.abs(v)))
    if abs(v[k]) > 0:
        v = v * (v[k].conjugate() / abs(v[k]))
    return v, gap


def rank_one_recover(w_mat: np.ndarray, problem: ConicProblem, trials: int = 200,
                     seed: int = 0) -> np.ndarray:
    """Extract a rank-one feasible vector from a lifted SDR solution.

    If the rank gap lam2/lam1 is at most 1e-6 the scaled principal eigenvector
    is returned directly.  Otherwise ``trials`` Gaussian candidates with
    covariance ``w_mat`` are drawn; each is rescaled by the least-squares
    scalar fitting the problem's equality rows, kept only if all constraint
    residuals (row-normalized) are within 1e-5, and the best feasible
    candidate by objective (ties: smallest norm) is returned.  ``problem``
    must have exactly one block, matching ``w_mat``.
    """
    if len(problem.blocks) != 1:
        raise InvalidInputError("rank_one_recover expects a single-block problem")
    (name, dim), = problem.blocks
    w_mat = cxmat.require_hermitian(w_mat, "w_mat")
    if w_mat.shape[0] != dim:
        raise InvalidInputError("matrix dimension does not match the problem block")

    v, gap = _principal_vector(w_mat)
    if gap <= RANK_ONE_GAP_TOL:
        return v

    rf = conic._RealForm(problem)
    vals, vecs = cxmat.eig_hermitian(w_mat)
    vals = np.maximum(vals, 0.0)
    chol_like = vecs * np.sqrt(vals)

    eq_rows = [c for c in problem.constraints if c.relation == "=="]
    sense_sign = -1.0 if problem.sense == "maximize" else 1.0

    rng = np.random.default_rng(seed)
    best = None
    best_bad = None
    for _ in range(trials):
        g = (rng.standard_normal(dim) + 1j * rng.standard_normal(dim)) / math.sqrt(2.0)
        cand = chol_like @ g
        x = cxmat.outer(cand)
        num, den = 0.0, 0.0
        for con in eq_rows:
            a = float(np.real(np.trace(np.asarray(con.coeffs[name]) @ x)))
            num += a * con.bound
            den += a * a
        s2 = num / den if den > 0 else 1.0
        if s2 <= 0:
            continue
        cand = math.sqrt(s2) * cand
        blocks = {name: cxmat.outer(cand)}
        viol = float(rf.user_violations(blocks).max(initial=0.0))
        if viol > 1e-5:
            if best_bad is None or viol < best_bad[1]:
                best_bad = (cand, viol)
            continue
        obj = sense_sign * rf.user_objective(blocks)
        key = (obj, float(np.linalg.norm(cand) ** 2))
        if best is None or key < best[0]:
            best = (key, cand)
    if best is None:
        bad_v = best_bad[1] if best_bad else float("inf")
        raise RecoveryFailedError(
            f"no randomized candidate met the residual tolerance (best violation {bad_v:.3e})",
            best_candidate=None if best_bad is None else best_bad[0],
            best_violation=bad_v,
        )
    return best[1]


def _polish_scales(w_c1, w_b, ch: ChannelSet, cover: CoverBeam, params: ScenarioParams):
    """Exact repair of the two design equalities by per-beam power rescaling.

    The QoS and perfect-cover equalities are linear in (gamma^2, beta^2) =
    (scale of w_c1, scale of w_b), so a 2x2 solve restores them to machine
    precision.  Returns (w_c1', w_b') or None when the system is degenerate or
    produces non-positive scales.
    """
    a1 = params.sigma_c2 * float(np.abs(np.vdot(ch.h_c, w_c1)) ** 2)
    b1 = cover.tau1 * float(np.abs(np.vdot(ch.h_c, w_b)) ** 2)
    c1 = cover.tau1 * params.sigma_c2
    a2 = float(np.abs(np.vdot(ch.h_w, w_c1)) ** 2)
    b2 = float(np.abs(np.vdot(ch.h_w, w_b)) ** 2)

    if np.linalg.norm(w_b) ** 2 < 1e-14 * max(1.0, np.linalg.norm(w_c1) ** 2):
        # Single unknown: prefer the cover equality (drives lambda1 = lambda0).
        if a2 <= 0:
            return None
        gamma2 = cover.tau2 / a2
        return math.sqrt(gamma2) * w_c1, np.zeros_like(w_b)

    mat = np.array([[a1, -b1], [a2, b2]])
    rhs = np.array([c1, cover.tau2])
    det = a1 * b2 + a2 * b1
    if det <= 1e-14 * max(1.0, a1 * b2, a2 * b1):
        return None
    gamma2, beta2 = np.linalg.solve(mat, rhs)
    if gamma2 <= 0 or beta2 <= 0:
        return None
    return math.sqrt(gamma2) * w_c1, math.sqrt(beta2) * w_b


def _covert_residuals(w_c1, w_b, ch, cover, params) -> dict:
    lp = covert_metrics.lambdas(cover.w_c0, w_c1, w_b, ch.h_w, params.sigma_w2)
    qos_bits = covert_metrics.rate_carol_h1(w_c1, w_b, ch.h_c, params.sigma_c2) \
        - covert_metrics.rate_carol_h0(cover.w_c0, ch.h_c, params.sigma_c2)
    power = float(np.linalg.norm(w_b) ** 2 + np.linalg.norm(w_c1) ** 2)
    return {
        "lambda_ratio_minus_1": lp.ratio - 1.0,
        "qos_rate_gap_bits": qos_bits,
        "cover_power_residual": (lp.lambda1 - lp.lambda0),
        "power_excess": max(0.0, power - params.p_total),
        "kl_01": covert_metrics.kl_01(lp),
    }


def covert_design(params: ScenarioParams, ch: ChannelSet, cover: CoverBeam,
                  cfg: BisectionConfig | None = None, seed: int = 0) -> BeamformerSolution:
    """SINR-bisection covert design under perfect warden knowledge.

    Bisects the SINR target over [0, r_upper] with a lifted feasibility check
    per midpoint, then re-solves a minimum-power SDP at the best feasible
    target (its optimum is generically unique, hence rank-one), recovers the
    beamformer vectors and rescales them so the Carol-rate and perfect-cover
    equalities hold exactly.  At the output lambda1 = lambda0, so the warden's
    best detector is blind (xi = 1).
    """
    cfg = cfg or BisectionConfig()
    if float(np.linalg.norm(ch.dh_w)) > 1e-12 * max(1.0, float(np.linalg.norm(ch.h_w))):
        raise InvalidInputError("covert_design requires perfect warden knowledge (dh_w = 0)")

    n = params.n
    blocks = [("W_b", n), ("W_c1", n)]
    n_solves = [0]

    def feasible(r: float) -> bool:
        n_solves[0] += 1
        prob = ConicProblem.feasibility(blocks, _covert_rows(params, ch, cover, r))
        return conic.check_feasible(prob).feasible

    r_up = cfg.r_upper_init if cfg.r_upper_init is not None else r_upper_bound(params, ch)
    try:
        r_lo, steps = bisect_max_r(feasible, r_up, cfg)
    except InfeasibleScenarioError:
        raise InfeasibleScenarioError(
            "covert design infeasible at zero SINR target",
            detail="cover equality or power budget unreachable") from None

    eye = np.eye(n)
    width = cfg.zeta * r_up
    # Minimum-power extraction solve.  A hair of budget margin plus an r
    # back-off ladder keeps the polished vectors strictly inside the budget
    # even when the bisection stopped right at the power-limited optimum.
    margin = 1e-5 * params.p_total
    shrunk = ScenarioParams(
        n=params.n, sigma_b2=params.sigma_b2, sigma_c2=params.sigma_c2,
        sigma_w2=params.sigma_w2, sigma1=params.sigma1, sigma2=params.sigma2,
        sigma3=params.sigma3, p_total=params.p_total - margin, p_c0=min(params.p_c0, params.p_total - margin),
        epsilon=params.epsilon)
    last_exc = None
    final = None
    w_c1 = w_b = w_mat_b = w_mat_c = None
    gap_b = gap_c = 0.0
    for backoff in (0.5, 1.5, 4.0, 16.0):
        r_solve = max(0.0, r_lo - backoff * width)
        final = conic.solve_sdp(ConicProblem.minimize(
            blocks, {"W_b": eye, "W_c1": eye},
            _covert_rows(shrunk, ch, cover, r_solve)))
        if final.status not in ("optimal", "max-iterations"):
            continue
        w_mat_b, w_mat_c = final.blocks["W_b"], final.blocks["W_c1"]
        v_b, gap_b = _principal_vector(w_mat_b)
        v_c, gap_c = _principal_vector(w_mat_c)
        polished = None
        if max(gap_b, gap_c) <= 1e-3:
            polished = _polish_scales(v_c, v_b, ch, cover, params)
        if polished is None:
            try:
                polished = _randomize_covert_pair(w_mat_c, w_mat_b, ch, cover, params, r_solve, seed)
            except RecoveryFailedError as exc:
                last_exc = exc
                continue
        if float(np.linalg.norm(polished[0]) ** 2 + np.linalg.norm(polished[1]) ** 2) \
                <= params.p_total + 0.5 * POWER_SLACK:
            w_c1, w_b = polished
            break
    if w_c1 is None:
        raise last_exc or RecoveryFailedError("power-min extraction failed at every back-off")

    residuals = _covert_residuals(w_c1, w_b, ch, cover, params)
    r_b = float(np.abs(np.vdot(ch.h_b, w_b)) ** 2
                / (np.abs(np.vdot(ch.h_b, w_c1)) ** 2 + params.sigma_b2))
    return BeamformerSolution(
        w_c1=w_c1, w_b=w_b, W_c1=w_mat_c, W_b=w_mat_b, r_b=r_b,
        rank_gap={"W_c1": gap_c, "W_b": gap_b},
        residuals=residuals,
        diagnostics={
            "method": "covert",
            "bisection_steps": steps,
            "feasibility_solves": n_solves[0],
            "r_bisect": r_lo,
            "r_upper": r_up,
            "final_solve_iterations": final.iterations,
            "final_duality_gap": final.duality_gap,
        },
    )


def _randomize_covert_pair(w_mat_c, w_mat_b, ch, cover, params, r_target, seed,
                           trials: int = 200):
    """Joint Gaussian randomization fallback for a coupled two-block SDR.

    Draws candidate pairs with the lifted covariances, repairs the two
    equalities by the exact 2x2 rescale and keeps the best pair by achieved
    SINR subject to the power budget.
    """
    rng = np.random.default_rng(seed)

    def chol_like(mat):
        vals, vecs = cxmat.eig_hermitian(mat)
        return vecs * np.sqrt(np.maximum(vals, 0.0))

    lc, lb = chol_like(w_mat_c), chol_like(w_mat_b)
    n = w_mat_c.shape[0]
    best = None
    for _ in range(trials):
        gc = (rng.standard_normal(n) + 1j * rng.standard_normal(n)) / math.sqrt(2)
        gb = (rng.standard_normal(n) + 1j * rng.standard_normal(n)) / math.sqrt(2)
        pair = _polish_scales(lc @ gc, lb @ gb, ch, cover, params)
        if pair is None:
            continue
        w_c1, w_b = pair
        power = float(np.linalg.norm(w_b) ** 2 + np.linalg.norm(w_c1) ** 2)
        if power > params.p_total + POWER_SLACK:
            continue
        sinr = float(np.abs(np.vdot(ch.h_b, w_b)) ** 2
                     / (np.abs(np.vdot(ch.h_b, w_c1)) ** 2 + params.sigma_b2))
        if best is None or sinr > best[0]:
            best = (sinr, (w_c1, w_b))
    if best is None:
        raise RecoveryFailedError("joint randomization found no feasible beamformer pair")
    return best[1]


# ---------------------------------------------------------------------------
# Zero-forcing design
# ---------------------------------------------------------------------------


def zf_stage1_problem(ch: ChannelSet, cover: CoverBeam) -> ConicProblem:
    """Lifted minimum-power H1-cover-beam problem in its direct (unreduced) form:
    minimize Tr(W_c1) subject to the Bob-null, Carol-power and warden-power
    trace equalities."""
    n = ch.n
    return ConicProblem.minimize(
        blocks=[("W_c1", n)],
        objective={"W_c1": np.eye(n)},
        constraints=[
            TraceConstraint({"W_c1": cxmat.outer(ch.h_b)}, 0.0, "=="),
            TraceConstraint({"W_c1": cxmat.outer(ch.h_c)}, cover.tau1, "=="),
            TraceConstraint({"W_c1": cxmat.outer(ch.h_w)}, cover.tau2, "=="),
        ],
    )


def _null_basis(rows: np.ndarray) -> np.ndarray:
    """Orthonormal basis (columns) of {x : rows @ x = 0} via SVD."""
    rows = np.atleast_2d(np.asarray(rows, dtype=complex))
    _, s, vt = np.linalg.svd(rows)
    tol = max(rows.shape) * np.finfo(float).eps * (s[0] if s.size else 0.0)
    rank = int(np.sum(s > tol))
    return vt[rank:].conj().T


def _polish_two_targets(v: np.ndarray, g_c: np.ndarray, g_w: np.ndarray,
                        tau1: float, tau2: float, iters: int = 4) -> np.ndarray:
    """Gauss-Newton repair of |g_c^H v|^2 = tau1 and |g_w^H v|^2 = tau2.

    Perturbs v along span{g_c, g_w} (four real unknowns, two residuals) by
    least-norm Newton steps; converges to machine precision from the solver's
    1e-7-scale residuals in a couple of iterations.
    """
    for _ in range(iters):
        zc, zw = np.vdot(g_c, v), np.vdot(g_w, v)
        f = np.array([abs(zc) ** 2 - tau1, abs(zw) ** 2 - tau2])
        if np.max(np.abs(f)) < 1e-14 * max(1.0, tau1, tau2):
            break
        # d|z|^2 for v -> v + a g_c + b g_w, unknowns (Re a, Im a, Re b, Im b).
        dzc = np.array([np.vdot(g_c, g_c), np.vdot(g_c, g_w)])
        dzw = np.array([np.vdot(g_w, g_c), np.vdot(g_w, g_w)])
        jac = np.zeros((2, 4))
        for col, (dc, dw) in enumerate(zip(dzc, dzw)):
            jac[0, 2 * col] = 2.0 * np.real(np.conj(zc) * dc)
            jac[0, 2 * col + 1] = -2.0 * np.imag(np.conj(zc) * dc)
            jac[1, 2 * col] = 2.0 * np.real(np.conj(zw) * dw)
            jac[1, 2 * col + 1] = -2.0 * np.imag(np.conj(zw) * dw)
        step, *_ = np.linalg.lstsq(jac, -f, rcond=None)
        v = v + (step[0] + 1j * step[1]) * g_c + (step[2] + 1j * step[3]) * g_w
    return v


def zf_design(params: ScenarioParams, ch: ChannelSet, cover: CoverBeam,
              seed: int = 0) -> BeamformerSolution:
    """Zero-forcing design: null the cross links, then beam at Bob.

    Stage 1 solves the minimum-power H1 cover beam in the orthogonal
    complement of h_b (the Bob-null equality is enforced by construction, so
    its residual is at machine precision rather than solver tolerance) and
    polishes the recovered vector onto the two power equalities.  Stage 2 is
    the closed-form projection beamformer sqrt(P_total - P_c) * P h_b / ||P h_b||
    with P the projector annihilating h_w and h_c, cross-validated against the
    norm-ball SOCP solve of the same subproblem.
    """
    params.require_zf_capable()
    n = params.n

    q = _null_basis(ch.h_b.conj()[None, :])
    g_c, g_w = q.conj().T @ ch.h_c, q.conj().T @ ch.h_w
    if np.linalg.norm(g_c) < 1e-9 * np.linalg.norm(ch.h_c) or \
            np.linalg.norm(g_w) < 1e-9 * np.linalg.norm(ch.h_w):
        raise DegenerateGeometryError("h_c or h_w is (numerically) parallel to h_b")

    m = n - 1
    reduced = ConicProblem.minimize(
        blocks=[("O", m)],
        objective={"O": np.eye(m)},
        constraints=[
            TraceConstraint({"O": cxmat.outer(g_c)}, cover.tau1, "=="),
            TraceConstraint({"O": cxmat.outer(g_w)}, cover.tau2, "=="),
        ],
    )
    sol = conic.solve_sdp(reduced)
    if sol.status not in ("optimal", "max-iterations"):
        raise InfeasibleScenarioError("zero-forcing stage 1 failed", detail=sol.status)
    omega = sol.blocks["O"]
    u, gap_c = _principal_vector(omega)
    if gap_c > RANK_ONE_GAP_TOL:
        u = rank_one_recover(omega, reduced, seed=seed)
        gap_c = 0.0
    u = _polish_two_targets(u, g_c, g_w, cover.tau1, cover.tau2)
    w_c1 = q @ u
    p_c = float(np.linalg.norm(w_c1) ** 2)
    if p_c > params.p_total:
        raise InfeasibleScenarioError(
            "H1 cover beam alone exceeds the power budget",
            detail=f"P_c = {p_c:.6g} > P_total = {params.p_total:.6g}")

    proj = cxmat.null_projector([ch.h_w, ch.h_c])
    d = proj @ ch.h_b
    d_norm = float(np.linalg.norm(d))
    if d_norm < 1e-9 * np.linalg.norm(ch.h_b):
        raise DegenerateGeometryError("h_b lies in span{h_w, h_c}")
    w_b = math.sqrt(params.p_total - p_c) * d / d_norm

    socp = conic.SocpProblem(objective=ch.h_b,
                             rows=np.stack([ch.h_w.conj(), ch.h_c.conj()]),
                             rho=params.p_total - p_c)
    w_b_socp = conic.solve_socp(socp)
    socp_diff = float(np.linalg.norm(w_b - w_b_socp) / max(1e-300, np.linalg.norm(w_b)))

    residuals = {
        "bob_null": float(np.abs(np.vdot(ch.h_b, w_c1))),
        "warden_null": float(np.abs(np.vdot(ch.h_w, w_b))),
        "carol_null": float(np.abs(np.vdot(ch.h_c, w_b))),
        "tau1_residual": float(np.abs(np.vdot(ch.h_c, w_c1)) ** 2 - cover.tau1),
        "tau2_residual": float(np.abs(np.vdot(ch.h_w, w_c1)) ** 2 - cover.tau2),
        "socp_agreement": socp_diff,
        "power_excess": max(0.0, p_c + np.linalg.norm(w_b) ** 2 - params.p_total),
    }
    r_b = float(np.abs(np.vdot(ch.h_b, w_b)) ** 2
                / (np.abs(np.vdot(ch.h_b, w_c1)) ** 2 + params.sigma_b2))
    w_mat_b = cxmat.outer(w_b)
    w_mat_c = cxmat.outer(w_c1)
    return BeamformerSolution(
        w_c1=w_c1, w_b=w_b, W_c1=w_mat_c, W_b=w_mat_b, r_b=r_b,
        rank_gap={"W_c1": gap_c, "W_b": 0.0},
        residuals=residuals,
        diagnostics={
            "method": "zf",
            "p_c": p_c,
            "stage1_iterations": sol.iterations,
            "stage1_duality_gap": sol.duality_gap,
        },
    )


def multiplexing_gain_probe(params: ScenarioParams, ch: ChannelSet, cover: CoverBeam,
                            powers) -> float:
    """High-power rate slope of the zero-forcing design.

    Runs the design at each budget and fits R_b against
    log2((P_total - P_c) / sigma_b^2) by least squares; the slope tends to one
    at high power.  Requires at least three strictly ascending budgets
    spanning two decades; infeasible points are skipped with a warning.
    """
    powers = [float(p) for p in powers]
    if len(powers) < 3:
        raise InvalidInputError("need at least 3 power points")
    if any(b <= a for a, b in zip(powers, powers[1:])):
        raise InvalidInputError("power points must be strictly ascending")
    if powers[-1] < 100.0 * powers[0]:
        raise InvalidInputError("power points must span at least two decades")

    xs, ys = [], []
    for p in powers:
        try:
            point = ScenarioParams(
                n=params.n, sigma_b2=params.sigma_b2, sigma_c2=params.sigma_c2,
                sigma_w2=params.sigma_w2, sigma1=params.sigma1, sigma2=params.sigma2,
                sigma3=params.sigma3, p_total=p, p_c0=params.p_c0, epsilon=params.epsilon)
            sol = zf_design(point, ch, cover)
        except (InfeasibleScenarioError, DegenerateGeometryError) as exc:
            warnings.warn(f"skipping infeasible power point {p}: {exc}")
            continue
        p_c = sol.diagnostics["p_c"]
        xs.append(math.log2((p - p_c) / params.sigma_b2))
        ys.append(sol.rate_b)
    if len(xs) < 3:
        raise InfeasibleScenarioError("fewer than 3 feasible power points for the slope fit")
    slope = float(np.polyfit(xs, ys, 1)[0])
    return slope
